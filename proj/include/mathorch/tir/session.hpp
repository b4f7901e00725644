// SPDX-License-Identifier: Apache-2.0
//
// One generation as a non-blocking state machine. Sessions are advanced by
// step() and can be multiplexed on one thread by drive_sessions(), which is
// what makes concurrent batches deterministic under a VirtualClock.

#pragma once

#include <atomic>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/prompts.hpp"
#include "mathorch/sandbox/sandbox.hpp"
#include "mathorch/tir/config.hpp"

namespace mathorch::tir {

/// Counts sessions that have not reached a terminal state.
class SessionRegistry {
public:
    void add() { live_.fetch_add(1); }
    void remove() { live_.fetch_sub(1); }
    int live() const { return live_.load(); }

private:
    std::atomic<int> live_{0};
};

struct SessionOptions {
    // Used for the solution id and the sandbox session id.
    int gen_index = 0;
    std::optional<Millis> deadline;
    const PromptTemplates* templates = nullptr;
    SessionRegistry* registry = nullptr;
};

/// Solution and sandbox-session id for one generation.
std::string generation_id(const std::string& problem_id, int gen_index);

/// Text after the last "</think>", if any.
std::optional<std::string> summary_after_thinking(std::string_view text);

/// Prompt prefix for a generation (the transcript is appended to it).
std::string build_prompt(const Problem& problem, SolutionMode mode, const TirConfig& config,
                         const PromptTemplates& templates);

class GenerationSession {
public:
    enum class State { generating, executing, finished, cancelled, deadline };

    /// `sandbox` may be null for cot mode. The config is copied.
    GenerationSession(const Problem& problem, SolutionMode mode, TirConfig config,
                      backend::CompletionBackend& backend, sandbox::CodeSandbox* sandbox, SessionOptions options);
    ~GenerationSession();

    GenerationSession(const GenerationSession&) = delete;
    GenerationSession& operator=(const GenerationSession&) = delete;

    /// Makes whatever progress is possible now without blocking. Returns
    /// true if anything changed. BackendError/BackendUnreachable propagate
    /// after the session has been terminated with the error recorded.
    bool step();

    bool done() const noexcept { return state_ >= State::finished; }
    State state() const noexcept { return state_; }

    /// Earliest time step() can make progress; nullopt if unpredictable
    /// (real I/O) or already done.
    std::optional<Millis> next_ready_at() const;

    /// Blocks up to `max_wait` for real I/O.
    void wait_for_data(Millis max_wait);

    /// Thread-safe. Honored at the next chunk or execution boundary.
    void cancel() const { cancel_.cancel(); }
    backend::CancelHandle cancel_handle() const { return cancel_; }

    const std::string& id() const noexcept { return id_; }
    const std::string& transcript() const noexcept { return transcript_; }
    int executions_used() const noexcept { return executions_used_; }
    bool limit_violation() const noexcept { return limit_violation_; }

    /// Snapshot of the generation as a Solution (partial while running).
    Solution solution() const;

private:
    void start_turn();
    void end_turn(const backend::FinishReason& reason);
    void start_execution(std::string code);
    void finish_execution(sandbox::ExecuteResponse response);
    void terminate(State state);
    Millis now() const { return clock_.now(); }

    Problem problem_;
    SolutionMode mode_;
    TirConfig config_;
    backend::CompletionBackend& backend_;
    sandbox::CodeSandbox* sandbox_;
    Clock& clock_;
    SessionOptions options_;
    std::string id_;
    std::string prompt_;
    std::vector<std::string> stops_;

    State state_ = State::generating;
    backend::CancelHandle cancel_;
    std::unique_ptr<backend::CompletionStream> stream_;
    std::size_t turn_start_ = 0;
    std::string transcript_;
    std::vector<CodeExecution> trace_;
    int executions_used_ = 0;
    int exec_serial_ = 0;
    bool limit_violation_ = false;
    bool sandbox_opened_ = false;
    bool registered_ = false;
    std::int64_t tokens_ = 0;
    bool all_usage_reported_ = true;
    std::optional<std::string> error_;
    Millis started_at_;
    std::optional<Millis> ended_at_;

    std::string pending_code_;
    std::string pending_session_;
    std::optional<sandbox::ExecuteResponse> local_result_;
    Millis local_ready_at_{0};
    std::future<sandbox::ExecuteResponse> remote_result_;
};

std::string_view to_string(GenerationSession::State s);

/// Steps every session until all are done. `on_done(i)` runs once per
/// session, in completion order, and may cancel other sessions. With
/// `contain_errors`, a session that throws is logged and treated as done
/// instead of aborting the loop. BackendUnreachable always propagates, after
/// cancelling every session.
void drive_sessions(std::span<GenerationSession* const> sessions, Clock& clock,
                    const std::function<void(std::size_t)>& on_done = {}, bool contain_errors = false);

/// Drives one generation to completion.
Solution run_generation(const Problem& problem, SolutionMode mode, const TirConfig& config,
                        backend::CompletionBackend& backend, sandbox::CodeSandbox* sandbox,
                        const SessionOptions& options = {});

/// Tool-integrated generation of one solution.
inline Solution run_tir(const Problem& problem, const TirConfig& config, sandbox::CodeSandbox& sandbox,
                        backend::CompletionBackend& backend, const SessionOptions& options = {}) {
    return run_generation(problem, SolutionMode::tir, config, backend, &sandbox, options);
}

} // namespace mathorch::tir
