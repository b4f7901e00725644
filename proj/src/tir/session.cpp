// SPDX-License-Identifier: Apache-2.0
#include "mathorch/tir/session.hpp"

#include <algorithm>
#include <thread>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/log.hpp"
#include "mathorch/core/shutdown.hpp"
#include "mathorch/core/utf8.hpp"
#include "mathorch/judge/answer.hpp"
#include "mathorch/tir/blocks.hpp"

namespace mathorch::tir {

std::string generation_id(const std::string& problem_id, int gen_index) {
    return problem_id + "/" + std::to_string(gen_index);
}

std::optional<std::string> summary_after_thinking(std::string_view text) {
    constexpr std::string_view kThinkEnd = "</think>";
    const auto pos = text.rfind(kThinkEnd);
    if (pos == std::string_view::npos) {
        return std::nullopt;
    }
    return std::string(text.substr(pos + kThinkEnd.size()));
}

std::string build_prompt(const Problem& problem, SolutionMode mode, const TirConfig& config,
                         const PromptTemplates& templates) {
    if (mode == SolutionMode::tir) {
        return templates.render("tir", {{"problem", problem.statement},
                                        {"code_limit", std::to_string(config.max_code_executions)},
                                        {"code_begin", config.code_begin_tag},
                                        {"code_end", config.code_end_tag}});
    }
    return templates.render("cot", {{"problem", problem.statement}});
}

std::string_view to_string(GenerationSession::State s) {
    using S = GenerationSession::State;
    switch (s) {
    case S::generating: return "generating";
    case S::executing: return "executing";
    case S::finished: return "finished";
    case S::cancelled: return "cancelled";
    case S::deadline: return "deadline";
    }
    return "finished";
}

GenerationSession::GenerationSession(const Problem& problem, SolutionMode mode, TirConfig config,
                                     backend::CompletionBackend& backend, sandbox::CodeSandbox* sandbox,
                                     SessionOptions options)
    : problem_(problem),
      mode_(mode),
      config_(std::move(config)),
      backend_(backend),
      sandbox_(sandbox),
      clock_(backend.clock()),
      options_(options),
      id_(generation_id(problem.id, options.gen_index)),
      started_at_(clock_.now()) {
    if (mode_ == SolutionMode::genselect) {
        throw ConfigError("mode", "generation sessions run cot or tir only");
    }
    if (mode_ == SolutionMode::tir && sandbox_ == nullptr) {
        throw ConfigError("sandbox", "tir mode needs a sandbox");
    }
    const auto& templates = options_.templates ? *options_.templates : default_templates();
    prompt_ = build_prompt(problem_, mode_, config_, templates);
    stops_ = config_.params.stop_sequences;
    if (mode_ == SolutionMode::tir) {
        stops_.push_back(config_.code_end_tag);
    }
    if (options_.registry) {
        options_.registry->add();
        registered_ = true;
    }
}

GenerationSession::~GenerationSession() {
    if (remote_result_.valid()) {
        remote_result_.wait();
    }
    if (!done()) {
        terminate(State::cancelled);
    }
}

void GenerationSession::terminate(State state) {
    state_ = state;
    ended_at_ = now();
    stream_.reset();
    if (sandbox_ && sandbox_opened_) {
        sandbox_opened_ = false;
        try {
            sandbox_->close_session(id_);
        } catch (const std::exception& e) {
            log::debug("sandbox close failed", {{"session", id_}, {"error", e.what()}});
        }
    }
    if (registered_) {
        registered_ = false;
        options_.registry->remove();
    }
}

void GenerationSession::start_turn() {
    const auto remaining_tokens = static_cast<std::int64_t>(config_.params.max_tokens) - tokens_;
    if (remaining_tokens <= 0) {
        terminate(State::finished);
        return;
    }
    backend::CompletionRequest req;
    req.prompt = prompt_ + transcript_;
    req.params = config_.params;
    req.params.max_tokens = static_cast<int>(remaining_tokens);
    req.params.stop_sequences = stops_;
    req.deadline = options_.deadline;
    turn_start_ = transcript_.size();
    stream_ = backend_.complete_streaming(req);
}

void GenerationSession::end_turn(const backend::FinishReason& reason) {
    const std::string turn = transcript_.substr(turn_start_);
    if (auto usage = stream_->usage_tokens()) {
        tokens_ += *usage;
    } else {
        all_usage_reported_ = false;
        tokens_ += backend::approx_token_count(turn);
    }
    const bool tir = mode_ == SolutionMode::tir;
    const bool exhausted = executions_used_ >= config_.max_code_executions;
    const bool opened_after_limit = tir && exhausted && turn.find(config_.code_begin_tag) != std::string::npos;

    using backend::FinishKind;
    switch (reason.kind) {
    case FinishKind::cancelled: terminate(State::cancelled); return;
    case FinishKind::deadline: terminate(State::deadline); return;
    case FinishKind::stop_sequence:
        if (tir && stops_[reason.stop_index] == config_.code_end_tag) {
            const auto begin = turn.rfind(config_.code_begin_tag);
            transcript_ += config_.code_end_tag;
            if (begin == std::string::npos) {
                // A closing tag with nothing open ends the generation.
                terminate(State::finished);
                return;
            }
            if (exhausted) {
                limit_violation_ = true;
                terminate(State::finished);
                return;
            }
            auto code = turn.substr(begin + config_.code_begin_tag.size());
            start_execution(std::move(code));
            return;
        }
        break;
    case FinishKind::max_tokens:
    case FinishKind::backend_end: break;
    }
    limit_violation_ = limit_violation_ || opened_after_limit;
    terminate(State::finished);
}

void GenerationSession::start_execution(std::string code) {
    state_ = State::executing;
    stream_.reset();
    pending_code_ = std::move(code);
    pending_session_ = config_.persistent_sessions ? id_ : id_ + "#" + std::to_string(exec_serial_);
    ++exec_serial_;
    sandbox::ExecuteRequest req{pending_session_, pending_code_, config_.exec_timeout_ms};
    sandbox_opened_ = true;
    if (sandbox_->is_remote()) {
        auto* sb = sandbox_;
        remote_result_ = std::async(std::launch::async, [sb, req] { return sb->execute(req); });
        return;
    }
    auto response = sandbox_->execute(req);
    local_ready_at_ = now() + Millis{std::max<std::int64_t>(0, response.duration_ms)};
    local_result_ = std::move(response);
}

void GenerationSession::finish_execution(sandbox::ExecuteResponse response) {
    ++executions_used_;
    const int remaining = config_.max_code_executions - executions_used_;
    const auto shown = shown_output(response);
    CodeExecution exec;
    exec.code = pending_code_;
    exec.stdout_truncated = std::string(utf8::truncate(shown, static_cast<std::size_t>(config_.output_char_cap)));
    exec.status = response.status;
    exec.duration_ms = response.duration_ms;
    exec.remaining_after = remaining;
    trace_.push_back(std::move(exec));
    transcript_ += render_output_block(response, remaining, config_.output_char_cap);
    if (!config_.persistent_sessions) {
        sandbox_opened_ = false;
        try {
            sandbox_->close_session(pending_session_);
        } catch (const std::exception& e) {
            log::debug("sandbox close failed", {{"session", pending_session_}, {"error", e.what()}});
        }
    }
    state_ = State::generating;
}

bool GenerationSession::step() {
    if (done()) {
        return false;
    }
    if (shutdown_requested()) {
        cancel_.cancel();
    }
    try {
        if (cancel_.cancelled() && state_ != State::generating) {
            terminate(State::cancelled);
            return true;
        }
        if (state_ == State::executing) {
            if (options_.deadline && now() >= *options_.deadline) {
                terminate(State::deadline);
                return true;
            }
            if (remote_result_.valid()) {
                if (remote_result_.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
                    return false;
                }
                finish_execution(remote_result_.get());
                return true;
            }
            if (now() < local_ready_at_) {
                return false;
            }
            finish_execution(std::move(*local_result_));
            local_result_.reset();
            return true;
        }

        bool progressed = false;
        if (!stream_) {
            if (cancel_.cancelled()) {
                terminate(State::cancelled);
                return true;
            }
            start_turn();
            progressed = true;
            if (done()) {
                return true;
            }
        }
        if (cancel_.cancelled()) {
            stream_->cancel();
        }
        while (auto chunk = stream_->poll()) {
            progressed = true;
            transcript_ += chunk->text_delta;
            if (chunk->finish) {
                end_turn(*chunk->finish);
                return true;
            }
        }
        return progressed;
    } catch (const SandboxUnavailable& e) {
        error_ = std::string("sandbox unavailable: ") + e.what();
        log::warning("sandbox unavailable", {{"session", id_}, {"error", e.what()}});
        terminate(State::finished);
        return true;
    } catch (const Error& e) {
        error_ = e.what();
        terminate(State::finished);
        throw;
    }
}

std::optional<Millis> GenerationSession::next_ready_at() const {
    if (done()) {
        return std::nullopt;
    }
    if (cancel_.cancelled()) {
        return now();
    }
    if (state_ == State::executing) {
        if (remote_result_.valid()) {
            return std::nullopt;
        }
        auto t = local_ready_at_;
        if (options_.deadline) {
            t = std::min(t, *options_.deadline);
        }
        return t;
    }
    if (!stream_) {
        return now();
    }
    return stream_->next_ready_at();
}

void GenerationSession::wait_for_data(Millis max_wait) {
    if (state_ == State::executing && remote_result_.valid()) {
        remote_result_.wait_for(max_wait);
    } else if (stream_) {
        stream_->wait_for_data(max_wait);
    }
}

Solution GenerationSession::solution() const {
    Solution s;
    s.solution_id = id_;
    s.problem_id = problem_.id;
    s.mode = mode_;
    s.reasoning_text = transcript_;
    s.summary_text = summary_after_thinking(transcript_);
    s.code_trace = trace_;
    s.extracted_answer = judge::extract_boxed(transcript_);
    s.finished = s.extracted_answer.has_value();
    s.token_count = tokens_;
    s.token_count_source = all_usage_reported_ ? "backend" : "approx";
    s.wall_time_ms = (ended_at_.value_or(now()) - started_at_).count();
    if (mode_ == SolutionMode::tir) {
        s.code_limit = config_.max_code_executions;
    }
    s.limit_violation = limit_violation_;
    s.error = error_;
    return s;
}

void drive_sessions(std::span<GenerationSession* const> sessions, Clock& clock,
                    const std::function<void(std::size_t)>& on_done, bool contain_errors) {
    std::vector<bool> reported(sessions.size(), false);
    while (true) {
        bool progressed = false;
        for (std::size_t i = 0; i < sessions.size(); ++i) {
            if (reported[i]) {
                continue;
            }
            auto* s = sessions[i];
            try {
                while (s->step()) {
                    progressed = true;
                }
            } catch (const BackendUnreachable&) {
                for (auto* other : sessions) {
                    other->cancel();
                }
                throw;
            } catch (const Error& e) {
                if (!contain_errors) {
                    throw;
                }
                log::error("generation failed", {{"session", s->id()}, {"error", e.what()}});
                progressed = true;
            }
            if (s->done()) {
                reported[i] = true;
                progressed = true;
                if (on_done) {
                    on_done(i);
                }
            }
        }
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < sessions.size(); ++i) {
            if (!reported[i]) {
                active.push_back(i);
            }
        }
        if (active.empty()) {
            return;
        }
        if (progressed) {
            continue;
        }
        std::optional<Millis> earliest;
        bool unpredictable = false;
        for (auto i : active) {
            if (auto t = sessions[i]->next_ready_at()) {
                earliest = earliest ? std::min(*earliest, *t) : *t;
            } else {
                unpredictable = true;
            }
        }
        if (clock.is_virtual() && !unpredictable) {
            if (!earliest) {
                throw Error("sessions stalled on a virtual clock");
            }
            clock.sleep_until(*earliest);
            continue;
        }
        auto wait = active.size() == 1 ? Millis{50} : Millis{2};
        if (earliest) {
            wait = std::clamp(*earliest - clock.now(), Millis{0}, wait);
        }
        if (active.size() == 1) {
            sessions[active.front()]->wait_for_data(wait);
        } else if (wait > Millis{0}) {
            std::this_thread::sleep_for(wait);
        }
    }
}

Solution run_generation(const Problem& problem, SolutionMode mode, const TirConfig& config,
                        backend::CompletionBackend& backend, sandbox::CodeSandbox* sandbox,
                        const SessionOptions& options) {
    GenerationSession session(problem, mode, config, backend, sandbox, options);
    GenerationSession* list[] = {&session};
    drive_sessions(list, backend.clock());
    return session.solution();
}

} // namespace mathorch::tir
