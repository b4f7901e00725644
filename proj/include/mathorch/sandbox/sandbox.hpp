// SPDX-License-Identifier: Apache-2.0
//
// Client side of the code-execution service. The primary engine talks to any
// CodeSandbox; HttpSandbox speaks the service's wire format and
// ScriptedSandbox is an in-process stand-in for tests and simulations.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "mathorch/core/types.hpp"

namespace mathorch::sandbox {

struct ExecuteRequest {
    std::string session_id;
    std::string code;
    std::int64_t timeout_ms = 2000;
};

struct ExecuteResponse {
    ExecStatus status = ExecStatus::ok;
    std::string stdout_text;
    std::string stderr_text;
    std::int64_t duration_ms = 0;

    bool operator==(const ExecuteResponse&) const = default;
};

json to_json(const ExecuteRequest& r);
json to_json(const ExecuteResponse& r);
ExecuteRequest execute_request_from_json(const json& j);
ExecuteResponse execute_response_from_json(const json& j);

class CodeSandbox {
public:
    virtual ~CodeSandbox() = default;

    /// Throws SandboxUnavailable when the service cannot run the request.
    virtual ExecuteResponse execute(const ExecuteRequest& request) = 0;

    /// Idempotent; unknown sessions are fine.
    virtual void close_session(const std::string& session_id) = 0;

    /// True when execute() performs real I/O and should run off the caller's thread.
    virtual bool is_remote() const { return false; }
};

class HttpSandbox final : public CodeSandbox {
public:
    explicit HttpSandbox(std::string base_url, int connect_timeout_s = 5);

    ExecuteResponse execute(const ExecuteRequest& request) override;
    void close_session(const std::string& session_id) override;
    bool is_remote() const override { return true; }

    bool healthy() const;

private:
    std::string base_url_;
    int connect_timeout_s_;
};

/// Deterministic in-process sandbox. Responses come from a user-supplied
/// responder; the default echoes nothing and succeeds after 10 ms.
class ScriptedSandbox final : public CodeSandbox {
public:
    using Responder = std::function<ExecuteResponse(const ExecuteRequest&)>;

    ScriptedSandbox();
    explicit ScriptedSandbox(Responder responder);

    /// Scenario file: JSONL of {"match": substring, "status", "stdout",
    /// "stderr", "duration_ms"}; first entry whose `match` occurs in the code
    /// wins, unmatched code succeeds with empty output.
    static std::unique_ptr<ScriptedSandbox> from_file(const std::filesystem::path& path);

    ExecuteResponse execute(const ExecuteRequest& request) override;
    void close_session(const std::string& session_id) override;

    void set_available(bool available) { available_ = available; }

    std::vector<ExecuteRequest> requests() const;
    std::set<std::string> open_sessions() const;
    std::size_t close_calls() const;

private:
    Responder responder_;
    bool available_ = true;
    mutable std::mutex mutex_;
    std::vector<ExecuteRequest> requests_;
    std::set<std::string> open_;
    std::size_t close_calls_ = 0;
};

} // namespace mathorch::sandbox
