// SPDX-License-Identifier: Apache-2.0
#include "mathorch/sandbox/sandbox.hpp"

#include "httplib.h"
#include "mathorch/core/errors.hpp"
#include "mathorch/core/jsonl.hpp"

namespace mathorch::sandbox {

json to_json(const ExecuteRequest& r) {
    return json{{"session_id", r.session_id}, {"code", r.code}, {"timeout_ms", r.timeout_ms}};
}

json to_json(const ExecuteResponse& r) {
    return json{{"status", mathorch::to_string(r.status)},
                {"stdout", r.stdout_text},
                {"stderr", r.stderr_text},
                {"duration_ms", r.duration_ms}};
}

ExecuteRequest execute_request_from_json(const json& j) {
    ExecuteRequest r;
    r.session_id = j.at("session_id").get<std::string>();
    r.code = j.at("code").get<std::string>();
    r.timeout_ms = j.value("timeout_ms", std::int64_t{2000});
    return r;
}

ExecuteResponse execute_response_from_json(const json& j) {
    ExecuteResponse r;
    r.status = parse_exec_status(j.at("status").get<std::string>());
    r.stdout_text = j.value("stdout", std::string());
    r.stderr_text = j.value("stderr", std::string());
    r.duration_ms = j.value("duration_ms", std::int64_t{0});
    return r;
}

HttpSandbox::HttpSandbox(std::string base_url, int connect_timeout_s)
    : base_url_(std::move(base_url)), connect_timeout_s_(connect_timeout_s) {}

ExecuteResponse HttpSandbox::execute(const ExecuteRequest& request) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(connect_timeout_s_, 0);
    // Server-side timeout plus slack for process teardown.
    const auto read_s = static_cast<time_t>(request.timeout_ms / 1000 + 10);
    client.set_read_timeout(read_s, 0);
    auto res = client.Post("/execute", to_json(request).dump(), "application/json");
    if (!res) {
        throw SandboxUnavailable("sandbox unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw SandboxUnavailable("sandbox returned status " + std::to_string(res->status) + ": " + res->body);
    }
    try {
        return execute_response_from_json(json::parse(res->body));
    } catch (const std::exception& e) {
        throw SandboxUnavailable(std::string("malformed sandbox response: ") + e.what());
    }
}

void HttpSandbox::close_session(const std::string& session_id) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(connect_timeout_s_, 0);
    // Best effort: the service expires idle sessions on its own.
    client.Post("/close", json{{"session_id", session_id}}.dump(), "application/json");
}

bool HttpSandbox::healthy() const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(connect_timeout_s_, 0);
    auto res = client.Get("/health");
    return res && res->status == 200;
}

ScriptedSandbox::ScriptedSandbox()
    : ScriptedSandbox([](const ExecuteRequest&) { return ExecuteResponse{ExecStatus::ok, "", "", 10}; }) {}

ScriptedSandbox::ScriptedSandbox(Responder responder) : responder_(std::move(responder)) {}

std::unique_ptr<ScriptedSandbox> ScriptedSandbox::from_file(const std::filesystem::path& path) {
    struct Entry {
        std::string match;
        ExecuteResponse response;
    };
    std::vector<Entry> entries;
    JsonlLineReader reader(path);
    while (auto item = reader.next()) {
        try {
            Entry e;
            e.match = item->second.value("match", std::string());
            e.response = execute_response_from_json(item->second);
            entries.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw SchemaError(item->first, "<json>", ex.what());
        }
    }
    return std::make_unique<ScriptedSandbox>([entries = std::move(entries)](const ExecuteRequest& req) {
        for (const auto& e : entries) {
            if (req.code.find(e.match) != std::string::npos) {
                return e.response;
            }
        }
        return ExecuteResponse{ExecStatus::ok, "", "", 10};
    });
}

ExecuteResponse ScriptedSandbox::execute(const ExecuteRequest& request) {
    {
        std::lock_guard lock(mutex_);
        requests_.push_back(request);
        if (!available_) {
            throw SandboxUnavailable("scripted sandbox marked unavailable");
        }
        open_.insert(request.session_id);
    }
    auto response = responder_(request);
    if (response.status == ExecStatus::timeout) {
        response.duration_ms = std::max(response.duration_ms, request.timeout_ms);
    }
    return response;
}

void ScriptedSandbox::close_session(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    open_.erase(session_id);
    ++close_calls_;
}

std::vector<ExecuteRequest> ScriptedSandbox::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

std::set<std::string> ScriptedSandbox::open_sessions() const {
    std::lock_guard lock(mutex_);
    return open_;
}

std::size_t ScriptedSandbox::close_calls() const {
    std::lock_guard lock(mutex_);
    return close_calls_;
}

} // namespace mathorch::sandbox
