// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <thread>

#include "httplib.h"
#include "mathorch/core/errors.hpp"
#include "mathorch/sandbox/sandbox.hpp"
#include "test_support.hpp"

using namespace mathorch;
using namespace mathorch::sandbox;

namespace {

/// Minimal stand-in for the execution service, on an ephemeral port.
class FakeService {
public:
    FakeService() {
        server_.Post("/execute", [this](const httplib::Request& req, httplib::Response& res) {
            auto j = json::parse(req.body);
            {
                std::lock_guard lock(mutex_);
                executed.push_back(execute_request_from_json(j));
            }
            if (j["code"] == "overload") {
                res.status = 503;
                res.set_content("busy", "text/plain");
                return;
            }
            if (j["code"] == "garbage") {
                res.set_content("not json", "application/json");
                return;
            }
            ExecuteResponse r{ExecStatus::ok, "4\n", "", 12};
            if (j["code"] == "1/0") {
                r = {ExecStatus::error, "", "ZeroDivisionError: division by zero", 5};
            }
            res.set_content(to_json(r).dump(), "application/json");
        });
        server_.Post("/close", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            closed.push_back(json::parse(req.body)["session_id"].get<std::string>());
            res.set_content("{\"ok\":true}", "application/json");
        });
        server_.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::vector<ExecuteRequest> executed;
    std::vector<std::string> closed;

private:
    httplib::Server server_;
    std::mutex mutex_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_SUITE("sandbox") {

TEST_CASE("http client executes, closes and checks health") {
    FakeService svc;
    HttpSandbox sb(svc.url());
    CHECK(sb.healthy());
    auto r = sb.execute({"s1", "print(2+2)", 2000});
    CHECK(r.status == ExecStatus::ok);
    CHECK(r.stdout_text == "4\n");
    CHECK(r.duration_ms == 12);
    REQUIRE(svc.executed.size() == 1);
    CHECK(svc.executed[0].session_id == "s1");
    CHECK(svc.executed[0].code == "print(2+2)");
    CHECK(svc.executed[0].timeout_ms == 2000);

    auto err = sb.execute({"s1", "1/0", 2000});
    CHECK(err.status == ExecStatus::error);
    CHECK(err.stderr_text.find("ZeroDivisionError") != std::string::npos);

    sb.close_session("s1");
    sb.close_session("s1");
    CHECK(svc.closed == std::vector<std::string>{"s1", "s1"});
}

TEST_CASE("http client maps service failures to SandboxUnavailable") {
    FakeService svc;
    HttpSandbox sb(svc.url());
    CHECK_THROWS_AS(sb.execute({"s", "overload", 2000}), SandboxUnavailable);
    CHECK_THROWS_AS(sb.execute({"s", "garbage", 2000}), SandboxUnavailable);
}

TEST_CASE("unreachable service is unavailable and unhealthy") {
    const int port = testing::unused_port();
    HttpSandbox sb("http://127.0.0.1:" + std::to_string(port), 1);
    CHECK_FALSE(sb.healthy());
    CHECK_THROWS_AS(sb.execute({"s", "print(1)", 2000}), SandboxUnavailable);
    CHECK_NOTHROW(sb.close_session("s"));
}

TEST_CASE("wire format round-trips") {
    ExecuteRequest req{"a/1", "x = 1", 1500};
    auto back = execute_request_from_json(to_json(req));
    CHECK(back.session_id == req.session_id);
    CHECK(back.code == req.code);
    CHECK(back.timeout_ms == req.timeout_ms);
    ExecuteResponse res{ExecStatus::timeout, "partial", "", 2000};
    CHECK(execute_response_from_json(to_json(res)) == res);
    CHECK(to_json(res)["status"] == "timeout");
}

TEST_CASE("scripted sandbox tracks sessions and availability") {
    ScriptedSandbox sb([](const ExecuteRequest& r) {
        if (r.code == "loop") {
            return ExecuteResponse{ExecStatus::timeout, "", "", 0};
        }
        return ExecuteResponse{ExecStatus::ok, r.code, "", 3};
    });
    CHECK(sb.execute({"a", "hi", 2000}).stdout_text == "hi");
    // Timeouts always report at least the requested timeout.
    CHECK(sb.execute({"b", "loop", 2000}).duration_ms == 2000);
    CHECK(sb.open_sessions() == std::set<std::string>{"a", "b"});
    sb.close_session("a");
    sb.close_session("unknown");
    CHECK(sb.open_sessions() == std::set<std::string>{"b"});
    CHECK(sb.close_calls() == 2);
    sb.set_available(false);
    CHECK_THROWS_AS(sb.execute({"c", "x", 2000}), SandboxUnavailable);
}

TEST_CASE("scripted sandbox scenario files match by substring") {
    testing::TempDir dir;
    testing::write_file(dir / "sb.jsonl",
                        "{\"match\":\"2+2\",\"status\":\"ok\",\"stdout\":\"4\\n\",\"duration_ms\":7}\n"
                        "{\"match\":\"1/0\",\"status\":\"error\",\"stderr\":\"ZeroDivisionError\"}\n");
    auto sb = ScriptedSandbox::from_file(dir / "sb.jsonl");
    CHECK(sb->execute({"s", "print(2+2)", 2000}).stdout_text == "4\n");
    CHECK(sb->execute({"s", "1/0", 2000}).status == ExecStatus::error);
    auto other = sb->execute({"s", "pass", 2000});
    CHECK(other.status == ExecStatus::ok);
    CHECK(other.stdout_text.empty());
}

} // TEST_SUITE
