// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "mathorch/core/errors.hpp"
#include "mathorch/core/utf8.hpp"
#include "mathorch/tir/blocks.hpp"
#include "mathorch/tir/session.hpp"
#include "test_support.hpp"

using namespace mathorch;
using namespace mathorch::tir;
using backend::PromptMatcher;
using backend::ScriptedBackend;
using backend::ScriptSegment;
using sandbox::ExecuteResponse;
using sandbox::ScriptedSandbox;

namespace {

std::string golden(const std::string& name) { return testing::read_file(testing::data_dir() / "golden" / name); }

std::vector<ScriptSegment> seg(std::string text, std::int64_t delay = 1) { return {{std::move(text), delay}}; }

std::string code_turn(const std::string& code) { return "Let me compute.\n<tool_call>\n" + code + "\n</tool_call>\ntrailing"; }

TirConfig config_with_limit(int limit) {
    TirConfig c;
    c.max_code_executions = limit;
    return c;
}

} // namespace

TEST_SUITE("tir") {

TEST_CASE("render output block golden files") {
    CHECK(render_output_block({ExecStatus::ok, "4\n", "", 3}, 3, 200) == golden("render_ok.txt"));
    CHECK(render_output_block({ExecStatus::timeout, "", "", 2000}, 1, 200) == golden("render_timeout.txt"));
    CHECK(render_output_block({ExecStatus::error, "", "Traceback (most recent call last):\nZeroDivisionError: division by zero", 4},
                              0, 200) == golden("render_error_last.txt"));
    CHECK(render_output_block({ExecStatus::ok, std::string(250, 'x'), "", 1}, 2, 200) == golden("render_truncated.txt"));
}

TEST_CASE("output of exactly the cap is not marked truncated") {
    const auto block = render_output_block({ExecStatus::ok, std::string(200, 'y'), "", 1}, 1, 200);
    CHECK(block.find(std::string(kOutputTruncatedMarker)) == std::string::npos);
    CHECK(block.find(std::string(200, 'y')) != std::string::npos);
}

TEST_CASE("remaining lines") {
    CHECK(remaining_line(3) == "[Code executions remaining: 3]");
    CHECK(remaining_line(0) == "[Code executions remaining: 0 — no further code may be executed]");
}

TEST_CASE("normalize code tags") {
    CHECK(normalize_code_tags("```python\nx=1\n```\n").text == "<tool_call>\nx=1\n</tool_call>");
    CHECK(normalize_code_tags("no fences here").text == "no fences here");
    const std::string mixed = "```\nplain\n```\ntext ```python\nprint(1)\n```\nafter";
    const auto once = normalize_code_tags(mixed);
    CHECK_FALSE(once.unbalanced);
    CHECK(once.text == "```\nplain\n```\ntext <tool_call>\nprint(1)\n</tool_call>after");
    CHECK(normalize_code_tags(once.text).text == once.text);
    const auto open = normalize_code_tags("```python\nx=1\n");
    CHECK(open.unbalanced);
    CHECK(open.text == "```python\nx=1\n");
}

TEST_CASE("count code blocks") {
    CHECK(count_code_blocks("a <tool_call>x</tool_call> b <tool_call>y</tool_call>") == 2);
    CHECK(count_code_blocks("nothing") == 0);
    CHECK(count_code_blocks("<tool_call>unclosed") == 0);
    const std::string with_output =
        "<tool_call>print('<tool_call>')</tool_call>\n```output\n<tool_call>fake</tool_call>\n```\n"
        "[Code executions remaining: 1]\nDone.";
    CHECK(count_code_blocks(with_output) == 1);
    auto blocks = extract_code_blocks(with_output);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].code == "print('<tool_call>')");
}

TEST_CASE("config validation names the field") {
    TirConfig c;
    c.code_end_tag = c.code_begin_tag;
    try {
        validate(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "tir.code_end_tag");
    }
    c = TirConfig{};
    c.data_generation = true;
    c.max_code_executions = 9;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.max_code_executions = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("generation without code tags") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::reply("The answer is \\boxed{7}.")});
    ScriptedSandbox sb;
    auto s = run_tir(testing::make_problem("p", "What is 3+4?"), {}, sb, be);
    CHECK(s.mode == SolutionMode::tir);
    CHECK(s.code_trace.empty());
    CHECK(s.finished);
    CHECK(s.extracted_answer == "7");
    CHECK(sb.requests().empty());
}

TEST_CASE("two blocks under a limit of two, then a third attempt") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(),
                                                 {seg(code_turn("a=1")), seg(code_turn("b=2")), seg(code_turn("c=3")),
                                                  seg("\\boxed{3}")})});
    ScriptedSandbox sb([](const sandbox::ExecuteRequest& r) { return ExecuteResponse{ExecStatus::ok, r.code + "\n", "", 5}; });
    SessionRegistry registry;
    SessionOptions opts;
    opts.registry = &registry;
    auto s = run_tir(testing::make_problem("p", "x"), config_with_limit(2), sb, be, opts);
    CHECK(sb.requests().size() == 2);
    REQUIRE(s.code_trace.size() == 2);
    CHECK(s.code_trace[0].remaining_after == 1);
    CHECK(s.code_trace[1].remaining_after == 0);
    CHECK(s.reasoning_text.find(remaining_line(0)) != std::string::npos);
    CHECK(s.limit_violation);
    CHECK_FALSE(s.finished);
    // The third block is never run, and nothing after it is generated.
    CHECK(s.reasoning_text.find("c=3") != std::string::npos);
    CHECK(s.reasoning_text.find("\\boxed{3}") == std::string::npos);
    CHECK(sb.open_sessions().empty());
    CHECK(registry.live() == 0);
}

TEST_CASE("transcript layout after one execution") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(),
                                                 {seg("Check:\n<tool_call>\nprint(2+2)\n</tool_call>ignored"),
                                                  seg("So \\boxed{4}.")})});
    ScriptedSandbox sb([](const sandbox::ExecuteRequest&) { return ExecuteResponse{ExecStatus::ok, "4\n", "", 5}; });
    auto s = run_tir(testing::make_problem("p", "x"), config_with_limit(3), sb, be);
    CHECK(s.reasoning_text ==
          "Check:\n<tool_call>\nprint(2+2)\n</tool_call>\n```output\n4\n```\n[Code executions remaining: 2]\nSo \\boxed{4}.");
    REQUIRE(s.code_trace.size() == 1);
    CHECK(s.code_trace[0].code == "\nprint(2+2)\n");
    CHECK(s.finished);
    // The second turn is prompted with the first turn and its output.
    auto reqs = be.requests();
    REQUIRE(reqs.size() == 2);
    CHECK(reqs[1].prompt.size() > reqs[0].prompt.size());
    CHECK(reqs[1].prompt.find("```output\n4\n```") != std::string::npos);
    CHECK(reqs[0].params.stop_sequences.back() == "</tool_call>");
}

TEST_CASE("long stdout shows exactly the first 200 characters") {
    VirtualClock clock;
    std::string out;
    for (int i = 0; i < 1000; ++i) {
        out += static_cast<char>('a' + i % 26);
    }
    ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(), {seg(code_turn("big()")), seg("\\boxed{1}")})});
    ScriptedSandbox sb([&](const sandbox::ExecuteRequest&) { return ExecuteResponse{ExecStatus::ok, out, "", 5}; });
    auto s = run_tir(testing::make_problem("p", "x"), {}, sb, be);
    CHECK(s.reasoning_text.find(out.substr(0, 200) + "\n[output truncated]") != std::string::npos);
    CHECK(s.reasoning_text.find(out.substr(0, 201)) == std::string::npos);
    CHECK(s.code_trace[0].stdout_truncated == out.substr(0, 200));
}

TEST_CASE("sessions persist per generation unless configured stateless") {
    for (bool persistent : {true, false}) {
        VirtualClock clock;
        ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(),
                                                     {seg(code_turn("x=1")), seg(code_turn("print(x)")), seg("\\boxed{1}")})});
        ScriptedSandbox sb;
        auto cfg = config_with_limit(4);
        cfg.persistent_sessions = persistent;
        SessionOptions opts;
        opts.gen_index = 3;
        run_tir(testing::make_problem("p9", "x"), cfg, sb, be, opts);
        auto reqs = sb.requests();
        REQUIRE(reqs.size() == 2);
        if (persistent) {
            CHECK(reqs[0].session_id == "p9/3");
            CHECK(reqs[1].session_id == "p9/3");
        } else {
            CHECK(reqs[0].session_id != reqs[1].session_id);
        }
        CHECK(sb.open_sessions().empty());
    }
}

TEST_CASE("sandbox outage marks the solution and keeps the transcript") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(), {seg(code_turn("x=1")), seg("\\boxed{1}")})});
    ScriptedSandbox sb;
    sb.set_available(false);
    auto s = run_tir(testing::make_problem("p", "x"), {}, sb, be);
    REQUIRE(s.error.has_value());
    CHECK(s.reasoning_text.find("x=1") != std::string::npos);
    CHECK_FALSE(s.finished);
}

TEST_CASE("backend errors propagate") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::reply("x", 0, PromptMatcher::prefix("never"))});
    ScriptedSandbox sb;
    SessionRegistry registry;
    SessionOptions opts;
    opts.registry = &registry;
    CHECK_THROWS_AS(run_tir(testing::make_problem("p", "x"), {}, sb, be, opts), BackendError);
    CHECK(registry.live() == 0);
}

TEST_CASE("deadline stops the generation with a partial transcript") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(), {{{"part ", 10}, {"\\boxed{2}", 1000}}})});
    ScriptedSandbox sb;
    SessionOptions opts;
    opts.deadline = Millis{100};
    auto s = run_tir(testing::make_problem("p", "x"), {}, sb, be, opts);
    CHECK(s.reasoning_text == "part ");
    CHECK_FALSE(s.finished);
    CHECK(clock.now() == Millis{100});
}

TEST_CASE("deadline during an execution ends the generation") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(), {seg(code_turn("slow()")), seg("\\boxed{1}")})});
    ScriptedSandbox sb([](const sandbox::ExecuteRequest&) { return ExecuteResponse{ExecStatus::ok, "", "", 500}; });
    SessionOptions opts;
    opts.deadline = Millis{100};
    GenerationSession session(testing::make_problem("p", "x"), SolutionMode::tir, {}, be, &sb, opts);
    std::vector<GenerationSession*> all{&session};
    drive_sessions(all, clock);
    CHECK(session.state() == GenerationSession::State::deadline);
    CHECK(clock.now() == Millis{100});
    CHECK(sb.open_sessions().empty());
}

TEST_CASE("cancelled sessions stop and release the sandbox") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(), {seg(code_turn("x=1")), {{"slow", 1000}}})});
    ScriptedSandbox sb;
    SessionRegistry registry;
    SessionOptions opts;
    opts.registry = &registry;
    GenerationSession session(testing::make_problem("p", "x"), SolutionMode::tir, {}, be, &sb, opts);
    while (session.executions_used() == 0 || session.state() != GenerationSession::State::generating) {
        if (!session.step()) {
            clock.advance_to(*session.next_ready_at());
        }
    }
    CHECK(registry.live() == 1);
    session.cancel();
    std::vector<GenerationSession*> all{&session};
    drive_sessions(all, clock);
    CHECK(session.state() == GenerationSession::State::cancelled);
    CHECK(registry.live() == 0);
    CHECK(sb.open_sessions().empty());
    CHECK(clock.now() < Millis{1000});
}

TEST_CASE("cot mode never calls the sandbox") {
    VirtualClock clock;
    ScriptedBackend be(clock, {testing::reply("<tool_call>x</tool_call> \\boxed{5}")});
    auto s = run_generation(testing::make_problem("p", "x"), SolutionMode::cot, {}, be, nullptr);
    CHECK(s.mode == SolutionMode::cot);
    CHECK(s.code_trace.empty());
    CHECK(s.extracted_answer == "5");
    CHECK(be.requests()[0].prompt.find("Python") == std::string::npos);
}

TEST_CASE("summary is the text after the thinking section") {
    CHECK(summary_after_thinking("<think>a</think>b</think>\nfinal") == "\nfinal");
    CHECK_FALSE(summary_after_thinking("no thinking").has_value());
}

TEST_CASE("property: transcripts are deterministic") {
    auto run = [] {
        VirtualClock clock;
        ScriptedBackend be(clock, {testing::behavior(PromptMatcher::any(),
                                                     {seg(code_turn("x=1"), 7), seg(code_turn("y=2"), 3), seg("\\boxed{3}", 2)})});
        ScriptedSandbox sb([](const sandbox::ExecuteRequest& r) { return ExecuteResponse{ExecStatus::ok, r.code, "", 4}; });
        return run_tir(testing::make_problem("p", "x"), {}, sb, be);
    };
    CHECK(run() == run());
}

} // TEST_SUITE
