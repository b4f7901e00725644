// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>

#include "e2e_pipeline.hpp"
#include "mathorch/app/commands.hpp"
#include "mathorch/core/errors.hpp"
#include "mathorch/core/jsonl.hpp"

using namespace mathorch;
using namespace mathorch::app;
using testing::TempDir;
using testing::write_file;

namespace {

std::string field_of(const json& config) {
    try {
        config_from_json(config, "/tmp");
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

json scripted_config() {
    return json{{"backend", {{"kind", "scripted"}, {"scenario_file", "scenario.jsonl"}}},
                {"seed", 0},
                {"virtual_clock", true}};
}

json reply_line(const std::string& text, const std::string& contains = "") {
    json j{{"segments", json::array({{{"text", text}, {"delay_ms", 5}}})}};
    if (!contains.empty()) {
        j["matcher"] = {{"kind", "contains"}, {"value", contains}};
    }
    return j;
}

/// Writes config.json and scenario.jsonl into `dir` and loads the config.
AppConfig setup(const TempDir& dir, const std::vector<json>& scenario, json config = scripted_config()) {
    std::string lines;
    for (const auto& s : scenario) {
        lines += s.dump() + "\n";
    }
    write_file(dir / "scenario.jsonl", lines);
    write_file(dir / "config.json", config.dump());
    return load_config(dir / "config.json");
}

void write_problems(const TempDir& dir, const std::vector<Problem>& problems) {
    write_jsonl(problems, dir / "problems.jsonl");
}

} // namespace

TEST_SUITE("app") {

TEST_CASE("config errors name the offending field") {
    CHECK(field_of(json{{"backend", {{"kind", "scripted"}}}}) == "backend.scenario_file");
    auto c = scripted_config();
    c["backend"]["colour"] = "blue";
    CHECK(field_of(c) == "backend.colour");
    c = scripted_config();
    c["speed"] = 1;
    CHECK(field_of(c) == "speed");
    c = scripted_config();
    c["modes"] = {{"tir", {{"temperature", -1.0}}}};
    CHECK(field_of(c) == "modes.tir.temperature");
    c = scripted_config();
    c["max_in_flight"] = "eight";
    CHECK(field_of(c) == "max_in_flight");
    c = scripted_config();
    c["backend"]["kind"] = "grpc";
    CHECK(field_of(c) == "backend.kind");
    c = scripted_config();
    c["tir"] = {{"output_char_cap", 0}};
    CHECK(field_of(c).rfind("tir.", 0) == 0);
    c = scripted_config();
    c["genselect"] = {{"max_group", 40}};
    CHECK(field_of(c).rfind("genselect.", 0) == 0);
    c = scripted_config();
    c["tie_break"] = "coin";
    CHECK(field_of(c) == "tie_break");
    CHECK(field_of(scripted_config()) == "<accepted>");
}

TEST_CASE("http backends need a base url") {
    if (std::getenv("OPENAI_BASE_URL") != nullptr) {
        return;
    }
    CHECK(field_of(json{{"backend", {{"kind", "http"}}}}) == "backend.base_url");
    CHECK(field_of(json{{"backend", {{"kind", "http"}, {"base_url", "http://127.0.0.1:1"}}}}) == "<accepted>");
}

TEST_CASE("relative paths resolve against the config directory") {
    auto c = config_from_json(scripted_config(), "/data/run");
    CHECK(std::filesystem::path(c.backend.scenario_file) == std::filesystem::path("/data/run/scenario.jsonl"));
}

TEST_CASE("missing or malformed config files are reported against --config") {
    TempDir dir;
    try {
        load_config(dir / "absent.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "--config");
    }
    write_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
}

TEST_CASE("code limit parsing") {
    CHECK(parse_code_limit("3").lo == 3);
    CHECK(parse_code_limit("3").hi == 3);
    auto r = parse_code_limit("1..8");
    CHECK(r.lo == 1);
    CHECK(r.hi == 8);
    for (const char* bad : {"0", "8..1", "x", "1..", "-2", "1..99"}) {
        try {
            parse_code_limit(bad);
            FAIL("accepted " << bad);
        } catch (const ConfigError& e) {
            CHECK(e.field() == "--code-limit");
        }
    }
}

TEST_CASE("solve writes n solutions per problem and reruns byte-identically") {
    TempDir dir;
    const auto config = setup(dir, {reply_line("So \\boxed{3}.")});
    write_problems(dir, {testing::make_problem("a", "1+2?", "3"), testing::make_problem("b", "2+1?", "3")});
    auto run = [&](const std::string& out) {
        Runtime rt(config);
        SolveOptions o;
        o.problems = dir / "problems.jsonl";
        o.out = dir / out;
        o.n = 3;
        return cmd_solve(rt, o);
    };
    auto report = run("s1.jsonl");
    CHECK(report["solutions"] == 6);
    CHECK(report["failed"] == 0);
    const auto sols = read_jsonl<Solution>(dir / "s1.jsonl");
    REQUIRE(sols.size() == 6);
    for (const auto& s : sols) {
        CHECK(s.finished);
        CHECK(s.extracted_answer == std::optional<std::string>("3"));
    }
    run("s2.jsonl");
    CHECK(testing::read_file(dir / "s1.jsonl") == testing::read_file(dir / "s2.jsonl"));
}

TEST_CASE("a code-limit range draws reproducible per-problem limits") {
    TempDir dir;
    const auto config = setup(dir, {reply_line("So \\boxed{3}.")});
    std::vector<Problem> problems;
    for (int i = 0; i < 12; ++i) {
        problems.push_back(testing::make_problem("p" + std::to_string(i), "Q", "3"));
    }
    write_problems(dir, problems);
    auto run = [&] {
        Runtime rt(config);
        SolveOptions o;
        o.problems = dir / "problems.jsonl";
        o.out = dir / "out.jsonl";
        o.mode = SolutionMode::tir;
        o.code_limit = parse_code_limit("1..8");
        return cmd_solve(rt, o);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a["code_limits"] == b["code_limits"]);
    std::set<int> distinct;
    for (const auto& [id, limit] : a["code_limits"].items()) {
        CHECK(limit.get<int>() >= 1);
        CHECK(limit.get<int>() <= 8);
        distinct.insert(limit.get<int>());
    }
    CHECK(distinct.size() > 1);
    for (const auto& s : read_jsonl<Solution>(dir / "out.jsonl")) {
        CHECK(s.code_limit == std::optional<int>(a["code_limits"][s.problem_id].get<int>()));
    }
}

TEST_CASE("evaluate over no solutions gives an empty report") {
    TempDir dir;
    const auto config = setup(dir, {reply_line("x")});
    write_problems(dir, {testing::make_problem("a", "Q", "1")});
    write_file(dir / "solutions.jsonl", "");
    Runtime rt(config);
    auto report = cmd_evaluate(rt, {dir / "problems.jsonl", dir / "solutions.jsonl", 1});
    CHECK(report["rows"].empty());
    CHECK(report["aggregate"].is_null());
    CHECK(report["problems"].empty());
}

TEST_CASE("evaluate reports problems with too few generations") {
    TempDir dir;
    const auto config = setup(dir, {reply_line("So \\boxed{1}.")});
    write_problems(dir, {testing::make_problem("a", "Q", "1")});
    {
        Runtime rt(config);
        SolveOptions o;
        o.problems = dir / "problems.jsonl";
        o.out = dir / "solutions.jsonl";
        o.n = 2;
        cmd_solve(rt, o);
    }
    Runtime rt(config);
    auto report = cmd_evaluate(rt, {dir / "problems.jsonl", dir / "solutions.jsonl", 4});
    REQUIRE(report["errors"].size() == 1);
    CHECK(report["errors"][0]["problem_id"] == "a");
    CHECK(report["errors"][0]["have"] == 2);
    CHECK(report["errors"][0]["need"] == 4);
    auto ok = cmd_evaluate(rt, {dir / "problems.jsonl", dir / "solutions.jsonl", 2});
    CHECK(ok["aggregate"]["maj@k"]["exact"] == "1");
}

TEST_CASE("scripted pipeline reproduces the hand-computed metrics") {
    TempDir a;
    TempDir b;
    const auto first = testing::run_e2e(a.path());
    const auto second = testing::run_e2e(b.path());
    const auto expected = json::parse(testing::read_file(testing::data_dir() / "e2e" / "expected.json"));
    const auto diffs = testing::e2e_mismatches(first, expected, a.path());
    for (const auto& d : diffs) {
        MESSAGE(d);
    }
    CHECK(diffs.empty());
    CHECK(first.solutions_bytes == second.solutions_bytes);
    CHECK(first.answers_bytes == second.answers_bytes);
    CHECK(first.evaluate_report.dump() == second.evaluate_report.dump());
    CHECK(first.solve_report["solutions"] == 80);
}

TEST_CASE("genselect-data writes filtered training records") {
    TempDir dir;
    const auto config = setup(dir, {json{{"matcher", {{"kind", "prefix"}, {"value", "You will be given"}}},
                                         {"segments", json::array({{{"text", "Judgment: Solution 1"}}})}}});
    write_problems(dir, {testing::make_problem("a", "Q", "1")});
    std::vector<Solution> sols;
    for (int i = 0; i < 4; ++i) {
        Solution s;
        s.solution_id = "a/" + std::to_string(i);
        s.problem_id = "a";
        s.reasoning_text = "r";
        s.summary_text = "sum " + std::to_string(i);
        s.extracted_answer = std::to_string(i % 2);
        s.finished = true;
        sols.push_back(s);
    }
    write_jsonl(sols, dir / "solutions.jsonl");
    Runtime rt(config);
    auto report = cmd_genselect_data(rt, {dir / "problems.jsonl", dir / "solutions.jsonl", dir / "records.jsonl",
                                          false, false});
    CHECK(report["command"] == "genselect-data");
    CHECK(report["groups"] == 8);
    const auto records = read_jsonl<SelectionRecord>(dir / "records.jsonl");
    CHECK(records.size() == report["written"].get<std::size_t>());
    for (const auto& r : records) {
        CHECK(r.candidate_summaries.at(static_cast<std::size_t>(r.chosen_index)).correct);
    }
}

TEST_CASE("compete answers every question and leaves no live sessions") {
    TempDir dir;
    const auto config = setup(dir, {reply_line("So \\boxed{6}.")});
    write_problems(dir, {testing::make_problem("a", "Q1"), testing::make_problem("b", "Q2")});
    Runtime rt(config);
    CompeteOptions o;
    o.problems = dir / "problems.jsonl";
    o.out = dir / "answers.jsonl";
    o.audit = dir / "audit.json";
    auto report = cmd_compete(rt, o);
    CHECK(report["live_sessions"] == 0);
    REQUIRE(report["questions"].size() == 2);
    CHECK(report["questions"][0]["answer"] == "6");
    CHECK(report["questions"][0]["early_stopped"] == true);
    CHECK(report["questions"][1]["allocated_s"] == 560);
    CHECK(std::filesystem::exists(dir / "audit.json"));
}

TEST_CASE("curate runs stages in order and accounts for every record") {
    TempDir dir;
    const auto config = setup(dir, {reply_line("Judgement: Yes", "multiple-choice question? Reply with \"Judgement: Yes\" or \"Judgement: No\".\n\nWhich"),
                                    reply_line("\\boxed{5}", "Discussion:"), reply_line("Judgement: No")});
    auto line = [](const std::string& id, const std::string& statement, const std::string& text) {
        auto j = to_json(testing::make_problem(id, statement));
        j["text"] = text;
        return j.dump() + "\n";
    };
    write_file(dir / "in.jsonl", line("a", "Which is larger, (A) 1 or (B) 2?", "B") + line("b", "Compute 2+3.", "it is 5"));
    Runtime rt(config);
    auto report = cmd_curate(rt, {dir / "in.jsonl", dir / "out", {"classify", "answers"}, std::nullopt});
    CHECK(report["output"] == 1);
    for (const auto& s : report["stages"]) {
        CHECK(s["input"].get<int>() == s["passed"].get<int>() + s["dropped"].get<int>() + s["review"].get<int>());
    }
    const auto out = read_jsonl<Problem>(dir / "out" / "problems.jsonl");
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == "b");
    CHECK(out[0].expected_answer == std::optional<std::string>("5"));
    CHECK(std::filesystem::exists(dir / "out" / "report.json"));
    CHECK_THROWS_AS(cmd_curate(rt, {dir / "in.jsonl", dir / "out2", {"decontam"}, std::nullopt}), ConfigError);
    CHECK_THROWS_AS(cmd_curate(rt, {dir / "in.jsonl", dir / "out2", {"bogus"}, std::nullopt}), ConfigError);
}

} // TEST_SUITE
