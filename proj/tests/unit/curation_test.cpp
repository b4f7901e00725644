// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mathorch/backend/scripted.hpp"
#include "mathorch/core/clock.hpp"
#include "mathorch/core/errors.hpp"
#include "mathorch/core/jsonl.hpp"
#include "mathorch/curation/decontam.hpp"
#include "mathorch/curation/filters.hpp"
#include "mathorch/curation/stages.hpp"
#include "mathorch/judge/answer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mathorch;
using namespace mathorch::curation;
using backend::PromptMatcher;
using backend::ScriptedBackend;
using testing::make_problem;
using testing::reply;

namespace {

CurationRecord record(std::string id, std::string statement, std::string text = "") {
    return CurationRecord{make_problem(std::move(id), std::move(statement)), std::move(text), {}};
}

// Answers "Judgement: Yes" for prompts containing any of `yes_markers`,
// "Judgement: No" otherwise.
ScriptedBackend yes_when(Clock& clock, const std::vector<std::string>& yes_markers) {
    std::vector<backend::ScriptedBehavior> bs;
    for (const auto& m : yes_markers) {
        bs.push_back(reply("Judgement: Yes", 0, PromptMatcher::contains(m)));
    }
    bs.push_back(reply("Judgement: No"));
    return ScriptedBackend(clock, std::move(bs));
}

Solution tir_solution(int blocks, bool correct = true) {
    Solution s;
    s.solution_id = "s";
    s.problem_id = "p";
    s.mode = SolutionMode::tir;
    for (int i = 0; i < blocks; ++i) {
        s.reasoning_text += "Step.\n<tool_call>\nprint(" + std::to_string(i) + ")\n</tool_call>\n```output\n" +
                            std::to_string(i) + "\n```\n";
    }
    s.reasoning_text += "\\boxed{1}";
    s.extracted_answer = "1";
    s.finished = true;
    s.correct = correct;
    return s;
}

Solution cot(std::string problem_id, std::optional<std::string> answer) {
    Solution s;
    s.solution_id = problem_id + "/" + answer.value_or("none");
    s.problem_id = std::move(problem_id);
    s.extracted_answer = answer;
    s.finished = answer.has_value();
    return s;
}

CodeBlockAssessment assessment(const std::string& novelty, const std::string& significance) {
    return CodeBlockAssessment{novelty == "novel" ? Novelty::novel : Novelty::verification,
                               significance == "significant" ? Significance::significant
                               : significance == "moderate"  ? Significance::moderate
                                                             : Significance::trivial};
}

} // namespace

TEST_SUITE("curation") {

TEST_CASE("proof problems are converted into answer-based problems") {
    VirtualClock clock;
    auto be = ScriptedBackend(clock, {reply("Judgement: Yes", 0, PromptMatcher::prefix("Is the following a proof")),
                                      reply("Find the least n such that n^2 > 50.", 0,
                                            PromptMatcher::prefix("Rewrite the following proof"))});
    std::vector<CurationRecord> recs{record("a", "Prove that there are infinitely many primes.")};
    auto classified = run_stage(recs, builtin_stage("classify_proof"), be);
    REQUIRE(classified.passed.size() == 1);
    CHECK(classified.passed[0].annotations.at("classify_proof") == "yes");
    auto converted = run_stage(classified.passed, builtin_stage("convert_proof"), be);
    REQUIRE(converted.passed.size() == 1);
    CHECK(converted.passed[0].problem.category == ProblemCategory::converted_proof);
    CHECK(converted.passed[0].problem.statement == "Find the least n such that n^2 > 50.");
    CHECK(converted.passed[0].problem.id == "a");
}

TEST_CASE("conversion only applies to records classified as proofs") {
    VirtualClock clock;
    ScriptedBackend be(clock, {reply("rewritten")});
    auto r = record("a", "Compute 2+2.");
    r.annotations["classify_proof"] = "no";
    auto out = run_stage({r}, builtin_stage("convert_proof"), be);
    CHECK(out.passed.at(0).problem.statement == "Compute 2+2.");
    CHECK(be.call_count() == 0);
}

TEST_CASE("invalid problems are dropped and unparseable verdicts go to review") {
    VirtualClock clock;
    ScriptedBackend be(clock, {reply("Judgement: Yes", 0, PromptMatcher::contains("[bad]")),
                               reply("I am not sure", 0, PromptMatcher::contains("[huh]")), reply("Judgement: No")});
    std::vector<CurationRecord> recs{record("a", "Solve x. [bad]"), record("b", "Compute 1+1."),
                                     record("c", "Something [huh]")};
    auto out = run_stage(recs, builtin_stage("classify_invalid"), be);
    CHECK(out.dropped.size() == 1);
    CHECK(out.review.size() == 1);
    CHECK(out.passed.size() == 1);
    CHECK(out.input == out.passed_inputs + out.dropped.size() + out.review.size());
    CHECK(out.counts()["review"] == 1);
    CHECK(out.review.at(0).problem.id == "c");
}

TEST_CASE("extraction splits a post into problems and drops empty posts") {
    VirtualClock clock;
    ScriptedBackend be(clock, {reply("[\"Find x if 2x=4.\", \"Compute 3!.\"]", 0, PromptMatcher::contains("two problems")),
                               reply("[]", 0, PromptMatcher::contains("chat")), reply("no list")});
    std::vector<CurationRecord> recs{record("p1", "", "two problems here"), record("p2", "", "just chat"),
                                     record("p3", "", "garbled")};
    auto out = run_stage(recs, builtin_stage("extraction"), be);
    REQUIRE(out.passed.size() == 2);
    CHECK(out.passed[0].problem.id == "p1-0");
    CHECK(out.passed[1].problem.statement == "Compute 3!.");
    CHECK(out.passed[1].annotations.at("source_id") == "p1");
    CHECK(out.dropped.size() == 1);
    CHECK(out.review.size() == 1);
    CHECK(out.passed_inputs == 1);
}

TEST_CASE("answer extraction fills expected answers and skips answered problems") {
    VirtualClock clock;
    ScriptedBackend be(clock, {reply("\\boxed{12}", 0, PromptMatcher::contains("[has]")), reply("Answer: none")});
    auto answered = record("c", "Known.");
    answered.problem.expected_answer = "1";
    answered.problem.answer_source = AnswerSource::human;
    std::vector<CurationRecord> recs{record("a", "Q [has]", "the answer is 12"), record("b", "Q", "no idea"),
                                     answered};
    auto out = run_stage(recs, builtin_stage("answers"), be);
    REQUIRE(out.passed.size() == 3);
    CHECK(out.passed[0].problem.expected_answer == std::optional<std::string>("12"));
    CHECK(out.passed[0].problem.answer_source == AnswerSource::extracted);
    CHECK(out.passed[1].problem.category == ProblemCategory::no_answer);
    CHECK(out.passed[2].problem.expected_answer == std::optional<std::string>("1"));
    CHECK(be.call_count() == 2);
}

TEST_CASE("stages resume from their checkpoint without re-prompting") {
    testing::TempDir dir;
    VirtualClock clock;
    auto be = yes_when(clock, {"[bad]"});
    std::vector<CurationRecord> recs{record("a", "x [bad]"), record("b", "y"), record("c", "z")};
    StageOptions opts;
    opts.checkpoint_dir = dir.path();
    auto first = run_stage(recs, builtin_stage("classify_mcq"), be, opts);
    CHECK(be.call_count() == 3);
    auto second = run_stage(recs, builtin_stage("classify_mcq"), be, opts);
    CHECK(be.call_count() == 3);
    CHECK(second.resumed == 3);
    CHECK(second.passed == first.passed);
    CHECK(second.dropped == first.dropped);
    CHECK(std::filesystem::exists(dir / "classify_mcq.passed.jsonl"));
}

TEST_CASE("unknown stages and mismatched parsers are configuration errors") {
    CHECK_THROWS_AS(builtin_stage("nope"), ConfigError);
    StageSpec s = builtin_stage("classify_mcq");
    s.prompt_template = "missing_template";
    CHECK_THROWS_AS(validate(s, default_templates()), ConfigError);
    CHECK(stages_by_name({"classify", "transform"}).size() == 5);
}

TEST_CASE("property: filter stages output a subset of their input and account for every record") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        VirtualClock clock;
        ScriptedBackend be(clock, {reply("Judgement: Yes", 0, PromptMatcher::contains("[y]")),
                                   reply("maybe", 0, PromptMatcher::contains("[?]")), reply("Judgement: No")});
        std::vector<CurationRecord> recs;
        const int n = static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            const char* tags[] = {"[y]", "[?]", "[n]"};
            recs.push_back(record("r" + std::to_string(i), std::string("Problem ") + tags[rng() % 3]));
        }
        for (const auto& name : {"classify_mcq", "classify_binary", "classify_invalid", "classify_proof"}) {
            auto out = run_stage(recs, builtin_stage(name), be);
            CHECK(out.input == out.passed.size() + out.dropped.size() + out.review.size());
            std::set<std::string> in_ids;
            for (const auto& r : recs) {
                in_ids.insert(r.problem.id);
            }
            for (const auto& r : out.passed) {
                CHECK(in_ids.count(r.problem.id) == 1);
            }
        }
    }
}

TEST_CASE("decontamination drops duplicates and skips unrelated problems") {
    VirtualClock clock;
    auto be = yes_when(clock, {"Problem A:\nWhat is the sum of the first 100 positive integers?\n\nProblem B:\nWhat is the sum",
                               "Problem A:\nAdd up the integers from 1 to 100."});
    std::vector<Problem> bench{make_problem("b1", "What is the sum of the first 100 positive integers?")};
    std::vector<Problem> probs{make_problem("dup", "What is the sum of the first 100 positive integers?"),
                               make_problem("para", "Add up the integers from 1 to 100."),
                               make_problem("far", "qqqq")};
    auto out = decontaminate(probs, bench, be);
    REQUIRE(out.retained.size() == 1);
    CHECK(out.retained[0].id == "far");
    CHECK(out.removed.size() == 2);
    CHECK(out.judge_calls == 2);
    CHECK_THROWS_AS(decontaminate(probs, {}, be), ConfigError);
}

TEST_CASE("zero n-gram overlap makes no judge calls") {
    VirtualClock clock;
    ScriptedBackend be(clock, {reply("Judgement: Yes")});
    auto out = decontaminate({make_problem("a", "xyz xyz")}, {make_problem("b", "abc abc")}, be);
    CHECK(out.retained.size() == 1);
    CHECK(out.judge_calls == 0);
    CHECK(be.call_count() == 0);
}

TEST_CASE("property: retrieval matches a brute-force cosine ranking") {
    std::mt19937_64 rng(4);
    const std::string alphabet = "abcde ";
    auto random_text = [&](std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            s += alphabet[rng() % alphabet.size()];
        }
        return s;
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> bench;
        std::vector<std::map<std::string, int>> grams;
        for (int i = 0; i < 8; ++i) {
            bench.push_back(random_text(3 + rng() % 20));
            grams.push_back(char_ngrams(bench.back()));
        }
        const auto q = random_text(3 + rng() % 20);
        const auto qg = char_ngrams(q);
        std::vector<std::pair<double, std::size_t>> brute;
        for (std::size_t i = 0; i < grams.size(); ++i) {
            double dot = 0, na = 0, nb = 0;
            for (const auto& [g, c] : qg) {
                na += c * c;
                if (auto it = grams[i].find(g); it != grams[i].end()) {
                    dot += c * it->second;
                }
            }
            for (const auto& [g, c] : grams[i]) {
                nb += c * c;
            }
            const double sim = (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
            if (sim > 0) {
                brute.emplace_back(-sim, i);
            }
        }
        std::sort(brute.begin(), brute.end());
        const auto got = nearest_benchmarks(q, grams, 5);
        REQUIRE(got.size() == std::min<std::size_t>(5, brute.size()));
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].similarity == doctest::Approx(-brute[k].first));
        }
    }
}

TEST_CASE("cot filter keeps solutions matching the label") {
    auto eq = judge::rule_equivalence();
    auto out = filter_cot_solutions({cot("a", "10"), cot("a", "12"), cot("a", "10")}, {make_problem("a", "Q", "10")}, eq);
    CHECK(out.retained.size() == 2);
    CHECK(out.retained[0].correct == std::optional<bool>(true));

    out = filter_cot_solutions({cot("b", "4"), cot("b", "4"), cot("b", "9")}, {make_problem("b", "Q")}, eq);
    CHECK(out.labels.at("b") == "4");
    CHECK(out.retained.size() == 2);

    out = filter_cot_solutions({cot("a", std::nullopt), cot("a", "10")}, {make_problem("a", "Q", "10")}, eq);
    CHECK(out.retained.size() == 1);
    CHECK(out.dropped == 1);
}

TEST_CASE("property: consensus labels do not depend on answer order") {
    std::mt19937_64 rng(12);
    const std::vector<std::string> pool{"4", "9", "1/2", "0.5", "x+1", "2"};
    auto eq = judge::rule_equivalence();
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::optional<std::string>> answers;
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            answers.push_back(pool[rng() % pool.size()]);
        }
        const auto base = metrics::consensus_label(answers, eq);
        for (int s = 0; s < 5; ++s) {
            std::shuffle(answers.begin(), answers.end(), rng);
            const auto other = metrics::consensus_label(answers, eq);
            REQUIRE(other.has_value());
            CHECK(judge::normalize_answer(*other) == judge::normalize_answer(*base));
        }
    }
}

TEST_CASE("hardness is the pass rate over n generations") {
    VirtualClock clock;
    std::vector<backend::ScriptedBehavior> bs;
    for (int j = 0; j < 32; ++j) {
        bs.push_back(reply(j < 8 ? "So \\boxed{7}" : "So \\boxed{6}"));
    }
    ScriptedBackend be(clock, bs);
    auto r = estimate_hardness(make_problem("p", "Q", "7"), be, 32, judge::rule_equivalence());
    CHECK(r.pass_rate == metrics::Rational(1, 4));
    CHECK(r.correct == 8);
    CHECK(r.generations == 32);

    ScriptedBackend all(clock, {reply("\\boxed{7}")});
    CHECK(estimate_hardness(make_problem("p", "Q", "7"), all, 32, judge::rule_equivalence()).pass_rate == 1);
    CHECK_THROWS_AS(estimate_hardness(make_problem("p", "Q"), all, 4, judge::rule_equivalence()), InvalidRecord);
}

TEST_CASE("harder problems get more generations") {
    CHECK(generations_for_pass_rate(0.8) == 4);
    CHECK(generations_for_pass_rate(0.5) == 4);
    CHECK(generations_for_pass_rate(0.25) == 16);
    CHECK(generations_for_pass_rate(0.1) == 16);
    CHECK(generations_for_pass_rate(0.05) == 32);
    CHECK(generations_for_pass_rate(0.0) == 32);
    for (double a = 0; a <= 1.0; a += 0.01) {
        CHECK(generations_for_pass_rate(a) >= generations_for_pass_rate(a + 0.01));
    }
}

TEST_CASE("code blocks are assessed in order") {
    // Later blocks' context holds earlier outputs, which the scripted backend
    // reads as later turns; every reply is scripted for all turns.
    auto every_turn = [](std::string text, PromptMatcher m) {
        return testing::behavior(std::move(m), {{{text, 0}}, {{text, 0}}, {{text, 0}}});
    };
    VirtualClock clock;
    ScriptedBackend be(clock, {every_turn("Verdict: novel", PromptMatcher::regex("Decide whether[\\s\\S]*Code:\\s*print\\(0\\)")),
                               every_turn("Verdict: verification", PromptMatcher::contains("Decide whether")),
                               every_turn("Verdict: significant", PromptMatcher::regex("Code:\\s*print\\(0\\)")),
                               every_turn("Verdict: trivial", PromptMatcher::any())});
    auto r = assess_code_blocks(tir_solution(2), make_problem("p", "Q"), be);
    REQUIRE(r.blocks.size() == 2);
    CHECK(r.blocks[0] == std::optional<CodeBlockAssessment>(assessment("novel", "significant")));
    CHECK(r.blocks[1] == std::optional<CodeBlockAssessment>(assessment("verification", "trivial")));
    CHECK_FALSE(r.needs_review);
}

TEST_CASE("an unparseable significance routes the solution to review") {
    VirtualClock clock;
    ScriptedBackend be(clock, {reply("Verdict: novel", 0, PromptMatcher::contains("Decide whether")),
                               reply("cannot tell")});
    auto r = assess_code_blocks(tir_solution(1), make_problem("p", "Q"), be);
    REQUIRE(r.blocks.size() == 1);
    CHECK_FALSE(r.blocks[0].has_value());
    CHECK(r.needs_review);
}

TEST_CASE("label parsing") {
    CHECK(parse_novelty("Verdict: novel") == std::optional<Novelty>(Novelty::novel));
    CHECK(parse_novelty("it is only verification") == std::optional<Novelty>(Novelty::verification));
    CHECK_FALSE(parse_novelty("novel or verification?").has_value());
    CHECK(parse_significance("Verdict: **moderate**") == std::optional<Significance>(Significance::moderate));
}

TEST_CASE("stage-0 filter examples") {
    CHECK(filter_tir_stage0(tir_solution(1), {assessment("novel", "significant")}).keep);
    CHECK_FALSE(
        filter_tir_stage0(tir_solution(2), {assessment("novel", "moderate"), assessment("verification", "trivial")}).keep);
    const auto three = filter_tir_stage0(tir_solution(3), std::vector<CodeBlockAssessment>(3, assessment("novel", "significant")));
    CHECK_FALSE(three.keep);
    CHECK(three.reason == "too_many_blocks");
    CHECK(filter_tir_stage0(tir_solution(0), {}).reason == "no_code");
    CHECK(filter_tir_stage0(tir_solution(1, false), {assessment("novel", "significant")}).reason == "incorrect");
    CHECK_THROWS_AS(filter_tir_stage0(tir_solution(2), {assessment("novel", "significant")}), InvalidRecord);
}

TEST_CASE("property: stage-0 keep rule agrees with the truth table over all 42 label cases") {
    const auto cases = oracle::stage0_cases();
    REQUIRE(cases.size() == 42);
    for (const auto& c : cases) {
        std::vector<CodeBlockAssessment> blocks;
        for (const auto& [n, s] : c) {
            blocks.push_back(assessment(n, s));
        }
        const bool want = oracle::stage0_keep(c);
        CHECK(stage0_keep_rule(blocks) == want);
        CHECK(filter_tir_stage0(tir_solution(static_cast<int>(c.size())), blocks).keep == want);
    }
}

TEST_CASE("later-stage filter") {
    CHECK(filter_tir_stageN(tir_solution(1), 1).keep);
    CHECK(filter_tir_stageN(tir_solution(0), 2).reason == "no_code");
    CHECK(filter_tir_stageN(tir_solution(3), 2).reason == "over_limit");
    CHECK(filter_tir_stageN(tir_solution(1, false), 2).reason == "incorrect");
    auto violated = tir_solution(2);
    violated.limit_violation = true;
    CHECK(filter_tir_stageN(violated, 2).reason == "over_limit");
}

TEST_CASE("hard subset selects low pass rates and long solutions") {
    auto p = make_problem("p", "Q", "1");
    auto s = tir_solution(1);
    s.token_count = 6000;
    p.difficulty = 0.25;
    CHECK(hard_subset(p, s));
    p.difficulty = 0.5;
    CHECK_FALSE(hard_subset(p, s));
    p.difficulty = 0.25;
    s.token_count = 4999;
    CHECK_FALSE(hard_subset(p, s));
}

TEST_CASE("curation records round-trip through json") {
    auto r = record("a", "Q", "post");
    r.annotations["classify_proof"] = "no";
    CHECK(curation_record_from_json(to_json(r)) == r);
    auto raw = record_from_input(json{{"id", "x"}, {"text", "hello"}});
    CHECK(raw.problem.id == "x");
    CHECK(raw.text == "hello");
}

} // TEST_SUITE
