// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>

#include "mathorch/core/errors.hpp"
#include "mathorch/judge/answer.hpp"
#include "mathorch/metrics/aggregation.hpp"
#include "oracles.hpp"

using namespace mathorch;
using namespace mathorch::metrics;

namespace {

using Answers = std::vector<std::optional<std::string>>;

GenerationJudgment gen(std::optional<std::string> answer, bool correct) {
    return GenerationJudgment{answer, correct, answer.has_value()};
}

ProblemResult problem(std::string id, std::vector<GenerationJudgment> js) {
    return ProblemResult{std::move(id), std::move(js)};
}

Rational frac(long p, long q) { return Rational(p, q); }

} // namespace

TEST_SUITE("aggregation") {

TEST_CASE("majority vote picks the largest class") {
    auto r = majority_vote({"5", "7", "5"}, judge::rule_equivalence());
    CHECK(r.winner == std::optional<std::string>("5"));
    CHECK(r.count == 2);
}

TEST_CASE("numerically equal answers share a class whose representative is the earliest") {
    auto r = majority_vote({"1/2", "0.5", "3"}, judge::rule_equivalence());
    CHECK(r.winner == std::optional<std::string>("1/2"));
    CHECK(r.count == 2);
    REQUIRE(r.tally.size() == 2);
    CHECK(r.tally[0].members == std::vector<std::size_t>{0, 1});
}

TEST_CASE("ties go to the earliest answer by default") {
    auto r = majority_vote({"b", "a"}, judge::rule_equivalence());
    CHECK(r.winner == std::optional<std::string>("b"));
    auto lex = majority_vote({"b", "a"}, judge::rule_equivalence(), TieBreak::lexicographic);
    CHECK(lex.winner == std::optional<std::string>("a"));
}

TEST_CASE("unanswered generations are skipped unless included") {
    Answers answers{std::nullopt, std::nullopt, "4"};
    auto r = majority_vote(answers, judge::rule_equivalence());
    CHECK(r.winner == std::optional<std::string>("4"));
    CHECK(r.count == 1);
    auto with = majority_vote(answers, judge::rule_equivalence(), TieBreak::first_completed, true);
    CHECK_FALSE(with.winner.has_value());
    CHECK(with.count == 2);
}

TEST_CASE("empty vote has no winner") {
    auto r = majority_vote({}, judge::rule_equivalence());
    CHECK_FALSE(r.winner.has_value());
    CHECK(r.count == 0);
}

TEST_CASE("pass@1 averages per-problem accuracy") {
    std::vector<ProblemResult> rs{
        problem("a", {gen("1", true), gen("1", true), gen("2", false), gen("3", false)}),
        problem("b", {gen("1", true), gen("1", true), gen("1", true), gen("1", true)}),
    };
    CHECK(pass_at_1_avg(rs, 4) == frac(3, 4));
    CHECK(to_fraction_string(pass_at_1_avg(rs, 4)) == "3/4");
}

TEST_CASE("unfinished rate counts generations without an answer") {
    std::vector<ProblemResult> rs{problem("a", {gen("1", true), gen(std::nullopt, false), gen("2", false),
                                                gen(std::nullopt, false), gen("1", true), gen("1", true),
                                                gen("1", true), gen("1", true)})};
    CHECK(unfinished_rate(rs) == frac(1, 4));
    CHECK(unfinished_rate({}) == 0);
}

TEST_CASE("a tie resolved toward a wrong class counts as incorrect") {
    std::vector<ProblemResult> rs{problem("a", {gen("7", false), gen("5", true)})};
    MetricConfig cfg;
    cfg.k = 2;
    CHECK(maj_at_k(rs, cfg, judge::rule_equivalence()) == 0);
    CHECK(pass_at_k(rs, 2) == 1);
}

TEST_CASE("k = 1 makes majority and pass@k equal to the first generation's correctness") {
    std::vector<ProblemResult> rs{problem("a", {gen("7", false), gen("5", true)}),
                                  problem("b", {gen("5", true), gen("7", false)})};
    MetricConfig cfg;
    cfg.k = 1;
    CHECK(maj_at_k(rs, cfg, judge::rule_equivalence()) == frac(1, 2));
    CHECK(pass_at_k(rs, 1) == frac(1, 2));
    CHECK(pass_at_1_avg(rs, 1) == frac(1, 2));
}

TEST_CASE("too few generations is reported with the problem id") {
    std::vector<ProblemResult> rs{problem("short", {gen("1", true)})};
    MetricConfig cfg;
    cfg.k = 4;
    try {
        maj_at_k(rs, cfg, judge::rule_equivalence());
        FAIL("expected InsufficientGenerations");
    } catch (const InsufficientGenerations& e) {
        CHECK(e.problem_id() == "short");
    }
    CHECK_THROWS_AS(pass_at_k(rs, 2), InsufficientGenerations);
    CHECK_THROWS_AS(pass_at_1_avg(rs, 2), InsufficientGenerations);
}

TEST_CASE("fraction strings") {
    CHECK(to_fraction_string(frac(33, 80)) == "33/80");
    CHECK(to_fraction_string(frac(4, 2)) == "2");
    CHECK(to_fraction_string(Rational(0)) == "0");
    CHECK(to_double(frac(1, 4)) == doctest::Approx(0.25));
}

TEST_CASE("tie break names round-trip") {
    CHECK(parse_tie_break("lexicographic") == TieBreak::lexicographic);
    CHECK(to_string(parse_tie_break("first_completed")) == "first_completed");
    CHECK_THROWS_AS(parse_tie_break("random"), ConfigError);
}

TEST_CASE("property: equivalence classes equal the brute-force transitive closure") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = rng() % 13;
        std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
        const double density = static_cast<double>(rng() % 100) / 400.0;
        std::bernoulli_distribution coin(density);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                edge[i][j] = edge[j][i] = coin(rng);
            }
        }
        auto linked = [&](std::size_t a, std::size_t b) { return static_cast<bool>(edge[a][b]); };
        CHECK(equivalence_classes(n, linked) == oracle::closure_classes(n, linked));
    }
}

TEST_CASE("property: metrics match the brute-force oracle") {
    const std::vector<std::string> pool{"1", "2", "3", "1/2", "0.5", "x", "2.0"};
    auto eq = judge::rule_equivalence();
    auto norm = [](const std::string& s) { return judge::normalize_answer(s); };
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const int problems = 1 + static_cast<int>(rng() % 5);
        const int gens = 1 + static_cast<int>(rng() % 10);
        const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(gens));
        const bool lex = rng() % 2 == 0;
        std::vector<ProblemResult> rs;
        std::vector<std::vector<oracle::Gen>> os;
        for (int p = 0; p < problems; ++p) {
            const auto expected = pool[rng() % pool.size()];
            ProblemResult r{"p" + std::to_string(p), {}};
            std::vector<oracle::Gen> o;
            for (int g = 0; g < gens; ++g) {
                std::optional<std::string> a;
                if (rng() % 5 != 0) {
                    a = pool[rng() % pool.size()];
                }
                const bool correct = a && judge::rule_equivalent(*a, expected);
                r.judgments.push_back(GenerationJudgment{a, correct, a.has_value()});
                o.push_back(oracle::Gen{a, correct, a.has_value()});
            }
            rs.push_back(r);
            os.push_back(o);
        }
        MetricConfig cfg;
        cfg.k = k;
        cfg.tie_break = lex ? TieBreak::lexicographic : TieBreak::first_completed;
        const auto want = oracle::metrics(os, gens, k, eq, lex, norm);
        CHECK(pass_at_1_avg(rs, gens) == want.pass1);
        CHECK(maj_at_k(rs, cfg, eq) == want.maj);
        CHECK(pass_at_k(rs, k) == want.passk);
        CHECK(unfinished_rate(rs) == want.unfinished);
    }
}

TEST_CASE("property: reordering changes majority correctness only when the top classes tie") {
    // Exhaustive over every multiset of at most 6 answers drawn from 3 labels,
    // with "a" the only correct label.
    auto eq = judge::normalized_string_equivalence();
    for (int na = 0; na <= 4; ++na) {
        for (int nb = 0; nb <= 4; ++nb) {
            for (int nc = 0; nc <= 4; ++nc) {
                const int total = na + nb + nc;
                if (total == 0 || total > 6) {
                    continue;
                }
                std::vector<std::string> answers;
                answers.insert(answers.end(), static_cast<std::size_t>(na), "a");
                answers.insert(answers.end(), static_cast<std::size_t>(nb), "b");
                answers.insert(answers.end(), static_cast<std::size_t>(nc), "c");
                const int top = std::max({na, nb, nc});
                const int at_top = (na == top) + (nb == top) + (nc == top);
                bool seen_true = false, seen_false = false;
                std::sort(answers.begin(), answers.end());
                do {
                    ProblemResult r{"p", {}};
                    for (const auto& a : answers) {
                        r.judgments.push_back(GenerationJudgment{a, a == "a", true});
                    }
                    MetricConfig cfg;
                    cfg.k = total;
                    (maj_at_k({r}, cfg, eq) == 1 ? seen_true : seen_false) = true;
                } while (std::next_permutation(answers.begin(), answers.end()));
                const bool sensitive = seen_true && seen_false;
                CHECK_MESSAGE(sensitive == (at_top > 1 && na == top), "a=" << na << " b=" << nb << " c=" << nc);
            }
        }
    }
}

TEST_CASE("property: pass@k dominates majority and grows with k") {
    std::mt19937_64 rng(5);
    auto eq = judge::rule_equivalence();
    for (int trial = 0; trial < 300; ++trial) {
        const int gens = 1 + static_cast<int>(rng() % 12);
        std::vector<ProblemResult> rs;
        for (int p = 0; p < 3; ++p) {
            ProblemResult r{"p" + std::to_string(p), {}};
            for (int g = 0; g < gens; ++g) {
                const auto a = std::to_string(rng() % 3);
                r.judgments.push_back(GenerationJudgment{a, a == "0", true});
            }
            rs.push_back(r);
        }
        Rational prev = 0;
        for (int k = 1; k <= gens; ++k) {
            MetricConfig cfg;
            cfg.k = k;
            const auto pk = pass_at_k(rs, k);
            CHECK(maj_at_k(rs, cfg, eq) <= pk);
            CHECK(pk >= prev);
            prev = pk;
        }
    }
}

} // TEST_SUITE
