// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics over per-problem generation results. All fractions are
// exact rationals.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mathorch/judge/answer.hpp"
#include "mathorch/judge/equivalence.hpp"

namespace mathorch::metrics {

using judge::Rational;

enum class TieBreak { first_completed, lexicographic };

std::string_view to_string(TieBreak t);
TieBreak parse_tie_break(std::string_view s);

struct MetricConfig {
    int k = 1;
    TieBreak tie_break = TieBreak::first_completed;
    // When false, unanswered generations form their own class, which can win
    // the vote (and then counts as incorrect).
    bool exclude_unfinished = true;
};

struct GenerationJudgment {
    std::optional<std::string> answer;
    bool correct = false;
    bool finished = false;
};

struct ProblemResult {
    std::string problem_id;
    // Completion order.
    std::vector<GenerationJudgment> judgments;
};

struct VoteClass {
    // nullopt only for the unanswered class.
    std::optional<std::string> representative;
    // Indices into the voted list, ascending.
    std::vector<std::size_t> members;
};

struct VoteResult {
    std::optional<std::string> winner;
    std::size_t count = 0;
    // Index (into the voted list) of the winning representative.
    std::optional<std::size_t> winner_index;
    // Classes ordered by their earliest member.
    std::vector<VoteClass> tally;
};

/// Groups items 0..n-1 into classes under the transitive closure of
/// `linked(i, j)`. Classes are ordered by smallest member; members ascend.
std::vector<std::vector<std::size_t>> equivalence_classes(std::size_t n,
                                                          const std::function<bool(std::size_t, std::size_t)>& linked);

/// Votes over answers in completion order. nullopt entries are skipped
/// unless `include_unanswered`. Ties between largest classes go to the class
/// holding the earliest answer (first_completed) or to the class with the
/// smallest normalized representative (lexicographic). The representative of
/// a class is its earliest member, or under lexicographic its smallest
/// normalized member.
VoteResult majority_vote(const std::vector<std::optional<std::string>>& answers, const judge::AnswerEquivalence& eq,
                         TieBreak tie_break = TieBreak::first_completed, bool include_unanswered = false);

/// Most common answer with ties broken by the smallest normalized form, so
/// the label does not depend on answer order.
std::optional<std::string> consensus_label(const std::vector<std::optional<std::string>>& answers,
                                           const judge::AnswerEquivalence& eq);

/// Mean over problems of (correct among the first n) / n.
/// Throws InsufficientGenerations.
Rational pass_at_1_avg(const std::vector<ProblemResult>& results, int n);

/// Fraction of problems whose majority answer over the first k generations
/// is correct; a class's correctness is that of its representative.
Rational maj_at_k(const std::vector<ProblemResult>& results, const MetricConfig& config,
                  const judge::AnswerEquivalence& eq);

/// Fraction of problems with at least one correct answer among the first k.
Rational pass_at_k(const std::vector<ProblemResult>& results, int k);

/// Fraction of all generations that are unfinished. Zero for no generations.
Rational unfinished_rate(const std::vector<ProblemResult>& results);

double to_double(const Rational& r);
/// "p/q" (or "p" for integers).
std::string to_fraction_string(const Rational& r);

} // namespace mathorch::metrics
