// SPDX-License-Identifier: Apache-2.0
//
// Solution-level filters: answer matching for CoT data, hardness estimation
// and budget tiers, code-block assessment and the TIR keep rules.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/prompts.hpp"
#include "mathorch/core/types.hpp"
#include "mathorch/judge/equivalence.hpp"
#include "mathorch/metrics/aggregation.hpp"
#include "mathorch/sandbox/sandbox.hpp"
#include "mathorch/tir/config.hpp"

namespace mathorch::curation {

struct CotFilterResult {
    std::vector<Solution> retained;
    // Label each problem was judged against (expected or consensus).
    std::map<std::string, std::string> labels;
    std::size_t dropped = 0;
};

/// Keeps finished solutions whose answer matches the problem's expected
/// answer, or the consensus answer when there is none. Retained solutions
/// get correct = true.
CotFilterResult filter_cot_solutions(const std::vector<Solution>& solutions, const std::vector<Problem>& problems,
                                     const judge::AnswerEquivalence& equivalence);

struct HardnessOptions {
    SolutionMode mode = SolutionMode::cot;
    tir::TirConfig generation;
    sandbox::CodeSandbox* sandbox = nullptr;
    const PromptTemplates* templates = nullptr;
    // Generation j uses seed seed_base + j.
    std::int64_t seed_base = 0;
};

struct HardnessResult {
    metrics::Rational pass_rate;
    int correct = 0;
    int generations = 0;
    std::vector<Solution> solutions;
};

/// Runs n generations concurrently and returns the fraction whose answer
/// matches the problem's expected answer. Throws InvalidRecord when the
/// problem has no expected answer.
HardnessResult estimate_hardness(const Problem& problem, backend::CompletionBackend& backend, int n,
                                 const judge::AnswerEquivalence& equivalence, const HardnessOptions& options = {});

struct HardnessTiers {
    double easy_min_pass_rate = 0.5;
    int easy_generations = 4;
    double medium_min_pass_rate = 0.1;
    int medium_generations = 16;
    int hard_generations = 32;
};

/// More generations for harder problems.
int generations_for_pass_rate(double pass_rate, const HardnessTiers& tiers = {});

enum class Novelty { novel, verification };
enum class Significance { significant, moderate, trivial };

std::string_view to_string(Novelty n);
std::string_view to_string(Significance s);

struct CodeBlockAssessment {
    Novelty novelty = Novelty::verification;
    Significance significance = Significance::trivial;

    bool operator==(const CodeBlockAssessment&) const = default;
};

/// "Verdict: X" wins; otherwise a completion naming exactly one of the
/// labels. nullopt when neither applies.
std::optional<Novelty> parse_novelty(std::string_view completion);
std::optional<Significance> parse_significance(std::string_view completion);

struct AssessmentResult {
    // One entry per code block, in order; nullopt marks an unassessed block.
    std::vector<std::optional<CodeBlockAssessment>> blocks;
    bool needs_review = false;
};

struct AssessOptions {
    tir::TirConfig tags;
    SamplingParams params;
    std::size_t max_in_flight = 8;
    const PromptTemplates* templates = nullptr;
};

AssessmentResult assess_code_blocks(const Solution& solution, const Problem& problem,
                                    backend::CompletionBackend& backend, const AssessOptions& options = {});

struct FilterDecision {
    bool keep = false;
    std::string reason;
};

/// (exists novel and significant) or (novel-and-moderate blocks are more than half).
bool stage0_keep_rule(const std::vector<CodeBlockAssessment>& blocks);

/// Drops incorrect (or unjudged) solutions, solutions without code, with
/// more than two blocks, or failing the keep rule. `assessments` must align
/// with the solution's code blocks.
FilterDecision filter_tir_stage0(const Solution& solution, const std::vector<CodeBlockAssessment>& assessments,
                                 const tir::TirConfig& tags = {});

/// Later-stage filter: drops incorrect solutions, solutions without code and
/// solutions that attempted more blocks than `requested_limit`.
FilterDecision filter_tir_stageN(const Solution& solution, int requested_limit, const tir::TirConfig& tags = {});

struct HardSubsetCriteria {
    double max_pass_rate = 0.3;
    std::int64_t min_tokens = 5000;
};

/// Hard-problem subset: problem pass-rate at most the threshold and a
/// solution of at least `min_tokens` tokens.
bool hard_subset(const Problem& problem, const Solution& solution, const HardSubsetCriteria& criteria = {});

} // namespace mathorch::curation
