// SPDX-License-Identifier: Apache-2.0
//
// Generative selection: summary regeneration, training-group sampling,
// selection calls and majority over selected answers.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/errors.hpp"
#include "mathorch/core/prompts.hpp"
#include "mathorch/core/random.hpp"
#include "mathorch/core/types.hpp"
#include "mathorch/judge/equivalence.hpp"
#include "mathorch/metrics/aggregation.hpp"

namespace mathorch::genselect {

class NoCorrect : public Error {
public:
    NoCorrect() : Error("pool has no correct solution") {}
};

class NoIncorrect : public Error {
public:
    NoIncorrect() : Error("pool has no incorrect solution") {}
};

class PoolTooSmall : public Error {
public:
    using Error::Error;
};

class UnparseableSelection : public Error {
public:
    using Error::Error;
};

class AllSelectionsUnparseable : public Error {
public:
    using Error::Error;
};

struct GenSelectConfig {
    int min_group = 2;
    int max_group = 16;
    int groups_per_problem = 8;
    int summary_max_tokens = 2048;
    int summary_candidates = 4;
    int inference_subset_size = 16;
    int inference_repeats = 8;
    std::uint64_t rng_seed = 0;
    std::size_t max_in_flight = 8;
    SamplingParams summary_params;
    SamplingParams selection_params;
    const PromptTemplates* templates = nullptr;
};

/// Throws ConfigError.
void validate(const GenSelectConfig& c);

/// Regenerates a solution's summary: `summary_candidates` completions capped
/// at `summary_max_tokens`, keeping those whose boxed answer is equivalent
/// to the solution's; returns the longest (by token count, earliest on
/// ties) or nullopt when none survives. Candidate i is requested with seed i.
std::optional<std::string> regenerate_summary(const Solution& solution, const Problem& problem,
                                              backend::CompletionBackend& backend,
                                              const judge::AnswerEquivalence& equivalence,
                                              const GenSelectConfig& config);

/// Number of mixed-correctness member sets with size in the configured
/// range, saturated at `cap`.
std::uint64_t count_valid_groups(std::size_t correct, std::size_t incorrect, const GenSelectConfig& config,
                                 std::uint64_t cap);

/// Training groups as index lists into `correct_flags`, members in sampled
/// order. Group size is drawn uniformly from [min_group, min(max_group, n)],
/// then a set uniformly among mixed sets of that size. Groups are distinct
/// as sets; when at most groups_per_problem valid sets exist, all of them
/// are returned in random order. Throws PoolTooSmall, NoCorrect, NoIncorrect.
std::vector<std::vector<std::size_t>> sample_training_groups(const std::vector<bool>& correct_flags,
                                                             const GenSelectConfig& config, Rng& rng);

/// Selected index (0-based) from a selection completion: the last of
/// "Solution N", "solution N" or \boxed{N}. nullopt when absent or out of range.
std::optional<int> parse_selection(std::string_view completion, std::size_t num_candidates);

std::string format_candidates(const std::vector<std::string>& summaries);

std::string selection_prompt(const Problem& problem, const std::vector<std::string>& summaries,
                             const GenSelectConfig& config);

struct SelectionOutcome {
    int chosen_index = 0;
    std::string reasoning;
};

/// One selection call. Throws UnparseableSelection.
SelectionOutcome run_selection(const Problem& problem, const std::vector<std::string>& summaries,
                               backend::CompletionBackend& backend, const GenSelectConfig& config,
                               std::int64_t seed = 0);

/// Selections for many groups, run concurrently; one retry (seed + 1) per
/// unparseable completion. nullopt marks a group dropped after the retry.
std::vector<std::optional<SelectionOutcome>> run_selections(const Problem& problem,
                                                            const std::vector<std::vector<std::string>>& groups,
                                                            backend::CompletionBackend& backend,
                                                            const GenSelectConfig& config,
                                                            const std::vector<std::int64_t>& seeds,
                                                            std::size_t* calls = nullptr);

/// Keeps exactly the records whose chosen candidate is correct.
std::vector<SelectionRecord> filter_training_records(const std::vector<SelectionRecord>& records);

/// Regenerates the comparison summary (capped at summary_max_tokens). The
/// record is returned with selection_summary set, or nullopt when the
/// summary's verdict is missing or names a different candidate.
std::optional<SelectionRecord> summarize_selection(const SelectionRecord& record, const Problem& problem,
                                                   backend::CompletionBackend& backend,
                                                   const GenSelectConfig& config);

struct InferenceResult {
    std::optional<std::string> answer;
    // Pool indices of the selected solutions, one per successful repeat.
    std::vector<std::size_t> selected;
    // Subsets shown to the selector, as pool indices in prompt order.
    std::vector<std::vector<std::size_t>> subsets;
    std::size_t selection_calls = 0;
    std::size_t unparseable = 0;
};

/// Repeats inference_repeats times: sample min(subset, |pool|) finished
/// solutions without replacement, select one, and vote over the selected
/// answers. Unfinished solutions never enter the pool. Throws
/// AllSelectionsUnparseable.
InferenceResult genselect_inference(const std::vector<Solution>& pool, const Problem& problem,
                                    const GenSelectConfig& config, backend::CompletionBackend& backend,
                                    const judge::AnswerEquivalence& equivalence, Rng& rng);

/// Text shown to the selector for a solution: its summary, else the full text.
const std::string& candidate_text(const Solution& s);

} // namespace mathorch::genselect
