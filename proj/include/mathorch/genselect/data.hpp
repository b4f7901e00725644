// SPDX-License-Identifier: Apache-2.0
//
// Builds selection training records from per-problem solution pools.

#pragma once

#include <vector>

#include "mathorch/genselect/genselect.hpp"

namespace mathorch::genselect {

struct DataPrepOptions {
    bool regenerate_summaries = true;
    bool summarize_comparisons = true;
};

struct DataPrepStats {
    std::size_t problems = 0;
    std::size_t skipped_no_correct = 0;
    std::size_t skipped_no_incorrect = 0;
    std::size_t skipped_too_small = 0;
    std::size_t summaries_discarded = 0;
    std::size_t groups = 0;
    std::size_t unparseable_dropped = 0;
    // Records with a parsed selection, before the correct-choice filter.
    std::size_t selections = 0;
    std::size_t retained = 0;
    std::size_t summary_inconsistent = 0;
    std::size_t written = 0;

    json to_json() const;
};

struct DataPrepResult {
    std::vector<SelectionRecord> records;
    DataPrepStats stats;
};

/// Labels each solution (its `correct` flag, else equivalence with the
/// expected answer, else the consensus answer of the pool), optionally
/// regenerates summaries, samples groups, runs selections, keeps
/// correct-choice records and optionally regenerates comparison summaries.
/// Problems are processed in the given order with per-problem seeds.
DataPrepResult prepare_training_data(const std::vector<Problem>& problems, const std::vector<Solution>& solutions,
                                     backend::CompletionBackend& backend, const judge::AnswerEquivalence& equivalence,
                                     const GenSelectConfig& config, const DataPrepOptions& options = {});

} // namespace mathorch::genselect
