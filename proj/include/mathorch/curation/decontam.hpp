// SPDX-License-Identifier: Apache-2.0
//
// Benchmark decontamination: lexical retrieval of similar benchmark items
// followed by a same-problem yes/no judgment on each.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/prompts.hpp"
#include "mathorch/core/types.hpp"

namespace mathorch::curation {

/// Character n-gram count vector of the lowercased, whitespace-collapsed text.
std::map<std::string, int> char_ngrams(std::string_view text, std::size_t n = 3);

/// Cosine similarity of two count vectors; 0 when either is empty.
double cosine_similarity(const std::map<std::string, int>& a, const std::map<std::string, int>& b);

struct Neighbor {
    std::size_t index = 0;
    double similarity = 0.0;
};

/// Up to `top_k` benchmark items with positive similarity, most similar
/// first (lower index on ties).
std::vector<Neighbor> nearest_benchmarks(std::string_view statement,
                                         const std::vector<std::map<std::string, int>>& benchmark_grams,
                                         std::size_t top_k, std::size_t n = 3);

struct RemovalEntry {
    std::string problem_id;
    std::string benchmark_id;
    double similarity = 0.0;
};

struct DecontamResult {
    std::vector<Problem> retained;
    std::vector<RemovalEntry> removed;
    // Problems with an unparseable judgment; kept out of `retained`.
    std::vector<Problem> review;
    std::size_t judge_calls = 0;
};

struct DecontamOptions {
    std::size_t top_k = 5;
    std::size_t ngram = 3;
    std::size_t max_in_flight = 8;
    SamplingParams params;
    const PromptTemplates* templates = nullptr;
    std::optional<std::string> verdict_pattern;
};

/// Throws ConfigError when `benchmark` is empty.
DecontamResult decontaminate(const std::vector<Problem>& problems, const std::vector<Problem>& benchmark,
                             backend::CompletionBackend& backend, const DecontamOptions& options = {});

} // namespace mathorch::curation
