// SPDX-License-Identifier: Apache-2.0
#include "mathorch/curation/decontam.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/log.hpp"

namespace mathorch::curation {

std::map<std::string, int> char_ngrams(std::string_view text, std::size_t n) {
    std::string norm;
    bool space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            space = !norm.empty();
            continue;
        }
        if (space) {
            norm += ' ';
            space = false;
        }
        norm += static_cast<char>(std::tolower(c));
    }
    std::map<std::string, int> grams;
    if (n == 0 || norm.size() < n) {
        return grams;
    }
    for (std::size_t i = 0; i + n <= norm.size(); ++i) {
        ++grams[norm.substr(i, n)];
    }
    return grams;
}

double cosine_similarity(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
    if (a.empty() || b.empty()) {
        return 0.0;
    }
    double dot = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            dot += static_cast<double>(ia->second) * ib->second;
            ++ia;
            ++ib;
        }
    }
    if (dot == 0.0) {
        return 0.0;
    }
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [k, v] : a) {
        na += static_cast<double>(v) * v;
    }
    for (const auto& [k, v] : b) {
        nb += static_cast<double>(v) * v;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> nearest_benchmarks(std::string_view statement,
                                         const std::vector<std::map<std::string, int>>& benchmark_grams,
                                         std::size_t top_k, std::size_t n) {
    const auto grams = char_ngrams(statement, n);
    std::vector<Neighbor> out;
    for (std::size_t i = 0; i < benchmark_grams.size(); ++i) {
        const auto sim = cosine_similarity(grams, benchmark_grams[i]);
        if (sim > 0.0) {
            out.push_back({i, sim});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
    if (out.size() > top_k) {
        out.resize(top_k);
    }
    return out;
}

DecontamResult decontaminate(const std::vector<Problem>& problems, const std::vector<Problem>& benchmark,
                             backend::CompletionBackend& backend, const DecontamOptions& options) {
    if (benchmark.empty()) {
        throw ConfigError("benchmark", "benchmark set must be non-empty");
    }
    const auto& templates = options.templates ? *options.templates : default_templates();
    std::vector<std::map<std::string, int>> bench_grams;
    for (const auto& b : benchmark) {
        bench_grams.push_back(char_ngrams(b.statement, options.ngram));
    }

    DecontamResult result;
    for (const auto& p : problems) {
        const auto near = nearest_benchmarks(p.statement, bench_grams, options.top_k, options.ngram);
        if (near.empty()) {
            result.retained.push_back(p);
            continue;
        }
        std::vector<backend::CompletionRequest> requests;
        for (const auto& n : near) {
            requests.push_back({templates.render("decontam_same_problem",
                                                 {{"problem", p.statement}, {"other", benchmark[n.index].statement}}),
                                options.params, std::nullopt});
        }
        const auto results = backend::complete_batch(backend, requests, options.max_in_flight);
        result.judge_calls += results.size();
        std::optional<RemovalEntry> hit;
        bool unparseable = false;
        for (std::size_t k = 0; k < results.size() && !hit; ++k) {
            try {
                if (backend::parse_yes_no(results[k].text, options.verdict_pattern)) {
                    hit = RemovalEntry{p.id, benchmark[near[k].index].id, near[k].similarity};
                }
            } catch (const UnparseableVerdict&) {
                unparseable = true;
            }
        }
        if (hit) {
            log::info("decontamination removed problem", {{"problem_id", hit->problem_id},
                                                          {"benchmark_id", hit->benchmark_id},
                                                          {"similarity", hit->similarity}});
            result.removed.push_back(std::move(*hit));
        } else if (unparseable) {
            result.review.push_back(p);
        } else {
            result.retained.push_back(p);
        }
    }
    return result;
}

} // namespace mathorch::curation
