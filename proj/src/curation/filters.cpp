// SPDX-License-Identifier: Apache-2.0
#include "mathorch/curation/filters.hpp"

#include <algorithm>
#include <memory>
#include <regex>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/log.hpp"
#include "mathorch/tir/blocks.hpp"
#include "mathorch/tir/session.hpp"

namespace mathorch::curation {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Label named after "verdict:", else the only label mentioned as a word.
std::optional<std::size_t> parse_label(std::string_view completion, const std::vector<std::string>& labels) {
    const auto text = lower(completion);
    std::string alternatives;
    for (const auto& l : labels) {
        alternatives += (alternatives.empty() ? "" : "|") + l;
    }
    const std::regex labelled("verdict\\s*:\\s*\\**\\s*(" + alternatives + ")\\b");
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), labelled); it != std::sregex_iterator(); ++it) {
        last = (*it)[1].str();
    }
    if (last) {
        return static_cast<std::size_t>(std::find(labels.begin(), labels.end(), *last) - labels.begin());
    }
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::regex word("\\b" + labels[i] + "\\b");
        if (std::regex_search(text, word)) {
            if (found) {
                return std::nullopt;
            }
            found = i;
        }
    }
    return found;
}

} // namespace

CotFilterResult filter_cot_solutions(const std::vector<Solution>& solutions, const std::vector<Problem>& problems,
                                     const judge::AnswerEquivalence& equivalence) {
    CotFilterResult out;
    std::map<std::string, std::vector<std::optional<std::string>>> answers;
    for (const auto& s : solutions) {
        if (s.finished) {
            answers[s.problem_id].push_back(s.extracted_answer);
        }
    }
    for (const auto& p : problems) {
        if (p.expected_answer) {
            out.labels[p.id] = *p.expected_answer;
        } else if (auto it = answers.find(p.id); it != answers.end()) {
            if (auto label = metrics::consensus_label(it->second, equivalence)) {
                out.labels[p.id] = *label;
            }
        }
    }
    for (const auto& s : solutions) {
        const auto label = out.labels.find(s.problem_id);
        if (!s.finished || !s.extracted_answer || label == out.labels.end() ||
            !equivalence(*s.extracted_answer, label->second)) {
            ++out.dropped;
            continue;
        }
        auto kept = s;
        kept.correct = true;
        out.retained.push_back(std::move(kept));
    }
    return out;
}

HardnessResult estimate_hardness(const Problem& problem, backend::CompletionBackend& backend, int n,
                                 const judge::AnswerEquivalence& equivalence, const HardnessOptions& options) {
    if (!problem.expected_answer) {
        throw InvalidRecord("problem '" + problem.id + "' has no label to estimate hardness against");
    }
    if (n < 1) {
        throw ConfigError("n", "must be at least 1");
    }
    std::vector<std::unique_ptr<tir::GenerationSession>> owned;
    std::vector<tir::GenerationSession*> sessions;
    for (int j = 0; j < n; ++j) {
        auto cfg = options.generation;
        cfg.params.seed = options.seed_base + j;
        tir::SessionOptions so;
        so.gen_index = j;
        so.templates = options.templates;
        owned.push_back(std::make_unique<tir::GenerationSession>(problem, options.mode, std::move(cfg), backend,
                                                                 options.sandbox, so));
        sessions.push_back(owned.back().get());
    }
    tir::drive_sessions(sessions, backend.clock());
    HardnessResult r;
    r.generations = n;
    for (auto* s : sessions) {
        auto sol = s->solution();
        sol.correct = sol.extracted_answer && equivalence(*sol.extracted_answer, *problem.expected_answer);
        r.correct += *sol.correct ? 1 : 0;
        r.solutions.push_back(std::move(sol));
    }
    r.pass_rate = metrics::Rational(r.correct, n);
    return r;
}

int generations_for_pass_rate(double pass_rate, const HardnessTiers& tiers) {
    if (pass_rate >= tiers.easy_min_pass_rate) {
        return tiers.easy_generations;
    }
    if (pass_rate >= tiers.medium_min_pass_rate) {
        return tiers.medium_generations;
    }
    return tiers.hard_generations;
}

std::string_view to_string(Novelty n) { return n == Novelty::novel ? "novel" : "verification"; }

std::string_view to_string(Significance s) {
    switch (s) {
    case Significance::significant: return "significant";
    case Significance::moderate: return "moderate";
    case Significance::trivial: return "trivial";
    }
    return "trivial";
}

std::optional<Novelty> parse_novelty(std::string_view completion) {
    static const std::vector<std::string> labels{"novel", "verification"};
    if (auto i = parse_label(completion, labels)) {
        return static_cast<Novelty>(*i);
    }
    return std::nullopt;
}

std::optional<Significance> parse_significance(std::string_view completion) {
    static const std::vector<std::string> labels{"significant", "moderate", "trivial"};
    if (auto i = parse_label(completion, labels)) {
        return static_cast<Significance>(*i);
    }
    return std::nullopt;
}

AssessmentResult assess_code_blocks(const Solution& solution, const Problem& problem,
                                    backend::CompletionBackend& backend, const AssessOptions& options) {
    const auto& templates = options.templates ? *options.templates : default_templates();
    const auto blocks = tir::extract_code_blocks(solution.reasoning_text, options.tags);
    std::vector<backend::CompletionRequest> requests;
    for (const auto& b : blocks) {
        const std::map<std::string, std::string> vars{{"problem", problem.statement},
                                                      {"context", solution.reasoning_text.substr(0, b.begin)},
                                                      {"code", b.code}};
        requests.push_back({templates.render("tir_novelty", vars), options.params, std::nullopt});
        requests.push_back({templates.render("tir_significance", vars), options.params, std::nullopt});
    }
    const auto results = backend::complete_batch(backend, requests, options.max_in_flight);
    AssessmentResult out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto novelty = parse_novelty(results[2 * i].text);
        const auto significance = parse_significance(results[2 * i + 1].text);
        if (novelty && significance) {
            out.blocks.push_back(CodeBlockAssessment{*novelty, *significance});
        } else {
            out.blocks.push_back(std::nullopt);
            out.needs_review = true;
        }
    }
    return out;
}

bool stage0_keep_rule(const std::vector<CodeBlockAssessment>& blocks) {
    std::size_t novel_moderate = 0;
    for (const auto& b : blocks) {
        if (b.novelty == Novelty::novel && b.significance == Significance::significant) {
            return true;
        }
        if (b.novelty == Novelty::novel && b.significance == Significance::moderate) {
            ++novel_moderate;
        }
    }
    return 2 * novel_moderate > blocks.size();
}

FilterDecision filter_tir_stage0(const Solution& solution, const std::vector<CodeBlockAssessment>& assessments,
                                 const tir::TirConfig& tags) {
    if (!solution.correct.value_or(false)) {
        return {false, "incorrect"};
    }
    const auto blocks = static_cast<std::size_t>(tir::count_code_blocks(solution.reasoning_text, tags));
    if (blocks == 0) {
        return {false, "no_code"};
    }
    if (blocks > 2) {
        return {false, "too_many_blocks"};
    }
    if (assessments.size() != blocks) {
        throw InvalidRecord("solution '" + solution.solution_id + "' has " + std::to_string(blocks) +
                            " code blocks but " + std::to_string(assessments.size()) + " assessments");
    }
    if (!stage0_keep_rule(assessments)) {
        return {false, "low_novelty"};
    }
    return {true, "kept"};
}

FilterDecision filter_tir_stageN(const Solution& solution, int requested_limit, const tir::TirConfig& tags) {
    if (!solution.correct.value_or(false)) {
        return {false, "incorrect"};
    }
    auto attempted = tir::count_code_blocks(solution.reasoning_text, tags);
    if (solution.limit_violation) {
        attempted = std::max(attempted, requested_limit + 1);
    }
    if (attempted == 0) {
        return {false, "no_code"};
    }
    if (attempted > requested_limit) {
        return {false, "over_limit"};
    }
    return {true, "kept"};
}

bool hard_subset(const Problem& problem, const Solution& solution, const HardSubsetCriteria& criteria) {
    return problem.difficulty && *problem.difficulty <= criteria.max_pass_rate &&
           solution.token_count >= criteria.min_tokens;
}

} // namespace mathorch::curation
