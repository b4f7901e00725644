// SPDX-License-Identifier: Apache-2.0
#include "mathorch/genselect/genselect.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "mathorch/core/log.hpp"
#include "mathorch/judge/answer.hpp"

namespace mathorch::genselect {
namespace {

using BigInt = boost::multiprecision::cpp_int;

const PromptTemplates& templates_of(const GenSelectConfig& c) {
    return c.templates ? *c.templates : default_templates();
}

BigInt binomial(std::size_t n, std::size_t k) {
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    BigInt r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

std::size_t max_size(std::size_t n, const GenSelectConfig& c) {
    return std::min<std::size_t>(static_cast<std::size_t>(c.max_group), n);
}

// Mixed sets of size s split by their correct-member count k.
BigInt mixed_sets(std::size_t c, std::size_t i, std::size_t s) {
    BigInt total = 0;
    for (std::size_t k = 1; k < s; ++k) {
        if (k <= c && s - k <= i) {
            total += binomial(c, k) * binomial(i, s - k);
        }
    }
    return total;
}

// Uniform draw in [0, bound) for a big bound, by rejection on masked words.
BigInt uniform_below(const BigInt& bound, Rng& rng) {
    const auto bits = boost::multiprecision::msb(bound) + 1;
    const BigInt mask = (BigInt(1) << bits) - 1;
    while (true) {
        BigInt r = 0;
        for (std::size_t got = 0; got < bits; got += 64) {
            r = (r << 64) | BigInt(rng.next());
        }
        r &= mask;
        if (r < bound) {
            return r;
        }
    }
}

std::vector<std::size_t> pick(const std::vector<std::size_t>& from, std::size_t k, Rng& rng) {
    std::vector<std::size_t> out;
    for (auto idx : rng.sample_indices(from.size(), k)) {
        out.push_back(from[idx]);
    }
    return out;
}

// Enumerates every mixed set; only called when there are few of them.
void enumerate_mixed(const std::vector<std::size_t>& corr, const std::vector<std::size_t>& inc, std::size_t s,
                     std::vector<std::vector<std::size_t>>& out) {
    const auto combos = [](const std::vector<std::size_t>& items, std::size_t k) {
        std::vector<std::vector<std::size_t>> res;
        std::vector<std::size_t> idx(k);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
            if (depth == k) {
                std::vector<std::size_t> c;
                for (auto i : idx) {
                    c.push_back(items[i]);
                }
                res.push_back(std::move(c));
                return;
            }
            for (std::size_t i = start; i < items.size(); ++i) {
                idx[depth] = i;
                rec(i + 1, depth + 1);
            }
        };
        rec(0, 0);
        return res;
    };
    for (std::size_t k = 1; k < s; ++k) {
        if (k > corr.size() || s - k > inc.size()) {
            continue;
        }
        for (const auto& a : combos(corr, k)) {
            for (const auto& b : combos(inc, s - k)) {
                auto group = a;
                group.insert(group.end(), b.begin(), b.end());
                out.push_back(std::move(group));
            }
        }
    }
}

} // namespace

void validate(const GenSelectConfig& c) {
    if (c.min_group < 2) {
        throw ConfigError("genselect.min_group", "must be at least 2");
    }
    if (c.max_group < c.min_group) {
        throw ConfigError("genselect.max_group", "must be at least min_group");
    }
    if (c.max_group > 16) {
        throw ConfigError("genselect.max_group", "must be at most 16");
    }
    if (c.groups_per_problem < 1) {
        throw ConfigError("genselect.groups_per_problem", "must be at least 1");
    }
    if (c.summary_max_tokens < 1) {
        throw ConfigError("genselect.summary_max_tokens", "must be positive");
    }
    if (c.summary_candidates < 1) {
        throw ConfigError("genselect.summary_candidates", "must be positive");
    }
    if (c.inference_subset_size < 1) {
        throw ConfigError("genselect.inference_subset_size", "must be positive");
    }
    if (c.inference_repeats < 1) {
        throw ConfigError("genselect.inference_repeats", "must be positive");
    }
}

const std::string& candidate_text(const Solution& s) {
    return s.summary_text ? *s.summary_text : s.reasoning_text;
}

std::optional<std::string> regenerate_summary(const Solution& solution, const Problem& problem,
                                              backend::CompletionBackend& backend,
                                              const judge::AnswerEquivalence& equivalence,
                                              const GenSelectConfig& config) {
    if (!solution.extracted_answer) {
        return std::nullopt;
    }
    const auto prompt = templates_of(config).render(
        "solution_summary", {{"problem", problem.statement}, {"solution", solution.reasoning_text}});
    std::vector<backend::CompletionRequest> requests;
    for (int i = 0; i < config.summary_candidates; ++i) {
        backend::CompletionRequest req{prompt, config.summary_params, std::nullopt};
        req.params.max_tokens = config.summary_max_tokens;
        req.params.seed = i;
        requests.push_back(std::move(req));
    }
    const auto results = backend::complete_batch(backend, requests, config.max_in_flight);
    std::optional<std::size_t> best;
    std::int64_t best_tokens = -1;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto answer = judge::extract_boxed(results[i].text);
        if (!answer || !equivalence(*answer, *solution.extracted_answer)) {
            continue;
        }
        const auto tokens = results[i].token_count();
        if (tokens > best_tokens) {
            best = i;
            best_tokens = tokens;
        }
    }
    if (!best) {
        return std::nullopt;
    }
    return results[*best].text;
}

std::uint64_t count_valid_groups(std::size_t correct, std::size_t incorrect, const GenSelectConfig& config,
                                 std::uint64_t cap) {
    const auto n = correct + incorrect;
    BigInt total = 0;
    for (auto s = static_cast<std::size_t>(config.min_group); s <= max_size(n, config); ++s) {
        total += mixed_sets(correct, incorrect, s);
        if (total >= cap) {
            return cap;
        }
    }
    return total.convert_to<std::uint64_t>();
}

std::vector<std::vector<std::size_t>> sample_training_groups(const std::vector<bool>& correct_flags,
                                                             const GenSelectConfig& config, Rng& rng) {
    const auto n = correct_flags.size();
    if (n < 2 || n < static_cast<std::size_t>(config.min_group)) {
        throw PoolTooSmall("pool of " + std::to_string(n) + " is smaller than the minimum group size");
    }
    std::vector<std::size_t> corr;
    std::vector<std::size_t> inc;
    for (std::size_t i = 0; i < n; ++i) {
        (correct_flags[i] ? corr : inc).push_back(i);
    }
    if (corr.empty()) {
        throw NoCorrect();
    }
    if (inc.empty()) {
        throw NoIncorrect();
    }
    const auto wanted = static_cast<std::size_t>(config.groups_per_problem);
    const auto lo = static_cast<std::size_t>(config.min_group);
    const auto hi = max_size(n, config);

    std::vector<std::vector<std::size_t>> groups;
    if (count_valid_groups(corr.size(), inc.size(), config, wanted + 1) <= wanted) {
        for (auto s = lo; s <= hi; ++s) {
            enumerate_mixed(corr, inc, s, groups);
        }
        rng.shuffle(groups);
        for (auto& g : groups) {
            rng.shuffle(g);
        }
        return groups;
    }

    std::set<std::vector<std::size_t>> seen;
    const auto attempts = 50 * wanted;
    for (std::size_t a = 0; a < attempts && groups.size() < wanted; ++a) {
        const auto s = static_cast<std::size_t>(rng.uniform(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
        // Choose the correct-member count with probability proportional to
        // the number of mixed sets having it, then the members themselves.
        auto r = uniform_below(mixed_sets(corr.size(), inc.size(), s), rng);
        std::size_t k = 1;
        for (; k < s; ++k) {
            if (k > corr.size() || s - k > inc.size()) {
                continue;
            }
            const BigInt w = binomial(corr.size(), k) * binomial(inc.size(), s - k);
            if (r < w) {
                break;
            }
            r -= w;
        }
        auto group = pick(corr, k, rng);
        const auto wrong = pick(inc, s - k, rng);
        group.insert(group.end(), wrong.begin(), wrong.end());
        rng.shuffle(group);
        auto key = group;
        std::sort(key.begin(), key.end());
        if (seen.insert(key).second) {
            groups.push_back(std::move(group));
        }
    }
    return groups;
}

std::optional<int> parse_selection(std::string_view completion, std::size_t num_candidates) {
    static const std::regex pattern(R"((?:[Ss]olution\s+(\d+))|(?:\\boxed\{\s*(\d+)\s*\}))");
    const std::string text(completion);
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it) {
        last = (*it)[1].matched ? (*it)[1].str() : (*it)[2].str();
    }
    if (!last || last->size() > 6) {
        return std::nullopt;
    }
    const int n = std::stoi(*last);
    if (n < 1 || static_cast<std::size_t>(n) > num_candidates) {
        return std::nullopt;
    }
    return n - 1;
}

std::string format_candidates(const std::vector<std::string>& summaries) {
    std::string out;
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        if (i > 0) {
            out += "\n\n";
        }
        out += "Solution " + std::to_string(i + 1) + ":\n" + summaries[i];
    }
    return out;
}

std::string selection_prompt(const Problem& problem, const std::vector<std::string>& summaries,
                             const GenSelectConfig& config) {
    return templates_of(config).render("genselect", {{"problem", problem.statement},
                                                     {"num_solutions", std::to_string(summaries.size())},
                                                     {"solutions", format_candidates(summaries)}});
}

SelectionOutcome run_selection(const Problem& problem, const std::vector<std::string>& summaries,
                               backend::CompletionBackend& backend, const GenSelectConfig& config,
                               std::int64_t seed) {
    if (summaries.size() < 2 || summaries.size() > static_cast<std::size_t>(std::max(config.max_group, config.inference_subset_size))) {
        throw UnparseableSelection("group size out of range");
    }
    backend::CompletionRequest req{selection_prompt(problem, summaries, config), config.selection_params, std::nullopt};
    req.params.seed = seed;
    auto result = backend::complete_blocking(backend, req);
    const auto idx = parse_selection(result.text, summaries.size());
    if (!idx) {
        throw UnparseableSelection("no valid selection in completion");
    }
    return {*idx, std::move(result.text)};
}

std::vector<std::optional<SelectionOutcome>> run_selections(const Problem& problem,
                                                            const std::vector<std::vector<std::string>>& groups,
                                                            backend::CompletionBackend& backend,
                                                            const GenSelectConfig& config,
                                                            const std::vector<std::int64_t>& seeds,
                                                            std::size_t* calls) {
    std::vector<std::optional<SelectionOutcome>> out(groups.size());
    std::vector<std::size_t> pending(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        pending[i] = i;
    }
    for (int attempt = 0; attempt < 2 && !pending.empty(); ++attempt) {
        std::vector<backend::CompletionRequest> requests;
        for (auto g : pending) {
            backend::CompletionRequest req{selection_prompt(problem, groups[g], config), config.selection_params,
                                           std::nullopt};
            req.params.seed = seeds.at(g) + attempt;
            requests.push_back(std::move(req));
        }
        const auto results = backend::complete_batch(backend, requests, config.max_in_flight);
        if (calls) {
            *calls += requests.size();
        }
        std::vector<std::size_t> failed;
        for (std::size_t j = 0; j < pending.size(); ++j) {
            const auto g = pending[j];
            if (auto idx = parse_selection(results[j].text, groups[g].size())) {
                out[g] = SelectionOutcome{*idx, results[j].text};
            } else {
                failed.push_back(g);
            }
        }
        pending = std::move(failed);
    }
    return out;
}

std::vector<SelectionRecord> filter_training_records(const std::vector<SelectionRecord>& records) {
    std::vector<SelectionRecord> out;
    for (const auto& r : records) {
        const auto i = static_cast<std::size_t>(r.chosen_index);
        if (i < r.candidate_summaries.size() && r.candidate_summaries[i].correct) {
            out.push_back(r);
        }
    }
    return out;
}

std::optional<SelectionRecord> summarize_selection(const SelectionRecord& record, const Problem& problem,
                                                   backend::CompletionBackend& backend,
                                                   const GenSelectConfig& config) {
    std::vector<std::string> summaries;
    for (const auto& c : record.candidate_summaries) {
        summaries.push_back(c.summary_text);
    }
    const auto prompt = templates_of(config).render(
        "comparison_summary", {{"problem", problem.statement},
                               {"solutions", format_candidates(summaries)},
                               {"reasoning", record.selection_reasoning.value_or("")}});
    backend::CompletionRequest req{prompt, config.summary_params, std::nullopt};
    req.params.max_tokens = config.summary_max_tokens;
    auto result = backend::complete_blocking(backend, req);
    const auto idx = parse_selection(result.text, summaries.size());
    if (!idx || *idx != record.chosen_index) {
        log::info("comparison summary inconsistent with selection",
                  {{"problem_id", record.problem_id}, {"chosen_index", record.chosen_index}});
        return std::nullopt;
    }
    auto out = record;
    out.selection_summary = std::move(result.text);
    return out;
}

InferenceResult genselect_inference(const std::vector<Solution>& pool, const Problem& problem,
                                    const GenSelectConfig& config, backend::CompletionBackend& backend,
                                    const judge::AnswerEquivalence& equivalence, Rng& rng) {
    std::vector<std::size_t> finished;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].finished && pool[i].extracted_answer) {
            finished.push_back(i);
        }
    }
    InferenceResult out;
    if (finished.empty()) {
        return out;
    }
    if (finished.size() == 1) {
        out.selected.push_back(finished.front());
        out.answer = pool[finished.front()].extracted_answer;
        return out;
    }
    const auto subset = std::min(finished.size(), static_cast<std::size_t>(config.inference_subset_size));
    std::vector<std::vector<std::string>> groups;
    std::vector<std::int64_t> seeds;
    for (int r = 0; r < config.inference_repeats; ++r) {
        std::vector<std::size_t> members;
        std::vector<std::string> texts;
        for (auto idx : rng.sample_indices(finished.size(), subset)) {
            members.push_back(finished[idx]);
            texts.push_back(candidate_text(pool[finished[idx]]));
        }
        out.subsets.push_back(std::move(members));
        groups.push_back(std::move(texts));
        seeds.push_back(2 * static_cast<std::int64_t>(r));
    }
    const auto outcomes = run_selections(problem, groups, backend, config, seeds, &out.selection_calls);
    std::vector<std::optional<std::string>> answers;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        if (!outcomes[r]) {
            ++out.unparseable;
            continue;
        }
        const auto chosen = out.subsets[r][static_cast<std::size_t>(outcomes[r]->chosen_index)];
        out.selected.push_back(chosen);
        answers.push_back(pool[chosen].extracted_answer);
    }
    if (answers.empty()) {
        throw AllSelectionsUnparseable("every selection for '" + problem.id + "' was unparseable");
    }
    out.answer = metrics::majority_vote(answers, equivalence).winner;
    return out;
}

} // namespace mathorch::genselect
