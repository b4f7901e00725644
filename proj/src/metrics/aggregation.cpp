// SPDX-License-Identifier: Apache-2.0
#include "mathorch/metrics/aggregation.hpp"

#include <numeric>

#include "mathorch/core/errors.hpp"

namespace mathorch::metrics {
namespace {

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            // Keep the smaller index as root so roots are class minima.
            parent[std::max(a, b)] = std::min(a, b);
        }
    }

    std::vector<std::size_t> parent;
};

void require(const ProblemResult& r, int n) {
    if (n < 1) {
        throw ConfigError("k", "must be at least 1");
    }
    if (r.judgments.size() < static_cast<std::size_t>(n)) {
        throw InsufficientGenerations(r.problem_id, r.judgments.size(), static_cast<std::size_t>(n));
    }
}

} // namespace

std::string_view to_string(TieBreak t) {
    return t == TieBreak::first_completed ? "first_completed" : "lexicographic";
}

TieBreak parse_tie_break(std::string_view s) {
    if (s == "first_completed") {
        return TieBreak::first_completed;
    }
    if (s == "lexicographic") {
        return TieBreak::lexicographic;
    }
    throw ConfigError("tie_break", "expected first_completed or lexicographic, got '" + std::string(s) + "'");
}

std::vector<std::vector<std::size_t>> equivalence_classes(std::size_t n,
                                                          const std::function<bool(std::size_t, std::size_t)>& linked) {
    DisjointSets sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (sets.find(i) != sets.find(j) && linked(i, j)) {
                sets.unite(i, j);
            }
        }
    }
    std::vector<std::vector<std::size_t>> classes;
    std::vector<std::size_t> slot(n, SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = sets.find(i);
        if (slot[root] == SIZE_MAX) {
            slot[root] = classes.size();
            classes.emplace_back();
        }
        classes[slot[root]].push_back(i);
    }
    return classes;
}

VoteResult majority_vote(const std::vector<std::optional<std::string>>& answers, const judge::AnswerEquivalence& eq,
                         TieBreak tie_break, bool include_unanswered) {
    std::vector<std::size_t> answered;
    std::vector<std::size_t> unanswered;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        (answers[i] ? answered : unanswered).push_back(i);
    }
    const auto classes = equivalence_classes(answered.size(), [&](std::size_t a, std::size_t b) {
        return eq(*answers[answered[a]], *answers[answered[b]]);
    });

    std::vector<std::string> norm_cache(answers.size());
    if (tie_break == TieBreak::lexicographic) {
        for (auto i : answered) {
            norm_cache[i] = judge::normalize_answer(*answers[i]);
        }
    }
    auto lex_less = [&](std::size_t a, std::size_t b) {
        if (norm_cache[a] != norm_cache[b]) {
            return norm_cache[a] < norm_cache[b];
        }
        return *answers[a] < *answers[b];
    };

    VoteResult result;
    std::vector<std::size_t> rep_index;
    for (const auto& cls : classes) {
        VoteClass vc;
        for (auto m : cls) {
            vc.members.push_back(answered[m]);
        }
        auto rep = vc.members.front();
        if (tie_break == TieBreak::lexicographic) {
            for (auto m : vc.members) {
                if (lex_less(m, rep)) {
                    rep = m;
                }
            }
        }
        vc.representative = answers[rep];
        rep_index.push_back(rep);
        result.tally.push_back(std::move(vc));
    }
    if (include_unanswered && !unanswered.empty()) {
        result.tally.push_back(VoteClass{std::nullopt, unanswered});
        rep_index.push_back(unanswered.front());
        // Keep tally ordered by earliest member.
        std::vector<std::size_t> order(result.tally.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return result.tally[a].members.front() < result.tally[b].members.front();
        });
        std::vector<VoteClass> tally;
        std::vector<std::size_t> reps;
        for (auto o : order) {
            tally.push_back(result.tally[o]);
            reps.push_back(rep_index[o]);
        }
        result.tally = std::move(tally);
        rep_index = std::move(reps);
    }
    if (result.tally.empty()) {
        return result;
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < result.tally.size(); ++c) {
        const auto& cand = result.tally[c];
        const auto& cur = result.tally[best];
        if (cand.members.size() > cur.members.size()) {
            best = c;
        } else if (cand.members.size() == cur.members.size() && tie_break == TieBreak::lexicographic) {
            // The unanswered class sorts after every answer.
            if (cand.representative && (!cur.representative || lex_less(rep_index[c], rep_index[best]))) {
                best = c;
            }
        }
        // first_completed: tally is ordered by earliest member, so the
        // earlier class already holds `best`.
    }
    result.winner = result.tally[best].representative;
    result.count = result.tally[best].members.size();
    result.winner_index = rep_index[best];
    return result;
}

std::optional<std::string> consensus_label(const std::vector<std::optional<std::string>>& answers,
                                           const judge::AnswerEquivalence& eq) {
    return majority_vote(answers, eq, TieBreak::lexicographic).winner;
}

Rational pass_at_1_avg(const std::vector<ProblemResult>& results, int n) {
    if (results.empty()) {
        return Rational(0);
    }
    Rational total(0);
    for (const auto& r : results) {
        require(r, n);
        long correct = 0;
        for (int i = 0; i < n; ++i) {
            correct += r.judgments[static_cast<std::size_t>(i)].correct ? 1 : 0;
        }
        total += Rational(correct, n);
    }
    return total / static_cast<long>(results.size());
}

Rational maj_at_k(const std::vector<ProblemResult>& results, const MetricConfig& config,
                  const judge::AnswerEquivalence& eq) {
    if (results.empty()) {
        return Rational(0);
    }
    long hits = 0;
    for (const auto& r : results) {
        require(r, config.k);
        std::vector<std::optional<std::string>> answers;
        for (int i = 0; i < config.k; ++i) {
            answers.push_back(r.judgments[static_cast<std::size_t>(i)].answer);
        }
        const auto vote = majority_vote(answers, eq, config.tie_break, !config.exclude_unfinished);
        if (vote.winner && vote.winner_index && r.judgments[*vote.winner_index].correct) {
            ++hits;
        }
    }
    return Rational(hits, static_cast<long>(results.size()));
}

Rational pass_at_k(const std::vector<ProblemResult>& results, int k) {
    if (results.empty()) {
        return Rational(0);
    }
    long hits = 0;
    for (const auto& r : results) {
        require(r, k);
        for (int i = 0; i < k; ++i) {
            if (r.judgments[static_cast<std::size_t>(i)].correct) {
                ++hits;
                break;
            }
        }
    }
    return Rational(hits, static_cast<long>(results.size()));
}

Rational unfinished_rate(const std::vector<ProblemResult>& results) {
    long total = 0;
    long unfinished = 0;
    for (const auto& r : results) {
        for (const auto& j : r.judgments) {
            ++total;
            unfinished += j.finished ? 0 : 1;
        }
    }
    return total == 0 ? Rational(0) : Rational(unfinished, total);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_fraction_string(const Rational& r) {
    const auto num = boost::multiprecision::numerator(r);
    const auto den = boost::multiprecision::denominator(r);
    if (den == 1) {
        return num.str();
    }
    return num.str() + "/" + den.str();
}

} // namespace mathorch::metrics
