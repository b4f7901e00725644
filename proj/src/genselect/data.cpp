// SPDX-License-Identifier: Apache-2.0
#include "mathorch/genselect/data.hpp"

#include <map>

#include "mathorch/core/log.hpp"

namespace mathorch::genselect {

json DataPrepStats::to_json() const {
    json j{{"problems", problems},
           {"skipped_no_correct", skipped_no_correct},
           {"skipped_no_incorrect", skipped_no_incorrect},
           {"skipped_too_small", skipped_too_small},
           {"summaries_discarded", summaries_discarded},
           {"groups", groups},
           {"unparseable_dropped", unparseable_dropped},
           {"selections", selections},
           {"retained", retained},
           {"summary_inconsistent", summary_inconsistent},
           {"written", written}};
    if (selections > 0) {
        const metrics::Rational ratio(static_cast<long>(retained), static_cast<long>(selections));
        j["retained_ratio"] = metrics::to_double(ratio);
        j["retained_ratio_exact"] = metrics::to_fraction_string(ratio);
    } else {
        j["retained_ratio"] = nullptr;
    }
    return j;
}

DataPrepResult prepare_training_data(const std::vector<Problem>& problems, const std::vector<Solution>& solutions,
                                     backend::CompletionBackend& backend, const judge::AnswerEquivalence& equivalence,
                                     const GenSelectConfig& config, const DataPrepOptions& options) {
    validate(config);
    std::map<std::string, std::vector<const Solution*>> by_problem;
    for (const auto& s : solutions) {
        if (s.extracted_answer) {
            by_problem[s.problem_id].push_back(&s);
        }
    }
    DataPrepResult out;
    auto& st = out.stats;
    for (const auto& problem : problems) {
        ++st.problems;
        const auto it = by_problem.find(problem.id);
        if (it == by_problem.end()) {
            ++st.skipped_too_small;
            continue;
        }
        const auto& pool = it->second;

        std::optional<std::string> label = problem.expected_answer;
        if (!label) {
            std::vector<std::optional<std::string>> answers;
            for (const auto* s : pool) {
                answers.push_back(s->extracted_answer);
            }
            label = metrics::consensus_label(answers, equivalence);
        }

        std::vector<SelectionCandidate> candidates;
        for (const auto* s : pool) {
            SelectionCandidate c;
            c.solution_id = s->solution_id;
            c.extracted_answer = s->extracted_answer;
            if (s->correct) {
                c.correct = *s->correct;
            } else {
                c.correct = label && equivalence(*s->extracted_answer, *label);
            }
            if (options.regenerate_summaries) {
                auto summary = regenerate_summary(*s, problem, backend, equivalence, config);
                if (!summary) {
                    ++st.summaries_discarded;
                    continue;
                }
                c.summary_text = std::move(*summary);
            } else {
                c.summary_text = candidate_text(*s);
            }
            candidates.push_back(std::move(c));
        }

        std::vector<bool> flags;
        for (const auto& c : candidates) {
            flags.push_back(c.correct);
        }
        Rng rng(derive_seed(config.rng_seed, problem.id));
        std::vector<std::vector<std::size_t>> groups;
        try {
            groups = sample_training_groups(flags, config, rng);
        } catch (const NoCorrect&) {
            ++st.skipped_no_correct;
            continue;
        } catch (const NoIncorrect&) {
            ++st.skipped_no_incorrect;
            continue;
        } catch (const PoolTooSmall&) {
            ++st.skipped_too_small;
            continue;
        }
        st.groups += groups.size();

        std::vector<std::vector<std::string>> texts;
        std::vector<std::int64_t> seeds;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            std::vector<std::string> t;
            for (auto m : groups[g]) {
                t.push_back(candidates[m].summary_text);
            }
            texts.push_back(std::move(t));
            seeds.push_back(2 * static_cast<std::int64_t>(g));
        }
        const auto outcomes = run_selections(problem, texts, backend, config, seeds);

        std::vector<SelectionRecord> records;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (!outcomes[g]) {
                ++st.unparseable_dropped;
                continue;
            }
            std::vector<SelectionCandidate> members;
            for (auto m : groups[g]) {
                members.push_back(candidates[m]);
            }
            auto rec = SelectionRecord::create(problem.id, std::move(members), outcomes[g]->chosen_index);
            rec.selection_reasoning = outcomes[g]->reasoning;
            records.push_back(std::move(rec));
        }
        st.selections += records.size();
        records = filter_training_records(records);
        st.retained += records.size();

        for (auto& rec : records) {
            if (options.summarize_comparisons) {
                auto summarized = summarize_selection(rec, problem, backend, config);
                if (!summarized) {
                    ++st.summary_inconsistent;
                    continue;
                }
                out.records.push_back(std::move(*summarized));
            } else {
                out.records.push_back(std::move(rec));
            }
        }
    }
    st.written = out.records.size();
    log::info("genselect data prepared", st.to_json());
    return out;
}

} // namespace mathorch::genselect
