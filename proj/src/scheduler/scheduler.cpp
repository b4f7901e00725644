// SPDX-License-Identifier: Apache-2.0
#include "mathorch/scheduler/scheduler.hpp"

#include <algorithm>
#include <memory>

#include "mathorch/core/log.hpp"
#include "mathorch/judge/answer.hpp"
#include "mathorch/metrics/aggregation.hpp"

namespace mathorch::scheduler {
namespace {

// Real clocks overshoot a deadline by scheduling jitter; anything within
// this margin is charged as exactly the allocation.
constexpr std::int64_t kDeadlineGraceMs = 1000;

} // namespace

void validate(const TimeLedger& l) {
    if (l.base_per_question_s < 1) {
        throw ConfigError("ledger.base_per_question_s", "must be positive");
    }
    if (l.extra_draw_cap_s < 0) {
        throw ConfigError("ledger.extra_draw_cap_s", "must be non-negative");
    }
    if (l.buffer_s < 0) {
        throw ConfigError("ledger.buffer_s", "must be non-negative");
    }
    if (l.total_budget_s < 0) {
        throw ConfigError("ledger.total_budget_s", "must be non-negative");
    }
}

void validate(const BatchPolicy& p) {
    if (p.batch_size < 1) {
        throw ConfigError("policy.batch_size", "must be at least 1");
    }
    if (p.agreement_threshold < 1 || p.agreement_threshold > p.batch_size) {
        throw ConfigError("policy.agreement_threshold", "must lie in [1, batch_size]");
    }
    if (p.straggler_cancel_count < 0 || p.straggler_cancel_count >= p.batch_size) {
        throw ConfigError("policy.straggler_cancel_count", "must lie in [0, batch_size)");
    }
}

Allocation allocate(const TimeLedger& ledger) {
    Allocation a;
    a.seconds = ledger.base_per_question_s + std::min(ledger.buffer_s, ledger.extra_draw_cap_s);
    const auto remaining = std::max<std::int64_t>(0, ledger.total_budget_s - ledger.spent_s);
    if (remaining < a.seconds) {
        a.seconds = remaining;
        a.budget_capped = true;
        log::info("allocation capped by remaining total budget", {{"remaining_s", remaining}});
    }
    return a;
}

TimeLedger settle_question(const TimeLedger& ledger, std::int64_t allocated_s, std::int64_t used_s) {
    if (used_s < 0) {
        throw OverUse("negative usage");
    }
    if (used_s > allocated_s) {
        throw OverUse("question used " + std::to_string(used_s) + " s of " + std::to_string(allocated_s) + " s");
    }
    TimeLedger next = ledger;
    next.buffer_s = ledger.buffer_s - std::max<std::int64_t>(0, allocated_s - ledger.base_per_question_s) +
                    (allocated_s - used_s);
    next.spent_s = ledger.spent_s + used_s;
    if (next.buffer_s < 0) {
        throw OverUse("buffer would become negative");
    }
    return next;
}

QuestionOutcome solve_question(const Problem& problem, const BatchPolicy& policy, std::int64_t deadline_s,
                               const SolveContext& ctx) {
    validate(policy);
    if (deadline_s <= 0) {
        throw ConfigError("deadline_s", "must be positive");
    }
    if (ctx.backend == nullptr) {
        throw ConfigError("backend", "missing");
    }
    auto& clock = ctx.backend->clock();
    const auto start = clock.now();
    const auto deadline = start + Millis{deadline_s * 1000};

    std::vector<std::unique_ptr<tir::GenerationSession>> owned;
    std::vector<tir::GenerationSession*> sessions;
    for (int j = 0; j < policy.batch_size; ++j) {
        auto cfg = ctx.tir;
        cfg.params.seed = ctx.seed_base + j;
        tir::SessionOptions opts;
        opts.gen_index = j;
        opts.deadline = deadline;
        opts.templates = ctx.templates;
        opts.registry = ctx.registry;
        owned.push_back(std::make_unique<tir::GenerationSession>(problem, ctx.mode, std::move(cfg), *ctx.backend,
                                                                 ctx.sandbox, opts));
        sessions.push_back(owned.back().get());
    }

    QuestionOutcome out;
    out.problem_id = problem.id;
    std::vector<std::size_t> completed;
    std::vector<bool> cancel_issued(sessions.size(), false);
    bool stopped = false;
    const auto t = static_cast<std::size_t>(policy.agreement_threshold);

    auto cancel_pending = [&](int& counter) {
        for (std::size_t j = 0; j < sessions.size(); ++j) {
            if (!sessions[j]->done() && !cancel_issued[j]) {
                sessions[j]->cancel();
                cancel_issued[j] = true;
                ++counter;
            }
        }
    };

    auto on_done = [&](std::size_t i) {
        auto* s = sessions[i];
        const auto answer = judge::extract_boxed(s->transcript());
        BatchEvent ev;
        ev.t_ms = (clock.now() - start).count();
        ev.gen_index = static_cast<int>(i);
        ev.answer = answer;
        using S = tir::GenerationSession::State;
        if (s->state() == S::finished) {
            ev.kind = "completed";
            completed.push_back(i);
        } else {
            ev.kind = s->state() == S::deadline ? "deadline" : "cancelled";
        }
        out.events.push_back(ev);
        if (stopped || ev.kind != "completed" || policy.batch_size == 1) {
            return;
        }
        if (completed.size() == t) {
            std::vector<std::string> answers;
            for (auto c : completed) {
                if (auto a = judge::extract_boxed(sessions[c]->transcript())) {
                    answers.push_back(*a);
                }
            }
            if (answers.size() == t) {
                const auto classes = metrics::equivalence_classes(
                    t, [&](std::size_t a, std::size_t b) { return ctx.equivalence(answers[a], answers[b]); });
                if (classes.size() == 1) {
                    stopped = true;
                    out.early_stopped = true;
                    out.answer = answers.front();
                    cancel_pending(out.cancellations);
                    return;
                }
            }
        }
        if (policy.straggler_cancel_count > 0 &&
            completed.size() == static_cast<std::size_t>(policy.batch_size - policy.straggler_cancel_count)) {
            int n = 0;
            cancel_pending(n);
            out.stragglers_cancelled += n;
            out.cancellations += n;
        }
    };

    tir::drive_sessions(sessions, clock, on_done, /*contain_errors=*/true);

    out.used_ms = (clock.now() - start).count();
    if (out.used_ms > deadline_s * 1000 && out.used_ms <= deadline_s * 1000 + kDeadlineGraceMs) {
        out.used_ms = deadline_s * 1000;
    }
    out.used_s = (out.used_ms + 999) / 1000;

    if (!out.early_stopped) {
        // Completed answers in completion order, then answers recoverable
        // from cut-off transcripts in generation order.
        std::vector<std::optional<std::string>> answers;
        for (auto c : completed) {
            answers.push_back(judge::extract_boxed(sessions[c]->transcript()));
        }
        for (std::size_t j = 0; j < sessions.size(); ++j) {
            if (std::find(completed.begin(), completed.end(), j) == completed.end()) {
                if (auto a = judge::extract_boxed(sessions[j]->transcript())) {
                    answers.push_back(a);
                }
            }
        }
        out.answer = metrics::majority_vote(answers, ctx.equivalence).winner;
    }
    for (auto* s : sessions) {
        out.solutions.push_back(s->solution());
    }
    out.live_after = ctx.registry ? ctx.registry->live() : 0;
    return out;
}

json to_json(const BatchEvent& e) {
    json j{{"t_ms", e.t_ms}, {"gen_index", e.gen_index}, {"kind", e.kind}};
    j["answer"] = e.answer ? json(*e.answer) : json(nullptr);
    return j;
}

json to_json(const QuestionAudit& a) {
    json j{{"problem_id", a.problem_id},
           {"allocated_s", a.allocated_s},
           {"used_s", a.used_s},
           {"buffer_after_s", a.buffer_after_s},
           {"budget_capped", a.budget_capped},
           {"early_stopped", a.early_stopped},
           {"cancellations", a.cancellations}};
    j["answer"] = a.answer ? json(*a.answer) : json(nullptr);
    return j;
}

json to_json(const TimeLedger& l) {
    return json{{"base_per_question_s", l.base_per_question_s},
                {"extra_draw_cap_s", l.extra_draw_cap_s},
                {"buffer_s", l.buffer_s},
                {"total_budget_s", l.total_budget_s},
                {"spent_s", l.spent_s}};
}

CompetitionResult run_competition(const std::vector<Problem>& problems, TimeLedger ledger, const BatchPolicy& policy,
                                  const SolveContext& ctx) {
    validate(ledger);
    validate(policy);
    CompetitionResult result;
    for (const auto& p : problems) {
        const auto alloc = allocate(ledger);
        QuestionAudit audit;
        audit.problem_id = p.id;
        audit.allocated_s = alloc.seconds;
        audit.budget_capped = alloc.budget_capped;
        if (alloc.seconds <= 0) {
            log::warning("total budget exhausted; question skipped", {{"problem_id", p.id}});
            audit.buffer_after_s = ledger.buffer_s;
            result.audit.push_back(audit);
            continue;
        }
        auto outcome = solve_question(p, policy, alloc.seconds, ctx);
        ledger = settle_question(ledger, alloc.seconds, outcome.used_s);
        audit.answer = outcome.answer;
        audit.used_s = outcome.used_s;
        audit.buffer_after_s = ledger.buffer_s;
        audit.early_stopped = outcome.early_stopped;
        audit.cancellations = outcome.cancellations;
        result.total_used_s += outcome.used_s;
        log::info("question settled", to_json(audit));
        result.audit.push_back(std::move(audit));
        result.outcomes.push_back(std::move(outcome));
    }
    result.final_ledger = ledger;
    return result;
}

} // namespace mathorch::scheduler
