// SPDX-License-Identifier: Apache-2.0
//
// Competition runtime: per-question time allocation with a shared buffer,
// batched generation with agreement-based early stopping and straggler
// cancellation, one question at a time.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/errors.hpp"
#include "mathorch/judge/equivalence.hpp"
#include "mathorch/sandbox/sandbox.hpp"
#include "mathorch/tir/session.hpp"

namespace mathorch::scheduler {

/// Deadline enforcement failed: a question used more than it was given.
class OverUse : public Error {
public:
    using Error::Error;
};

struct TimeLedger {
    std::int64_t base_per_question_s = 350;
    std::int64_t extra_draw_cap_s = 210;
    std::int64_t buffer_s = 0;
    std::int64_t total_budget_s = 18000;
    // Seconds used by settled questions so far.
    std::int64_t spent_s = 0;

    bool operator==(const TimeLedger&) const = default;
};

void validate(const TimeLedger& l);

struct Allocation {
    std::int64_t seconds = 0;
    // True when the remaining total budget lowered the allocation.
    bool budget_capped = false;
};

/// base + min(buffer, draw cap), further capped by the remaining total
/// budget. Does not change the ledger.
Allocation allocate(const TimeLedger& ledger);
inline std::int64_t allocate_time(const TimeLedger& ledger) { return allocate(ledger).seconds; }

/// buffer' = buffer - max(0, allocated - base) + (allocated - used).
/// Throws OverUse when used > allocated.
TimeLedger settle_question(const TimeLedger& ledger, std::int64_t allocated_s, std::int64_t used_s);

struct BatchPolicy {
    int batch_size = 16;
    int agreement_threshold = 4;
    int straggler_cancel_count = 0;
};

void validate(const BatchPolicy& p);

struct SolveContext {
    backend::CompletionBackend* backend = nullptr;
    sandbox::CodeSandbox* sandbox = nullptr;
    SolutionMode mode = SolutionMode::tir;
    tir::TirConfig tir;
    const PromptTemplates* templates = nullptr;
    tir::SessionRegistry* registry = nullptr;
    judge::AnswerEquivalence equivalence = judge::rule_equivalence();
    // Generation j of a question is requested with seed seed_base + j.
    std::int64_t seed_base = 0;
};

struct BatchEvent {
    std::int64_t t_ms = 0;
    int gen_index = 0;
    // "completed", "cancelled" or "deadline".
    std::string kind;
    std::optional<std::string> answer;
};

struct QuestionOutcome {
    std::string problem_id;
    std::optional<std::string> answer;
    std::int64_t used_ms = 0;
    std::int64_t used_s = 0;
    bool early_stopped = false;
    int cancellations = 0;
    int stragglers_cancelled = 0;
    // Live sessions left after the batch returned; always zero.
    int live_after = 0;
    std::vector<BatchEvent> events;
    std::vector<Solution> solutions;
};

/// Runs one batch against a deadline `deadline_s` seconds from now.
QuestionOutcome solve_question(const Problem& problem, const BatchPolicy& policy, std::int64_t deadline_s,
                               const SolveContext& ctx);

struct QuestionAudit {
    std::string problem_id;
    std::optional<std::string> answer;
    std::int64_t allocated_s = 0;
    std::int64_t used_s = 0;
    std::int64_t buffer_after_s = 0;
    bool budget_capped = false;
    bool early_stopped = false;
    int cancellations = 0;
};

struct CompetitionResult {
    std::vector<QuestionAudit> audit;
    std::vector<QuestionOutcome> outcomes;
    TimeLedger final_ledger;
    std::int64_t total_used_s = 0;
};

json to_json(const BatchEvent& e);
json to_json(const QuestionAudit& a);
json to_json(const TimeLedger& l);

/// allocate, solve, settle for each problem in order.
CompetitionResult run_competition(const std::vector<Problem>& problems, TimeLedger ledger, const BatchPolicy& policy,
                                  const SolveContext& ctx);

} // namespace mathorch::scheduler
