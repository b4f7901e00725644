// SPDX-License-Identifier: Apache-2.0
//
// Answer equivalence: exact match on normalized forms, then numeric
// comparison, then an optional yes/no LLM judge.

#pragma once

#include <functional>
#include <optional>
#include <string>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/prompts.hpp"
#include "mathorch/core/types.hpp"

namespace mathorch::judge {

enum class JudgeMethod { exact, numeric, llm_judge };

std::string_view to_string(JudgeMethod m);

struct Judgment {
    bool equivalent = false;
    JudgeMethod method = JudgeMethod::exact;
    std::string detail;

    bool operator==(const Judgment&) const = default;
};

/// Optional LLM judge used when the rule tiers cannot decide.
struct LlmJudge {
    backend::CompletionBackend* backend = nullptr;
    const PromptTemplates* templates = nullptr;
    SamplingParams params = default_params();
    std::optional<std::string> verdict_pattern;

    static SamplingParams default_params() {
        SamplingParams p;
        p.temperature = 0.0;
        p.top_p = 1.0;
        p.max_tokens = 512;
        return p;
    }
};

/// Decides whether `predicted` and `expected` denote the same answer.
/// When both sides parse as numbers the numeric tier is final. If the LLM
/// tier is needed but `judge` is null, the result is not equivalent with a
/// "judge unavailable" detail. An unparseable judge verdict also yields not
/// equivalent.
Judgment judge_equivalence(const std::string& predicted, const std::string& expected, const Problem& problem,
                           const LlmJudge* judge = nullptr);

/// Rule tiers only (exact and numeric). Symmetric.
bool rule_equivalent(const std::string& a, const std::string& b);

/// Pairwise answer predicate used for voting.
using AnswerEquivalence = std::function<bool(const std::string&, const std::string&)>;

/// String identity on normalized forms.
AnswerEquivalence normalized_string_equivalence();
/// Exact-or-numeric rule tiers.
AnswerEquivalence rule_equivalence();

} // namespace mathorch::judge
