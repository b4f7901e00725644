// SPDX-License-Identifier: Apache-2.0
#include "mathorch/judge/equivalence.hpp"

#include "mathorch/core/errors.hpp"
#include "mathorch/core/log.hpp"
#include "mathorch/judge/answer.hpp"

namespace mathorch::judge {

std::string_view to_string(JudgeMethod m) {
    switch (m) {
    case JudgeMethod::exact: return "exact";
    case JudgeMethod::numeric: return "numeric";
    case JudgeMethod::llm_judge: return "llm_judge";
    }
    return "exact";
}

Judgment judge_equivalence(const std::string& predicted, const std::string& expected, const Problem& problem,
                           const LlmJudge* judge) {
    const auto a = normalize_answer(predicted);
    const auto b = normalize_answer(expected);
    if (a == b) {
        return {true, JudgeMethod::exact, "normalized forms match"};
    }
    const auto na = parse_numeric(a);
    const auto nb = parse_numeric(b);
    if (na && nb) {
        const bool eq = numerically_equal(*na, *nb);
        return {eq, JudgeMethod::numeric, eq ? "numerically equal" : "numerically different"};
    }
    if (judge == nullptr || judge->backend == nullptr) {
        return {false, JudgeMethod::exact, "judge unavailable; rule tiers found no match"};
    }
    const auto& templates = judge->templates ? *judge->templates : default_templates();
    const auto prompt = templates.render(
        "judge_equivalence", {{"problem", problem.statement}, {"predicted", predicted}, {"expected", expected}});
    try {
        const bool eq = backend::judge_yes_no(*judge->backend, prompt, judge->params, judge->verdict_pattern);
        return {eq, JudgeMethod::llm_judge, eq ? "judge said yes" : "judge said no"};
    } catch (const UnparseableVerdict& e) {
        log::warning("unparseable equivalence verdict", {{"problem_id", problem.id}, {"error", e.what()}});
        return {false, JudgeMethod::llm_judge, "unparseable judge verdict"};
    }
}

bool rule_equivalent(const std::string& a, const std::string& b) {
    const auto na = normalize_answer(a);
    const auto nb = normalize_answer(b);
    if (na == nb) {
        return true;
    }
    const auto va = parse_numeric(na);
    const auto vb = parse_numeric(nb);
    return va && vb && numerically_equal(*va, *vb);
}

AnswerEquivalence normalized_string_equivalence() {
    return [](const std::string& a, const std::string& b) { return normalize_answer(a) == normalize_answer(b); };
}

AnswerEquivalence rule_equivalence() { return rule_equivalent; }

} // namespace mathorch::judge
