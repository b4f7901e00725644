// SPDX-License-Identifier: Apache-2.0
#include "mathorch/core/prompts.hpp"

#include <fstream>
#include <sstream>

#include "mathorch/core/errors.hpp"

namespace mathorch {
namespace {

// Output sections rendered by the TIR engine open with "```output"; none of
// these templates may contain that string.
const std::map<std::string, std::string>& builtin() {
    static const std::map<std::string, std::string> t{
        {"cot",
         "Solve the following math problem. Make sure to put the answer (and only answer) inside "
         "\\boxed{}.\n\n{{problem}}\n"},
        {"tir",
         "Solve the following math problem, integrating natural language reasoning with Python code "
         "executions.\nYou may perform up to {{code_limit}} Python code calls to assist your reasoning.\n"
         "Place each code block between {{code_begin}} and {{code_end}}; its output will be shown to you.\n"
         "Make sure to put the answer (and only answer) inside \\boxed{}.\n\n{{problem}}\n"},
        {"genselect",
         "You will be given a challenging math problem followed by {{num_solutions}} candidate solutions. "
         "Compare the solutions, decide which one is most likely correct, and end your response with "
         "\"Judgment: Solution N\" where N is the number of the selected solution.\n\n"
         "Problem:\n{{problem}}\n\nSolutions:\n{{solutions}}\n"},
        {"solution_summary",
         "Below is a math problem and a detailed solution. Rewrite the solution as a clear, self-contained "
         "summary of the key steps that leads to the same final answer. Put the final answer inside "
         "\\boxed{}.\n\nProblem:\n{{problem}}\n\nSolution:\n{{solution}}\n"},
        {"comparison_summary",
         "Below is a math problem, several candidate solutions and an analysis that compares them and "
         "selects one. Write a concise summary of the comparison that justifies the selection and ends "
         "with \"Judgment: Solution N\" naming the same solution.\n\n"
         "Problem:\n{{problem}}\n\nSolutions:\n{{solutions}}\n\nAnalysis:\n{{reasoning}}\n"},
        {"judge_equivalence",
         "Decide whether the predicted answer is equivalent to the expected answer in the context of the "
         "problem. Reply with \"Judgement: Yes\" or \"Judgement: No\".\n\n"
         "Problem:\n{{problem}}\n\nPredicted answer: {{predicted}}\nExpected answer: {{expected}}\n"},
        {"extract_problems",
         "Extract every self-contained math problem from the forum post below. Reply with a JSON list of "
         "strings (an empty list if there are none).\n\nPost:\n{{text}}\n"},
        {"classify_proof",
         "Is the following a proof problem (one that asks to prove a statement rather than compute an "
         "answer)? Reply with \"Judgement: Yes\" or \"Judgement: No\".\n\n{{problem}}\n"},
        {"classify_mcq",
         "Is the following a multiple-choice question? Reply with \"Judgement: Yes\" or "
         "\"Judgement: No\".\n\n{{problem}}\n"},
        {"classify_binary",
         "Does the following question have a yes-or-no (binary) answer? Reply with \"Judgement: Yes\" or "
         "\"Judgement: No\".\n\n{{problem}}\n"},
        {"classify_invalid",
         "Is the following problem invalid, for example lacking context or referring to other problems? "
         "Reply with \"Judgement: Yes\" or \"Judgement: No\".\n\n{{problem}}\n"},
        {"convert_proof",
         "Rewrite the following proof problem as an equivalent problem with a single verifiable final "
         "answer that requires similar techniques. Reply with the new problem statement only.\n\n"
         "{{problem}}\n"},
        {"extract_answer",
         "Below is a problem and its forum discussion. If the discussion states a final answer, reply "
         "with it inside \\boxed{}; otherwise reply \"Answer: none\".\n\nProblem:\n{{problem}}\n\n"
         "Discussion:\n{{text}}\n"},
        {"decontam_same_problem",
         "Are the following two problems the same problem, possibly reworded or with trivially changed "
         "numbers? Reply with \"Judgement: Yes\" or \"Judgement: No\".\n\nProblem A:\n{{problem}}\n\n"
         "Problem B:\n{{other}}\n"},
        {"tir_novelty",
         "Below is a fragment of a solution that uses a code block. Decide whether the code computes a "
         "novel result that the text has not already established, or merely verifies earlier steps. "
         "Reply with \"Verdict: novel\" or \"Verdict: verification\".\n\nProblem:\n{{problem}}\n\n"
         "Context:\n{{context}}\n\nCode:\n{{code}}\n"},
        {"tir_significance",
         "Below is a fragment of a solution that uses a code block. Rate how important the code is: "
         "significant (hard to replace without code), moderate, or trivial (a few reasoning steps would "
         "do). Reply with \"Verdict: significant\", \"Verdict: moderate\" or \"Verdict: trivial\".\n\n"
         "Problem:\n{{problem}}\n\nContext:\n{{context}}\n\nCode:\n{{code}}\n"},
    };
    return t;
}

} // namespace

PromptTemplates::PromptTemplates() : templates_(builtin()) {}

PromptTemplates PromptTemplates::from_directory(const std::filesystem::path& dir) {
    PromptTemplates t;
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("paths.templates", "'" + dir.string() + "' is not a directory");
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt") {
            continue;
        }
        std::ifstream in(entry.path());
        std::stringstream ss;
        ss << in.rdbuf();
        t.templates_[entry.path().stem().string()] = ss.str();
    }
    return t;
}

const std::string& PromptTemplates::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw ConfigError("templates." + id, "no such prompt template");
    }
    return it->second;
}

std::vector<std::string> PromptTemplates::ids() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : templates_) {
        out.push_back(k);
    }
    return out;
}

std::string PromptTemplates::render(const std::string& id, const std::map<std::string, std::string>& vars) const {
    try {
        return substitute(get(id), vars);
    } catch (const ConfigError& e) {
        throw ConfigError("templates." + id, e.what());
    }
}

std::string PromptTemplates::substitute(const std::string& text, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto open = text.find("{{", i);
        if (open == std::string::npos) {
            out.append(text, i);
            break;
        }
        const auto close = text.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(text, i);
            break;
        }
        out.append(text, i, open - i);
        const auto key = text.substr(open + 2, close - open - 2);
        auto it = vars.find(key);
        if (it == vars.end()) {
            throw ConfigError(key, "placeholder has no value");
        }
        out += it->second;
        i = close + 2;
    }
    return out;
}

const PromptTemplates& default_templates() {
    static const PromptTemplates t;
    return t;
}

} // namespace mathorch
