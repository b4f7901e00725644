// SPDX-License-Identifier: Apache-2.0
//
// Domain records shared by every module. All of them are plain values and
// serialize to one JSON object per JSONL line with `schema_version: 1`.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mathorch {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class AnswerSource { extracted, majority_consensus, human };
enum class ProblemCategory { has_answer, converted_proof, no_answer };
enum class SolutionMode { cot, tir, genselect };
enum class ExecStatus { ok, error, timeout };

std::string_view to_string(AnswerSource v);
std::string_view to_string(ProblemCategory v);
std::string_view to_string(SolutionMode v);
std::string_view to_string(ExecStatus v);

AnswerSource parse_answer_source(std::string_view s);
ProblemCategory parse_problem_category(std::string_view s);
SolutionMode parse_solution_mode(std::string_view s);
ExecStatus parse_exec_status(std::string_view s);

struct Problem {
    std::string id;
    std::string statement;
    std::optional<std::string> expected_answer;
    std::optional<AnswerSource> answer_source;
    ProblemCategory category = ProblemCategory::has_answer;
    std::optional<double> difficulty;
    std::optional<std::string> source_url;
    // Benchmark name used to group rows in evaluation reports.
    std::optional<std::string> benchmark;

    bool operator==(const Problem&) const = default;
};

struct SamplingParams {
    double temperature = 0.7;
    double top_p = 0.95;
    int max_tokens = 16384;
    std::vector<std::string> stop_sequences;
    std::optional<std::int64_t> seed;

    bool operator==(const SamplingParams&) const = default;
};

struct CodeExecution {
    std::string code;
    std::string stdout_truncated;
    ExecStatus status = ExecStatus::ok;
    std::int64_t duration_ms = 0;
    int remaining_after = 0;

    bool operator==(const CodeExecution&) const = default;
};

struct Solution {
    std::string solution_id;
    std::string problem_id;
    SolutionMode mode = SolutionMode::cot;
    std::string reasoning_text;
    std::optional<std::string> summary_text;
    std::vector<CodeExecution> code_trace;
    std::optional<std::string> extracted_answer;
    bool finished = false;
    std::int64_t token_count = 0;
    // "backend" when the server reported usage, "approx" for whitespace counts.
    std::string token_count_source = "approx";
    std::int64_t wall_time_ms = 0;
    std::optional<bool> correct;
    std::optional<int> code_limit;
    bool limit_violation = false;
    std::optional<std::string> error;

    bool operator==(const Solution&) const = default;
};

struct SelectionCandidate {
    std::string solution_id;
    std::string summary_text;
    std::optional<std::string> extracted_answer;
    bool correct = false;

    bool operator==(const SelectionCandidate&) const = default;
};

struct SelectionRecord {
    std::string problem_id;
    std::vector<SelectionCandidate> candidate_summaries;
    int chosen_index = 0;
    std::optional<std::string> selection_reasoning;
    std::optional<std::string> selection_summary;

    bool operator==(const SelectionRecord&) const = default;

    /// Builds a record and enforces the group invariants; `training` adds the
    /// mixed-correctness requirement. Throws InvalidRecord.
    static SelectionRecord create(std::string problem_id, std::vector<SelectionCandidate> candidates,
                                  int chosen_index, bool training = true);
};

inline constexpr std::size_t kMinSelectionGroup = 2;
inline constexpr std::size_t kMaxSelectionGroup = 16;

// Invariant checks. Each throws FieldError naming the violated field.
void validate(const Problem& p);
void validate(const SamplingParams& p);
void validate(const CodeExecution& e);
void validate(const Solution& s);
void validate(const SelectionRecord& r, bool training);

json to_json(const Problem& p);
json to_json(const SamplingParams& p);
json to_json(const CodeExecution& e);
json to_json(const Solution& s);
json to_json(const SelectionRecord& r);

// Parsers validate invariants and throw FieldError.
Problem problem_from_json(const json& j);
SamplingParams sampling_params_from_json(const json& j);
CodeExecution code_execution_from_json(const json& j);
Solution solution_from_json(const json& j);
SelectionRecord selection_record_from_json(const json& j);

} // namespace mathorch
