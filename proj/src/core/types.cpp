// SPDX-License-Identifier: Apache-2.0
#include "mathorch/core/types.hpp"

#include <array>
#include <utility>

#include "mathorch/core/errors.hpp"

namespace mathorch {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             const char* what) {
    for (const auto& [name, value] : table) {
        if (name == s) {
            return value;
        }
    }
    throw FieldError(what, "unknown value '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<std::string_view, E>, N>& table) {
    for (const auto& [name, value] : table) {
        if (value == v) {
            return name;
        }
    }
    return "?";
}

constexpr std::array<std::pair<std::string_view, AnswerSource>, 3> kAnswerSources{{
    {"extracted", AnswerSource::extracted},
    {"majority_consensus", AnswerSource::majority_consensus},
    {"human", AnswerSource::human},
}};
constexpr std::array<std::pair<std::string_view, ProblemCategory>, 3> kCategories{{
    {"has_answer", ProblemCategory::has_answer},
    {"converted_proof", ProblemCategory::converted_proof},
    {"no_answer", ProblemCategory::no_answer},
}};
constexpr std::array<std::pair<std::string_view, SolutionMode>, 3> kModes{{
    {"cot", SolutionMode::cot},
    {"tir", SolutionMode::tir},
    {"genselect", SolutionMode::genselect},
}};
constexpr std::array<std::pair<std::string_view, ExecStatus>, 3> kStatuses{{
    {"ok", ExecStatus::ok},
    {"error", ExecStatus::error},
    {"timeout", ExecStatus::timeout},
}};

const json& require(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) {
        throw FieldError(field, "missing");
    }
    return *it;
}

std::string get_string(const json& j, const char* field) {
    const auto& v = require(j, field);
    if (!v.is_string()) {
        throw FieldError(field, "expected string");
    }
    return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw FieldError(field, "expected string");
    }
    return it->get<std::string>();
}

std::int64_t get_int(const json& j, const char* field) {
    const auto& v = require(j, field);
    if (!v.is_number_integer()) {
        throw FieldError(field, "expected integer");
    }
    return v.get<std::int64_t>();
}

std::optional<std::int64_t> get_opt_int(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_number_integer()) {
        throw FieldError(field, "expected integer");
    }
    return it->get<std::int64_t>();
}

double get_number(const json& j, const char* field) {
    const auto& v = require(j, field);
    if (!v.is_number()) {
        throw FieldError(field, "expected number");
    }
    return v.get<double>();
}

bool get_bool(const json& j, const char* field) {
    const auto& v = require(j, field);
    if (!v.is_boolean()) {
        throw FieldError(field, "expected boolean");
    }
    return v.get<bool>();
}

std::optional<bool> get_opt_bool(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_boolean()) {
        throw FieldError(field, "expected boolean");
    }
    return it->get<bool>();
}

void check_version(const json& j) {
    if (!j.is_object()) {
        throw FieldError("<json>", "expected object");
    }
    if (get_int(j, "schema_version") != kSchemaVersion) {
        throw FieldError("schema_version", "unsupported version");
    }
}

template <typename T>
void put_opt(json& j, const char* field, const std::optional<T>& v) {
    if (v) {
        j[field] = *v;
    }
}

} // namespace

std::string_view to_string(AnswerSource v) { return enum_name(v, kAnswerSources); }
std::string_view to_string(ProblemCategory v) { return enum_name(v, kCategories); }
std::string_view to_string(SolutionMode v) { return enum_name(v, kModes); }
std::string_view to_string(ExecStatus v) { return enum_name(v, kStatuses); }

AnswerSource parse_answer_source(std::string_view s) { return parse_enum(s, kAnswerSources, "answer_source"); }
ProblemCategory parse_problem_category(std::string_view s) { return parse_enum(s, kCategories, "category"); }
SolutionMode parse_solution_mode(std::string_view s) { return parse_enum(s, kModes, "mode"); }
ExecStatus parse_exec_status(std::string_view s) { return parse_enum(s, kStatuses, "status"); }

SelectionRecord SelectionRecord::create(std::string problem_id, std::vector<SelectionCandidate> candidates,
                                        int chosen_index, bool training) {
    SelectionRecord r{std::move(problem_id), std::move(candidates), chosen_index, std::nullopt, std::nullopt};
    try {
        validate(r, training);
    } catch (const FieldError& e) {
        throw InvalidRecord(e.what());
    }
    return r;
}

void validate(const Problem& p) {
    if (p.id.empty()) {
        throw FieldError("id", "must be non-empty");
    }
    if (p.expected_answer.has_value() != p.answer_source.has_value()) {
        throw FieldError("answer_source", "must be set exactly when expected_answer is present");
    }
    if (p.difficulty && !(*p.difficulty >= 0.0 && *p.difficulty <= 1.0)) {
        throw FieldError("difficulty", "must lie in [0, 1]");
    }
}

void validate(const SamplingParams& p) {
    if (!(p.temperature >= 0.0)) {
        throw FieldError("temperature", "must be non-negative");
    }
    if (!(p.top_p > 0.0 && p.top_p <= 1.0)) {
        throw FieldError("top_p", "must lie in (0, 1]");
    }
    if (p.max_tokens < 1) {
        throw FieldError("max_tokens", "must be >= 1");
    }
    for (const auto& s : p.stop_sequences) {
        if (s.empty()) {
            throw FieldError("stop_sequences", "entries must be non-empty");
        }
    }
}

void validate(const CodeExecution& e) {
    if (e.duration_ms < 0) {
        throw FieldError("duration_ms", "must be non-negative");
    }
    if (e.remaining_after < 0) {
        throw FieldError("remaining_after", "must be non-negative");
    }
}

void validate(const Solution& s) {
    if (s.problem_id.empty()) {
        throw FieldError("problem_id", "must be non-empty");
    }
    if (s.mode == SolutionMode::cot && !s.code_trace.empty()) {
        throw FieldError("code_trace", "cot solutions carry no code executions");
    }
    if (s.finished != s.extracted_answer.has_value()) {
        throw FieldError("finished", "must be true exactly when extracted_answer is present");
    }
    if (s.token_count < 0) {
        throw FieldError("token_count", "must be non-negative");
    }
    if (s.wall_time_ms < 0) {
        throw FieldError("wall_time_ms", "must be non-negative");
    }
    for (std::size_t i = 0; i < s.code_trace.size(); ++i) {
        validate(s.code_trace[i]);
        if (i > 0 && s.code_trace[i].remaining_after >= s.code_trace[i - 1].remaining_after) {
            throw FieldError("code_trace", "remaining_after must strictly decrease");
        }
    }
}

void validate(const SelectionRecord& r, bool training) {
    const auto n = r.candidate_summaries.size();
    if (n < kMinSelectionGroup || n > kMaxSelectionGroup) {
        throw FieldError("candidate_summaries", "group size must lie in [2, 16]");
    }
    if (r.chosen_index < 0 || static_cast<std::size_t>(r.chosen_index) >= n) {
        throw FieldError("chosen_index", "out of range");
    }
    if (training) {
        bool any_correct = false;
        bool any_incorrect = false;
        for (const auto& c : r.candidate_summaries) {
            (c.correct ? any_correct : any_incorrect) = true;
        }
        if (!any_correct || !any_incorrect) {
            throw FieldError("candidate_summaries", "needs at least one correct and one incorrect candidate");
        }
    }
}

json to_json(const Problem& p) {
    json j{{"schema_version", kSchemaVersion},
           {"id", p.id},
           {"statement", p.statement},
           {"category", to_string(p.category)}};
    put_opt(j, "expected_answer", p.expected_answer);
    if (p.answer_source) {
        j["answer_source"] = to_string(*p.answer_source);
    }
    put_opt(j, "difficulty", p.difficulty);
    put_opt(j, "source_url", p.source_url);
    put_opt(j, "benchmark", p.benchmark);
    return j;
}

json to_json(const SamplingParams& p) {
    json j{{"temperature", p.temperature},
           {"top_p", p.top_p},
           {"max_tokens", p.max_tokens},
           {"stop_sequences", p.stop_sequences}};
    put_opt(j, "seed", p.seed);
    return j;
}

json to_json(const CodeExecution& e) {
    return json{{"code", e.code},
                {"stdout_truncated", e.stdout_truncated},
                {"status", to_string(e.status)},
                {"duration_ms", e.duration_ms},
                {"remaining_after", e.remaining_after}};
}

json to_json(const Solution& s) {
    json trace = json::array();
    for (const auto& e : s.code_trace) {
        trace.push_back(to_json(e));
    }
    json j{{"schema_version", kSchemaVersion},
           {"solution_id", s.solution_id},
           {"problem_id", s.problem_id},
           {"mode", to_string(s.mode)},
           {"reasoning_text", s.reasoning_text},
           {"code_trace", std::move(trace)},
           {"finished", s.finished},
           {"token_count", s.token_count},
           {"token_count_source", s.token_count_source},
           {"wall_time_ms", s.wall_time_ms},
           {"limit_violation", s.limit_violation}};
    put_opt(j, "summary_text", s.summary_text);
    put_opt(j, "extracted_answer", s.extracted_answer);
    put_opt(j, "correct", s.correct);
    put_opt(j, "code_limit", s.code_limit);
    put_opt(j, "error", s.error);
    return j;
}

json to_json(const SelectionRecord& r) {
    json cands = json::array();
    for (const auto& c : r.candidate_summaries) {
        json cj{{"solution_id", c.solution_id}, {"summary_text", c.summary_text}, {"correct", c.correct}};
        put_opt(cj, "extracted_answer", c.extracted_answer);
        cands.push_back(std::move(cj));
    }
    json j{{"schema_version", kSchemaVersion},
           {"problem_id", r.problem_id},
           {"candidate_summaries", std::move(cands)},
           {"chosen_index", r.chosen_index}};
    put_opt(j, "selection_reasoning", r.selection_reasoning);
    put_opt(j, "selection_summary", r.selection_summary);
    return j;
}

Problem problem_from_json(const json& j) {
    check_version(j);
    Problem p;
    p.id = get_string(j, "id");
    p.statement = get_string(j, "statement");
    p.expected_answer = get_opt_string(j, "expected_answer");
    if (auto s = get_opt_string(j, "answer_source")) {
        p.answer_source = parse_answer_source(*s);
    }
    if (auto c = get_opt_string(j, "category")) {
        p.category = parse_problem_category(*c);
    }
    if (auto it = j.find("difficulty"); it != j.end() && !it->is_null()) {
        p.difficulty = get_number(j, "difficulty");
    }
    p.source_url = get_opt_string(j, "source_url");
    p.benchmark = get_opt_string(j, "benchmark");
    validate(p);
    return p;
}

SamplingParams sampling_params_from_json(const json& j) {
    SamplingParams p;
    if (j.contains("temperature")) {
        p.temperature = get_number(j, "temperature");
    }
    if (j.contains("top_p")) {
        p.top_p = get_number(j, "top_p");
    }
    if (j.contains("max_tokens")) {
        p.max_tokens = static_cast<int>(get_int(j, "max_tokens"));
    }
    if (auto it = j.find("stop_sequences"); it != j.end()) {
        if (!it->is_array()) {
            throw FieldError("stop_sequences", "expected array");
        }
        for (const auto& s : *it) {
            if (!s.is_string()) {
                throw FieldError("stop_sequences", "expected strings");
            }
            p.stop_sequences.push_back(s.get<std::string>());
        }
    }
    p.seed = get_opt_int(j, "seed");
    validate(p);
    return p;
}

CodeExecution code_execution_from_json(const json& j) {
    CodeExecution e;
    e.code = get_string(j, "code");
    e.stdout_truncated = get_string(j, "stdout_truncated");
    e.status = parse_exec_status(get_string(j, "status"));
    e.duration_ms = get_int(j, "duration_ms");
    e.remaining_after = static_cast<int>(get_int(j, "remaining_after"));
    validate(e);
    return e;
}

Solution solution_from_json(const json& j) {
    check_version(j);
    Solution s;
    s.solution_id = get_opt_string(j, "solution_id").value_or("");
    s.problem_id = get_string(j, "problem_id");
    s.mode = parse_solution_mode(get_string(j, "mode"));
    s.reasoning_text = get_string(j, "reasoning_text");
    s.summary_text = get_opt_string(j, "summary_text");
    if (auto it = j.find("code_trace"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) {
            throw FieldError("code_trace", "expected array");
        }
        for (const auto& e : *it) {
            s.code_trace.push_back(code_execution_from_json(e));
        }
    }
    s.extracted_answer = get_opt_string(j, "extracted_answer");
    s.finished = get_bool(j, "finished");
    s.token_count = get_opt_int(j, "token_count").value_or(0);
    s.token_count_source = get_opt_string(j, "token_count_source").value_or("approx");
    s.wall_time_ms = get_opt_int(j, "wall_time_ms").value_or(0);
    s.correct = get_opt_bool(j, "correct");
    if (auto l = get_opt_int(j, "code_limit")) {
        s.code_limit = static_cast<int>(*l);
    }
    s.limit_violation = get_opt_bool(j, "limit_violation").value_or(false);
    s.error = get_opt_string(j, "error");
    validate(s);
    return s;
}

SelectionRecord selection_record_from_json(const json& j) {
    check_version(j);
    SelectionRecord r;
    r.problem_id = get_string(j, "problem_id");
    const auto& cands = require(j, "candidate_summaries");
    if (!cands.is_array()) {
        throw FieldError("candidate_summaries", "expected array");
    }
    for (const auto& c : cands) {
        SelectionCandidate sc;
        sc.solution_id = get_string(c, "solution_id");
        sc.summary_text = get_string(c, "summary_text");
        sc.extracted_answer = get_opt_string(c, "extracted_answer");
        sc.correct = get_bool(c, "correct");
        r.candidate_summaries.push_back(std::move(sc));
    }
    r.chosen_index = static_cast<int>(get_int(j, "chosen_index"));
    r.selection_reasoning = get_opt_string(j, "selection_reasoning");
    r.selection_summary = get_opt_string(j, "selection_summary");
    validate(r, false);
    return r;
}

} // namespace mathorch
