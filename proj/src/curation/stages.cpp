// SPDX-License-Identifier: Apache-2.0
#include "mathorch/curation/stages.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/jsonl.hpp"
#include "mathorch/core/log.hpp"
#include "mathorch/judge/answer.hpp"

namespace mathorch::curation {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string_view disposition_name(Disposition d) {
    switch (d) {
    case Disposition::passed: return "passed";
    case Disposition::dropped: return "dropped";
    case Disposition::review: return "review";
    }
    return "review";
}

Disposition parse_disposition(std::string_view s) {
    if (s == "passed") {
        return Disposition::passed;
    }
    if (s == "dropped") {
        return Disposition::dropped;
    }
    if (s == "review") {
        return Disposition::review;
    }
    throw FieldError("disposition", "unknown value '" + std::string(s) + "'");
}

json outcome_to_json(const StageOutcome& o) {
    json records = json::array();
    for (const auto& r : o.records) {
        records.push_back(to_json(r));
    }
    return json{{"input_id", o.input_id},
                {"disposition", disposition_name(o.disposition)},
                {"reason", o.reason},
                {"records", records}};
}

StageOutcome outcome_from_json(const json& j) {
    StageOutcome o;
    o.input_id = j.at("input_id").get<std::string>();
    o.disposition = parse_disposition(j.at("disposition").get<std::string>());
    o.reason = j.value("reason", std::string());
    for (const auto& r : j.at("records")) {
        o.records.push_back(curation_record_from_json(r));
    }
    return o;
}

StageOutcome single(const CurationRecord& r, Disposition d, std::string reason) {
    return StageOutcome{r.problem.id, d, std::move(reason), {r}};
}

bool applies(const CurationRecord& r, const StageSpec& stage) {
    if (stage.applies_if) {
        auto it = r.annotations.find(stage.applies_if->first);
        if (it == r.annotations.end() || it->second != stage.applies_if->second) {
            return false;
        }
    }
    if (stage.skip_if_answered && r.problem.expected_answer) {
        return false;
    }
    if (stage.skip_category && r.problem.category == *stage.skip_category) {
        return false;
    }
    return true;
}

std::string render(const CurationRecord& r, const StageSpec& stage, const PromptTemplates& templates) {
    return templates.render(stage.prompt_template, {{"problem", r.problem.statement}, {"text", r.text}});
}

void write_records(const std::filesystem::path& path, const std::vector<CurationRecord>& records) {
    JsonlWriter w(path);
    for (const auto& r : records) {
        w.write(to_json(r));
    }
}

} // namespace

json to_json(const CurationRecord& r) {
    json ann = json::object();
    for (const auto& [k, v] : r.annotations) {
        ann[k] = v;
    }
    return json{{"schema_version", kSchemaVersion}, {"problem", to_json(r.problem)}, {"text", r.text},
                {"annotations", ann}};
}

CurationRecord curation_record_from_json(const json& j) {
    CurationRecord r;
    r.problem = problem_from_json(j.at("problem"));
    r.text = j.value("text", std::string());
    if (auto it = j.find("annotations"); it != j.end()) {
        for (const auto& [k, v] : it->items()) {
            r.annotations[k] = v.get<std::string>();
        }
    }
    return r;
}

CurationRecord record_from_input(const json& j) {
    if (j.contains("problem")) {
        return curation_record_from_json(j);
    }
    CurationRecord r;
    if (j.contains("statement")) {
        r.problem = problem_from_json(j);
        r.text = j.value("text", std::string());
        return r;
    }
    if (!j.contains("id") || !j["id"].is_string()) {
        throw FieldError("id", "missing");
    }
    if (!j.contains("text") || !j["text"].is_string()) {
        throw FieldError("text", "missing");
    }
    r.problem.id = j["id"].get<std::string>();
    r.text = j["text"].get<std::string>();
    if (auto it = j.find("source_url"); it != j.end() && it->is_string()) {
        r.problem.source_url = it->get<std::string>();
    }
    return r;
}

std::string_view to_string(ParserKind p) {
    switch (p) {
    case ParserKind::json_list: return "json_list";
    case ParserKind::yes_no: return "yes_no";
    case ParserKind::free_text: return "free_text";
    case ParserKind::answer_extraction: return "answer_extraction";
    }
    return "yes_no";
}

std::string_view to_string(FilterAction a) {
    switch (a) {
    case FilterAction::drop_if_yes: return "drop_if_yes";
    case FilterAction::drop_if_no: return "drop_if_no";
    case FilterAction::annotate: return "annotate";
    case FilterAction::transform: return "transform";
    }
    return "annotate";
}

void validate(const StageSpec& s, const PromptTemplates& templates) {
    if (s.name.empty()) {
        throw ConfigError("stage.name", "must be non-empty");
    }
    if (!templates.has(s.prompt_template)) {
        throw ConfigError("stage." + s.name + ".prompt_template", "unknown template '" + s.prompt_template + "'");
    }
    const bool drop = s.filter_action == FilterAction::drop_if_yes || s.filter_action == FilterAction::drop_if_no;
    if (drop && s.parser != ParserKind::yes_no) {
        throw ConfigError("stage." + s.name + ".parser", "drop actions need the yes_no parser");
    }
    if (s.filter_action == FilterAction::transform && s.parser == ParserKind::yes_no) {
        throw ConfigError("stage." + s.name + ".parser", "transform needs json_list, free_text or answer_extraction");
    }
}

StageOutcome apply_verdict(const CurationRecord& record, const StageSpec& stage, const std::string& completion,
                           const std::optional<std::string>& verdict_pattern) {
    switch (stage.parser) {
    case ParserKind::yes_no: {
        bool yes = false;
        try {
            yes = backend::parse_yes_no(completion, verdict_pattern);
        } catch (const UnparseableVerdict&) {
            return single(record, Disposition::review, "unparseable verdict");
        }
        const std::string verdict = yes ? "yes" : "no";
        switch (stage.filter_action) {
        case FilterAction::drop_if_yes:
            return single(record, yes ? Disposition::dropped : Disposition::passed, stage.name + "=" + verdict);
        case FilterAction::drop_if_no:
            return single(record, yes ? Disposition::passed : Disposition::dropped, stage.name + "=" + verdict);
        default: {
            auto r = record;
            r.annotations[stage.name] = verdict;
            return single(r, Disposition::passed, stage.name + "=" + verdict);
        }
        }
    }
    case ParserKind::json_list: {
        const auto open = completion.find('[');
        const auto close = completion.rfind(']');
        json list;
        if (open != std::string::npos && close != std::string::npos && close > open) {
            list = json::parse(completion.substr(open, close - open + 1), nullptr, false);
        }
        if (!list.is_array() || !std::all_of(list.begin(), list.end(), [](const json& x) { return x.is_string(); })) {
            return single(record, Disposition::review, "unparseable list");
        }
        if (stage.filter_action != FilterAction::transform) {
            auto r = record;
            r.annotations[stage.name] = list.dump();
            return single(r, Disposition::passed, "annotated");
        }
        if (list.empty()) {
            return single(record, Disposition::dropped, "no problems extracted");
        }
        StageOutcome o{record.problem.id, Disposition::passed, "extracted " + std::to_string(list.size()), {}};
        for (std::size_t k = 0; k < list.size(); ++k) {
            auto r = record;
            r.problem.id = record.problem.id + "-" + std::to_string(k);
            r.problem.statement = trim(list[k].get<std::string>());
            r.annotations["source_id"] = record.problem.id;
            o.records.push_back(std::move(r));
        }
        return o;
    }
    case ParserKind::free_text: {
        auto text = trim(completion);
        if (text.empty()) {
            return single(record, Disposition::review, "empty completion");
        }
        auto r = record;
        if (stage.filter_action == FilterAction::transform) {
            r.problem.statement = std::move(text);
            r.problem.category = ProblemCategory::converted_proof;
            r.problem.expected_answer.reset();
            r.problem.answer_source.reset();
        } else {
            r.annotations[stage.name] = std::move(text);
        }
        return single(r, Disposition::passed, "rewritten");
    }
    case ParserKind::answer_extraction: {
        auto answer = judge::extract_boxed(completion);
        auto r = record;
        if (!answer) {
            std::string lower = completion;
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (lower.find("none") == std::string::npos) {
                return single(record, Disposition::review, "unparseable answer");
            }
            if (stage.filter_action == FilterAction::transform) {
                r.problem.category = ProblemCategory::no_answer;
            }
            return single(r, Disposition::passed, "no answer");
        }
        if (stage.filter_action == FilterAction::transform) {
            r.problem.expected_answer = *answer;
            r.problem.answer_source = AnswerSource::extracted;
            r.problem.category = ProblemCategory::has_answer;
        } else {
            r.annotations[stage.name] = *answer;
        }
        return single(r, Disposition::passed, "answer extracted");
    }
    }
    return single(record, Disposition::review, "unknown parser");
}

json StageResult::counts() const {
    return json{{"stage", stage},
                {"input", input},
                {"passed", passed_inputs},
                {"dropped", dropped.size()},
                {"review", review.size()},
                {"output", passed.size()},
                {"resumed", resumed}};
}

StageResult run_stage(const std::vector<CurationRecord>& records, const StageSpec& stage,
                      backend::CompletionBackend& backend, const StageOptions& options) {
    const auto& templates = options.templates ? *options.templates : default_templates();
    validate(stage, templates);

    std::map<std::string, StageOutcome> done;
    std::optional<std::filesystem::path> checkpoint;
    if (options.checkpoint_dir) {
        std::filesystem::create_directories(*options.checkpoint_dir);
        checkpoint = *options.checkpoint_dir / (stage.name + ".checkpoint.jsonl");
        if (std::filesystem::exists(*checkpoint)) {
            for (const auto& j : read_jsonl<json>(*checkpoint)) {
                auto o = outcome_from_json(j);
                done.emplace(o.input_id, std::move(o));
            }
        }
    }
    std::optional<JsonlWriter> writer;
    if (checkpoint) {
        writer.emplace(*checkpoint, /*append=*/true);
    }

    std::vector<std::optional<StageOutcome>> outcomes(records.size());
    std::vector<std::size_t> todo;
    StageResult result;
    result.stage = stage.name;
    result.input = records.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (auto it = done.find(records[i].problem.id); it != done.end()) {
            outcomes[i] = it->second;
            ++result.resumed;
        } else if (!applies(records[i], stage)) {
            outcomes[i] = single(records[i], Disposition::passed, "not applicable");
        } else {
            todo.push_back(i);
        }
    }

    const std::size_t chunk = std::max<std::size_t>(1, options.max_in_flight) * 4;
    for (std::size_t start = 0; start < todo.size(); start += chunk) {
        const auto stop = std::min(todo.size(), start + chunk);
        std::vector<backend::CompletionRequest> requests;
        for (auto k = start; k < stop; ++k) {
            requests.push_back({render(records[todo[k]], stage, templates), options.params, std::nullopt});
        }
        std::vector<std::optional<std::string>> texts(requests.size());
        try {
            const auto results = backend::complete_batch(backend, requests, options.max_in_flight);
            for (std::size_t k = 0; k < results.size(); ++k) {
                texts[k] = results[k].text;
            }
        } catch (const Error&) {
            // Retry one at a time so a single failure only affects its record.
            for (std::size_t k = 0; k < requests.size(); ++k) {
                try {
                    texts[k] = backend::complete_blocking(backend, requests[k]).text;
                } catch (const Error& e) {
                    log::warning("stage request failed",
                                 {{"stage", stage.name}, {"id", records[todo[start + k]].problem.id}, {"error", e.what()}});
                }
            }
        }
        for (auto k = start; k < stop; ++k) {
            const auto& rec = records[todo[k]];
            const auto& text = texts[k - start];
            auto o = text ? apply_verdict(rec, stage, *text, options.verdict_pattern)
                          : single(rec, Disposition::review, "backend error");
            if (writer) {
                writer->write(outcome_to_json(o));
            }
            outcomes[todo[k]] = std::move(o);
        }
        if (writer) {
            writer->flush();
        }
    }

    for (auto& o : outcomes) {
        switch (o->disposition) {
        case Disposition::passed:
            ++result.passed_inputs;
            for (auto& r : o->records) {
                result.passed.push_back(std::move(r));
            }
            break;
        case Disposition::dropped:
            for (auto& r : o->records) {
                result.dropped.push_back(std::move(r));
            }
            break;
        case Disposition::review:
            for (auto& r : o->records) {
                result.review.push_back(std::move(r));
            }
            break;
        }
    }
    if (options.checkpoint_dir) {
        const auto& dir = *options.checkpoint_dir;
        write_records(dir / (stage.name + ".passed.jsonl"), result.passed);
        write_records(dir / (stage.name + ".dropped.jsonl"), result.dropped);
        write_records(dir / (stage.name + ".review.jsonl"), result.review);
    }
    log::info("stage finished", result.counts());
    return result;
}

StageSpec builtin_stage(const std::string& name) {
    StageSpec s;
    s.name = name;
    if (name == "extraction") {
        s.prompt_template = "extract_problems";
        s.parser = ParserKind::json_list;
        s.filter_action = FilterAction::transform;
    } else if (name == "classify_proof") {
        s.prompt_template = "classify_proof";
        s.parser = ParserKind::yes_no;
        s.filter_action = FilterAction::annotate;
    } else if (name == "classify_mcq" || name == "classify_binary" || name == "classify_invalid") {
        s.prompt_template = name;
        s.parser = ParserKind::yes_no;
        s.filter_action = FilterAction::drop_if_yes;
    } else if (name == "convert_proof") {
        s.prompt_template = "convert_proof";
        s.parser = ParserKind::free_text;
        s.filter_action = FilterAction::transform;
        s.applies_if = std::make_pair(std::string("classify_proof"), std::string("yes"));
    } else if (name == "answers") {
        s.prompt_template = "extract_answer";
        s.parser = ParserKind::answer_extraction;
        s.filter_action = FilterAction::transform;
        s.skip_if_answered = true;
        s.skip_category = ProblemCategory::converted_proof;
    } else {
        throw ConfigError("stages", "unknown stage '" + name + "'");
    }
    return s;
}

std::vector<StageSpec> stages_by_name(const std::vector<std::string>& names) {
    std::vector<StageSpec> out;
    for (const auto& n : names) {
        if (n == "classify") {
            for (const char* c : {"classify_proof", "classify_mcq", "classify_binary", "classify_invalid"}) {
                out.push_back(builtin_stage(c));
            }
        } else if (n == "transform") {
            out.push_back(builtin_stage("convert_proof"));
        } else {
            out.push_back(builtin_stage(n));
        }
    }
    return out;
}

} // namespace mathorch::curation
