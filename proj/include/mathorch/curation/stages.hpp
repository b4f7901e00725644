// SPDX-License-Identifier: Apache-2.0
//
// Prompt-driven curation stages over problem records, with per-stage
// checkpoints and review routing for unparseable verdicts.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/prompts.hpp"
#include "mathorch/core/types.hpp"

namespace mathorch::curation {

struct CurationRecord {
    Problem problem;
    // Source text the problem came from (forum post, discussion).
    std::string text;
    std::map<std::string, std::string> annotations;

    bool operator==(const CurationRecord&) const = default;
};

json to_json(const CurationRecord& r);
CurationRecord curation_record_from_json(const json& j);

/// Raw-post input line: {"id", "text", "source_url"?}. Problem-shaped lines
/// (with "statement") are accepted too.
CurationRecord record_from_input(const json& j);

enum class ParserKind { json_list, yes_no, free_text, answer_extraction };
enum class FilterAction { drop_if_yes, drop_if_no, annotate, transform };

std::string_view to_string(ParserKind p);
std::string_view to_string(FilterAction a);

struct StageSpec {
    std::string name;
    std::string prompt_template;
    ParserKind parser = ParserKind::yes_no;
    FilterAction filter_action = FilterAction::annotate;
    // Only records whose annotation `first` equals `second` are prompted;
    // the rest pass through untouched.
    std::optional<std::pair<std::string, std::string>> applies_if;
    // Skip records that already carry an expected answer.
    bool skip_if_answered = false;
    // Skip records of this category.
    std::optional<ProblemCategory> skip_category;
};

/// Template must exist and the parser must suit the action. Throws ConfigError.
void validate(const StageSpec& s, const PromptTemplates& templates);

enum class Disposition { passed, dropped, review };

struct StageOutcome {
    std::string input_id;
    Disposition disposition = Disposition::passed;
    std::string reason;
    // Output records: one for filters/annotations/transforms, any number
    // for extraction, the input record for drops and reviews.
    std::vector<CurationRecord> records;
};

struct StageResult {
    std::string stage;
    std::vector<CurationRecord> passed;
    std::vector<CurationRecord> dropped;
    std::vector<CurationRecord> review;
    std::size_t input = 0;
    // Inputs whose outcome was passed (extraction may emit several records each).
    std::size_t passed_inputs = 0;
    std::size_t resumed = 0;

    json counts() const;
};

struct StageOptions {
    std::size_t max_in_flight = 8;
    SamplingParams params = default_params();
    const PromptTemplates* templates = nullptr;
    std::optional<std::string> verdict_pattern;
    // When set, outcomes are appended to <dir>/<stage>.checkpoint.jsonl as
    // they are decided and inputs already present there are not re-prompted.
    // Final <stage>.{passed,dropped,review}.jsonl files are written at the end.
    std::optional<std::filesystem::path> checkpoint_dir;

    static SamplingParams default_params() {
        SamplingParams p;
        p.temperature = 0.0;
        p.top_p = 1.0;
        p.max_tokens = 2048;
        return p;
    }
};

/// Applies one stage to every record, in input order.
StageResult run_stage(const std::vector<CurationRecord>& records, const StageSpec& stage,
                      backend::CompletionBackend& backend, const StageOptions& options = {});

/// Decides one record from a completion. Exposed for testing.
StageOutcome apply_verdict(const CurationRecord& record, const StageSpec& stage, const std::string& completion,
                           const std::optional<std::string>& verdict_pattern = std::nullopt);

/// Built-in stages by name: extraction, classify_proof, classify_mcq,
/// classify_binary, classify_invalid, convert_proof, answers. Group names:
/// "classify" (the four classifiers) and "transform" (convert_proof).
std::vector<StageSpec> stages_by_name(const std::vector<std::string>& names);
StageSpec builtin_stage(const std::string& name);

} // namespace mathorch::curation
