// SPDX-License-Identifier: Apache-2.0
#include "mathorch/app/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "mathorch/backend/http.hpp"
#include "mathorch/backend/scripted.hpp"
#include "mathorch/core/errors.hpp"

namespace mathorch::app {
namespace {

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
        throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    }
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) {
            throw ConfigError(path.empty() ? k : path + "." + k, "unknown key");
        }
    }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <typename T>
void read(const json& j, const std::string& path, const std::string& key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) {
        return;
    }
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) {
                throw ConfigError(join(path, key), "expected a boolean");
            }
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) {
                throw ConfigError(join(path, key), "expected an integer");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (it->get<std::int64_t>() < 0) {
                    throw ConfigError(join(path, key), "must be non-negative");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) {
                throw ConfigError(join(path, key), "expected a number");
            }
        } else {
            if (!it->is_string()) {
                throw ConfigError(join(path, key), "expected a string");
            }
        }
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(join(path, key), e.what());
    }
}

SamplingParams read_params(const json& j, const std::string& path, SamplingParams p) {
    check_keys(j, path, {"temperature", "top_p", "max_tokens", "stop_sequences", "seed"});
    read(j, path, "temperature", p.temperature);
    read(j, path, "top_p", p.top_p);
    read(j, path, "max_tokens", p.max_tokens);
    if (auto it = j.find("stop_sequences"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError(join(path, "stop_sequences"), "expected an array of strings");
        }
        p.stop_sequences.clear();
        for (const auto& s : *it) {
            if (!s.is_string()) {
                throw ConfigError(join(path, "stop_sequences"), "expected an array of strings");
            }
            p.stop_sequences.push_back(s.get<std::string>());
        }
    }
    if (j.contains("seed")) {
        std::int64_t seed = 0;
        read(j, path, "seed", seed);
        p.seed = seed;
    }
    try {
        validate(p);
    } catch (const FieldError& e) {
        throw ConfigError(join(path, e.field()), e.what());
    }
    return p;
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) {
        return p;
    }
    std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

} // namespace

AppConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    AppConfig c;
    c.base_dir = base_dir;
    check_keys(j, "", {"backend", "sandbox", "modes", "tir", "genselect", "paths", "seed", "virtual_clock",
                       "max_in_flight", "equivalence", "llm_judge", "tie_break"});
    if (auto it = j.find("backend"); it != j.end()) {
        check_keys(*it, "backend", {"kind", "base_url", "api_key_env", "scenario_file", "model", "read_timeout_s"});
        read(*it, "backend", "kind", c.backend.kind);
        read(*it, "backend", "base_url", c.backend.base_url);
        read(*it, "backend", "api_key_env", c.backend.api_key_env);
        read(*it, "backend", "scenario_file", c.backend.scenario_file);
        read(*it, "backend", "model", c.backend.model);
        read(*it, "backend", "read_timeout_s", c.backend.read_timeout_s);
    }
    if (auto it = j.find("sandbox"); it != j.end()) {
        check_keys(*it, "sandbox", {"kind", "base_url", "timeout_ms", "scenario_file"});
        read(*it, "sandbox", "kind", c.sandbox.kind);
        read(*it, "sandbox", "base_url", c.sandbox.base_url);
        read(*it, "sandbox", "timeout_ms", c.sandbox.timeout_ms);
        read(*it, "sandbox", "scenario_file", c.sandbox.scenario_file);
    }
    if (auto it = j.find("modes"); it != j.end()) {
        check_keys(*it, "modes", {"cot", "tir", "genselect", "judge"});
        if (it->contains("cot")) {
            c.cot_params = read_params((*it)["cot"], "modes.cot", c.cot_params);
        }
        if (it->contains("tir")) {
            c.tir_params = read_params((*it)["tir"], "modes.tir", c.tir_params);
        }
        if (it->contains("genselect")) {
            c.genselect_params = read_params((*it)["genselect"], "modes.genselect", c.genselect_params);
        }
        if (it->contains("judge")) {
            c.judge_params = read_params((*it)["judge"], "modes.judge", c.judge_params);
        }
    }
    if (auto it = j.find("tir"); it != j.end()) {
        check_keys(*it, "tir", {"code_begin_tag", "code_end_tag", "max_code_executions", "output_char_cap",
                                "persistent_sessions"});
        read(*it, "tir", "code_begin_tag", c.tir.code_begin_tag);
        read(*it, "tir", "code_end_tag", c.tir.code_end_tag);
        read(*it, "tir", "max_code_executions", c.tir.max_code_executions);
        read(*it, "tir", "output_char_cap", c.tir.output_char_cap);
        read(*it, "tir", "persistent_sessions", c.tir.persistent_sessions);
    }
    if (auto it = j.find("genselect"); it != j.end()) {
        check_keys(*it, "genselect", {"min_group", "max_group", "groups_per_problem", "summary_max_tokens",
                                      "summary_candidates", "inference_subset_size", "inference_repeats"});
        read(*it, "genselect", "min_group", c.genselect.min_group);
        read(*it, "genselect", "max_group", c.genselect.max_group);
        read(*it, "genselect", "groups_per_problem", c.genselect.groups_per_problem);
        read(*it, "genselect", "summary_max_tokens", c.genselect.summary_max_tokens);
        read(*it, "genselect", "summary_candidates", c.genselect.summary_candidates);
        read(*it, "genselect", "inference_subset_size", c.genselect.inference_subset_size);
        read(*it, "genselect", "inference_repeats", c.genselect.inference_repeats);
    }
    if (auto it = j.find("paths"); it != j.end()) {
        check_keys(*it, "paths", {"templates"});
        read(*it, "paths", "templates", c.templates_dir);
    }
    read(j, "", "seed", c.seed);
    read(j, "", "virtual_clock", c.virtual_clock);
    read(j, "", "max_in_flight", c.max_in_flight);
    read(j, "", "equivalence", c.equivalence);
    read(j, "", "llm_judge", c.llm_judge);
    if (j.contains("tie_break")) {
        std::string tb;
        read(j, "", "tie_break", tb);
        c.tie_break = metrics::parse_tie_break(tb);
    }

    c.backend.scenario_file = resolve(base_dir, c.backend.scenario_file);
    c.sandbox.scenario_file = resolve(base_dir, c.sandbox.scenario_file);
    c.templates_dir = resolve(base_dir, c.templates_dir);
    validate(c);
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("--config", "cannot open '" + path.string() + "'");
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("--config", "'" + path.string() + "' is not valid JSON");
    }
    auto base = path.parent_path();
    return config_from_json(j, base.empty() ? std::filesystem::path(".") : base);
}

void validate(const AppConfig& c) {
    if (c.backend.kind == "scripted") {
        if (c.backend.scenario_file.empty()) {
            throw ConfigError("backend.scenario_file", "required for scripted backends");
        }
    } else if (c.backend.kind == "http") {
        if (c.backend.base_url.empty() && std::getenv("OPENAI_BASE_URL") == nullptr) {
            throw ConfigError("backend.base_url", "required for http backends (or set OPENAI_BASE_URL)");
        }
    } else {
        throw ConfigError("backend.kind", "expected scripted or http, got '" + c.backend.kind + "'");
    }
    if (c.backend.read_timeout_s < 1) {
        throw ConfigError("backend.read_timeout_s", "must be positive");
    }
    if (c.sandbox.kind == "http") {
        if (c.sandbox.base_url.empty()) {
            throw ConfigError("sandbox.base_url", "required for http sandboxes");
        }
    } else if (c.sandbox.kind != "scripted") {
        throw ConfigError("sandbox.kind", "expected scripted or http, got '" + c.sandbox.kind + "'");
    }
    if (c.sandbox.timeout_ms < 1) {
        throw ConfigError("sandbox.timeout_ms", "must be positive");
    }
    if (c.max_in_flight < 1) {
        throw ConfigError("max_in_flight", "must be at least 1");
    }
    if (c.equivalence != "rules" && c.equivalence != "string") {
        throw ConfigError("equivalence", "expected rules or string, got '" + c.equivalence + "'");
    }
    auto tir = c.tir;
    tir.params = c.tir_params;
    tir.exec_timeout_ms = c.sandbox.timeout_ms;
    validate(tir);
    genselect::validate(c.genselect);
}

Runtime::Runtime(const AppConfig& config) : config_(config) {
    if (config_.virtual_clock) {
        clock_ = std::make_unique<VirtualClock>();
    } else {
        clock_ = std::make_unique<SteadyClock>();
    }
    if (config_.backend.kind == "scripted") {
        backend_ = std::make_unique<backend::ScriptedBackend>(*clock_, backend::load_scenario(config_.backend.scenario_file));
    } else {
        backend::HttpBackendConfig hc;
        hc.base_url = config_.backend.base_url;
        if (const char* env = std::getenv("OPENAI_BASE_URL"); env && *env) {
            hc.base_url = env;
        }
        if (const char* key = std::getenv(config_.backend.api_key_env.c_str())) {
            hc.api_key = key;
        }
        hc.model = config_.backend.model;
        hc.read_timeout_s = config_.backend.read_timeout_s;
        backend_ = std::make_unique<backend::HttpBackend>(*clock_, hc);
    }
    if (config_.sandbox.kind == "http") {
        sandbox_ = std::make_unique<sandbox::HttpSandbox>(config_.sandbox.base_url);
    } else if (!config_.sandbox.scenario_file.empty()) {
        sandbox_ = sandbox::ScriptedSandbox::from_file(config_.sandbox.scenario_file);
    } else {
        sandbox_ = std::make_unique<sandbox::ScriptedSandbox>();
    }
    if (!config_.templates_dir.empty()) {
        templates_ = PromptTemplates::from_directory(config_.templates_dir);
    }
    judge_.backend = backend_.get();
    judge_.templates = &templates_;
    judge_.params = config_.judge_params;
    config_.genselect.templates = &templates_;
    config_.genselect.summary_params = config_.genselect_params;
    config_.genselect.selection_params = config_.genselect_params;
    config_.genselect.rng_seed = config_.seed;
    config_.genselect.max_in_flight = config_.max_in_flight;
}

Runtime::~Runtime() = default;

judge::AnswerEquivalence Runtime::equivalence() const {
    return config_.equivalence == "string" ? judge::normalized_string_equivalence() : judge::rule_equivalence();
}

} // namespace mathorch::app
