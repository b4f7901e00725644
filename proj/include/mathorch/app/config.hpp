// SPDX-License-Identifier: Apache-2.0
//
// Application configuration (one JSON file) and the runtime objects built
// from it.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "mathorch/backend/completion.hpp"
#include "mathorch/core/clock.hpp"
#include "mathorch/core/prompts.hpp"
#include "mathorch/genselect/genselect.hpp"
#include "mathorch/judge/equivalence.hpp"
#include "mathorch/metrics/aggregation.hpp"
#include "mathorch/sandbox/sandbox.hpp"
#include "mathorch/tir/config.hpp"

namespace mathorch::app {

struct BackendSettings {
    std::string kind = "scripted";  // scripted | http
    std::string base_url;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string scenario_file;
    std::string model = "default";
    int read_timeout_s = 600;
};

struct SandboxSettings {
    std::string kind = "scripted";  // scripted | http
    std::string base_url;
    std::int64_t timeout_ms = 2000;
    // Optional for scripted sandboxes; without it every run succeeds silently.
    std::string scenario_file;
};

struct AppConfig {
    BackendSettings backend;
    SandboxSettings sandbox;
    SamplingParams cot_params;
    SamplingParams tir_params;
    SamplingParams genselect_params;
    SamplingParams judge_params = judge::LlmJudge::default_params();
    tir::TirConfig tir;
    genselect::GenSelectConfig genselect;
    std::string templates_dir;
    std::uint64_t seed = 0;
    bool virtual_clock = false;
    std::size_t max_in_flight = 8;
    // "rules" (exact or numeric) or "string" (normalized string identity).
    std::string equivalence = "rules";
    bool llm_judge = false;
    metrics::TieBreak tie_break = metrics::TieBreak::first_completed;
    // Directory relative paths in the file are resolved against.
    std::filesystem::path base_dir = ".";
};

/// Parses and validates. Unknown keys and invariant violations raise
/// ConfigError naming the field path (e.g. "backend.scenario_file").
AppConfig config_from_json(const json& j, const std::filesystem::path& base_dir = ".");
AppConfig load_config(const std::filesystem::path& path);
void validate(const AppConfig& c);

/// Owns the clock, backend, sandbox and templates for one invocation.
class Runtime {
public:
    explicit Runtime(const AppConfig& config);
    ~Runtime();

    const AppConfig& config() const noexcept { return config_; }
    Clock& clock() { return *clock_; }
    backend::CompletionBackend& backend() { return *backend_; }
    sandbox::CodeSandbox& sandbox() { return *sandbox_; }
    const PromptTemplates& templates() const { return templates_; }
    judge::AnswerEquivalence equivalence() const;
    /// Configured LLM judge, or null.
    const judge::LlmJudge* llm_judge() const { return config_.llm_judge ? &judge_ : nullptr; }
    /// GenSelect settings with templates, sampling, seed and concurrency filled in.
    const genselect::GenSelectConfig& genselect_config() const { return config_.genselect; }

private:
    AppConfig config_;
    std::unique_ptr<Clock> clock_;
    std::unique_ptr<backend::CompletionBackend> backend_;
    std::unique_ptr<sandbox::CodeSandbox> sandbox_;
    PromptTemplates templates_;
    judge::LlmJudge judge_;
};

} // namespace mathorch::app
