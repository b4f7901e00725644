// SPDX-License-Identifier: Apache-2.0
//
// Subcommand implementations. Each reads its inputs, writes its output
// files and returns a JSON report for stdout.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mathorch/app/config.hpp"
#include "mathorch/scheduler/scheduler.hpp"

namespace mathorch::app {

struct CodeLimitRange {
    int lo = 0;
    int hi = 0;
};

/// "N" or "LO..HI". Throws ConfigError("--code-limit", ...).
CodeLimitRange parse_code_limit(std::string_view text);

struct SolveOptions {
    std::filesystem::path problems;
    std::filesystem::path out;
    SolutionMode mode = SolutionMode::cot;
    int n = 1;
    // A range draws one limit per problem from the invocation seed.
    std::optional<CodeLimitRange> code_limit;
    std::optional<std::size_t> output_cap;
    std::optional<std::int64_t> exec_timeout_ms;
};

/// Generation j of every problem is requested with seed config.seed + j.
/// Solutions are written in completion order.
json cmd_solve(Runtime& rt, const SolveOptions& opts);

struct EvaluateOptions {
    std::filesystem::path problems;
    std::filesystem::path solutions;
    int k = 1;
};

/// Solutions are taken in file order as completion order. Unjudged
/// solutions are judged against the problem's expected answer.
json cmd_evaluate(Runtime& rt, const EvaluateOptions& opts);

struct GenSelectDataOptions {
    std::filesystem::path problems;
    std::filesystem::path solutions;
    std::filesystem::path out;
    bool regenerate_summaries = true;
    bool summarize_comparisons = true;
};

json cmd_genselect_data(Runtime& rt, const GenSelectDataOptions& opts);

struct GenSelectInferOptions {
    std::filesystem::path problems;
    std::filesystem::path solutions;
    std::filesystem::path out;
};

json cmd_genselect_infer(Runtime& rt, const GenSelectInferOptions& opts);

struct CompeteOptions {
    std::filesystem::path problems;
    std::filesystem::path out;
    std::optional<std::filesystem::path> audit;
    scheduler::TimeLedger ledger;
    scheduler::BatchPolicy policy;
};

json cmd_compete(Runtime& rt, const CompeteOptions& opts);

struct CurateOptions {
    std::filesystem::path in;
    std::filesystem::path out_dir;
    std::vector<std::string> stages;
    std::optional<std::filesystem::path> benchmark;
};

/// Runs stages in order; "decontam" runs the benchmark comparison. Surviving
/// problems are written to <out_dir>/problems.jsonl.
json cmd_curate(Runtime& rt, const CurateOptions& opts);

} // namespace mathorch::app
