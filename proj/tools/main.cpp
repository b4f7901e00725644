// SPDX-License-Identifier: Apache-2.0
//
// mathorch: one binary, one subcommand per pipeline step. Data goes to files
// and stdout; logs go to stderr as JSON lines.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mathorch/app/commands.hpp"
#include "mathorch/app/config.hpp"
#include "mathorch/core/errors.hpp"
#include "mathorch/core/log.hpp"
#include "mathorch/core/shutdown.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    using namespace mathorch;
    CLI::App app{"Math reasoning orchestration: generation, evaluation, selection, scheduling and curation."};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool virtual_clock = false;
    bool quiet = false;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Configuration file (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "Seed for every random draw (overrides the config)");
        cmd->add_flag("--virtual-clock", virtual_clock, "Simulate time instead of waiting");
        cmd->add_flag("--quiet", quiet, "Suppress log output");
    };

    app::SolveOptions solve;
    std::string mode = "cot";
    std::string code_limit;
    auto* solve_cmd = app.add_subcommand("solve", "Generate solutions for each problem");
    add_common(solve_cmd);
    solve_cmd->add_option("--problems", solve.problems, "Problems JSONL")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--out", solve.out, "Solutions JSONL to write")->required();
    solve_cmd->add_option("--mode", mode, "cot or tir")->check(CLI::IsMember({"cot", "tir"}));
    solve_cmd->add_option("--n", solve.n, "Generations per problem");
    solve_cmd->add_option("--code-limit", code_limit, "Code executions per solution: N or LO..HI (drawn per problem)");
    solve_cmd->add_option("--output-cap", solve.output_cap, "Characters of execution output shown to the model");
    solve_cmd->add_option("--exec-timeout-ms", solve.exec_timeout_ms, "Per-execution timeout");

    app::EvaluateOptions evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compute pass@1, maj@k, pass@k and unfinished rate");
    add_common(eval_cmd);
    eval_cmd->add_option("--problems", evaluate.problems, "Problems JSONL")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--solutions", evaluate.solutions, "Solutions JSONL")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--k", evaluate.k, "Generations per problem for maj@k and pass@k");

    app::GenSelectDataOptions gdata;
    bool no_summaries = false;
    bool no_comparisons = false;
    auto* gdata_cmd = app.add_subcommand("genselect-data", "Build selection training records from a solution pool");
    add_common(gdata_cmd);
    gdata_cmd->add_option("--problems", gdata.problems, "Problems JSONL")->required()->check(CLI::ExistingFile);
    gdata_cmd->add_option("--solutions", gdata.solutions, "Solution pool JSONL")->required()->check(CLI::ExistingFile);
    gdata_cmd->add_option("--out", gdata.out, "Selection records JSONL to write")->required();
    gdata_cmd->add_flag("--no-summaries", no_summaries, "Keep existing solution summaries");
    gdata_cmd->add_flag("--no-comparison-summaries", no_comparisons, "Keep raw selection reasoning");

    app::GenSelectInferOptions ginfer;
    auto* ginfer_cmd = app.add_subcommand("genselect-infer", "Select an answer per problem from its solutions");
    add_common(ginfer_cmd);
    ginfer_cmd->add_option("--problems", ginfer.problems, "Problems JSONL")->required()->check(CLI::ExistingFile);
    ginfer_cmd->add_option("--solutions", ginfer.solutions, "Solutions JSONL")->required()->check(CLI::ExistingFile);
    ginfer_cmd->add_option("--out", ginfer.out, "Answers JSONL to write")->required();

    app::CompeteOptions compete;
    std::string audit_path;
    auto* compete_cmd = app.add_subcommand("compete", "Answer questions in order under a shared time budget");
    add_common(compete_cmd);
    compete_cmd->add_option("--problems", compete.problems, "Problems JSONL")->required()->check(CLI::ExistingFile);
    compete_cmd->add_option("--out", compete.out, "Answers JSONL to write")->required();
    compete_cmd->add_option("--audit", audit_path, "Ledger audit JSON to write");
    compete_cmd->add_option("--base-s", compete.ledger.base_per_question_s, "Base seconds per question");
    compete_cmd->add_option("--draw-cap-s", compete.ledger.extra_draw_cap_s, "Most seconds drawn from the buffer");
    compete_cmd->add_option("--total-s", compete.ledger.total_budget_s, "Total time budget");
    compete_cmd->add_option("--batch-size", compete.policy.batch_size, "Concurrent generations per question");
    compete_cmd->add_option("--agreement-threshold", compete.policy.agreement_threshold,
                            "Stop when this many completions agree");
    compete_cmd->add_option("--straggler-cancel", compete.policy.straggler_cancel_count,
                            "Cancel the last N generations once the rest are done");

    app::CurateOptions curate;
    std::string stages;
    std::string benchmark;
    auto* curate_cmd = app.add_subcommand("curate", "Run curation stages over raw records");
    add_common(curate_cmd);
    curate_cmd->add_option("--in", curate.in, "Input JSONL")->required()->check(CLI::ExistingFile);
    curate_cmd->add_option("--out", curate.out_dir, "Output directory")->required();
    curate_cmd->add_option("--stages", stages, "Comma-separated: extraction,classify,transform,answers,decontam")
        ->required();
    curate_cmd->add_option("--benchmark", benchmark, "Benchmark problems JSONL for decontam");

    CLI11_PARSE(app, argc, argv);

    install_shutdown_handlers();
    try {
        auto cfg = app::load_config(config_path);
        if (seed) {
            cfg.seed = *seed;
        }
        if (virtual_clock) {
            cfg.virtual_clock = true;
        }
        log::set_enabled(!quiet);
        app::Runtime rt(cfg);
        json report;
        if (*solve_cmd) {
            solve.mode = parse_solution_mode(mode);
            if (!code_limit.empty()) {
                solve.code_limit = app::parse_code_limit(code_limit);
            }
            report = app::cmd_solve(rt, solve);
        } else if (*eval_cmd) {
            report = app::cmd_evaluate(rt, evaluate);
        } else if (*gdata_cmd) {
            gdata.regenerate_summaries = !no_summaries;
            gdata.summarize_comparisons = !no_comparisons;
            report = app::cmd_genselect_data(rt, gdata);
        } else if (*ginfer_cmd) {
            report = app::cmd_genselect_infer(rt, ginfer);
        } else if (*compete_cmd) {
            if (!audit_path.empty()) {
                compete.audit = audit_path;
            }
            report = app::cmd_compete(rt, compete);
        } else if (*curate_cmd) {
            curate.stages = split_csv(stages);
            if (!benchmark.empty()) {
                curate.benchmark = benchmark;
            }
            report = app::cmd_curate(rt, curate);
        }
        std::cout << report.dump(2) << '\n';
        if (shutdown_requested()) {
            log::warning("interrupted; partial results were written");
            return 130;
        }
        return 0;
    } catch (const ConfigError& e) {
        log::error("configuration error", {{"error", e.what()}});
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        log::error("command failed", {{"error", e.what()}});
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
