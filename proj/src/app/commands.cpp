// SPDX-License-Identifier: Apache-2.0
#include "mathorch/app/commands.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "mathorch/core/errors.hpp"
#include "mathorch/core/jsonl.hpp"
#include "mathorch/core/log.hpp"
#include "mathorch/core/random.hpp"
#include "mathorch/curation/decontam.hpp"
#include "mathorch/curation/stages.hpp"
#include "mathorch/genselect/data.hpp"
#include "mathorch/genselect/genselect.hpp"
#include "mathorch/metrics/aggregation.hpp"
#include "mathorch/tir/session.hpp"

namespace mathorch::app {
namespace {

int parse_int(std::string_view s, const std::string& field) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(field, "expected an integer, got '" + std::string(s) + "'");
    }
    return v;
}

std::map<std::string, std::vector<Solution>> group_by_problem(const std::vector<Solution>& solutions) {
    std::map<std::string, std::vector<Solution>> out;
    for (const auto& s : solutions) {
        out[s.problem_id].push_back(s);
    }
    return out;
}

json metric_value(const metrics::Rational& r) {
    return json{{"value", metrics::to_double(r)}, {"exact", metrics::to_fraction_string(r)}};
}

tir::TirConfig generation_config(const Runtime& rt) {
    auto cfg = rt.config().tir;
    cfg.params = rt.config().tir_params;
    cfg.exec_timeout_ms = rt.config().sandbox.timeout_ms;
    return cfg;
}

void ensure_parent(const std::filesystem::path& p) {
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
}

void write_json_file(const std::filesystem::path& p, const json& j) {
    ensure_parent(p);
    std::ofstream out(p);
    if (!out) {
        throw IoError("cannot write '" + p.string() + "'");
    }
    out << j.dump(2) << '\n';
}

} // namespace

CodeLimitRange parse_code_limit(std::string_view text) {
    CodeLimitRange r;
    if (auto dots = text.find(".."); dots != std::string_view::npos) {
        r.lo = parse_int(text.substr(0, dots), "--code-limit");
        r.hi = parse_int(text.substr(dots + 2), "--code-limit");
    } else {
        r.lo = r.hi = parse_int(text, "--code-limit");
    }
    if (r.lo < 1 || r.hi < r.lo) {
        throw ConfigError("--code-limit", "expected N or LO..HI with 1 <= LO <= HI");
    }
    if (r.lo != r.hi && r.hi > tir::kMaxDataGenCodeExecutions) {
        throw ConfigError("--code-limit", "ranges draw data-generation limits and must stay within 1..8");
    }
    return r;
}

json cmd_solve(Runtime& rt, const SolveOptions& opts) {
    if (opts.n < 1) {
        throw ConfigError("--n", "must be at least 1");
    }
    if (opts.mode == SolutionMode::genselect) {
        throw ConfigError("--mode", "solve supports cot and tir");
    }
    const auto problems = read_jsonl<Problem>(opts.problems);
    auto base = generation_config(rt);
    if (opts.output_cap) {
        base.output_char_cap = *opts.output_cap;
    }
    if (opts.exec_timeout_ms) {
        base.exec_timeout_ms = *opts.exec_timeout_ms;
    }
    tir::validate(base);

    struct Job {
        const Problem* problem;
        tir::TirConfig config;
        int gen_index;
    };
    std::vector<Job> jobs;
    json limits = json::object();
    for (const auto& p : problems) {
        auto cfg = base;
        if (opts.mode == SolutionMode::tir && opts.code_limit) {
            Rng rng(derive_seed(rt.config().seed, "code_limit/" + p.id));
            cfg.data_generation = true;
            cfg.max_code_executions = static_cast<int>(rng.uniform(opts.code_limit->lo, opts.code_limit->hi));
            tir::validate(cfg);
            limits[p.id] = cfg.max_code_executions;
        }
        for (int j = 0; j < opts.n; ++j) {
            auto c = cfg;
            c.params.seed = static_cast<std::int64_t>(rt.config().seed) + j;
            jobs.push_back({&p, c, j});
        }
    }

    ensure_parent(opts.out);
    JsonlWriter writer(opts.out);
    tir::SessionRegistry registry;
    std::size_t failed = 0, unfinished = 0, violations = 0;
    const auto window = rt.config().max_in_flight;
    for (std::size_t start = 0; start < jobs.size(); start += window) {
        const auto end = std::min(jobs.size(), start + window);
        std::vector<std::unique_ptr<tir::GenerationSession>> sessions;
        std::vector<tir::GenerationSession*> ptrs;
        for (std::size_t i = start; i < end; ++i) {
            tir::SessionOptions so;
            so.gen_index = jobs[i].gen_index;
            so.templates = &rt.templates();
            so.registry = &registry;
            auto* sandbox = opts.mode == SolutionMode::tir ? &rt.sandbox() : nullptr;
            sessions.push_back(std::make_unique<tir::GenerationSession>(*jobs[i].problem, opts.mode, jobs[i].config,
                                                                        rt.backend(), sandbox, so));
            ptrs.push_back(sessions.back().get());
        }
        tir::drive_sessions(
            ptrs, rt.clock(),
            [&](std::size_t i) {
                auto s = ptrs[i]->solution();
                failed += s.error.has_value();
                unfinished += !s.finished;
                violations += s.limit_violation;
                writer.write(to_json(s));
            },
            true);
        writer.flush();
    }
    json report{{"command", "solve"},
                {"mode", to_string(opts.mode)},
                {"problems", problems.size()},
                {"solutions", writer.count()},
                {"failed", failed},
                {"unfinished", unfinished},
                {"limit_violations", violations}};
    if (!limits.empty()) {
        report["code_limits"] = limits;
    }
    log::info("solve finished", report);
    return report;
}

json cmd_evaluate(Runtime& rt, const EvaluateOptions& opts) {
    if (opts.k < 1) {
        throw ConfigError("--k", "must be at least 1");
    }
    const auto problems = read_jsonl<Problem>(opts.problems);
    const auto solutions = read_jsonl<Solution>(opts.solutions);
    const auto by_problem = group_by_problem(solutions);
    const auto eq = rt.equivalence();
    std::set<std::string> known;
    for (const auto& p : problems) {
        known.insert(p.id);
    }

    json errors = json::array();
    for (const auto& [pid, sols] : by_problem) {
        if (!known.count(pid)) {
            errors.push_back({{"problem_id", pid}, {"error", "unknown problem"}});
        }
    }

    std::map<std::string, std::vector<metrics::ProblemResult>> rows;
    json per_problem = json::array();
    metrics::MetricConfig mc;
    mc.k = opts.k;
    mc.tie_break = rt.config().tie_break;
    for (const auto& p : problems) {
        auto it = by_problem.find(p.id);
        if (it == by_problem.end()) {
            continue;
        }
        metrics::ProblemResult r{p.id, {}};
        bool judgeable = true;
        for (const auto& s : it->second) {
            metrics::GenerationJudgment g;
            g.finished = s.finished;
            g.answer = s.finished ? s.extracted_answer : std::nullopt;
            if (s.correct) {
                g.correct = *s.correct && g.answer.has_value();
            } else if (g.answer && p.expected_answer) {
                g.correct = judge::judge_equivalence(*g.answer, *p.expected_answer, p, rt.llm_judge()).equivalent;
            } else if (g.answer) {
                judgeable = false;
            }
            r.judgments.push_back(std::move(g));
        }
        if (!judgeable) {
            errors.push_back({{"problem_id", p.id}, {"error", "no expected answer to judge against"}});
            continue;
        }
        const auto n = static_cast<int>(r.judgments.size());
        if (n < opts.k) {
            errors.push_back({{"problem_id", p.id},
                              {"error", InsufficientGenerations(p.id, n, opts.k).what()},
                              {"have", n},
                              {"need", opts.k}});
            continue;
        }
        const std::vector<metrics::ProblemResult> one{r};
        per_problem.push_back({{"problem_id", p.id},
                               {"benchmark", p.benchmark.value_or("default")},
                               {"generations", n},
                               {"pass@1", metric_value(metrics::pass_at_1_avg(one, n))},
                               {"maj@k", metric_value(metrics::maj_at_k(one, mc, eq))},
                               {"pass@k", metric_value(metrics::pass_at_k(one, opts.k))},
                               {"unfinished", metric_value(metrics::unfinished_rate(one))}});
        rows[p.benchmark.value_or("default")].push_back(std::move(r));
    }

    auto row_json = [&](const std::string& name, const std::vector<metrics::ProblemResult>& results) {
        metrics::Rational pass1 = 0;
        for (const auto& r : results) {
            pass1 += metrics::pass_at_1_avg({r}, static_cast<int>(r.judgments.size()));
        }
        pass1 /= static_cast<int>(results.size());
        return json{{"benchmark", name},
                    {"problems", results.size()},
                    {"pass@1", metric_value(pass1)},
                    {"maj@k", metric_value(metrics::maj_at_k(results, mc, eq))},
                    {"pass@k", metric_value(metrics::pass_at_k(results, opts.k))},
                    {"unfinished", metric_value(metrics::unfinished_rate(results))}};
    };
    json bench_rows = json::array();
    std::vector<metrics::ProblemResult> all;
    for (const auto& [name, results] : rows) {
        bench_rows.push_back(row_json(name, results));
        all.insert(all.end(), results.begin(), results.end());
    }
    json report{{"command", "evaluate"},
                {"k", opts.k},
                {"tie_break", metrics::to_string(mc.tie_break)},
                {"rows", bench_rows},
                {"aggregate", all.empty() ? json(nullptr) : row_json("all", all)},
                {"problems", per_problem},
                {"errors", errors}};
    return report;
}

json cmd_genselect_data(Runtime& rt, const GenSelectDataOptions& opts) {
    const auto problems = read_jsonl<Problem>(opts.problems);
    const auto solutions = read_jsonl<Solution>(opts.solutions);
    genselect::DataPrepOptions dp;
    dp.regenerate_summaries = opts.regenerate_summaries;
    dp.summarize_comparisons = opts.summarize_comparisons;
    auto result = genselect::prepare_training_data(problems, solutions, rt.backend(), rt.equivalence(),
                                                   rt.genselect_config(), dp);
    ensure_parent(opts.out);
    write_jsonl(result.records, opts.out);
    json report = result.stats.to_json();
    report["command"] = "genselect-data";
    return report;
}

json cmd_genselect_infer(Runtime& rt, const GenSelectInferOptions& opts) {
    const auto problems = read_jsonl<Problem>(opts.problems);
    const auto by_problem = group_by_problem(read_jsonl<Solution>(opts.solutions));
    const auto eq = rt.equivalence();
    ensure_parent(opts.out);
    JsonlWriter writer(opts.out);
    std::size_t answered = 0, judged = 0, correct = 0, failed = 0, calls = 0;
    for (const auto& p : problems) {
        auto it = by_problem.find(p.id);
        if (it == by_problem.end()) {
            continue;
        }
        json line{{"problem_id", p.id}};
        Rng rng(derive_seed(rt.config().seed, "genselect/" + p.id));
        try {
            auto r = genselect::genselect_inference(it->second, p, rt.genselect_config(), rt.backend(), eq, rng);
            calls += r.selection_calls;
            json selected = json::array();
            for (auto i : r.selected) {
                selected.push_back(it->second[i].solution_id);
            }
            line["answer"] = r.answer ? json(*r.answer) : json(nullptr);
            line["selected"] = selected;
            line["selection_calls"] = r.selection_calls;
            line["unparseable"] = r.unparseable;
            answered += r.answer.has_value();
            if (r.answer && p.expected_answer) {
                const bool ok = judge::judge_equivalence(*r.answer, *p.expected_answer, p, rt.llm_judge()).equivalent;
                line["correct"] = ok;
                ++judged;
                correct += ok;
            }
        } catch (const Error& e) {
            ++failed;
            line["answer"] = nullptr;
            line["error"] = e.what();
            log::warning("selection failed", {{"problem_id", p.id}, {"error", e.what()}});
        }
        writer.write(line);
    }
    json report{{"command", "genselect-infer"},
                {"problems", writer.count()},
                {"answered", answered},
                {"failed", failed},
                {"selection_calls", calls}};
    if (judged > 0) {
        report["accuracy"] = metric_value(metrics::Rational(correct, judged));
    }
    return report;
}

json cmd_compete(Runtime& rt, const CompeteOptions& opts) {
    const auto problems = read_jsonl<Problem>(opts.problems);
    scheduler::validate(opts.ledger);
    scheduler::validate(opts.policy);
    tir::SessionRegistry registry;
    scheduler::SolveContext ctx;
    ctx.backend = &rt.backend();
    ctx.sandbox = &rt.sandbox();
    ctx.mode = SolutionMode::tir;
    ctx.tir = generation_config(rt);
    ctx.templates = &rt.templates();
    ctx.registry = &registry;
    ctx.equivalence = rt.equivalence();
    ctx.seed_base = static_cast<std::int64_t>(rt.config().seed);
    auto result = scheduler::run_competition(problems, opts.ledger, opts.policy, ctx);

    ensure_parent(opts.out);
    JsonlWriter writer(opts.out);
    json audit = json::array();
    for (const auto& a : result.audit) {
        writer.write({{"problem_id", a.problem_id}, {"answer", a.answer ? json(*a.answer) : json(nullptr)}});
        audit.push_back(scheduler::to_json(a));
    }
    json report{{"command", "compete"},
                {"questions", audit},
                {"ledger", scheduler::to_json(result.final_ledger)},
                {"total_used_s", result.total_used_s},
                {"live_sessions", registry.live()}};
    if (opts.audit) {
        write_json_file(*opts.audit, report);
    }
    return report;
}

json cmd_curate(Runtime& rt, const CurateOptions& opts) {
    if (opts.stages.empty()) {
        throw ConfigError("--stages", "at least one stage is required");
    }
    std::vector<curation::CurationRecord> records;
    {
        JsonlLineReader reader(opts.in);
        while (auto item = reader.next()) {
            try {
                records.push_back(curation::record_from_input(item->second));
            } catch (const FieldError& e) {
                throw SchemaError(item->first, e.field(), e.what());
            } catch (const json::exception& e) {
                throw SchemaError(item->first, "<json>", e.what());
            }
        }
    }
    // Resolve every name before running anything, so typos fail fast.
    std::vector<std::vector<curation::StageSpec>> plan;
    for (const auto& name : opts.stages) {
        if (name == "decontam") {
            if (!opts.benchmark) {
                throw ConfigError("--benchmark", "required by the decontam stage");
            }
            plan.emplace_back();
        } else {
            plan.push_back(curation::stages_by_name({name}));
        }
    }
    std::filesystem::create_directories(opts.out_dir);
    curation::StageOptions so;
    so.max_in_flight = rt.config().max_in_flight;
    so.templates = &rt.templates();
    so.checkpoint_dir = opts.out_dir;

    json counts = json::array();
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (plan[i].empty()) {
            std::vector<Problem> problems;
            for (const auto& r : records) {
                problems.push_back(r.problem);
            }
            curation::DecontamOptions dop;
            dop.max_in_flight = rt.config().max_in_flight;
            dop.templates = &rt.templates();
            dop.params = so.params;
            const auto bench = read_jsonl<Problem>(*opts.benchmark);
            auto d = curation::decontaminate(problems, bench, rt.backend(), dop);
            std::set<std::string> keep;
            for (const auto& p : d.retained) {
                keep.insert(p.id);
            }
            std::set<std::string> review_ids;
            for (const auto& p : d.review) {
                review_ids.insert(p.id);
            }
            std::vector<curation::CurationRecord> passed, review;
            for (auto& r : records) {
                if (keep.count(r.problem.id)) {
                    passed.push_back(std::move(r));
                } else if (review_ids.count(r.problem.id)) {
                    review.push_back(std::move(r));
                }
            }
            json removed = json::array();
            for (const auto& e : d.removed) {
                removed.push_back(
                    {{"problem_id", e.problem_id}, {"benchmark_id", e.benchmark_id}, {"similarity", e.similarity}});
            }
            write_jsonl(passed, opts.out_dir / "decontam.passed.jsonl");
            write_jsonl(review, opts.out_dir / "decontam.review.jsonl");
            write_jsonl(std::vector<json>(removed.begin(), removed.end()), opts.out_dir / "decontam.dropped.jsonl");
            counts.push_back({{"stage", "decontam"},
                              {"input", problems.size()},
                              {"passed", passed.size()},
                              {"dropped", d.removed.size()},
                              {"review", review.size()},
                              {"output", passed.size()},
                              {"judge_calls", d.judge_calls}});
            records = std::move(passed);
            continue;
        }
        for (const auto& spec : plan[i]) {
            auto result = curation::run_stage(records, spec, rt.backend(), so);
            counts.push_back(result.counts());
            records = std::move(result.passed);
        }
    }
    std::vector<Problem> out;
    for (const auto& r : records) {
        out.push_back(r.problem);
    }
    write_jsonl(out, opts.out_dir / "problems.jsonl");
    json report{{"command", "curate"}, {"stages", counts}, {"output", out.size()}};
    write_json_file(opts.out_dir / "report.json", report);
    return report;
}

} // namespace mathorch::app
