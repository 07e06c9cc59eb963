// effagents command-line front end: run, bench, sweep, report, replay.

#include "effagents/harness.hpp"
#include "effagents/http_backend.hpp"
#include "effagents/report.hpp"
#include "effagents/scripted_backend.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace effagents;

namespace {

struct CommonOptions {
    std::string config;
    std::string pricing;
    std::string backend = "http";
    std::string script;
    std::string fixtures;
    std::string templates;
    std::string trace_dir;
    std::string format = "table";
    std::string out;
    int workers = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", p.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path));
    out << text;
}

ExperimentConfig load_experiment(const CommonOptions& o) {
    auto cfg = load_config(o.config);
    if (!o.pricing.empty()) cfg.pricing = parse_pricing(slurp(o.pricing));
    return cfg;
}

PromptTemplates load_templates(const CommonOptions& o) {
    auto t = PromptTemplates::builtin();
    if (!o.templates.empty()) t.override_from(o.templates);
    return t;
}

Services make_services(const CommonOptions& o, const ExperimentConfig& cfg) {
    std::shared_ptr<ChatBackend> backend;
    if (o.backend == "scripted") {
        if (o.script.empty()) throw CLI::ValidationError("--script", "required with --backend scripted");
        backend = std::make_shared<ScriptedBackend>(load_script(o.script));
    } else {
        HttpBackendOptions http;
        http.endpoints = cfg.endpoints;
        backend = std::make_shared<HttpBackend>(std::move(http));
    }
    auto services = o.fixtures.empty() ? live_services(backend, cfg) : fixture_services(backend, o.fixtures, cfg);
    services.templates = load_templates(o);
    return services;
}

BenchmarkOptions bench_options(const CommonOptions& o, const ExperimentConfig& cfg) {
    BenchmarkOptions b;
    b.workers = o.workers > 0 ? o.workers : cfg.harness.workers;
    if (!o.trace_dir.empty()) b.trace_dir = o.trace_dir;
    b.run_timeout = std::chrono::seconds(cfg.harness.run_timeout_s);
    return b;
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        auto b = cur.find_first_not_of(' ');
        auto e = cur.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_config) {
    auto* c = cmd->add_option("--config", o.config, "Experiment config file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--pricing", o.pricing, "Pricing file overriding the config's [pricing] sections")
        ->check(CLI::ExistingFile);
    cmd->add_option("--backend", o.backend, "Model backend")->check(CLI::IsMember({"http", "scripted"}));
    cmd->add_option("--script", o.script, "Script file for --backend scripted")->check(CLI::ExistingFile);
    cmd->add_option("--fixtures", o.fixtures, "Serve search and pages from a fixture directory")
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--templates", o.templates, "Directory of prompt template overrides")->check(CLI::ExistingDirectory);
    cmd->add_option("--trace-dir", o.trace_dir, "Write one gzip trace per run here");
    cmd->add_option("--workers", o.workers, "Concurrent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"table", "csv", "svg"}));
    cmd->add_option("--out", o.out, "Write the report here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cost-aware LLM agent runtime and benchmark harness"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    CommonOptions o;
    std::string tasks_path;
    std::string task_id;
    std::string outcomes_path;
    std::string axis;
    std::string values;
    std::string outcomes_dir;
    std::vector<std::string> inputs;

    auto* run = app.add_subcommand("run", "Run a single task and print its outcome");
    add_common(run, o, true);
    run->add_option("--tasks", tasks_path, "Task file (GAIA metadata JSONL)")->required()->check(CLI::ExistingFile);
    run->add_option("--task-id", task_id, "Task to run (default: the first)");

    auto* bench = app.add_subcommand("bench", "Run every task in a file and report");
    add_common(bench, o, true);
    bench->add_option("--tasks", tasks_path, "Task file")->required()->check(CLI::ExistingFile);
    bench->add_option("--outcomes", outcomes_path, "Save per-task outcomes (JSONL)");

    auto* sweep_cmd = app.add_subcommand("sweep", "Vary one config field and report each value");
    add_common(sweep_cmd, o, true);
    sweep_cmd->add_option("--tasks", tasks_path, "Task file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--axis", axis, "Field to vary")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
    sweep_cmd->add_option("--outcomes-dir", outcomes_dir, "Save outcomes per value as <axis>=<value>.jsonl");

    auto* report = app.add_subcommand("report", "Render saved outcome files");
    report->add_option("outcomes", inputs, "Outcome files; each becomes one labelled config")
        ->required()
        ->check(CLI::ExistingFile);
    report->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"table", "csv", "svg"}));
    report->add_option("--out", o.out, "Write the report here instead of stdout");

    auto* replay = app.add_subcommand("replay", "Re-execute recorded runs from traces and verify them");
    replay->add_option("traces", inputs, "Trace files or directories")->required()->check(CLI::ExistingPath);
    replay->add_option("--templates", o.templates, "Directory of prompt template overrides")
        ->check(CLI::ExistingDirectory);
    replay->add_option("--trace-dir", o.trace_dir, "Write the re-recorded traces here");
    replay->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"table", "csv", "svg"}));
    replay->add_option("--out", o.out, "Write the report here instead of stdout");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        const auto format = parse_report_format(o.format);
        if (*run) {
            auto cfg = load_experiment(o);
            require_valid(cfg.agent, cfg.pricing);
            auto tasks = load_tasks(tasks_path);
            if (tasks.empty()) throw EmptyBenchmark();
            auto it = task_id.empty() ? tasks.begin()
                                      : std::find_if(tasks.begin(), tasks.end(),
                                                     [&](const Task& t) { return t.task_id == task_id; });
            if (it == tasks.end()) throw std::runtime_error(fmt::format("no task '{}'", task_id));
            auto services = make_services(o, cfg);
            auto r = run_one(*it, cfg.agent, cfg.pricing, services, std::chrono::seconds(cfg.harness.run_timeout_s));
            if (!o.trace_dir.empty()) {
                fs::create_directories(o.trace_dir);
                r.trace->save(fs::path(o.trace_dir) / trace_file_name(it->task_id, cfg.agent));
            }
            const auto& out = r.outcome;
            std::cout << fmt::format(
                "task: {}\nanswer: {}\nexpected: {}\nsolved: {}\nterminated_by: {}\nplans: {}\nsteps: {}\n"
                "tokens: {}\ncost_usd: {:.6f}\n",
                out.task_id, out.final_answer, it->expected_answer, out.solved ? "yes" : "no",
                to_string(out.terminated_by), r.record.plans.size(), r.record.steps.size(), out.tokens, out.cost.usd());
            if (!out.error.empty()) std::cout << "error: " << out.error << "\n";
            return out.terminated_by == TerminatedBy::Aborted ? 1 : 0;
        }
        if (*bench) {
            auto cfg = load_experiment(o);
            auto tasks = load_tasks(tasks_path);
            auto services = make_services(o, cfg);
            auto result = run_benchmark(tasks, cfg.agent, cfg.pricing, services, bench_options(o, cfg));
            if (!outcomes_path.empty()) save_outcomes(outcomes_path, result.outcomes);
            write_output(o.out, emit_report(label_rows(config_hash(cfg.agent), result.rows), format));
            return 0;
        }
        if (*sweep_cmd) {
            auto cfg = load_experiment(o);
            auto tasks = load_tasks(tasks_path);
            auto services = make_services(o, cfg);
            auto points = sweep(cfg.agent, axis, split_values(values), tasks, cfg.pricing, services, bench_options(o, cfg));
            if (!outcomes_dir.empty()) {
                fs::create_directories(outcomes_dir);
                for (const auto& p : points)
                    save_outcomes(fs::path(outcomes_dir) / fmt::format("{}={}.jsonl", axis, p.value), p.result.outcomes);
            }
            write_output(o.out, emit_report(sweep_rows(axis, points), format));
            return 0;
        }
        if (*report) {
            std::vector<ReportRow> rows;
            for (const auto& path : inputs) {
                auto more = label_rows(fs::path(path).stem().string(), aggregate_outcomes(load_outcomes(path)));
                rows.insert(rows.end(), more.begin(), more.end());
            }
            write_output(o.out, emit_report(rows, format));
            return 0;
        }
        if (*replay) {
            std::vector<fs::path> traces;
            for (const auto& in : inputs) {
                if (fs::is_directory(in)) {
                    for (const auto& e : fs::directory_iterator(in)) {
                        if (e.path().extension() == ".trace") traces.push_back(e.path());
                    }
                } else {
                    traces.emplace_back(in);
                }
            }
            std::sort(traces.begin(), traces.end());
            const auto templates = load_templates(o);
            std::vector<TaskOutcome> outcomes;
            int mismatches = 0;
            for (const auto& path : traces) {
                auto r = replay_one(read_trace(path), templates);
                if (r.trace->text() != read_gzip(path)) {
                    ++mismatches;
                    spdlog::error("replay of {} diverged from its trace", path.string());
                }
                if (!o.trace_dir.empty()) {
                    fs::create_directories(o.trace_dir);
                    r.trace->save(fs::path(o.trace_dir) / path.filename());
                }
                outcomes.push_back(std::move(r.outcome));
            }
            std::sort(outcomes.begin(), outcomes.end(),
                      [](const TaskOutcome& a, const TaskOutcome& b) { return a.task_id < b.task_id; });
            write_output(o.out, emit_report(label_rows("replay", aggregate_outcomes(outcomes)), format));
            std::cerr << fmt::format("replayed {} traces, {} diverged\n", traces.size(), mismatches);
            return mismatches == 0 ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
