#include "effagents/harness.hpp"

#include "effagents/grade.hpp"
#include "effagents/session.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace effagents {

namespace fs = std::filesystem;

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error(fmt::format("line {}: {}", line, message)), line_(line) {}

DuplicateId::DuplicateId(const std::string& task_id)
    : std::runtime_error(fmt::format("duplicate task_id '{}'", task_id)) {}

UnknownAxis::UnknownAxis(const std::string& axis)
    : std::invalid_argument(fmt::format("'{}' is not a sweepable field", axis)) {}

namespace {

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

int parse_level(const json& v, std::size_t line) {
    int level = 0;
    if (v.is_number_integer()) {
        level = v.get<int>();
    } else if (v.is_string()) {
        const auto s = v.get<std::string>();
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), level);
        if (ec != std::errc{} || p != s.data() + s.size()) level = 0;
    }
    if (level < 1 || level > 3) throw ParseError(line, "Level must be 1, 2 or 3");
    return level;
}

int parse_int_value(const std::string& axis, const std::string& value) {
    int v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw std::invalid_argument(fmt::format("{}: '{}' is not an integer", axis, value));
    return v;
}

std::string sanitize(std::string_view s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out;
}

struct RunEnvironment {
    std::shared_ptr<ChatBackend> backend;
    ProviderMap providers;
    std::shared_ptr<PageFetcher> fetcher;
    std::shared_ptr<Embedder> embedder;
    ToolSettings tools;
};

RunResult execute(const Task& task, const AgentConfig& cfg, const PricingTable& pricing, const RunEnvironment& env,
                  const PromptTemplates& templates, std::chrono::seconds timeout) {
    const auto run_id = run_id_for(task.task_id, cfg);
    auto trace = std::make_shared<TraceWriter>();
    trace->emit(trace_header(run_id, task.task_id, cfg, pricing));
    trace->emit({{"type", "run"},
                 {"task", to_json(task)},
                 {"embedding_dimension", env.embedder ? env.embedder->dimension() : 0},
                 {"viewport_chars", env.tools.viewport_chars},
                 {"crawler_max_chars", env.tools.crawler_max_chars}});

    ProviderMap traced;
    for (const auto& [id, provider] : env.providers)
        traced[id] = std::make_shared<TracingSearchProvider>(provider, id, trace.get());
    auto fetcher = std::make_shared<TracingPageFetcher>(env.fetcher, trace.get());
    std::shared_ptr<Embedder> embedder;
    if (env.embedder) embedder = std::make_shared<TracingEmbedder>(env.embedder, trace.get());

    RunLedger ledger(run_id);
    LlmSession llm(*env.backend, pricing, ledger, trace.get(), run_id, task.task_id);
    if (timeout.count() > 0) llm.set_deadline(std::chrono::steady_clock::now() + timeout);

    RunResult result;
    try {
        Toolbox tools(cfg, env.tools, std::move(traced), fetcher, task.attachments, llm, templates);
        MemoryManager memory(cfg, llm, embedder, templates);
        AgentServices services{llm, tools, memory, templates};
        result.record = run_task(task, cfg, services);
    } catch (const std::exception& e) {
        // Construction failures; run_task itself never throws.
        result.record.task_id = task.task_id;
        result.record.config = cfg;
        result.record.terminated_by = TerminatedBy::Aborted;
        result.record.error = e.what();
        result.record.ledger = ledger;
    }
    result.outcome = grade_record(task, result.record);
    trace->emit({{"type", "outcome"}, {"outcome", to_json(result.outcome)}});
    result.trace = std::move(trace);
    return result;
}

}  // namespace

std::vector<Task> parse_tasks(std::string_view text, const fs::path& base_dir) {
    std::vector<Task> tasks;
    std::set<std::string> ids;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(number, e.what());
        }
        if (!j.is_object()) throw ParseError(number, "record is not an object");
        for (const char* key : {"task_id", "Level", "Question", "Final answer"}) {
            if (!j.contains(key)) throw ParseError(number, fmt::format("missing field '{}'", key));
        }
        Task t;
        t.task_id = scalar_text(j.at("task_id"));
        if (t.task_id.empty()) throw ParseError(number, "empty task_id");
        t.level = parse_level(j.at("Level"), number);
        t.question = scalar_text(j.at("Question"));
        t.expected_answer = scalar_text(j.at("Final answer"));
        if (auto it = j.find("file_name"); it != j.end()) {
            auto name = scalar_text(*it);
            if (!name.empty()) t.attachments.push_back((base_dir.empty() ? fs::path(name) : base_dir / name).string());
        }
        if (!ids.insert(t.task_id).second) throw DuplicateId(t.task_id);
        tasks.push_back(std::move(t));
    }
    return tasks;
}

std::vector<Task> load_tasks(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open task file {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_tasks(ss.str(), path.parent_path());
}

TaskOutcome grade_record(const Task& task, const TaskRunRecord& record) {
    TaskOutcome o;
    o.task_id = task.task_id;
    o.level = task.level;
    o.final_answer = record.final_answer;
    o.terminated_by = record.terminated_by;
    o.error = record.error;
    const bool finished =
        record.terminated_by == TerminatedBy::FinalAnswer || record.terminated_by == TerminatedBy::StepBudget;
    o.solved = finished && grade(record.final_answer, task.expected_answer);
    o.cost = record.ledger.totals().cost;
    o.tokens = record.ledger.totals().tokens();
    return o;
}

std::vector<AggregateRow> aggregate_outcomes(const std::vector<TaskOutcome>& outcomes) {
    std::vector<OutcomeSample> samples;
    samples.reserve(outcomes.size());
    for (const auto& o : outcomes) samples.push_back({o.level, o.solved, o.cost, o.tokens});
    return aggregate(samples);
}

json to_json(const TaskOutcome& o) {
    return {{"task_id", o.task_id},
            {"level", o.level},
            {"solved", o.solved},
            {"final_answer", o.final_answer},
            {"cost_pico", o.cost.pico},
            {"tokens", o.tokens},
            {"terminated_by", to_string(o.terminated_by)},
            {"error", o.error}};
}

TaskOutcome outcome_from_json(const json& j) {
    TaskOutcome o;
    o.task_id = j.at("task_id").get<std::string>();
    o.level = j.at("level").get<int>();
    o.solved = j.at("solved").get<bool>();
    o.final_answer = j.at("final_answer").get<std::string>();
    o.cost.pico = j.at("cost_pico").get<std::int64_t>();
    o.tokens = j.at("tokens").get<std::int64_t>();
    o.terminated_by = parse_terminated_by(j.at("terminated_by").get<std::string>());
    o.error = j.value("error", "");
    return o;
}

json to_json(const Task& t) {
    return {{"task_id", t.task_id},
            {"level", t.level},
            {"question", t.question},
            {"expected_answer", t.expected_answer},
            {"attachments", t.attachments}};
}

Task task_from_json(const json& j) {
    return {j.at("task_id").get<std::string>(), j.at("level").get<int>(), j.at("question").get<std::string>(),
            j.at("expected_answer").get<std::string>(), j.at("attachments").get<std::vector<std::string>>()};
}

void save_outcomes(const fs::path& path, const std::vector<TaskOutcome>& outcomes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    for (const auto& o : outcomes) out << to_json(o).dump() << '\n';
}

std::vector<TaskOutcome> load_outcomes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    std::vector<TaskOutcome> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(outcome_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(number, e.what());
        }
    }
    return out;
}

Services fixture_services(std::shared_ptr<ChatBackend> backend, const fs::path& fixture_dir,
                          const ExperimentConfig& cfg) {
    Services s;
    s.backend = std::move(backend);
    for (const auto& id : providers_for(SourceSet::Multi))
        s.providers[id] = std::make_shared<FixtureSearchProvider>(fixture_dir, id);
    s.fetcher = std::make_shared<FixturePageFetcher>(fixture_dir);
    s.embedder = std::make_shared<HashEmbedder>(cfg.embedding.dimension);
    s.tools = cfg.tools;
    s.tools.politeness_ms = 0;
    return s;
}

Services live_services(std::shared_ptr<ChatBackend> backend, const ExperimentConfig& cfg) {
    Services s;
    s.backend = std::move(backend);
    for (const auto& id : providers_for(SourceSet::Multi)) {
        if (auto it = cfg.search.find(id); it != cfg.search.end()) {
            s.providers[id] = std::make_shared<HttpSearchProvider>(id, it->second, cfg.tools.user_agent);
        } else {
            s.providers[id] = std::make_shared<UnavailableSearchProvider>(id);
        }
    }
    s.fetcher = std::make_shared<HttpPageFetcher>(cfg.tools);
    s.embedder = make_embedder(cfg.embedding);
    s.tools = cfg.tools;
    return s;
}

std::string run_id_for(const std::string& task_id, const AgentConfig& cfg) {
    return task_id + "." + config_hash(cfg);
}

std::string trace_file_name(const std::string& task_id, const AgentConfig& cfg) {
    return sanitize(task_id) + "." + config_hash(cfg) + ".trace";
}

RunResult run_one(const Task& task, const AgentConfig& cfg, const PricingTable& pricing, const Services& services,
                  std::chrono::seconds timeout) {
    RunEnvironment env{services.backend, services.providers, services.fetcher, services.embedder, services.tools};
    return execute(task, cfg, pricing, env, services.templates, timeout);
}

RunResult replay_one(const TraceFile& trace, const PromptTemplates& templates) {
    if (trace.events.empty() || trace.events.front().value("type", "") != "run")
        throw std::runtime_error("trace has no run record");
    const auto& run = trace.events.front();
    const auto cfg = config_from_header(trace.header);
    const auto pricing = pricing_from_header(trace.header);
    const auto task = task_from_json(run.at("task"));

    auto replay = std::make_shared<RunReplay>(trace);
    RunEnvironment env;
    env.backend = std::make_shared<ReplayBackend>(replay);
    for (const auto& id : providers_for(SourceSet::Multi))
        env.providers[id] = std::make_shared<ReplaySearchProvider>(replay, id);
    env.fetcher = std::make_shared<ReplayPageFetcher>(replay);
    const int dim = run.value("embedding_dimension", 0);
    if (dim > 0) env.embedder = std::make_shared<ReplayEmbedder>(replay, dim);
    env.tools.viewport_chars = run.at("viewport_chars").get<int>();
    env.tools.crawler_max_chars = run.at("crawler_max_chars").get<int>();

    auto result = execute(task, cfg, pricing, env, templates, std::chrono::seconds(0));
    if (!replay->exhausted()) spdlog::warn("replay of {} left recorded events unconsumed", task.task_id);
    return result;
}

namespace {

BenchmarkResult finish(std::vector<TaskOutcome> outcomes) {
    std::sort(outcomes.begin(), outcomes.end(),
              [](const TaskOutcome& a, const TaskOutcome& b) { return a.task_id < b.task_id; });
    BenchmarkResult r;
    r.rows = aggregate_outcomes(outcomes);
    r.outcomes = std::move(outcomes);
    return r;
}

template <typename Job>
std::vector<RunResult> run_pool(std::size_t count, int workers, Job job) {
    std::vector<RunResult> results(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) results[i] = job(i);
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    return results;
}

}  // namespace

BenchmarkResult run_benchmark(const std::vector<Task>& tasks, const AgentConfig& cfg, const PricingTable& pricing,
                              const Services& services, const BenchmarkOptions& options) {
    require_valid(cfg, pricing);
    if (!pricing.contains(cfg.judge_model()) && cfg.bon_n > 1) throw MissingPricing(cfg.judge_model());
    if (tasks.empty()) throw EmptyBenchmark();
    if (options.trace_dir) fs::create_directories(*options.trace_dir);

    auto results = run_pool(tasks.size(), options.workers, [&](std::size_t i) {
        auto r = run_one(tasks[i], cfg, pricing, services, options.run_timeout);
        if (options.trace_dir) r.trace->save(*options.trace_dir / trace_file_name(tasks[i].task_id, cfg));
        return r;
    });

    std::vector<TaskOutcome> outcomes;
    std::size_t aborted = 0;
    std::string failures;
    for (auto& r : results) {
        if (r.outcome.terminated_by == TerminatedBy::Aborted) {
            ++aborted;
            if (aborted <= 5) failures += fmt::format("\n  {}: {}", r.outcome.task_id, r.outcome.error);
        }
        outcomes.push_back(std::move(r.outcome));
    }
    if (aborted == outcomes.size())
        throw BenchmarkAborted(fmt::format("all {} runs failed; first failures:{}", aborted, failures));
    return finish(std::move(outcomes));
}

BenchmarkResult replay_benchmark(const std::vector<fs::path>& traces, const PromptTemplates& templates,
                                 const std::optional<fs::path>& trace_dir) {
    auto sorted = traces;
    std::sort(sorted.begin(), sorted.end());
    if (trace_dir) fs::create_directories(*trace_dir);
    std::vector<TaskOutcome> outcomes;
    for (const auto& path : sorted) {
        auto r = replay_one(read_trace(path), templates);
        if (trace_dir) r.trace->save(*trace_dir / path.filename());
        outcomes.push_back(std::move(r.outcome));
    }
    if (outcomes.empty()) throw EmptyBenchmark();
    return finish(std::move(outcomes));
}

const std::vector<std::string>& sweepable_axes() {
    static const std::vector<std::string> axes{"max_steps", "plan_interval", "source_set", "query_expansion_count",
                                               "bon_n",     "memory_mode",   "backbone_id", "page_strategy"};
    return axes;
}

std::vector<AgentConfig> sweep_configs(const AgentConfig& base, const std::string& axis,
                                       const std::vector<std::string>& values) {
    const auto& axes = sweepable_axes();
    if (std::find(axes.begin(), axes.end(), axis) == axes.end()) throw UnknownAxis(axis);
    std::vector<AgentConfig> out;
    for (const auto& v : values) {
        AgentConfig c = base;
        if (axis == "max_steps") c.max_steps = parse_int_value(axis, v);
        else if (axis == "plan_interval") c.plan_interval = parse_int_value(axis, v);
        else if (axis == "source_set") c.source_set = parse_source_set(v);
        else if (axis == "query_expansion_count") c.query_expansion_count = parse_int_value(axis, v);
        else if (axis == "bon_n") c.bon_n = parse_int_value(axis, v);
        else if (axis == "memory_mode") c.memory_mode = parse_memory_mode(v);
        else if (axis == "backbone_id") c.backbone_id = v;
        else if (axis == "page_strategy") c.page_strategy = parse_page_strategy(v);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<SweepPoint> sweep(const AgentConfig& base, const std::string& axis, const std::vector<std::string>& values,
                              const std::vector<Task>& tasks, const PricingTable& pricing, const Services& services,
                              const BenchmarkOptions& options) {
    auto configs = sweep_configs(base, axis, values);
    for (const auto& c : configs) require_valid(c, pricing);
    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < configs.size(); ++i)
        points.push_back({values[i], configs[i], run_benchmark(tasks, configs[i], pricing, services, options)});
    return points;
}

std::vector<ReportRow> label_rows(const std::string& label, const std::vector<AggregateRow>& rows) {
    std::vector<ReportRow> out;
    for (const auto& r : rows) out.push_back({label, r});
    return out;
}

std::vector<ReportRow> sweep_rows(const std::string& axis, const std::vector<SweepPoint>& points) {
    std::vector<ReportRow> out;
    for (const auto& p : points) {
        auto rows = label_rows(fmt::format("{}={}", axis, p.value), p.result.rows);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

}  // namespace effagents
