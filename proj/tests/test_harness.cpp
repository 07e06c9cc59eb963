#include "effagents/harness.hpp"

#include "scenario.hpp"

#include <gtest/gtest.h>

#include <set>
#include <thread>

using namespace effagents;
using namespace testing_support;

TEST(LoadTasks, ThreeLineFile) {
    TempDir dir;
    write_file(dir.path() / "tasks.jsonl",
               R"({"task_id":"a","Level":1,"Question":"q1","Final answer":"x","file_name":""}
{"task_id":"b","Level":"2","Question":"q2","Final answer":"y","file_name":"notes.txt"}
{"task_id":"c","Level":3,"Question":"q3","Final answer":"z"}
)");
    const auto tasks = load_tasks(dir.path() / "tasks.jsonl");
    ASSERT_EQ(tasks.size(), 3u);
    EXPECT_EQ(tasks[0].level, 1);
    EXPECT_EQ(tasks[1].level, 2);
    EXPECT_EQ(tasks[2].level, 3);
    EXPECT_TRUE(tasks[0].attachments.empty());
    ASSERT_EQ(tasks[1].attachments.size(), 1u);
    EXPECT_EQ(fs::path(tasks[1].attachments[0]), dir.path() / "notes.txt");
}

TEST(LoadTasks, EmptyFileIsEmptyBenchmarkDownstream) {
    TempDir dir;
    write_file(dir.path() / "empty.jsonl", "");
    const auto tasks = load_tasks(dir.path() / "empty.jsonl");
    EXPECT_TRUE(tasks.empty());
    auto services = services_for(Script().backend(), dir.path());
    EXPECT_THROW(run_benchmark(tasks, small_config(), test_pricing(), services, {}), EmptyBenchmark);
}

TEST(LoadTasks, DuplicateIdsAndBadLines) {
    EXPECT_THROW(parse_tasks(R"({"task_id":"a","Level":1,"Question":"q","Final answer":"x"}
{"task_id":"a","Level":2,"Question":"q","Final answer":"y"})"),
                 DuplicateId);
    try {
        parse_tasks("{\"task_id\":\"a\",\"Level\":1,\"Question\":\"q\",\"Final answer\":\"x\"}\n\nnot json\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_tasks(R"({"task_id":"a","Level":4,"Question":"q","Final answer":"x"})"), ParseError);
    EXPECT_THROW(parse_tasks(R"({"task_id":"a","Question":"q","Final answer":"x"})"), ParseError);
    EXPECT_THROW(load_tasks("/nonexistent/tasks.jsonl"), std::runtime_error);
}

TEST(Outcomes, JsonRoundTrip) {
    TempDir dir;
    std::vector<TaskOutcome> outcomes{{"a", 1, true, "42", Money{123456789}, 900, TerminatedBy::FinalAnswer, ""},
                                      {"b", 3, false, "", Money{5}, 7, TerminatedBy::Aborted, "HTTP 500"}};
    save_outcomes(dir.path() / "o.jsonl", outcomes);
    EXPECT_EQ(load_outcomes(dir.path() / "o.jsonl"), outcomes);
    for (auto t : {TerminatedBy::FinalAnswer, TerminatedBy::StepBudget, TerminatedBy::Aborted, TerminatedBy::Timeout})
        EXPECT_EQ(parse_terminated_by(to_string(t)), t);
}

TEST(Benchmark, ScenarioAccuracyAndCostOfPass) {
    TempDir dir;
    write_scenario_fixtures(dir.path());
    auto services = services_for(scenario_script().backend(), dir.path());
    const auto result = run_benchmark(scenario_tasks(), small_config(), test_pricing(), services, {});
    ASSERT_EQ(result.outcomes.size(), 3u);
    EXPECT_TRUE(result.outcomes[0].solved);
    EXPECT_TRUE(result.outcomes[1].solved);
    EXPECT_FALSE(result.outcomes[2].solved);
    const auto& all = result.rows.front();
    EXPECT_EQ(all.scope, Scope::All);
    EXPECT_EQ(all.solved_count, 2);
    EXPECT_DOUBLE_EQ(all.accuracy, 2.0 / 3.0);
    EXPECT_EQ(Money::from_usd(all.cost_of_pass).micros(), Money::from_usd(all.mean_cost_usd * 1.5).micros());

    // Accounting closure against per-call arithmetic from the script.
    const auto p = test_pricing().at(kModel);
    auto call = [&](std::int64_t in, std::int64_t out) { return in * p.pico_in() + out * p.pico_out(); };
    const std::int64_t t1 = call(210, 12) + call(830, 41) + call(95, 17) + call(210, 12) + call(1290, 33);
    const std::int64_t t2 = call(210, 12) + call(777, 25);
    const std::int64_t t3 = call(210, 12) + call(901, 29);
    EXPECT_EQ(result.outcomes[0].cost.pico, t1);
    EXPECT_EQ(result.outcomes[1].cost.pico, t2);
    EXPECT_EQ(result.outcomes[2].cost.pico, t3);
    EXPECT_EQ(all.total_cost.pico, t1 + t2 + t3);
    EXPECT_EQ(Money::from_usd(all.mean_cost_usd * 3).micros(), Money{t1 + t2 + t3}.micros());
}

TEST(Benchmark, WorkerCountDoesNotChangeBytes) {
    TempDir dir;
    write_scenario_fixtures(dir.path());
    std::vector<std::string> reports;
    std::vector<std::map<std::string, std::string>> traces;
    for (int workers : {1, 4, 2}) {
        const auto trace_dir = dir.path() / ("traces" + std::to_string(workers));
        // Script consumption is per run id, so each execution gets a fresh backend.
        auto services = services_for(scenario_script().backend(), dir.path());
        BenchmarkOptions o;
        o.workers = workers;
        o.trace_dir = trace_dir;
        const auto r = run_benchmark(scenario_tasks(), small_config(), test_pricing(), services, o);
        reports.push_back(emit_report(label_rows("s", r.rows), ReportFormat::Csv));
        std::map<std::string, std::string> files;
        for (const auto& e : fs::directory_iterator(trace_dir)) files[e.path().filename().string()] = read_file(e.path());
        traces.push_back(std::move(files));
    }
    EXPECT_EQ(reports[0], reports[1]);
    EXPECT_EQ(reports[0], reports[2]);
    EXPECT_EQ(traces[0], traces[1]);
    EXPECT_EQ(traces[0], traces[2]);
    EXPECT_EQ(traces[0].size(), 3u);
    EXPECT_TRUE(traces[0].count(trace_file_name("t1", small_config())));
}

TEST(Benchmark, ReplayReproducesOutcomesReportAndTraces) {
    TempDir dir;
    write_scenario_fixtures(dir.path());
    auto services = services_for(scenario_script().backend(), dir.path());
    BenchmarkOptions o;
    o.trace_dir = dir.path() / "rec";
    const auto live = run_benchmark(scenario_tasks(), small_config(), test_pricing(), services, o);

    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(dir.path() / "rec")) paths.push_back(e.path());
    const auto replayed = replay_benchmark(paths, PromptTemplates::builtin(), dir.path() / "rep");
    EXPECT_EQ(replayed.outcomes, live.outcomes);
    EXPECT_EQ(render_csv(label_rows("s", replayed.rows)), render_csv(label_rows("s", live.rows)));
    for (const auto& p : paths) EXPECT_EQ(read_file(dir.path() / "rep" / p.filename()), read_file(p)) << p;
}

TEST(Benchmark, AllRunsFailingAborts) {
    TempDir dir;
    Script s;
    s.always(Purpose::Planner, "plan");
    auto services = services_for(s.backend(), dir.path());
    EXPECT_THROW(run_benchmark(scenario_tasks(), small_config(), test_pricing(), services, {}), BenchmarkAborted);
}

TEST(Benchmark, PartialFailureIsAnUnsolvedOutcome) {
    TempDir dir;
    auto script = scenario_script();
    script.entries.erase(std::remove_if(script.entries.begin(), script.entries.end(),
                                        [](const ScriptEntry& e) { return e.task == "t3"; }),
                         script.entries.end());
    auto services = services_for(script.backend(), dir.path());
    const auto r = run_benchmark(scenario_tasks(), small_config(), test_pricing(), services, {});
    EXPECT_EQ(r.outcomes[2].terminated_by, TerminatedBy::Aborted);
    EXPECT_FALSE(r.outcomes[2].solved);
    EXPECT_GT(r.outcomes[2].cost.pico, 0);  // the planner call was paid for
}

TEST(Benchmark, TimeoutIsGradedUnsolvedWithPartialCost) {
    struct SlowBackend : ChatBackend {
        std::shared_ptr<ScriptedBackend> inner;
        ChatResponse complete(const ChatRequest& r) override {
            std::this_thread::sleep_for(std::chrono::milliseconds(600));
            return inner->complete(r);
        }
    };
    TempDir dir;
    auto slow = std::make_shared<SlowBackend>();
    slow->inner = Script().always(Purpose::Planner, "plan").always(Purpose::Actor, "ACTION: page_up()").backend();
    auto services = services_for(slow, dir.path());
    BenchmarkOptions o;
    o.run_timeout = std::chrono::seconds(1);
    const auto r = run_benchmark({make_task("slow", 1, "q", "a"), make_task("fine", 1, "q", "a")}, small_config(),
                                 test_pricing(), services, o);
    for (const auto& out : r.outcomes) {
        EXPECT_EQ(out.terminated_by, TerminatedBy::Timeout);
        EXPECT_FALSE(out.solved);
        EXPECT_GT(out.cost.pico, 0);
    }
}

TEST(Sweep, ConfigsDifferOnlyOnTheAxis) {
    const auto base = default_config();
    const auto bon = sweep_configs(base, "bon_n", {"1", "2", "4"});
    ASSERT_EQ(bon.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        auto c = bon[i];
        EXPECT_EQ(c.bon_n, std::vector<int>({1, 2, 4})[i]);
        c.bon_n = base.bon_n;
        EXPECT_EQ(c, base);
    }
    const auto interval = sweep_configs(base, "plan_interval", {"1", "2", "4"});
    for (const auto& c : interval) EXPECT_EQ(c.max_steps, 12);
    const auto modes = sweep_configs(
        base, "memory_mode", {"Simple", "Summarized", "NoExtra", "ExtraSummarized", "ExtraFixed", "ExtraHybrid"});
    ASSERT_EQ(modes.size(), 6u);
    std::set<MemoryMode> distinct;
    for (auto c : modes) {
        distinct.insert(c.memory_mode);
        c.memory_mode = base.memory_mode;
        EXPECT_EQ(c, base);
    }
    EXPECT_EQ(distinct.size(), 6u);
}

TEST(Sweep, PurityForEveryAxis) {
    const auto base = efficient_agents_config();
    const std::map<std::string, std::vector<std::string>> values{
        {"max_steps", {"4", "16"}},        {"plan_interval", {"2"}},           {"source_set", {"Simple", "Multi"}},
        {"query_expansion_count", {"1"}}, {"bon_n", {"8"}},                   {"memory_mode", {"ExtraFixed"}},
        {"backbone_id", {"judge-model"}},  {"page_strategy", {"BrowserComplex"}}};
    for (const auto& axis : sweepable_axes()) {
        for (auto c : sweep_configs(base, axis, values.at(axis))) {
            if (axis == "max_steps") c.max_steps = base.max_steps;
            if (axis == "plan_interval") c.plan_interval = base.plan_interval;
            if (axis == "source_set") c.source_set = base.source_set;
            if (axis == "query_expansion_count") c.query_expansion_count = base.query_expansion_count;
            if (axis == "bon_n") c.bon_n = base.bon_n;
            if (axis == "memory_mode") c.memory_mode = base.memory_mode;
            if (axis == "backbone_id") c.backbone_id = base.backbone_id;
            if (axis == "page_strategy") c.page_strategy = base.page_strategy;
            EXPECT_EQ(c, base) << axis;
        }
    }
}

TEST(Sweep, UnknownAxisAndBadValues) {
    EXPECT_THROW(sweep_configs(default_config(), "temperature", {"1"}), UnknownAxis);
    EXPECT_THROW(sweep_configs(default_config(), "bon_n", {"two"}), std::exception);
}

TEST(Sweep, RunsOneBenchmarkPerValueAndLabelsRows) {
    TempDir dir;
    write_scenario_fixtures(dir.path());
    auto script = scenario_script();
    script.add(Purpose::Actor, final_answer("41"), {}, 100, 20, false, "t1");  // forced answer
    auto services = services_for(script.backend(), dir.path());
    const auto points =
        sweep(small_config(), "max_steps", {"1", "3"}, scenario_tasks(), test_pricing(), services, BenchmarkOptions{});
    ASSERT_EQ(points.size(), 2u);
    // With one step t1 cannot search and answer; it is forced to answer.
    EXPECT_EQ(points[0].result.outcomes[0].terminated_by, TerminatedBy::StepBudget);
    EXPECT_EQ(points[0].result.outcomes[0].final_answer, "41");
    EXPECT_EQ(points[1].result.rows.front().solved_count, 2);
    const auto rows = sweep_rows("max_steps", points);
    EXPECT_EQ(rows.front().label, "max_steps=1");
    EXPECT_EQ(rows.back().label, "max_steps=3");
}
