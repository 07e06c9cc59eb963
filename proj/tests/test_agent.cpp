#include "effagents/agent.hpp"
#include "effagents/harness.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace effagents;
using namespace testing_support;

namespace {

RunResult run(const Script& script, const AgentConfig& cfg, const fs::path& fixtures,
              const Task& task = make_task("t1", 1, "What is six times seven?", "42")) {
    auto services = services_for(script.backend(), fixtures);
    return run_one(task, cfg, test_pricing(), services, std::chrono::seconds(0));
}

std::vector<json> events_of(const TraceWriter& trace, const std::string& type) {
    std::vector<json> out;
    for (const auto& line : trace.lines()) {
        auto j = json::parse(line);
        if (j.value("type", "") == type) out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

TEST(ShouldReplan, ModuloRule) {
    EXPECT_TRUE(should_replan(0, 1));
    EXPECT_TRUE(should_replan(0, 7));
    EXPECT_TRUE(should_replan(3, 1));
    EXPECT_FALSE(should_replan(5, 4));
    EXPECT_TRUE(should_replan(8, 4));
    EXPECT_THROW(should_replan(1, 0), std::invalid_argument);
}

TEST(RunTask, AnswerAtStepZero) {
    TempDir dir;
    Script s;
    s.add(Purpose::Planner, "1. search X\n2. answer").add(Purpose::Actor, final_answer("42"));
    const auto r = run(s, small_config(), dir.path());
    ASSERT_EQ(r.record.plans.size(), 1u);
    EXPECT_EQ(r.record.plans[0], (Plan{"1. search X\n2. answer", 0}));
    EXPECT_EQ(r.record.steps.size(), 1u);
    EXPECT_EQ(r.record.terminated_by, TerminatedBy::FinalAnswer);
    EXPECT_EQ(r.record.final_answer, "42");
    EXPECT_TRUE(r.record.steps[0].observation.empty());
    EXPECT_TRUE(r.outcome.solved);
    EXPECT_EQ(r.record.ledger.count(Purpose::Planner), 1u);
    EXPECT_EQ(r.outcome.cost, r.record.ledger.totals().cost);
    EXPECT_EQ(r.outcome.tokens, r.record.ledger.totals().tokens());
}

TEST(RunTask, NeverAnswersWithIntervalFour) {
    TempDir dir;
    Script s;
    s.always(Purpose::Planner, "plan").always(Purpose::Actor, "ACTION: page_down()");
    auto cfg = default_config();
    cfg.max_steps = 12;
    cfg.plan_interval = 4;
    const auto r = run(s, cfg, dir.path());
    ASSERT_EQ(r.record.plans.size(), 3u);
    EXPECT_EQ(r.record.plans[0].created_at_step, 0);
    EXPECT_EQ(r.record.plans[1].created_at_step, 4);
    EXPECT_EQ(r.record.plans[2].created_at_step, 8);
    EXPECT_EQ(r.record.steps.size(), 12u);
    EXPECT_EQ(r.record.terminated_by, TerminatedBy::StepBudget);
    // One forced-answer call after the budget, at index 12.
    EXPECT_EQ(r.record.ledger.count(Purpose::Actor, 12), 1u);
    EXPECT_EQ(events_of(*r.trace, "forced_answer").size(), 1u);
}

TEST(RunTask, AnswerAtStepFiveWithIntervalTwo) {
    TempDir dir;
    Script s;
    s.always(Purpose::Planner, "plan")
        .add(Purpose::Actor, final_answer("42"), at_step(5))
        .always(Purpose::Actor, "ACTION: page_up()");
    auto cfg = default_config();
    cfg.plan_interval = 2;
    const auto r = run(s, cfg, dir.path());
    EXPECT_EQ(r.record.steps.size(), 6u);
    ASSERT_EQ(r.record.plans.size(), 3u);
    const auto plans = events_of(*r.trace, "plan");
    ASSERT_EQ(plans.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(plans[i]["step"], 2 * i);
}

TEST(RunTask, PlanCadenceProperty) {
    std::mt19937 rng(44);
    TempDir dir;
    for (int trial = 0; trial < 60; ++trial) {
        auto cfg = default_config();
        cfg.max_steps = 1 + static_cast<int>(rng() % 16);
        cfg.plan_interval = 1 + static_cast<int>(rng() % 6);
        const int stop = static_cast<int>(rng() % 20);
        Script s;
        s.always(Purpose::Planner, "plan")
            .add(Purpose::Actor, final_answer("x"), at_step(stop))
            .always(Purpose::Actor, "ACTION: page_up()");
        const auto r = run(s, cfg, dir.path());
        const int executed = std::min(stop + 1, cfg.max_steps);
        ASSERT_EQ(static_cast<int>(r.record.steps.size()), executed);
        const int want = (executed + cfg.plan_interval - 1) / cfg.plan_interval;
        ASSERT_EQ(static_cast<int>(r.record.plans.size()), want);
        for (int i = 0; i < want; ++i) EXPECT_EQ(r.record.plans[i].created_at_step, i * cfg.plan_interval);
    }
}

TEST(ReactStep, SearchObservationContainsFixtureResults) {
    TempDir dir;
    write_search_fixture(dir.path(), "google", "six times seven", {{"Math", "https://m.org/", "six times seven is 42"}});
    Script s;
    s.always(Purpose::Planner, "plan")
        .add(Purpose::Actor, "Let me search.\nACTION: search(query=\"6*7\")", at_step(0))
        .add(Purpose::QueryExpansion, "1. six times seven\n2. 6 x 7")
        .add(Purpose::Actor, final_answer("42"), at_step(1));
    const auto r = run(s, small_config(), dir.path());
    ASSERT_EQ(r.record.steps.size(), 2u);
    EXPECT_NE(r.record.steps[0].observation.find("six times seven is 42"), std::string::npos);
    EXPECT_FALSE(r.record.steps[0].error);
    EXPECT_EQ(r.record.ledger.count(Purpose::QueryExpansion, 0), 1u);
    EXPECT_TRUE(r.outcome.solved);
}

TEST(ReactStep, MalformedOutputGetsACorrectiveObservation) {
    TempDir dir;
    Script s;
    s.always(Purpose::Planner, "plan")
        .add(Purpose::Actor, "I think the answer is 42 but forgot the format.", at_step(0))
        .add(Purpose::Actor, final_answer("42"), at_step(1));
    const auto r = run(s, small_config(), dir.path());
    ASSERT_EQ(r.record.steps.size(), 2u);
    EXPECT_TRUE(r.record.steps[0].error);
    EXPECT_FALSE(r.record.steps[0].action);
    EXPECT_NE(r.record.steps[0].observation.find("Invalid action format"), std::string::npos);
    EXPECT_EQ(r.record.terminated_by, TerminatedBy::FinalAnswer);
    // The next prompt shows the correction.
    const auto second = events_of(*r.trace, "request");
    bool seen = false;
    for (const auto& e : second) {
        if (e["request"]["purpose"] == "actor" && e["step"] == 1)
            seen = e["request"]["messages"].back()["content"].get<std::string>().find("Invalid action format") !=
                   std::string::npos;
    }
    EXPECT_TRUE(seen);
}

TEST(RunTask, BackendFailureAbortsWithPartialCost) {
    TempDir dir;
    Script s;
    s.add(Purpose::Planner, "plan").fail(Purpose::Actor, BackendErrorKind::Transport);
    const auto r = run(s, small_config(), dir.path());
    EXPECT_EQ(r.record.terminated_by, TerminatedBy::Aborted);
    EXPECT_FALSE(r.outcome.solved);
    EXPECT_GT(r.outcome.cost.pico, 0);
    EXPECT_EQ(r.record.ledger.entries().size(), 2u);
    EXPECT_FALSE(r.record.ledger.entries()[1].error.empty());
}

TEST(RunTask, EmptyPlanAborts) {
    TempDir dir;
    Script s;
    s.add(Purpose::Planner, "   ");
    const auto r = run(s, small_config(), dir.path());
    EXPECT_EQ(r.record.terminated_by, TerminatedBy::Aborted);
    EXPECT_NE(r.record.error.find("empty plan"), std::string::npos);
}

TEST(BestOfN, AccountingPerStep) {
    TempDir dir;
    for (int n : {1, 2, 4}) {
        Script s;
        s.always(Purpose::Planner, "plan")
            .always(Purpose::Actor, final_answer("42"), at_step(2))
            .always(Purpose::Actor, "ACTION: search(query=\"x\")")
            .always(Purpose::QueryExpansion, "1. x\n2. y")
            .always(Purpose::Prm, R"({"analysis":"fine","score":5})");
        auto cfg = small_config();
        cfg.bon_n = n;
        const auto r = run(s, cfg, dir.path());
        ASSERT_EQ(r.record.steps.size(), 3u) << n;
        EXPECT_EQ(r.record.terminated_by, TerminatedBy::FinalAnswer);
        for (int step = 0; step < 3; ++step) {
            EXPECT_EQ(r.record.ledger.count(Purpose::Actor, step), static_cast<std::size_t>(n)) << n;
            EXPECT_EQ(r.record.ledger.count(Purpose::Prm, step), n == 1 ? 0u : static_cast<std::size_t>(n)) << n;
        }
    }
}

TEST(BestOfN, PicksTheHigherScoredCandidate) {
    TempDir dir;
    Script s;
    s.always(Purpose::Planner, "plan")
        .add(Purpose::Actor, "A\nACTION: final_answer(answer=\"wrong\")", at_step(0))
        .add(Purpose::Actor, "B\nACTION: final_answer(answer=\"42\")", at_step(0))
        .add(Purpose::Prm, R"({"analysis":"meh","score":3})")
        .add(Purpose::Prm, R"({"analysis":"good","score":9})");
    auto cfg = small_config();
    cfg.bon_n = 2;
    const auto r = run(s, cfg, dir.path());
    EXPECT_EQ(r.record.final_answer, "42");
    const auto bon = events_of(*r.trace, "bon");
    ASSERT_EQ(bon.size(), 1u);
}

TEST(BestOfN, ListModeMakesOneJudgeCall) {
    TempDir dir;
    Script s;
    s.always(Purpose::Planner, "plan")
        .add(Purpose::Actor, "A\nACTION: final_answer(answer=\"1\")", at_step(0))
        .add(Purpose::Actor, "B\nACTION: final_answer(answer=\"2\")", at_step(0))
        .add(Purpose::Actor, "C\nACTION: final_answer(answer=\"42\")", at_step(0))
        .add(Purpose::Prm, R"({"index":2,"analysis":"third"})");
    auto cfg = small_config();
    cfg.bon_n = 3;
    cfg.prm_mode = PrmMode::List;
    const auto r = run(s, cfg, dir.path());
    EXPECT_EQ(r.record.final_answer, "42");
    EXPECT_EQ(r.record.ledger.count(Purpose::Prm), 1u);
}

TEST(Memory, SimpleAndNoExtraRunsHaveNoMemoryEntries) {
    TempDir dir;
    for (auto mode : {MemoryMode::Simple, MemoryMode::NoExtra, MemoryMode::Summarized, MemoryMode::ExtraFixed}) {
        Script s;
        s.always(Purpose::Planner, "plan")
            .always(Purpose::Actor, final_answer("42"), at_step(3))
            .always(Purpose::Actor, "SENTINEL-REASONING-7781\nACTION: page_down()")
            .always(Purpose::Memory, "memo");
        auto cfg = small_config();
        cfg.memory_mode = mode;
        const auto r = run(s, cfg, dir.path());
        ASSERT_EQ(r.record.steps.size(), 4u);
        const auto memory_calls = r.record.ledger.count(Purpose::Memory);
        if (mode == MemoryMode::Simple || mode == MemoryMode::NoExtra) {
            EXPECT_EQ(memory_calls, 0u);
            EXPECT_TRUE(events_of(*r.trace, "embed").empty());
        } else {
            EXPECT_EQ(memory_calls, 3u);
        }
        if (mode == MemoryMode::Simple) {
            for (const auto& e : events_of(*r.trace, "request")) {
                for (const auto& m : e["request"]["messages"])
                    EXPECT_EQ(m["content"].get<std::string>().find("SENTINEL-REASONING-7781"), std::string::npos);
            }
        }
    }
}

TEST(RunTask, TraceHasEveryRequestOnceInOrder) {
    TempDir dir;
    Script s;
    s.always(Purpose::Planner, "plan")
        .add(Purpose::Actor, "ACTION: search(query=\"q\")", at_step(0))
        .always(Purpose::QueryExpansion, "1. q")
        .add(Purpose::Actor, final_answer("42"), at_step(1));
    auto backend = s.backend();
    auto services = services_for(backend, dir.path());
    const auto r = run_one(make_task("t1", 1, "Q", "42"), small_config(), test_pricing(), services, std::chrono::seconds(0));
    const auto requests = events_of(*r.trace, "request");
    const auto received = backend->requests();
    ASSERT_EQ(requests.size(), received.size());
    for (std::size_t i = 0; i < received.size(); ++i) {
        EXPECT_EQ(requests[i]["seq"], static_cast<int>(i));
        EXPECT_EQ(request_from_json(requests[i]["request"]), received[i]);
    }
    EXPECT_EQ(r.record.ledger.entries().size(), received.size());
}
