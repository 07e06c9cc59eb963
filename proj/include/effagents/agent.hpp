#pragma once

#include "effagents/config.hpp"
#include "effagents/ledger.hpp"
#include "effagents/memory.hpp"
#include "effagents/session.hpp"
#include "effagents/step.hpp"
#include "effagents/templates.hpp"
#include "effagents/tools.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace effagents {

struct Task {
    std::string task_id;
    int level = 1;
    std::string question;
    std::string expected_answer;
    std::vector<std::string> attachments;
    bool operator==(const Task&) const = default;
};

struct Plan {
    std::string text;
    int created_at_step = 0;
    bool operator==(const Plan&) const = default;
};

enum class TerminatedBy { FinalAnswer, StepBudget, Aborted, Timeout };
std::string_view to_string(TerminatedBy t);
TerminatedBy parse_terminated_by(std::string_view s);

struct TaskRunRecord {
    std::string task_id;
    AgentConfig config;
    std::vector<Plan> plans;
    std::vector<Step> steps;
    std::string final_answer;
    TerminatedBy terminated_by = TerminatedBy::FinalAnswer;
    // Why an aborted or timed-out run stopped.
    std::string error;
    RunLedger ledger;
};

class PlanEmpty : public std::runtime_error {
public:
    PlanEmpty() : std::runtime_error("planner returned an empty plan") {}
};

/// The per-run collaborators of the loop.
struct AgentServices {
    LlmSession& llm;
    Toolbox& tools;
    MemoryManager& memory;
    const PromptTemplates& templates;
};

struct AgentState {
    const Task& task;
    const AgentConfig& cfg;
    std::vector<Plan> plans;
    std::vector<Step> steps;
};

// Plans precede steps 0, I, 2I, ...
bool should_replan(int step_index, int plan_interval);

/// One planner call. The first plan sees only the task; later ones also see
/// the previous plan and the memory-rendered history.
Plan generate_plan(const AgentState& state, AgentServices& services, int step_index);

/// One ReAct iteration at index state.steps.size(). Best-of-N applies when
/// cfg.bon_n > 1. Unparsable replies and tool failures become observations.
Step react_step(const AgentState& state, AgentServices& services);

/// Plan/act loop up to cfg.max_steps, then one forced-answer call if no
/// final answer was given. Backend failures and timeouts end the run early
/// with terminated_by Aborted/Timeout; the partial ledger is kept.
TaskRunRecord run_task(const Task& task, const AgentConfig& cfg, AgentServices& services);

std::string render_attachments(const std::vector<std::string>& attachments);

}  // namespace effagents
