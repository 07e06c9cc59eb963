#include "effagents/agent.hpp"

#include "effagents/tts.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>

namespace effagents {

std::string_view to_string(TerminatedBy t) {
    switch (t) {
        case TerminatedBy::FinalAnswer: return "final_answer";
        case TerminatedBy::StepBudget: return "step_budget";
        case TerminatedBy::Aborted: return "aborted";
        case TerminatedBy::Timeout: return "timeout";
    }
    return "aborted";
}

TerminatedBy parse_terminated_by(std::string_view s) {
    for (auto t : {TerminatedBy::FinalAnswer, TerminatedBy::StepBudget, TerminatedBy::Aborted, TerminatedBy::Timeout}) {
        if (to_string(t) == s) return t;
    }
    throw std::invalid_argument(fmt::format("unknown termination '{}'", s));
}

bool should_replan(int step_index, int plan_interval) {
    if (plan_interval < 1) throw std::invalid_argument("plan_interval must be positive");
    return step_index % plan_interval == 0;
}

std::string render_attachments(const std::vector<std::string>& attachments) {
    if (attachments.empty()) return {};
    std::string out = "Attached files:";
    for (const auto& a : attachments) out += "\n- " + std::filesystem::path(a).filename().string();
    return out + "\n";
}

namespace {

const std::string& current_plan(const AgentState& state) {
    static const std::string none = "No plan yet.";
    return state.plans.empty() ? none : state.plans.back().text;
}

std::string history_for_judge(const AgentState& state) {
    std::string out = fmt::format("Task: {}\nPlan:\n{}", state.task.question, current_plan(state));
    for (const auto& s : state.steps) out += "\n\n" + render_step_full(s);
    return out;
}

std::string corrective_observation(const std::string& why) {
    return fmt::format(
        "Invalid action format: {}. End your reply with exactly one line such as ACTION: search(query=\"...\") "
        "or ACTION: final_answer(answer=\"...\").",
        why);
}

Candidate choose_candidate(const AgentState& state, AgentServices& services, const std::vector<Message>& prompt,
                           int index) {
    const auto& cfg = state.cfg;
    auto candidates = sample_candidates(prompt, cfg.bon_n, cfg, services.llm, index);
    if (cfg.bon_n == 1) return candidates.front();

    const auto history = history_for_judge(state);
    json bon{{"type", "bon"}, {"step", index}, {"mode", to_string(cfg.prm_mode)}};
    std::size_t chosen = 0;
    if (cfg.prm_mode == PrmMode::Score) {
        std::vector<PrmVerdict> verdicts;
        for (const auto& c : candidates) {
            verdicts.push_back(c.failed ? PrmVerdict{"sample failed", 0, true}
                                        : judge_score(c, index, history, services.llm, cfg.judge_model(),
                                                      services.templates, index));
        }
        chosen = static_cast<std::size_t>(select_best(candidates, verdicts).index);
        json scores = json::array();
        for (const auto& v : verdicts) scores.push_back(v.score);
        bon["scores"] = std::move(scores);
    } else {
        std::vector<std::size_t> alive;
        std::vector<std::string> rendered;
        for (const auto& c : candidates) {
            if (c.failed) continue;
            alive.push_back(static_cast<std::size_t>(c.index));
            rendered.push_back(render_candidate(c));
        }
        if (alive.size() == 1) {
            chosen = alive.front();
        } else {
            auto verdict = judge_list(rendered, history, services.llm, cfg.judge_model(), services.templates, index);
            chosen = alive.at(static_cast<std::size_t>(verdict.index));
        }
    }
    bon["chosen"] = chosen;
    services.llm.emit(std::move(bon));
    return candidates.at(chosen);
}

}  // namespace

Plan generate_plan(const AgentState& state, AgentServices& services, int step_index) {
    std::string prompt;
    if (state.plans.empty()) {
        prompt = services.templates.render("planner_initial", {{"task", state.task.question},
                                                               {"attachments", render_attachments(state.task.attachments)},
                                                               {"tools", services.tools.describe()}});
    } else {
        const auto& previous = state.plans.back().text;
        prompt = services.templates.render(
            "planner_update", {{"task", state.task.question},
                               {"attachments", render_attachments(state.task.attachments)},
                               {"previous_plan", previous},
                               {"context", join_context(services.memory.context(state.steps, previous))}});
    }
    ChatRequest req;
    req.model_id = state.cfg.backbone_id;
    req.purpose = Purpose::Planner;
    req.temperature = state.cfg.temperature;
    req.messages.push_back({Role::User, std::move(prompt)});
    auto reply = services.llm.complete(std::move(req), step_index);
    if (reply.text.find_first_not_of(" \t\r\n") == std::string::npos) throw PlanEmpty();
    Plan plan{std::move(reply.text), step_index};
    services.llm.emit({{"type", "plan"}, {"step", step_index}, {"text", plan.text}});
    return plan;
}

Step react_step(const AgentState& state, AgentServices& services) {
    const int index = static_cast<int>(state.steps.size());
    const auto& plan = current_plan(state);
    const auto context = join_context(services.memory.context(state.steps, plan));
    std::vector<Message> prompt{
        {Role::System, services.templates.get("system_preamble")},
        {Role::User, services.templates.render("actor_step", {{"task", state.task.question},
                                                              {"attachments", render_attachments(state.task.attachments)},
                                                              {"plan", plan},
                                                              {"context", context},
                                                              {"tools", services.tools.describe()},
                                                              {"step_number", std::to_string(index + 1)},
                                                              {"max_steps", std::to_string(state.cfg.max_steps)}})}};

    auto chosen = choose_candidate(state, services, prompt, index);
    Step step;
    step.index = index;
    step.model_output = std::move(chosen.model_output);
    step.usage = chosen.usage;
    if (chosen.failed) {
        step.error = chosen.error;
        step.observation = "The model call for this step failed: " + chosen.error.value_or("unknown error");
    } else if (!chosen.action) {
        step.error = chosen.error;
        step.observation = corrective_observation(chosen.error.value_or("no action"));
    } else {
        step.action = std::move(chosen.action);
        if (!step.action->is_terminal()) {
            auto obs = services.tools.execute(*step.action, index);
            step.observation = std::move(obs.text);
            step.error = std::move(obs.error);
        }
    }
    services.llm.emit({{"type", "step"},
                       {"index", step.index},
                       {"model_output", step.model_output},
                       {"action", step.action ? json(format_action(*step.action)) : json()},
                       {"observation", step.observation},
                       {"error", step.error ? json(*step.error) : json()}});
    return step;
}

TaskRunRecord run_task(const Task& task, const AgentConfig& cfg, AgentServices& services) {
    AgentState state{task, cfg, {}, {}};
    TaskRunRecord record;
    record.task_id = task.task_id;
    record.config = cfg;
    record.terminated_by = TerminatedBy::StepBudget;
    try {
        bool answered = false;
        for (int s = 0; s < cfg.max_steps && !answered; ++s) {
            if (should_replan(s, cfg.plan_interval)) state.plans.push_back(generate_plan(state, services, s));
            state.steps.push_back(react_step(state, services));
            const auto& step = state.steps.back();
            if (step.is_terminal()) {
                record.final_answer = step.action->arg("answer");
                record.terminated_by = TerminatedBy::FinalAnswer;
                answered = true;
            } else {
                services.memory.after_step(step);
            }
        }
        if (!answered) {
            const int index = static_cast<int>(state.steps.size());
            const auto& plan = current_plan(state);
            ChatRequest req;
            req.model_id = cfg.backbone_id;
            req.purpose = Purpose::Actor;
            req.temperature = cfg.temperature;
            req.messages = {
                {Role::System, services.templates.get("system_preamble")},
                {Role::User, services.templates.render(
                                 "forced_answer", {{"task", task.question},
                                                   {"attachments", render_attachments(task.attachments)},
                                                   {"plan", plan},
                                                   {"context", join_context(services.memory.context(state.steps, plan))}})}};
            auto reply = services.llm.complete(std::move(req), index);
            record.final_answer = extract_answer(reply.text);
            services.llm.emit({{"type", "forced_answer"}, {"step", index}, {"answer", record.final_answer}});
        }
    } catch (const RunTimeout& e) {
        record.terminated_by = TerminatedBy::Timeout;
        record.error = e.what();
    } catch (const std::exception& e) {
        spdlog::warn("run {} aborted: {}", task.task_id, e.what());
        record.terminated_by = TerminatedBy::Aborted;
        record.error = e.what();
    }
    record.plans = std::move(state.plans);
    record.steps = std::move(state.steps);
    record.ledger = services.llm.ledger();
    return record;
}

}  // namespace effagents
