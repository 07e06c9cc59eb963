#include "effagents/tts.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>

namespace effagents {

namespace {

constexpr std::string_view kReask =
    "Your previous reply could not be used. Reply again with only the JSON object in the required format.";

ChatResponse ask_judge(const std::string& prompt, const std::string* previous_reply, LlmSession& llm,
                       const std::string& model, int step_index) {
    ChatRequest req;
    req.model_id = model;
    req.purpose = Purpose::Prm;
    req.messages.push_back({Role::User, prompt});
    if (previous_reply) {
        req.messages.push_back({Role::Assistant, *previous_reply});
        req.messages.push_back({Role::User, std::string(kReask)});
    }
    return llm.complete(std::move(req), step_index);
}

}  // namespace

std::vector<Candidate> sample_candidates(const std::vector<Message>& prompt, int n, const AgentConfig& cfg,
                                         LlmSession& llm, int step_index) {
    if (n < 1) throw std::invalid_argument("sample_candidates needs n >= 1");
    std::vector<Candidate> out;
    std::optional<BackendError> last_error;
    int failures = 0;
    for (int i = 0; i < n; ++i) {
        ChatRequest req;
        req.model_id = cfg.backbone_id;
        req.purpose = Purpose::Actor;
        req.temperature = n == 1 ? cfg.temperature : cfg.bon_temperature;
        req.messages = prompt;
        Candidate c;
        c.index = i;
        try {
            auto reply = llm.complete(std::move(req), step_index);
            c.model_output = std::move(reply.text);
            c.usage = reply.usage;
            try {
                c.action = parse_action(c.model_output);
            } catch (const UnparsableAction& e) {
                c.error = e.what();
            }
        } catch (const BackendError& e) {
            c.failed = true;
            c.error = e.what();
            last_error = e;
            ++failures;
        }
        out.push_back(std::move(c));
    }
    if (failures == n) throw *last_error;
    return out;
}

std::optional<json> find_json_object(std::string_view text) {
    auto try_parse = [](std::string_view s) -> std::optional<json> {
        auto j = json::parse(s, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return std::nullopt;
        return j;
    };
    if (auto j = try_parse(text)) return j;
    for (auto start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                if (auto j = try_parse(text.substr(start, i - start + 1))) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

namespace {

std::optional<int> integral(const json& v) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e9) return static_cast<int>(d);
    }
    return std::nullopt;
}

}  // namespace

std::optional<PrmVerdict> parse_score_verdict(std::string_view text) {
    auto j = find_json_object(text);
    if (!j || !j->contains("score")) return std::nullopt;
    auto score = integral(j->at("score"));
    if (!score || *score < 0 || *score > 10) return std::nullopt;
    PrmVerdict v;
    v.score = *score;
    if (auto it = j->find("analysis"); it != j->end() && it->is_string()) v.analysis = it->get<std::string>();
    return v;
}

std::optional<ListVerdict> parse_list_verdict(std::string_view text, int trajectory_count) {
    auto j = find_json_object(text);
    if (!j || !j->contains("index")) return std::nullopt;
    auto index = integral(j->at("index"));
    if (!index || *index < 0 || *index >= trajectory_count) return std::nullopt;
    ListVerdict v;
    v.index = *index;
    if (auto it = j->find("analysis"); it != j->end() && it->is_string()) v.analysis = it->get<std::string>();
    return v;
}

std::string render_candidate(const Candidate& c) {
    return fmt::format("action_output: {}\nmodel_output: {}\nerror: {}", c.action ? format_action(*c.action) : "None",
                       c.model_output, c.error.value_or("None"));
}

PrmVerdict judge_score(const Candidate& candidate, int step_number, const std::string& previous_steps,
                       LlmSession& llm, const std::string& judge_model, const PromptTemplates& templates,
                       int step_index) {
    // Judging happens before the action runs, so there is no observation yet.
    const auto prompt = templates.render("prm_score", {{"step_number", std::to_string(step_number)},
                                                       {"observations", "None"},
                                                       {"action_output", candidate.action ? format_action(*candidate.action) : "None"},
                                                       {"model_output", candidate.model_output},
                                                       {"error", candidate.error.value_or("None")},
                                                       {"score", "None"},
                                                       {"previous_steps", previous_steps}});
    auto first = ask_judge(prompt, nullptr, llm, judge_model, step_index);
    if (auto v = parse_score_verdict(first.text)) return *v;
    auto second = ask_judge(prompt, &first.text, llm, judge_model, step_index);
    if (auto v = parse_score_verdict(second.text)) return *v;
    spdlog::warn("PRM verdict for candidate {} unparsable twice; scoring 0", candidate.index);
    return {"unparsable", 0, true};
}

ListVerdict judge_list(const std::vector<std::string>& trajectories, const std::string& previous_steps,
                       LlmSession& llm, const std::string& judge_model, const PromptTemplates& templates,
                       int step_index) {
    if (trajectories.size() < 2) throw std::invalid_argument("judge_list needs at least two trajectories");
    std::string rendered;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        if (i) rendered += "\n\n";
        rendered += fmt::format("Trajectory {}:\n{}", i, trajectories[i]);
    }
    const auto prompt = templates.render("prm_list", {{"previous_steps", previous_steps}, {"trajectories", rendered}});
    const int count = static_cast<int>(trajectories.size());
    auto first = ask_judge(prompt, nullptr, llm, judge_model, step_index);
    if (auto v = parse_list_verdict(first.text, count)) return *v;
    auto second = ask_judge(prompt, &first.text, llm, judge_model, step_index);
    if (auto v = parse_list_verdict(second.text, count)) return *v;
    spdlog::warn("PRM list verdict invalid twice; keeping trajectory 0");
    return {0, "unparsable", true};
}

std::size_t select_best(const std::vector<int>& scores) {
    if (scores.empty()) throw std::invalid_argument("select_best needs at least one score");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

const Candidate& select_best(const std::vector<Candidate>& candidates, const std::vector<PrmVerdict>& verdicts) {
    if (candidates.size() != verdicts.size()) throw std::invalid_argument("candidates and verdicts differ in length");
    std::vector<int> scores;
    scores.reserve(verdicts.size());
    for (const auto& v : verdicts) scores.push_back(v.score);
    return candidates[select_best(scores)];
}

}  // namespace effagents
