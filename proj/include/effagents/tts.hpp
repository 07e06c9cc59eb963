#pragma once

#include "effagents/action.hpp"
#include "effagents/backend.hpp"
#include "effagents/config.hpp"
#include "effagents/session.hpp"
#include "effagents/templates.hpp"

#include <optional>
#include <string>
#include <vector>

namespace effagents {

struct Candidate {
    int index = 0;
    std::string model_output;
    std::optional<Action> action;
    // Parse failure, or the backend error for a failed sample.
    std::optional<std::string> error;
    TokenUsage usage;
    // The sample call failed; the candidate is a zero-score placeholder.
    bool failed = false;
};

struct PrmVerdict {
    std::string analysis;
    int score = 0;  // 0..10
    bool fallback = false;
    bool operator==(const PrmVerdict&) const = default;
};

struct ListVerdict {
    int index = 0;
    std::string analysis;
    bool fallback = false;
};

/// n actor calls with the same prompt; temperature is cfg.temperature for
/// n = 1 and cfg.bon_temperature otherwise. Failed samples become
/// placeholders unless every sample fails, in which case the last error is rethrown.
std::vector<Candidate> sample_candidates(const std::vector<Message>& prompt, int n, const AgentConfig& cfg,
                                         LlmSession& llm, int step_index);

// Strict JSON, then the first balanced {...} in the text that parses.
std::optional<json> find_json_object(std::string_view text);
std::optional<PrmVerdict> parse_score_verdict(std::string_view text);
std::optional<ListVerdict> parse_list_verdict(std::string_view text, int trajectory_count);

/// PRM-score judgement of one candidate. A malformed reply is re-asked once;
/// a second failure gives {analysis "unparsable", score 0}.
PrmVerdict judge_score(const Candidate& candidate, int step_number, const std::string& previous_steps,
                       LlmSession& llm, const std::string& judge_model, const PromptTemplates& templates,
                       int step_index);

/// PRM-list judgement over at least two rendered trajectories. An invalid
/// index is re-asked once, then index 0 is used.
ListVerdict judge_list(const std::vector<std::string>& trajectories, const std::string& previous_steps,
                       LlmSession& llm, const std::string& judge_model, const PromptTemplates& templates,
                       int step_index);

// Argmax; the lowest index wins ties. Throws std::invalid_argument on empty input.
std::size_t select_best(const std::vector<int>& scores);
const Candidate& select_best(const std::vector<Candidate>& candidates, const std::vector<PrmVerdict>& verdicts);

std::string render_candidate(const Candidate& c);

}  // namespace effagents
