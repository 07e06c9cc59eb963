#pragma once

#include "effagents/action.hpp"
#include "effagents/usage.hpp"

#include <optional>
#include <string>

namespace effagents {

/// One ReAct iteration. `action` is absent when the reply had no parsable
/// directive; `error` then holds the parse failure.
struct Step {
    int index = 0;
    std::string model_output;
    std::optional<Action> action;
    std::string observation;
    std::optional<std::string> error;
    TokenUsage usage;

    bool is_terminal() const { return action && action->is_terminal(); }
    bool operator==(const Step&) const = default;
};

}  // namespace effagents
