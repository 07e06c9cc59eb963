#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace effagents {

enum class ActionName { Search, OpenUrl, PageUp, PageDown, ReadAttachment, FinalAnswer };

std::string_view to_string(ActionName a);
std::optional<ActionName> parse_action_name(std::string_view s);

struct Action {
    ActionName name = ActionName::FinalAnswer;
    std::map<std::string, std::string> arguments;

    const std::string& arg(const std::string& key) const;
    bool is_terminal() const { return name == ActionName::FinalAnswer; }
    bool operator==(const Action&) const = default;
};

class UnparsableAction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Extracts the last `ACTION: name(key="value", ...)` directive in a model
/// reply. Values may be double-quoted (with \" \\ \n escapes) or bare up to
/// the next comma. Arguments are checked against the tool's signature.
/// Throws UnparsableAction.
Action parse_action(std::string_view model_output);

/// Canonical directive text; parse_action(format_action(a)) == a.
std::string format_action(const Action& a);

/// Best-effort answer extraction for forced answers: a final_answer
/// directive, else a "FINAL ANSWER:"/"FINAL:" line, else the trimmed text.
std::string extract_answer(std::string_view model_output);

}  // namespace effagents
