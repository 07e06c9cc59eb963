#include "effagents/action.hpp"

#include <fmt/format.h>

#include <cctype>
#include <set>
#include <vector>

namespace effagents {

namespace {

struct Signature {
    ActionName name;
    std::string_view text;
    std::vector<std::string_view> required;
};

const std::vector<Signature>& signatures() {
    static const std::vector<Signature> sigs{
        {ActionName::Search, "search", {"query"}},
        {ActionName::OpenUrl, "open_url", {"url"}},
        {ActionName::PageUp, "page_up", {}},
        {ActionName::PageDown, "page_down", {}},
        {ActionName::ReadAttachment, "read_attachment", {"name"}},
        {ActionName::FinalAnswer, "final_answer", {"answer"}},
    };
    return sigs;
}

const Signature& signature(ActionName a) {
    for (const auto& s : signatures()) {
        if (s.name == a) return s;
    }
    throw std::logic_error("unknown action");
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Position of the last line whose first non-blank, non-backtick text is "ACTION:".
std::size_t find_directive(std::string_view text) {
    std::size_t found = std::string_view::npos;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        auto line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        auto i = line_start;
        while (i < line_end && (text[i] == ' ' || text[i] == '\t' || text[i] == '`' || text[i] == '*')) ++i;
        if (text.substr(i, 7) == "ACTION:") found = i;
        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }
    return found;
}

class DirectiveParser {
public:
    explicit DirectiveParser(std::string_view s) : s_(s) {}

    Action parse() {
        skip_ws();
        std::string name;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            name += s_[pos_++];
        auto action_name = parse_action_name(name);
        if (!action_name) throw UnparsableAction(fmt::format("unknown action '{}'", name));
        Action a{*action_name, {}};
        skip_ws();
        expect('(');
        skip_ws();
        if (peek() == ')') {
            ++pos_;
        } else {
            while (true) {
                skip_ws();
                auto key = read_key();
                skip_ws();
                expect('=');
                skip_ws();
                auto value = peek() == '"' ? read_quoted() : read_bare();
                if (a.arguments.count(key)) throw UnparsableAction(fmt::format("duplicate argument '{}'", key));
                a.arguments.emplace(std::move(key), std::move(value));
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                expect(')');
                break;
            }
        }
        // Only fence/markup residue may follow the directive.
        for (; pos_ < s_.size(); ++pos_) {
            char c = s_[pos_];
            if (!std::isspace(static_cast<unsigned char>(c)) && c != '`' && c != '*')
                throw UnparsableAction("unexpected text after the action directive");
        }
        return a;
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    void expect(char c) {
        if (peek() != c) throw UnparsableAction(fmt::format("expected '{}' in action directive", c));
        ++pos_;
    }

    std::string read_key() {
        std::string key;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            key += s_[pos_++];
        if (key.empty()) throw UnparsableAction("missing argument name");
        return key;
    }

    std::string read_quoted() {
        ++pos_;
        std::string v;
        while (pos_ < s_.size()) {
            char c = s_[pos_++];
            if (c == '"') return v;
            if (c == '\\' && pos_ < s_.size()) {
                char n = s_[pos_++];
                switch (n) {
                    case 'n': v += '\n'; break;
                    case 't': v += '\t'; break;
                    default: v += n;
                }
            } else {
                v += c;
            }
        }
        throw UnparsableAction("unterminated string in action directive");
    }

    std::string read_bare() {
        std::string v;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')' && s_[pos_] != '\n') v += s_[pos_++];
        return trim(v);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(ActionName a) { return signature(a).text; }

std::optional<ActionName> parse_action_name(std::string_view s) {
    for (const auto& sig : signatures()) {
        if (sig.text == s) return sig.name;
    }
    return std::nullopt;
}

const std::string& Action::arg(const std::string& key) const {
    static const std::string empty;
    auto it = arguments.find(key);
    return it == arguments.end() ? empty : it->second;
}

Action parse_action(std::string_view model_output) {
    auto at = find_directive(model_output);
    if (at == std::string_view::npos) throw UnparsableAction("no ACTION: directive found");
    auto action = DirectiveParser(model_output.substr(at + 7)).parse();

    const auto& sig = signature(action.name);
    std::set<std::string_view> allowed(sig.required.begin(), sig.required.end());
    for (auto req : sig.required) {
        if (!action.arguments.count(std::string(req)))
            throw UnparsableAction(fmt::format("{} requires argument '{}'", sig.text, req));
    }
    for (const auto& [k, _] : action.arguments) {
        if (!allowed.count(k)) throw UnparsableAction(fmt::format("{} does not take argument '{}'", sig.text, k));
    }
    return action;
}

std::string format_action(const Action& a) {
    std::string out = fmt::format("ACTION: {}(", to_string(a.name));
    bool first = true;
    for (const auto& [k, v] : a.arguments) {
        if (!first) out += ", ";
        first = false;
        out += k + "=\"";
        for (char c : v) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default: out += c;
            }
        }
        out += '"';
    }
    out += ')';
    return out;
}

std::string extract_answer(std::string_view model_output) {
    try {
        auto a = parse_action(model_output);
        if (a.is_terminal()) return a.arg("answer");
    } catch (const UnparsableAction&) {
    }
    for (std::string_view marker : {"FINAL ANSWER:", "Final Answer:", "FINAL:"}) {
        if (auto p = model_output.rfind(marker); p != std::string_view::npos) {
            auto rest = model_output.substr(p + marker.size());
            return trim(rest.substr(0, rest.find('\n')));
        }
    }
    return trim(model_output);
}

}  // namespace effagents
