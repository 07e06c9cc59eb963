#include "effagents/templates.hpp"

#include "effagents/builtin_templates.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace effagents {

std::string render_template(std::string_view text, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(text.substr(pos, open - pos));
        const std::string key(text.substr(open + 2, close - open - 2));
        if (auto it = vars.find(key); it != vars.end()) {
            out += it->second;
        } else {
            out.append(text.substr(open, close + 2 - open));
        }
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

const PromptTemplates& PromptTemplates::builtin() {
    static const PromptTemplates instance = [] {
        PromptTemplates t;
        for (const auto& [name, text] : detail::kBuiltinTemplates) t.texts_[std::string(name)] = std::string(text);
        return t;
    }();
    return instance;
}

void PromptTemplates::override_from(const std::filesystem::path& dir) {
    for (auto& [name, text] : texts_) {
        const auto file = dir / (name + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
}

const std::string& PromptTemplates::get(const std::string& name) const {
    auto it = texts_.find(name);
    if (it == texts_.end()) throw std::out_of_range(fmt::format("no prompt template named '{}'", name));
    return it->second;
}

std::string PromptTemplates::render(const std::string& name, const std::map<std::string, std::string>& vars) const {
    return render_template(get(name), vars);
}

}  // namespace effagents
