#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace effagents {

/// Replaces every {{name}} with vars[name]. Unknown placeholders stay as-is.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& vars);

/// Named prompt templates. Starts from the copies compiled into the binary;
/// `override_from` replaces any whose <name>.txt exists in a directory.
class PromptTemplates {
public:
    static const PromptTemplates& builtin();

    void override_from(const std::filesystem::path& dir);
    void set(const std::string& name, std::string text) { texts_[name] = std::move(text); }
    const std::string& get(const std::string& name) const;
    std::string render(const std::string& name, const std::map<std::string, std::string>& vars) const;

private:
    std::map<std::string, std::string> texts_;
};

}  // namespace effagents
