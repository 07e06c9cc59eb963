#include "effagents/scripted_backend.hpp"

#include "json.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace effagents {

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    std::lock_guard lock(mu_);
    received_.push_back(request);
    auto& used = consumed_[request.run_id];
    used.resize(entries_.size(), false);

    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (used[i] || e.purpose != request.purpose) continue;
        if (!e.task.empty() && e.task != request.task_id) continue;
        if (!e.match.empty() && request.last_content().find(e.match) == std::string::npos) continue;
        if (!e.repeat) used[i] = true;
        if (e.fail) throw BackendError(*e.fail, fmt::format("scripted failure (entry {})", i + 1));
        ChatResponse r;
        r.text = e.text;
        r.usage = TokenUsage{e.n_in, e.n_out, false};
        return r;
    }
    throw BackendError(BackendErrorKind::ScriptExhausted,
                       fmt::format("no scripted reply left for {} call in run '{}'", to_string(request.purpose),
                                   request.run_id));
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
    std::lock_guard lock(mu_);
    return received_;
}

std::size_t ScriptedBackend::call_count() const {
    std::lock_guard lock(mu_);
    return received_.size();
}

std::vector<ScriptEntry> parse_script(std::string_view text) {
    std::vector<ScriptEntry> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            auto j = nlohmann::json::parse(line);
            ScriptEntry e;
            e.purpose = parse_purpose(j.at("purpose").get<std::string>());
            e.task = j.value("task", "");
            e.match = j.value("match", "");
            e.text = j.value("text", "");
            e.n_in = j.value("n_in", std::int64_t{0});
            e.n_out = j.value("n_out", std::int64_t{0});
            e.repeat = j.value("repeat", false);
            if (j.contains("fail")) e.fail = parse_backend_error_kind(j.at("fail").get<std::string>());
            if (e.n_in < 0 || e.n_out < 0) throw std::invalid_argument("token counts must be non-negative");
            out.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw std::runtime_error(fmt::format("script line {}: {}", lineno, ex.what()));
        }
    }
    return out;
}

std::vector<ScriptEntry> load_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open script '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_script(ss.str());
}

}  // namespace effagents
