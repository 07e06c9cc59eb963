#pragma once

#include "effagents/backend.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace effagents {

/// One programmed reply. A request matches when the purpose is equal, the
/// task scope (if set) equals the request's task id, and `match` (if set)
/// occurs in the last message.
struct ScriptEntry {
    Purpose purpose = Purpose::Actor;
    std::string task;
    std::string match;
    std::string text;
    std::int64_t n_in = 0;
    std::int64_t n_out = 0;
    // Repeating entries are never consumed.
    bool repeat = false;
    // Simulated failure instead of a reply.
    std::optional<BackendErrorKind> fail;
};

/// Deterministic test stub. Entries are consumed in file order, first match
/// wins; consumption state is kept per run id so concurrent runs sharing one
/// script never steal each other's replies.
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries);

    ChatResponse complete(const ChatRequest& request) override;

    // Every request received, in arrival order.
    std::vector<ChatRequest> requests() const;
    std::size_t call_count() const;

private:
    std::vector<ScriptEntry> entries_;
    mutable std::mutex mu_;
    std::map<std::string, std::vector<bool>> consumed_;
    std::vector<ChatRequest> received_;
};

/// Line-delimited JSON, one entry per line:
///   {"purpose":"actor","task":"t1","match":"step 1","text":"...","n_in":120,"n_out":30}
/// Optional keys: "repeat" (bool), "fail" (transport|rate_limited|rejected).
/// Blank lines and lines starting with '#' are ignored.
std::vector<ScriptEntry> parse_script(std::string_view text);
std::vector<ScriptEntry> load_script(const std::filesystem::path& path);

}  // namespace effagents
