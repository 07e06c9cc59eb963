#pragma once

#include "effagents/usage.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace effagents {

enum class Role { System, User, Assistant };
std::string_view to_string(Role r);
Role parse_role(std::string_view s);

struct Message {
    Role role = Role::User;
    std::string content;
    bool operator==(const Message&) const = default;
};

struct ChatRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.0;
    std::optional<int> max_output_tokens;
    Purpose purpose = Purpose::Actor;
    // Routing keys for shared backends that keep per-run state.
    std::string run_id;
    std::string task_id;

    const std::string& last_content() const;
    bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
    std::string text;
    TokenUsage usage;
    std::int64_t latency_ms = 0;
    bool operator==(const ChatResponse&) const = default;
};

enum class BackendErrorKind { Transport, RateLimited, Rejected, ScriptExhausted, ReplayMismatch };
std::string_view to_string(BackendErrorKind k);
BackendErrorKind parse_backend_error_kind(std::string_view s);

class BackendError : public std::runtime_error {
public:
    BackendError(BackendErrorKind kind, const std::string& message);
    BackendErrorKind kind() const { return kind_; }
    // The message without the kind prefix that what() carries.
    const std::string& detail() const { return detail_; }

private:
    BackendErrorKind kind_;
    std::string detail_;
};

// Throws BackendError(Rejected) when messages are empty or start with an assistant turn.
void validate_request(const ChatRequest& req);

/// ceil(bytes / 4). Used only when a provider omits its usage block.
std::int64_t estimate_tokens(std::string_view text);

/// A chat-completion provider. Implementations must be safe to call from
/// several runs at once.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

}  // namespace effagents
