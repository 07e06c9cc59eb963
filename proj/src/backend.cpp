#include "effagents/backend.hpp"

#include <fmt/format.h>

namespace effagents {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "?";
}

Role parse_role(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    throw std::invalid_argument(fmt::format("unknown role '{}'", s));
}

const std::string& ChatRequest::last_content() const {
    static const std::string empty;
    return messages.empty() ? empty : messages.back().content;
}

std::string_view to_string(BackendErrorKind k) {
    switch (k) {
        case BackendErrorKind::Transport: return "transport";
        case BackendErrorKind::RateLimited: return "rate_limited";
        case BackendErrorKind::Rejected: return "rejected";
        case BackendErrorKind::ScriptExhausted: return "script_exhausted";
        case BackendErrorKind::ReplayMismatch: return "replay_mismatch";
    }
    return "?";
}

BackendErrorKind parse_backend_error_kind(std::string_view s) {
    for (auto k : {BackendErrorKind::Transport, BackendErrorKind::RateLimited, BackendErrorKind::Rejected,
                   BackendErrorKind::ScriptExhausted, BackendErrorKind::ReplayMismatch}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument(fmt::format("unknown backend error kind '{}'", s));
}

BackendError::BackendError(BackendErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), message)), kind_(kind), detail_(message) {}

void validate_request(const ChatRequest& req) {
    if (req.messages.empty()) throw BackendError(BackendErrorKind::Rejected, "request has no messages");
    if (req.messages.front().role == Role::Assistant)
        throw BackendError(BackendErrorKind::Rejected, "first message must be system or user");
    if (req.model_id.empty()) throw BackendError(BackendErrorKind::Rejected, "request has no model id");
    if (req.max_output_tokens && *req.max_output_tokens < 1)
        throw BackendError(BackendErrorKind::Rejected, "max_output_tokens must be positive");
}

std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

}  // namespace effagents
