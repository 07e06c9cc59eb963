#pragma once

#include "effagents/backend.hpp"
#include "effagents/config.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace effagents {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{30000};
    // Upper bound on a provider-advised Retry-After wait.
    std::chrono::milliseconds max_advised_wait{120000};

    std::chrono::milliseconds backoff(int attempt) const;  // attempt is 1-based
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

struct HttpBackendOptions {
    // Keyed by model id; "*" is the catch-all.
    std::map<std::string, EndpointSettings> endpoints;
    RetryPolicy retry;
    std::chrono::seconds timeout{180};
    Sleeper sleep;      // defaults to std::this_thread::sleep_for
    EnvLookup getenv;   // defaults to process_env
};

/// Chat-completions over HTTP: POST {base}/v1/chat/completions with bearer
/// auth. 5xx and transport failures back off exponentially, 429 honours
/// Retry-After, other 4xx fail immediately.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);
    ChatResponse complete(const ChatRequest& request) override;

    const EndpointSettings& endpoint_for(const std::string& model_id) const;

private:
    HttpBackendOptions opts_;
    EndpointSettings default_endpoint_;
};

std::string build_chat_body(const ChatRequest& request);

/// Reads choices[0].message.content and the usage block. When usage is
/// missing, n_in is estimated over the concatenated request contents and
/// n_out over the reply, and the usage is flagged estimated.
ChatResponse parse_chat_completion(std::string_view body, const ChatRequest& request);

}  // namespace effagents
