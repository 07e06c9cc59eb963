#include "effagents/http_backend.hpp"

#include "effagents/http_util.hpp"

#include "httplib.h"
#include "json.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace effagents {

using nlohmann::json;

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
    double ms = static_cast<double>(initial_backoff.count());
    for (int i = 1; i < attempt; ++i) ms *= multiplier;
    ms = std::min(ms, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
}

namespace {

std::optional<std::chrono::milliseconds> advised_delay(const httplib::Response& res) {
    if (res.has_header("retry-after-ms")) {
        try {
            return std::chrono::milliseconds(std::stoll(res.get_header_value("retry-after-ms")));
        } catch (...) {
        }
    }
    if (res.has_header("Retry-After")) {
        try {
            return std::chrono::milliseconds(static_cast<std::int64_t>(std::stod(res.get_header_value("Retry-After")) * 1000));
        } catch (...) {
            // HTTP-date form is not worth parsing; fall back to backoff.
        }
    }
    return std::nullopt;
}

std::string error_snippet(const std::string& body) {
    constexpr std::size_t kMax = 300;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : opts_(std::move(options)) {
    if (!opts_.sleep) opts_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (!opts_.getenv) opts_.getenv = process_env;
    if (opts_.retry.max_attempts < 1) opts_.retry.max_attempts = 1;
}

const EndpointSettings& HttpBackend::endpoint_for(const std::string& model_id) const {
    if (auto it = opts_.endpoints.find(model_id); it != opts_.endpoints.end()) return it->second;
    if (auto it = opts_.endpoints.find("*"); it != opts_.endpoints.end()) return it->second;
    return default_endpoint_;
}

std::string build_chat_body(const ChatRequest& request) {
    json msgs = json::array();
    for (const auto& m : request.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    json body = {{"model", request.model_id}, {"messages", msgs}, {"temperature", request.temperature}};
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;
    return body.dump();
}

ChatResponse parse_chat_completion(std::string_view body, const ChatRequest& request) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw BackendError(BackendErrorKind::Transport, fmt::format("malformed completion body: {}", e.what()));
    }
    ChatResponse r;
    const auto* content = &j;
    try {
        content = &j.at("choices").at(0).at("message").at("content");
    } catch (const json::exception&) {
        throw BackendError(BackendErrorKind::Transport, "completion body has no choices[0].message.content");
    }
    r.text = content->is_string() ? content->get<std::string>() : std::string();

    const auto usage = j.find("usage");
    const bool have_usage = usage != j.end() && usage->is_object() && usage->contains("prompt_tokens") &&
                            usage->contains("completion_tokens");
    if (have_usage) {
        r.usage.n_in = usage->at("prompt_tokens").get<std::int64_t>();
        r.usage.n_out = usage->at("completion_tokens").get<std::int64_t>();
        r.usage.estimated = false;
    } else {
        std::string prompt;
        for (const auto& m : request.messages) prompt += m.content;
        r.usage.n_in = estimate_tokens(prompt);
        r.usage.n_out = estimate_tokens(r.text);
        r.usage.estimated = true;
    }
    return r;
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    validate_request(request);
    const auto& ep = endpoint_for(request.model_id);
    UrlParts url;
    if (!parse_url(ep.base_url, url))
        throw BackendError(BackendErrorKind::Rejected, fmt::format("bad endpoint URL '{}'", ep.base_url));
    std::string path = url.path == "/" ? std::string() : url.path;
    while (!path.empty() && path.back() == '/') path.pop_back();
    path += "/v1/chat/completions";

    httplib::Headers headers;
    if (auto key = opts_.getenv(ep.api_key_env)) headers.emplace("Authorization", "Bearer " + *key);
    const auto body = build_chat_body(request);

    httplib::Client client(url.origin());
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(opts_.timeout);
    client.set_write_timeout(std::chrono::seconds(60));

    std::optional<BackendError> last;
    for (int attempt = 1; attempt <= opts_.retry.max_attempts; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(path, headers, body, "application/json");
        std::chrono::milliseconds wait = opts_.retry.backoff(attempt);

        if (!res) {
            last.emplace(BackendErrorKind::Transport, fmt::format("{} ({})", httplib::to_string(res.error()), ep.base_url));
        } else if (res->status == 200) {
            auto parsed = parse_chat_completion(res->body, request);
            parsed.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - started)
                                    .count();
            return parsed;
        } else if (res->status == 429) {
            last.emplace(BackendErrorKind::RateLimited, fmt::format("HTTP 429: {}", error_snippet(res->body)));
            if (auto advised = advised_delay(*res)) wait = std::min(*advised, opts_.retry.max_advised_wait);
        } else if (res->status >= 500) {
            last.emplace(BackendErrorKind::Transport, fmt::format("HTTP {}: {}", res->status, error_snippet(res->body)));
        } else {
            throw BackendError(BackendErrorKind::Rejected, fmt::format("HTTP {}: {}", res->status, error_snippet(res->body)));
        }

        if (attempt < opts_.retry.max_attempts) {
            spdlog::warn("model call to {} failed (attempt {}/{}): {}; retrying in {} ms", request.model_id, attempt,
                         opts_.retry.max_attempts, last->what(), wait.count());
            opts_.sleep(wait);
        }
    }
    throw *last;
}

}  // namespace effagents
