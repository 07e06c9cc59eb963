#include "effagents/http_backend.hpp"
#include "effagents/http_util.hpp"
#include "effagents/tools.hpp"

#include "httplib.h"

#include <fmt/format.h>

#include <thread>

namespace effagents {

namespace {

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
    return s;
}

std::unique_ptr<httplib::Client> make_client(const UrlParts& url, const std::string& user_agent) {
    auto client = std::make_unique<httplib::Client>(url.origin());
    client->set_connection_timeout(std::chrono::seconds(15));
    client->set_read_timeout(std::chrono::seconds(30));
    client->set_follow_location(true);
    client->set_default_headers({{"User-Agent", user_agent}});
    return client;
}

}  // namespace

HttpSearchProvider::HttpSearchProvider(std::string provider, SearchProviderSettings settings, std::string user_agent)
    : provider_(std::move(provider)), settings_(std::move(settings)), user_agent_(std::move(user_agent)) {}

std::vector<SearchResult> HttpSearchProvider::search(const std::string& query, int limit) {
    auto key = settings_.api_key_env.empty() ? std::nullopt : process_env(settings_.api_key_env);
    auto target = replace_all(settings_.url, "{query}", percent_encode(query));
    target = replace_all(target, "{limit}", std::to_string(limit));
    const bool key_in_url = target.find("{key}") != std::string::npos;
    if (key_in_url) target = replace_all(target, "{key}", percent_encode(key.value_or("")));

    UrlParts url;
    if (!parse_url(target, url)) throw SearchError(fmt::format("{}: bad endpoint URL '{}'", provider_, settings_.url));
    auto client = make_client(url, user_agent_);
    httplib::Headers headers{{"Accept", "application/json"}};
    if (key && !key_in_url) headers.emplace("Authorization", "Bearer " + *key);
    auto res = client->Get(url.path, headers);
    if (!res) throw SearchError(fmt::format("{}: {}", provider_, httplib::to_string(res.error())));
    if (res->status != 200) throw SearchError(fmt::format("{}: HTTP {}", provider_, res->status));
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw SearchError(fmt::format("{}: malformed response: {}", provider_, e.what()));
    }
    return parse_search_json(body, settings_, provider_, limit);
}

HttpPageFetcher::HttpPageFetcher(ToolSettings settings) : settings_(std::move(settings)) {}

void HttpPageFetcher::wait_politely(const std::string& host) {
    const auto gap = std::chrono::milliseconds(settings_.politeness_ms);
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mu_);
        const auto now = std::chrono::steady_clock::now();
        auto it = last_hit_.find(host);
        slot = it == last_hit_.end() ? now : std::max(now, it->second + gap);
        last_hit_[host] = slot;
    }
    std::this_thread::sleep_until(slot);
}

bool HttpPageFetcher::robots_allows(const std::string& origin, const std::string& path) {
    std::vector<std::string> rules;
    bool cached = false;
    {
        std::lock_guard lock(mu_);
        if (auto it = disallow_.find(origin); it != disallow_.end()) {
            rules = it->second;
            cached = true;
        }
    }
    if (!cached) {
        UrlParts url;
        parse_url(origin + "/robots.txt", url);
        auto client = make_client(url, settings_.user_agent);
        auto res = client->Get("/robots.txt");
        if (res && res->status == 200) rules = parse_robots(res->body);
        std::lock_guard lock(mu_);
        disallow_[origin] = rules;
    }
    for (const auto& prefix : rules) {
        if (path.rfind(prefix, 0) == 0) return false;
    }
    return true;
}

FetchedPage HttpPageFetcher::fetch(const std::string& target) {
    UrlParts url;
    if (!parse_url(target, url)) throw FetchError(FetchError::Kind::Transport, fmt::format("not an http(s) URL: {}", target));
    if (settings_.respect_robots && !robots_allows(url.origin(), url.path))
        throw FetchError(FetchError::Kind::RobotsDenied, fmt::format("robots.txt disallows {}", target));
    wait_politely(url.host);
    auto client = make_client(url, settings_.user_agent);
    auto res = client->Get(url.path);
    if (!res)
        throw FetchError(FetchError::Kind::Transport, fmt::format("{} ({})", httplib::to_string(res.error()), target));
    if (res->status != 200) throw FetchError(FetchError::Kind::Transport, fmt::format("HTTP {} for {}", res->status, target));
    FetchedPage page{target, res->get_header_value("Content-Type"), res->body};
    if (!res->location.empty() && is_http_url(res->location)) page.url = res->location;
    return page;
}

}  // namespace effagents
