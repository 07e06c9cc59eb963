#pragma once

#include "effagents/action.hpp"
#include "effagents/config.hpp"
#include "effagents/session.hpp"
#include "effagents/templates.hpp"
#include "effagents/trace.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace effagents {

// Provider ids in merge order. Simple is a prefix of Multi.
const std::vector<std::string>& providers_for(SourceSet set);

struct SearchResult {
    std::string title;
    std::string url;
    std::string snippet;
    std::string provider;
    int rank = 1;  // 1-based, as returned by the provider
    bool operator==(const SearchResult&) const = default;
};

class SearchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One search engine. Must be callable from several runs at once.
class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    // Ranked results; throws SearchError on transport or format failures.
    virtual std::vector<SearchResult> search(const std::string& query, int limit) = 0;
};

using ProviderMap = std::map<std::string, std::shared_ptr<SearchProvider>>;

/// Reads <dir>/search/<provider>/<percent-encoded query>.json, a JSON array
/// of {"title","url","snippet"}. A missing file means no results.
class FixtureSearchProvider : public SearchProvider {
public:
    FixtureSearchProvider(std::filesystem::path dir, std::string provider);
    std::vector<SearchResult> search(const std::string& query, int limit) override;

private:
    std::filesystem::path dir_;
    std::string provider_;
};

/// Always fails; stands in for providers with no configured endpoint.
class UnavailableSearchProvider : public SearchProvider {
public:
    explicit UnavailableSearchProvider(std::string provider) : provider_(std::move(provider)) {}
    std::vector<SearchResult> search(const std::string& query, int limit) override;

private:
    std::string provider_;
};

/// Generic JSON search endpoint (see SearchProviderSettings).
class HttpSearchProvider : public SearchProvider {
public:
    HttpSearchProvider(std::string provider, SearchProviderSettings settings, std::string user_agent);
    std::vector<SearchResult> search(const std::string& query, int limit) override;

private:
    std::string provider_;
    SearchProviderSettings settings_;
    std::string user_agent_;
};

std::vector<SearchResult> parse_search_json(const json& body, const SearchProviderSettings& s,
                                            const std::string& provider, int limit);

/// Records every call (results or failure) as a "search" trace event.
class TracingSearchProvider : public SearchProvider {
public:
    TracingSearchProvider(std::shared_ptr<SearchProvider> inner, std::string provider, TraceSink* sink);
    std::vector<SearchResult> search(const std::string& query, int limit) override;

private:
    std::shared_ptr<SearchProvider> inner_;
    std::string provider_;
    TraceSink* sink_;
};

/// Answers from recorded "search" events; throws ReplayMismatch on divergence.
class ReplaySearchProvider : public SearchProvider {
public:
    ReplaySearchProvider(std::shared_ptr<RunReplay> replay, std::string provider);
    std::vector<SearchResult> search(const std::string& query, int limit) override;

private:
    std::shared_ptr<RunReplay> replay_;
    std::string provider_;
};

struct SearchOutput {
    std::vector<SearchResult> results;
    std::vector<std::string> warnings;
};

/// Fans every query out to every provider of the set, then merges in
/// (query, provider, rank) order keeping the first hit per normalized URL.
/// A failing provider contributes nothing and a warning.
SearchOutput search(SourceSet set, const std::vector<std::string>& queries, int per_query_limit,
                    const ProviderMap& providers);

struct ExpandedQueries {
    std::vector<std::string> queries;
    bool warning = false;  // reply had no numbered list
};

// Lines of the form "1. text" or "1) text", in order.
std::vector<std::string> parse_numbered_list(std::string_view text);

/// Exactly k queries: parsed list, deduplicated case-insensitively, padded
/// with the original question and truncated.
ExpandedQueries normalize_expansion(std::string_view reply, const std::string& question, int k);

/// One query_expansion call, then normalize_expansion.
ExpandedQueries expand_queries(const std::string& question, int k, LlmSession& llm, const std::string& model_id,
                               const PromptTemplates& templates, int step_index);

struct FetchedPage {
    std::string url;
    std::string content_type;
    std::string body;
};

class FetchError : public std::runtime_error {
public:
    enum class Kind { Transport, NonHtml, RobotsDenied };
    FetchError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};
std::string_view to_string(FetchError::Kind k);
FetchError::Kind parse_fetch_error_kind(std::string_view s);

class PageFetcher {
public:
    virtual ~PageFetcher() = default;
    virtual FetchedPage fetch(const std::string& url) = 0;
};

/// Reads <dir>/pages/<percent-encoded url>. The content type follows the URL
/// path's extension: .txt is plain text, binary document types are
/// rejected, anything else is HTML. Missing files are transport errors.
class FixturePageFetcher : public PageFetcher {
public:
    explicit FixturePageFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {}
    FetchedPage fetch(const std::string& url) override;

private:
    std::filesystem::path dir_;
};

/// Plain GET with a fixed user agent, per-host politeness delay and an
/// optional robots.txt check (User-agent: * rules only).
class HttpPageFetcher : public PageFetcher {
public:
    explicit HttpPageFetcher(ToolSettings settings);
    FetchedPage fetch(const std::string& url) override;

private:
    bool robots_allows(const std::string& origin, const std::string& path);
    void wait_politely(const std::string& host);

    ToolSettings settings_;
    std::mutex mu_;
    std::map<std::string, std::chrono::steady_clock::time_point> last_hit_;
    std::map<std::string, std::vector<std::string>> disallow_;
};

// Disallow prefixes from the "User-agent: *" groups of a robots.txt.
std::vector<std::string> parse_robots(std::string_view text);

class TracingPageFetcher : public PageFetcher {
public:
    TracingPageFetcher(std::shared_ptr<PageFetcher> inner, TraceSink* sink);
    FetchedPage fetch(const std::string& url) override;

private:
    std::shared_ptr<PageFetcher> inner_;
    TraceSink* sink_;
};

class ReplayPageFetcher : public PageFetcher {
public:
    explicit ReplayPageFetcher(std::shared_ptr<RunReplay> replay) : replay_(std::move(replay)) {}
    FetchedPage fetch(const std::string& url) override;

private:
    std::shared_ptr<RunReplay> replay_;
};

struct PageView {
    std::string url;
    int viewport_index = 0;
    int viewport_count = 1;
    std::string text;
    bool truncated = false;
    // Set when a navigation request could not move.
    std::string note;
    bool operator==(const PageView&) const = default;
};

// Longest prefix of s no longer than max_bytes that does not split a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes);
// Consecutive slices of at most `size` bytes, cut on UTF-8 boundaries. Never empty.
std::vector<std::string> split_viewports(std::string_view text, std::size_t size);

// Static text of a fetched page; throws FetchError(NonHtml) for other content types.
std::string page_text(const FetchedPage& page);

/// The page as the agent first sees it under `strategy`.
PageView fetch_page(const std::string& url, PageStrategy strategy, PageFetcher& fetcher, const ToolSettings& settings);

/// Per-run browser state: the open page and its current viewport.
class BrowserSession {
public:
    BrowserSession(PageStrategy strategy, ToolSettings settings) : strategy_(strategy), settings_(std::move(settings)) {}

    PageView open(const std::string& url, PageFetcher& fetcher);
    // Throw std::logic_error when navigation is not permitted or no page is open.
    PageView page_up();
    PageView page_down();
    PageView current() const { return view(); }

    bool has_page() const { return !viewports_.empty(); }
    bool navigation_allowed() const { return strategy_ == PageStrategy::BrowserComplex; }

private:
    PageView view(std::string note = {}) const;
    void require_navigation() const;

    PageStrategy strategy_;
    ToolSettings settings_;
    std::string url_;
    std::vector<std::string> viewports_;
    bool truncated_ = false;
    int index_ = 0;
};

std::string render_page_view(const PageView& view);
std::string render_search_results(const std::vector<std::string>& queries, const SearchOutput& out);

class AttachmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a plain-text attachment by file name or path. Binary content is
/// rejected; long files are cut to max_bytes.
std::string read_attachment(const std::string& name, const std::vector<std::string>& attachments,
                            std::size_t max_bytes);

struct Observation {
    std::string text;
    std::optional<std::string> error;
};

/// Everything the actor's tools need for one run.
class Toolbox {
public:
    Toolbox(const AgentConfig& cfg, ToolSettings settings, ProviderMap providers, std::shared_ptr<PageFetcher> fetcher,
            std::vector<std::string> attachments, LlmSession& llm, const PromptTemplates& templates);

    // Runs a non-terminal action. Tool failures come back as observations.
    Observation execute(const Action& action, int step_index);

    // Tool list for prompts; navigation appears only when the strategy permits it.
    std::string describe() const;

private:
    Observation do_search(const std::string& query, int step_index);

    const AgentConfig& cfg_;
    ToolSettings settings_;
    ProviderMap providers_;
    std::shared_ptr<PageFetcher> fetcher_;
    std::vector<std::string> attachments_;
    LlmSession& llm_;
    const PromptTemplates& templates_;
    BrowserSession browser_;
};

}  // namespace effagents
