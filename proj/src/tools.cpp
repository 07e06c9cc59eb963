#include "effagents/tools.hpp"

#include "effagents/html_text.hpp"
#include "effagents/http_util.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace effagents {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::optional<std::string> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json result_to_json(const SearchResult& r) {
    return {{"title", r.title}, {"url", r.url}, {"snippet", r.snippet}, {"provider", r.provider}, {"rank", r.rank}};
}

SearchResult result_from_json(const json& j) {
    return {j.at("title").get<std::string>(), j.at("url").get<std::string>(), j.at("snippet").get<std::string>(),
            j.at("provider").get<std::string>(), j.at("rank").get<int>()};
}

std::string path_extension(const std::string& url) {
    UrlParts parts;
    if (!parse_url(url, parts)) return {};
    auto path = parts.path.substr(0, parts.path.find('?'));
    auto slash = path.rfind('/');
    auto dot = path.rfind('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {};
    return lower(path.substr(dot));
}

}  // namespace

const std::vector<std::string>& providers_for(SourceSet set) {
    static const std::vector<std::string> simple{"google", "wikipedia"};
    static const std::vector<std::string> multi{"google", "wikipedia", "bing", "baidu", "duckduckgo"};
    return set == SourceSet::Simple ? simple : multi;
}

FixtureSearchProvider::FixtureSearchProvider(fs::path dir, std::string provider)
    : dir_(std::move(dir)), provider_(std::move(provider)) {}

std::vector<SearchResult> FixtureSearchProvider::search(const std::string& query, int limit) {
    auto text = read_file(dir_ / "search" / provider_ / (percent_encode(query) + ".json"));
    if (!text) return {};
    json arr;
    try {
        arr = json::parse(*text);
    } catch (const json::parse_error& e) {
        throw SearchError(fmt::format("{}: malformed fixture: {}", provider_, e.what()));
    }
    SearchProviderSettings layout;
    layout.items = "";
    layout.link = "/url";
    return parse_search_json(arr, layout, provider_, limit);
}

std::vector<SearchResult> UnavailableSearchProvider::search(const std::string&, int) {
    throw SearchError(fmt::format("{}: no search endpoint configured", provider_));
}

std::vector<SearchResult> parse_search_json(const json& body, const SearchProviderSettings& s,
                                            const std::string& provider, int limit) {
    const json* items = &body;
    if (!s.items.empty()) {
        const json::json_pointer ptr(s.items);
        if (!body.contains(ptr)) throw SearchError(fmt::format("{}: response has no '{}'", provider, s.items));
        items = &body.at(ptr);
    }
    if (!items->is_array()) throw SearchError(fmt::format("{}: result list is not an array", provider));
    auto field = [](const json& item, const std::string& pointer) -> std::string {
        const json::json_pointer ptr(pointer);
        if (!item.contains(ptr)) return {};
        const auto& v = item.at(ptr);
        return v.is_string() ? v.get<std::string>() : std::string();
    };
    std::vector<SearchResult> out;
    for (const auto& item : *items) {
        if (static_cast<int>(out.size()) >= limit) break;
        auto url = field(item, s.link);
        if (!is_http_url(url)) continue;
        out.push_back({field(item, s.title), std::move(url), field(item, s.snippet), provider,
                       static_cast<int>(out.size()) + 1});
    }
    return out;
}

TracingSearchProvider::TracingSearchProvider(std::shared_ptr<SearchProvider> inner, std::string provider,
                                             TraceSink* sink)
    : inner_(std::move(inner)), provider_(std::move(provider)), sink_(sink) {}

std::vector<SearchResult> TracingSearchProvider::search(const std::string& query, int limit) {
    json ev{{"type", "search"}, {"provider", provider_}, {"query", query}, {"limit", limit}};
    try {
        auto results = inner_->search(query, limit);
        json arr = json::array();
        for (const auto& r : results) arr.push_back(result_to_json(r));
        ev["results"] = std::move(arr);
        if (sink_) sink_->emit(std::move(ev));
        return results;
    } catch (const SearchError& e) {
        ev["error"] = e.what();
        if (sink_) sink_->emit(std::move(ev));
        throw;
    }
}

ReplaySearchProvider::ReplaySearchProvider(std::shared_ptr<RunReplay> replay, std::string provider)
    : replay_(std::move(replay)), provider_(std::move(provider)) {}

std::vector<SearchResult> ReplaySearchProvider::search(const std::string& query, int limit) {
    auto ev = replay_->next("search");
    if (ev.at("provider") != provider_ || ev.at("query") != query || ev.at("limit") != limit)
        throw ReplayMismatch(fmt::format("search diverges from trace: {} '{}'", provider_, query));
    if (ev.contains("error")) throw SearchError(ev.at("error").get<std::string>());
    std::vector<SearchResult> out;
    for (const auto& r : ev.at("results")) out.push_back(result_from_json(r));
    return out;
}

SearchOutput search(SourceSet set, const std::vector<std::string>& queries, int per_query_limit,
                    const ProviderMap& providers) {
    SearchOutput out;
    std::set<std::string> seen;
    for (const auto& query : queries) {
        for (const auto& id : providers_for(set)) {
            auto it = providers.find(id);
            if (it == providers.end() || !it->second) {
                out.warnings.push_back(fmt::format("{}: provider not available", id));
                continue;
            }
            std::vector<SearchResult> hits;
            try {
                hits = it->second->search(query, per_query_limit);
            } catch (const SearchError& e) {
                spdlog::warn("search provider failed: {}", e.what());
                out.warnings.push_back(e.what());
                continue;
            }
            std::stable_sort(hits.begin(), hits.end(),
                             [](const SearchResult& a, const SearchResult& b) { return a.rank < b.rank; });
            for (auto& hit : hits) {
                if (seen.insert(normalize_url(hit.url)).second) out.results.push_back(std::move(hit));
            }
        }
    }
    return out;
}

std::vector<std::string> parse_numbered_list(std::string_view text) {
    std::vector<std::string> items;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::size_t i = line.find_first_not_of(" \t");
        if (i == std::string::npos) continue;
        std::size_t j = i;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        if (j == i || j >= line.size() || (line[j] != '.' && line[j] != ')')) continue;
        auto item = trim(std::string_view(line).substr(j + 1));
        if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = trim(item.substr(1, item.size() - 2));
        if (!item.empty()) items.push_back(std::move(item));
    }
    return items;
}

ExpandedQueries normalize_expansion(std::string_view reply, const std::string& question, int k) {
    ExpandedQueries out;
    const auto count = static_cast<std::size_t>(std::max(k, 1));
    auto items = parse_numbered_list(reply);
    if (items.empty()) {
        out.queries.assign(count, question);
        out.warning = true;
        return out;
    }
    std::set<std::string> seen;
    for (auto& item : items) {
        if (seen.insert(lower(item)).second) out.queries.push_back(std::move(item));
    }
    while (out.queries.size() < count) out.queries.push_back(question);
    out.queries.resize(count);
    return out;
}

ExpandedQueries expand_queries(const std::string& question, int k, LlmSession& llm, const std::string& model_id,
                               const PromptTemplates& templates, int step_index) {
    ChatRequest req;
    req.model_id = model_id;
    req.purpose = Purpose::QueryExpansion;
    req.messages.push_back(
        {Role::User, templates.render("query_expansion", {{"count", std::to_string(k)}, {"query", question}})});
    auto reply = llm.complete(std::move(req), step_index);
    auto out = normalize_expansion(reply.text, question, k);
    if (out.warning) spdlog::warn("query expansion reply had no numbered list; using the original query");
    return out;
}

std::string_view to_string(FetchError::Kind k) {
    switch (k) {
        case FetchError::Kind::Transport: return "transport";
        case FetchError::Kind::NonHtml: return "non_html";
        case FetchError::Kind::RobotsDenied: return "robots_denied";
    }
    return "transport";
}

FetchError::Kind parse_fetch_error_kind(std::string_view s) {
    if (s == "non_html") return FetchError::Kind::NonHtml;
    if (s == "robots_denied") return FetchError::Kind::RobotsDenied;
    return FetchError::Kind::Transport;
}

FetchedPage FixturePageFetcher::fetch(const std::string& url) {
    auto body = read_file(dir_ / "pages" / percent_encode(url));
    if (!body) throw FetchError(FetchError::Kind::Transport, fmt::format("HTTP 404 for {}", url));
    static const std::set<std::string> binary{".pdf", ".png", ".jpg", ".jpeg", ".gif", ".zip", ".xlsx", ".docx", ".mp3"};
    const auto ext = path_extension(url);
    std::string type = "text/html";
    if (ext == ".txt") type = "text/plain";
    if (binary.count(ext)) type = "application/octet-stream";
    return {url, type, std::move(*body)};
}

std::vector<std::string> parse_robots(std::string_view text) {
    std::vector<std::string> disallow;
    bool in_star_group = false;
    bool last_was_agent = false;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line.substr(0, line.find('#')));
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        auto key = lower(trim(line.substr(0, colon)));
        auto value = trim(line.substr(colon + 1));
        if (key == "user-agent") {
            const bool star = value == "*";
            in_star_group = last_was_agent ? (in_star_group || star) : star;
            last_was_agent = true;
            continue;
        }
        last_was_agent = false;
        if (key == "disallow" && in_star_group && !value.empty()) disallow.push_back(value);
    }
    return disallow;
}

TracingPageFetcher::TracingPageFetcher(std::shared_ptr<PageFetcher> inner, TraceSink* sink)
    : inner_(std::move(inner)), sink_(sink) {}

FetchedPage TracingPageFetcher::fetch(const std::string& url) {
    json ev{{"type", "fetch"}, {"url", url}};
    try {
        auto page = inner_->fetch(url);
        ev["final_url"] = page.url;
        ev["content_type"] = page.content_type;
        ev["body"] = page.body;
        if (sink_) sink_->emit(std::move(ev));
        return page;
    } catch (const FetchError& e) {
        ev["error_kind"] = to_string(e.kind());
        ev["error"] = e.what();
        if (sink_) sink_->emit(std::move(ev));
        throw;
    }
}

FetchedPage ReplayPageFetcher::fetch(const std::string& url) {
    auto ev = replay_->next("fetch");
    if (ev.at("url") != url) throw ReplayMismatch(fmt::format("fetch diverges from trace: {}", url));
    if (ev.contains("error"))
        throw FetchError(parse_fetch_error_kind(ev.at("error_kind").get<std::string>()),
                         ev.at("error").get<std::string>());
    return {ev.at("final_url").get<std::string>(), ev.at("content_type").get<std::string>(),
            ev.at("body").get<std::string>()};
}

std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    std::size_t cut = max_bytes;
    // Back up over continuation bytes so the cut lands before a lead byte.
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut);
}

std::vector<std::string> split_viewports(std::string_view text, std::size_t size) {
    std::vector<std::string> out;
    size = std::max<std::size_t>(size, 4);
    while (!text.empty()) {
        auto piece = utf8_prefix(text, size);
        if (piece.empty()) piece = text.substr(0, 1);
        out.emplace_back(piece);
        text.remove_prefix(piece.size());
    }
    if (out.empty()) out.emplace_back();
    return out;
}

std::string page_text(const FetchedPage& page) {
    const auto type = lower(page.content_type.substr(0, page.content_type.find(';')));
    if (type == "text/html" || type == "application/xhtml+xml" || type.empty()) return extract_static_text(page.body);
    if (type == "text/plain") return page.body;
    throw FetchError(FetchError::Kind::NonHtml, fmt::format("unsupported content type '{}' at {}", type, page.url));
}

PageView fetch_page(const std::string& url, PageStrategy strategy, PageFetcher& fetcher, const ToolSettings& settings) {
    BrowserSession session(strategy, settings);
    return session.open(url, fetcher);
}

PageView BrowserSession::open(const std::string& url, PageFetcher& fetcher) {
    if (!is_http_url(url)) throw FetchError(FetchError::Kind::Transport, fmt::format("not an http(s) URL: {}", url));
    auto page = fetcher.fetch(url);
    auto text = page_text(page);
    url_ = page.url.empty() ? url : page.url;
    index_ = 0;
    truncated_ = false;
    if (strategy_ == PageStrategy::CrawlerStatic) {
        auto kept = utf8_prefix(text, static_cast<std::size_t>(settings_.crawler_max_chars));
        truncated_ = kept.size() < text.size();
        viewports_ = {std::string(kept)};
    } else {
        viewports_ = split_viewports(text, static_cast<std::size_t>(settings_.viewport_chars));
    }
    return view();
}

PageView BrowserSession::view(std::string note) const {
    PageView v;
    v.url = url_;
    v.viewport_index = index_;
    v.viewport_count = static_cast<int>(viewports_.size());
    v.text = viewports_.at(static_cast<std::size_t>(index_));
    v.truncated = truncated_;
    v.note = std::move(note);
    return v;
}

void BrowserSession::require_navigation() const {
    if (!navigation_allowed())
        throw std::logic_error(
            fmt::format("page navigation is not available with the {} strategy", to_string(strategy_)));
    if (!has_page()) throw std::logic_error("no page is open; use open_url first");
}

PageView BrowserSession::page_up() {
    require_navigation();
    if (index_ == 0) return view("Already at the top of the page.");
    --index_;
    return view();
}

PageView BrowserSession::page_down() {
    require_navigation();
    if (index_ + 1 >= static_cast<int>(viewports_.size())) return view("Already at the bottom of the page.");
    ++index_;
    return view();
}

std::string render_page_view(const PageView& v) {
    std::string out = fmt::format("Address: {}\nViewport {} of {}{}\n", v.url, v.viewport_index + 1, v.viewport_count,
                                  v.truncated ? " (truncated)" : "");
    if (!v.note.empty()) out += v.note + "\n";
    out += "=======================\n";
    out += v.text;
    return out;
}

std::string render_search_results(const std::vector<std::string>& queries, const SearchOutput& out) {
    std::string text = "Searched for:";
    for (const auto& q : queries) text += "\n- " + q;
    if (out.results.empty()) {
        text += "\nNo results found.";
    } else {
        text += fmt::format("\nFound {} results:", out.results.size());
        for (std::size_t i = 0; i < out.results.size(); ++i) {
            const auto& r = out.results[i];
            text += fmt::format("\n{}. {} ({}) [{}]", i + 1, r.title, r.url, r.provider);
            if (!r.snippet.empty()) text += "\n   " + r.snippet;
        }
    }
    for (const auto& w : out.warnings) text += "\nWarning: " + w;
    return text;
}

std::string read_attachment(const std::string& name, const std::vector<std::string>& attachments,
                            std::size_t max_bytes) {
    const std::string* match = nullptr;
    for (const auto& a : attachments) {
        if (a == name || fs::path(a).filename() == name) {
            match = &a;
            break;
        }
    }
    if (!match) throw AttachmentError(fmt::format("no attachment named '{}'", name));
    auto body = read_file(*match);
    if (!body) throw AttachmentError(fmt::format("cannot read attachment '{}'", name));
    if (body->find('\0') != std::string::npos)
        throw AttachmentError(fmt::format("attachment '{}' is not plain text", name));
    auto kept = utf8_prefix(*body, max_bytes);
    std::string out(kept);
    if (kept.size() < body->size()) out += "\n[attachment truncated]";
    return out;
}

Toolbox::Toolbox(const AgentConfig& cfg, ToolSettings settings, ProviderMap providers,
                 std::shared_ptr<PageFetcher> fetcher, std::vector<std::string> attachments, LlmSession& llm,
                 const PromptTemplates& templates)
    : cfg_(cfg),
      settings_(settings),
      providers_(std::move(providers)),
      fetcher_(std::move(fetcher)),
      attachments_(std::move(attachments)),
      llm_(llm),
      templates_(templates),
      browser_(cfg.page_strategy, std::move(settings)) {}

std::string Toolbox::describe() const {
    std::string out =
        "- search(query=\"...\"): web search; the query is expanded into several queries and sent to every source.\n"
        "- open_url(url=\"...\"): fetch a web page and show its text.\n";
    if (browser_.navigation_allowed()) {
        out += "- page_down(): show the next viewport of the open page.\n";
        out += "- page_up(): show the previous viewport of the open page.\n";
    }
    if (!attachments_.empty()) out += "- read_attachment(name=\"...\"): read an attached plain-text file.\n";
    out += "- final_answer(answer=\"...\"): finish with the answer.";
    return out;
}

Observation Toolbox::do_search(const std::string& query, int step_index) {
    auto expanded = expand_queries(query, cfg_.query_expansion_count, llm_, cfg_.backbone_id, templates_, step_index);
    auto out = search(cfg_.source_set, expanded.queries, cfg_.search_results_per_query, providers_);
    if (expanded.warning) out.warnings.insert(out.warnings.begin(), "query expansion failed; searched the original query");
    return {render_search_results(expanded.queries, out), std::nullopt};
}

Observation Toolbox::execute(const Action& action, int step_index) {
    auto failure = [](std::string msg) { return Observation{"Error: " + msg, msg}; };
    try {
        switch (action.name) {
            case ActionName::Search:
                return do_search(action.arg("query"), step_index);
            case ActionName::OpenUrl:
                return {render_page_view(browser_.open(action.arg("url"), *fetcher_)), std::nullopt};
            case ActionName::PageUp:
                return {render_page_view(browser_.page_up()), std::nullopt};
            case ActionName::PageDown:
                return {render_page_view(browser_.page_down()), std::nullopt};
            case ActionName::ReadAttachment:
                return {read_attachment(action.arg("name"), attachments_,
                                        static_cast<std::size_t>(settings_.crawler_max_chars)),
                        std::nullopt};
            case ActionName::FinalAnswer:
                return {};
        }
    } catch (const FetchError& e) {
        return failure(e.what());
    } catch (const AttachmentError& e) {
        return failure(e.what());
    } catch (const std::logic_error& e) {
        return failure(e.what());
    }
    return {};
}

}  // namespace effagents
