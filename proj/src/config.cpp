#include "effagents/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace effagents {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<Enum, N>& values, std::string_view what) {
    const auto needle = lower(s);
    for (auto v : values) {
        if (lower(to_string(v)) == needle) return v;
    }
    throw ConfigError(fmt::format("unknown {} '{}'", what, s));
}

constexpr std::array kSourceSets{SourceSet::Simple, SourceSet::Multi};
constexpr std::array kMemoryModes{MemoryMode::Simple,          MemoryMode::Summarized, MemoryMode::NoExtra,
                                  MemoryMode::ExtraSummarized, MemoryMode::ExtraFixed, MemoryMode::ExtraHybrid};
constexpr std::array kPrmModes{PrmMode::Score, PrmMode::List};
constexpr std::array kPageStrategies{PageStrategy::CrawlerStatic, PageStrategy::BrowserSimple,
                                     PageStrategy::BrowserComplex};

std::int64_t to_pico(double usd) {
    if (!(usd >= 0.0) || !std::isfinite(usd)) throw ConfigError(fmt::format("price must be a finite non-negative number, got {}", usd));
    return std::llround(usd * 1e12);
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string s(buf.data(), ptr);
    if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos &&
        s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

struct RawValue {
    std::string text;
    bool quoted = false;
    int line = 0;
};

std::string unquote(std::string_view v, int line) {
    std::string out;
    std::size_t i = 1;
    for (; i < v.size(); ++i) {
        char c = v[i];
        if (c == '"') break;
        if (c == '\\' && i + 1 < v.size()) {
            char n = v[++i];
            switch (n) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: out += n;
            }
        } else {
            out += c;
        }
    }
    if (i >= v.size()) throw ConfigError(fmt::format("line {}: unterminated string", line));
    auto rest = trim(v.substr(i + 1));
    if (!rest.empty() && rest[0] != '#') throw ConfigError(fmt::format("line {}: trailing characters after string", line));
    return out;
}

using Section = std::map<std::string, RawValue>;

struct Document {
    // Ordered by first appearance is not needed; sections are looked up by name.
    std::map<std::string, Section> sections;
};

Document parse_document(std::string_view text) {
    Document doc;
    std::string current;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(fmt::format("line {}: malformed section header", lineno));
            current = trim(std::string_view(t).substr(1, t.size() - 2));
            if (current.empty()) throw ConfigError(fmt::format("line {}: empty section name", lineno));
            doc.sections[current];
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
        if (current.empty()) throw ConfigError(fmt::format("line {}: key outside of any section", lineno));
        auto key = trim(std::string_view(t).substr(0, eq));
        auto value = trim(std::string_view(t).substr(eq + 1));
        RawValue rv;
        rv.line = lineno;
        if (!value.empty() && value[0] == '"') {
            rv.text = unquote(value, lineno);
            rv.quoted = true;
        } else {
            auto hash = value.find('#');
            rv.text = trim(std::string_view(value).substr(0, hash));
        }
        auto& sec = doc.sections[current];
        if (sec.count(key)) throw ConfigError(fmt::format("line {}: duplicate key '{}'", lineno, key));
        sec[key] = rv;
    }
    return doc;
}

class SectionReader {
public:
    SectionReader(std::string name, const Section& sec) : name_(std::move(name)), sec_(sec) {}

    // Every key must have been consumed by one of the typed readers.
    void finish() const {
        for (const auto& [k, v] : sec_) {
            if (!used_.count(k)) throw ConfigError(fmt::format("line {}: unknown key '{}' in [{}]", v.line, k, name_));
        }
    }

    void str(const char* key, std::string& out) {
        if (auto* v = find(key)) out = v->text;
    }

    void integer(const char* key, int& out) {
        if (auto* v = find(key)) {
            int parsed = 0;
            auto [p, ec] = std::from_chars(v->text.data(), v->text.data() + v->text.size(), parsed);
            if (ec != std::errc{} || p != v->text.data() + v->text.size())
                throw ConfigError(fmt::format("line {}: '{}' must be an integer", v->line, key));
            out = parsed;
        }
    }

    void real(const char* key, double& out) {
        if (auto* v = find(key)) {
            double parsed = 0;
            auto [p, ec] = std::from_chars(v->text.data(), v->text.data() + v->text.size(), parsed);
            if (ec != std::errc{} || p != v->text.data() + v->text.size())
                throw ConfigError(fmt::format("line {}: '{}' must be a number", v->line, key));
            out = parsed;
        }
    }

    void boolean(const char* key, bool& out) {
        if (auto* v = find(key)) {
            auto l = lower(v->text);
            if (l == "true") out = true;
            else if (l == "false") out = false;
            else throw ConfigError(fmt::format("line {}: '{}' must be true or false", v->line, key));
        }
    }

    template <typename F>
    void custom(const char* key, F&& apply) {
        if (auto* v = find(key)) apply(v->text);
    }

private:
    const RawValue* find(const char* key) {
        auto it = sec_.find(key);
        if (it == sec_.end()) return nullptr;
        used_.insert(it->first);
        return &it->second;
    }

    std::string name_;
    const Section& sec_;
    std::set<std::string> used_;
};

std::chrono::year_month_day parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
        auto r1 = std::from_chars(s.data(), s.data() + 4, y);
        auto r2 = std::from_chars(s.data() + 5, s.data() + 7, m);
        auto r3 = std::from_chars(s.data() + 8, s.data() + 10, d);
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (r1.ec == std::errc{} && r2.ec == std::errc{} && r3.ec == std::errc{} && ymd.ok()) return ymd;
    }
    throw ConfigError(fmt::format("invalid date '{}', expected YYYY-MM-DD", s));
}

std::string format_date(const std::chrono::year_month_day& d) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                       static_cast<unsigned>(d.day()));
}

void read_agent(SectionReader& r, AgentConfig& a) {
    r.str("backbone", a.backbone_id);
    r.integer("max_steps", a.max_steps);
    r.integer("plan_interval", a.plan_interval);
    r.custom("source_set", [&](const std::string& v) { a.source_set = parse_source_set(v); });
    r.integer("query_expansion_count", a.query_expansion_count);
    r.integer("bon_n", a.bon_n);
    r.custom("memory_mode", [&](const std::string& v) { a.memory_mode = parse_memory_mode(v); });
    r.custom("prm_mode", [&](const std::string& v) { a.prm_mode = parse_prm_mode(v); });
    r.custom("page_strategy", [&](const std::string& v) { a.page_strategy = parse_page_strategy(v); });
    r.str("judge_model", a.judge_model_id);
    r.real("temperature", a.temperature);
    r.real("bon_temperature", a.bon_temperature);
    r.integer("retrieval_k", a.retrieval_k);
    r.integer("note_max_chars", a.note_max_chars);
    r.integer("search_results_per_query", a.search_results_per_query);
}

void read_pricing_entry(SectionReader& r, const std::string& model, PricingTable& table) {
    double in = -1, out = -1;
    r.real("input_per_million", in);
    r.real("output_per_million", out);
    if (in < 0 || out < 0)
        throw ConfigError(fmt::format("[pricing.{}] needs non-negative input_per_million and output_per_million", model));
    table.entries[model] = ModelPricing::per_million(in, out);
}

void write_agent(std::ostringstream& o, const AgentConfig& a) {
    o << "[agent]\n";
    o << "backbone = " << quote(a.backbone_id) << "\n";
    o << "max_steps = " << a.max_steps << "\n";
    o << "plan_interval = " << a.plan_interval << "\n";
    o << "source_set = " << quote(to_string(a.source_set)) << "\n";
    o << "query_expansion_count = " << a.query_expansion_count << "\n";
    o << "bon_n = " << a.bon_n << "\n";
    o << "memory_mode = " << quote(to_string(a.memory_mode)) << "\n";
    o << "prm_mode = " << quote(to_string(a.prm_mode)) << "\n";
    o << "page_strategy = " << quote(to_string(a.page_strategy)) << "\n";
    o << "judge_model = " << quote(a.judge_model_id) << "\n";
    o << "temperature = " << format_double(a.temperature) << "\n";
    o << "bon_temperature = " << format_double(a.bon_temperature) << "\n";
    o << "retrieval_k = " << a.retrieval_k << "\n";
    o << "note_max_chars = " << a.note_max_chars << "\n";
    o << "search_results_per_query = " << a.search_results_per_query << "\n";
}

void write_pricing(std::ostringstream& o, const PricingTable& p) {
    o << "\n[pricing]\n";
    o << "effective_date = " << quote(format_date(p.effective_date)) << "\n";
    for (const auto& [model, price] : p.entries) {
        o << "\n[pricing." << model << "]\n";
        o << "input_per_million = " << format_double(price.usd_in_per_million()) << "\n";
        o << "output_per_million = " << format_double(price.usd_out_per_million()) << "\n";
    }
}

std::pair<std::string, std::string> split_section(const std::string& name) {
    auto dot = name.find('.');
    if (dot == std::string::npos) return {name, {}};
    return {name.substr(0, dot), name.substr(dot + 1)};
}

}  // namespace

std::string_view to_string(SourceSet v) {
    switch (v) {
        case SourceSet::Simple: return "Simple";
        case SourceSet::Multi: return "Multi";
    }
    return "?";
}

std::string_view to_string(MemoryMode v) {
    switch (v) {
        case MemoryMode::Simple: return "Simple";
        case MemoryMode::Summarized: return "Summarized";
        case MemoryMode::NoExtra: return "NoExtra";
        case MemoryMode::ExtraSummarized: return "ExtraSummarized";
        case MemoryMode::ExtraFixed: return "ExtraFixed";
        case MemoryMode::ExtraHybrid: return "ExtraHybrid";
    }
    return "?";
}

std::string_view to_string(PrmMode v) { return v == PrmMode::Score ? "Score" : "List"; }

std::string_view to_string(PageStrategy v) {
    switch (v) {
        case PageStrategy::CrawlerStatic: return "CrawlerStatic";
        case PageStrategy::BrowserSimple: return "BrowserSimple";
        case PageStrategy::BrowserComplex: return "BrowserComplex";
    }
    return "?";
}

SourceSet parse_source_set(std::string_view s) { return parse_enum(s, kSourceSets, "source set"); }
MemoryMode parse_memory_mode(std::string_view s) { return parse_enum(s, kMemoryModes, "memory mode"); }
PrmMode parse_prm_mode(std::string_view s) { return parse_enum(s, kPrmModes, "PRM mode"); }
PageStrategy parse_page_strategy(std::string_view s) { return parse_enum(s, kPageStrategies, "page strategy"); }

AgentConfig default_config() {
    AgentConfig cfg;
    cfg.backbone_id = std::string(kGpt41);
    cfg.max_steps = 12;
    cfg.plan_interval = 1;
    cfg.source_set = SourceSet::Simple;
    cfg.query_expansion_count = 10;
    cfg.bon_n = 1;
    cfg.memory_mode = MemoryMode::Simple;
    return cfg;
}

AgentConfig efficient_agents_config() {
    AgentConfig cfg = default_config();
    cfg.max_steps = 8;
    cfg.source_set = SourceSet::Multi;
    cfg.query_expansion_count = 5;
    return cfg;
}

ModelPricing ModelPricing::per_token(double usd_in, double usd_out) {
    ModelPricing p;
    p.pico_in_ = to_pico(usd_in);
    p.pico_out_ = to_pico(usd_out);
    return p;
}

ModelPricing ModelPricing::per_million(double usd_in_per_m, double usd_out_per_m) {
    ModelPricing p;
    if (!(usd_in_per_m >= 0.0) || !(usd_out_per_m >= 0.0))
        throw ConfigError("prices must be non-negative");
    p.pico_in_ = std::llround(usd_in_per_m * 1e6);
    p.pico_out_ = std::llround(usd_out_per_m * 1e6);
    return p;
}

ModelPricing ModelPricing::from_pico(std::int64_t pico_in, std::int64_t pico_out) {
    if (pico_in < 0 || pico_out < 0) throw ConfigError("prices must be non-negative");
    ModelPricing p;
    p.pico_in_ = pico_in;
    p.pico_out_ = pico_out;
    return p;
}

MissingPricing::MissingPricing(std::string model)
    : std::runtime_error(fmt::format("no pricing configured for model '{}'", model)), model_(std::move(model)) {}

const ModelPricing& PricingTable::at(std::string_view model) const {
    auto it = entries.find(std::string(model));
    if (it == entries.end()) throw MissingPricing(std::string(model));
    return it->second;
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& i : issues) msg += " " + i.message + ";";
          return msg;
      }()),
      issues_(std::move(issues)) {}

ValidatedConfig validate_config(const AgentConfig& cfg, const PricingTable& pricing) {
    std::vector<ConfigIssue> issues;
    auto positive = [&](const char* field, int v) {
        if (v < 1)
            issues.push_back({ConfigIssue::Kind::RangeError, field, fmt::format("{} must be >= 1 (got {})", field, v)});
    };
    positive("max_steps", cfg.max_steps);
    positive("plan_interval", cfg.plan_interval);
    positive("query_expansion_count", cfg.query_expansion_count);
    positive("bon_n", cfg.bon_n);
    positive("retrieval_k", cfg.retrieval_k);
    positive("note_max_chars", cfg.note_max_chars);
    positive("search_results_per_query", cfg.search_results_per_query);
    if (!(cfg.temperature >= 0.0))
        issues.push_back({ConfigIssue::Kind::RangeError, "temperature", "temperature must be >= 0"});
    if (!(cfg.bon_temperature >= 0.0))
        issues.push_back({ConfigIssue::Kind::RangeError, "bon_temperature", "bon_temperature must be >= 0"});
    if (cfg.backbone_id.empty())
        issues.push_back({ConfigIssue::Kind::RangeError, "backbone", "backbone must not be empty"});
    else if (!pricing.contains(cfg.backbone_id))
        issues.push_back({ConfigIssue::Kind::MissingPricing, cfg.backbone_id,
                          fmt::format("no pricing for backbone '{}'", cfg.backbone_id)});
    if (!cfg.judge_model_id.empty() && !pricing.contains(cfg.judge_model_id))
        issues.push_back({ConfigIssue::Kind::MissingPricing, cfg.judge_model_id,
                          fmt::format("no pricing for judge model '{}'", cfg.judge_model_id)});

    ValidatedConfig out;
    if (issues.empty()) out.config = cfg;
    out.issues = std::move(issues);
    return out;
}

const AgentConfig& require_valid(const AgentConfig& cfg, const PricingTable& pricing) {
    auto v = validate_config(cfg, pricing);
    if (!v.ok()) throw ConfigError(std::move(v.issues));
    return cfg;
}

ExperimentConfig parse_config(std::string_view text) {
    auto doc = parse_document(text);
    ExperimentConfig cfg;
    for (const auto& [name, sec] : doc.sections) {
        auto [kind, sub] = split_section(name);
        SectionReader r(name, sec);
        if (name == "agent") {
            read_agent(r, cfg.agent);
        } else if (name == "pricing") {
            r.custom("effective_date", [&](const std::string& v) { cfg.pricing.effective_date = parse_date(v); });
        } else if (kind == "pricing" && !sub.empty()) {
            read_pricing_entry(r, sub, cfg.pricing);
        } else if (kind == "endpoint" && !sub.empty()) {
            auto& e = cfg.endpoints[sub];
            r.str("base_url", e.base_url);
            r.str("api_key_env", e.api_key_env);
        } else if (name == "embedding") {
            r.str("base_url", cfg.embedding.base_url);
            r.str("model", cfg.embedding.model);
            r.str("api_key_env", cfg.embedding.api_key_env);
            r.integer("dimension", cfg.embedding.dimension);
        } else if (kind == "search" && !sub.empty()) {
            auto& s = cfg.search[sub];
            r.str("url", s.url);
            r.str("api_key_env", s.api_key_env);
            r.str("items", s.items);
            r.str("title", s.title);
            r.str("link", s.link);
            r.str("snippet", s.snippet);
        } else if (name == "tools") {
            r.integer("viewport_chars", cfg.tools.viewport_chars);
            r.integer("crawler_max_chars", cfg.tools.crawler_max_chars);
            r.str("user_agent", cfg.tools.user_agent);
            r.integer("politeness_ms", cfg.tools.politeness_ms);
            r.boolean("respect_robots", cfg.tools.respect_robots);
        } else if (name == "harness") {
            r.integer("run_timeout_s", cfg.harness.run_timeout_s);
            r.integer("workers", cfg.harness.workers);
        } else {
            throw ConfigError(fmt::format("unknown section [{}]", name));
        }
        r.finish();
    }
    if (cfg.tools.viewport_chars < 1 || cfg.tools.crawler_max_chars < 1)
        throw ConfigError("viewport_chars and crawler_max_chars must be >= 1");
    if (cfg.embedding.dimension < 1) throw ConfigError("embedding dimension must be >= 1");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

PricingTable parse_pricing(std::string_view text) {
    auto cfg = parse_config(text);
    return cfg.pricing;
}

std::string serialize_agent(const AgentConfig& cfg) {
    std::ostringstream o;
    write_agent(o, cfg);
    return o.str();
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream o;
    write_agent(o, cfg.agent);
    write_pricing(o, cfg.pricing);
    for (const auto& [model, e] : cfg.endpoints) {
        o << "\n[endpoint." << model << "]\n";
        o << "base_url = " << quote(e.base_url) << "\n";
        o << "api_key_env = " << quote(e.api_key_env) << "\n";
    }
    o << "\n[embedding]\n";
    o << "base_url = " << quote(cfg.embedding.base_url) << "\n";
    o << "model = " << quote(cfg.embedding.model) << "\n";
    o << "api_key_env = " << quote(cfg.embedding.api_key_env) << "\n";
    o << "dimension = " << cfg.embedding.dimension << "\n";
    for (const auto& [name, s] : cfg.search) {
        o << "\n[search." << name << "]\n";
        o << "url = " << quote(s.url) << "\n";
        o << "api_key_env = " << quote(s.api_key_env) << "\n";
        o << "items = " << quote(s.items) << "\n";
        o << "title = " << quote(s.title) << "\n";
        o << "link = " << quote(s.link) << "\n";
        o << "snippet = " << quote(s.snippet) << "\n";
    }
    o << "\n[tools]\n";
    o << "viewport_chars = " << cfg.tools.viewport_chars << "\n";
    o << "crawler_max_chars = " << cfg.tools.crawler_max_chars << "\n";
    o << "user_agent = " << quote(cfg.tools.user_agent) << "\n";
    o << "politeness_ms = " << cfg.tools.politeness_ms << "\n";
    o << "respect_robots = " << (cfg.tools.respect_robots ? "true" : "false") << "\n";
    o << "\n[harness]\n";
    o << "run_timeout_s = " << cfg.harness.run_timeout_s << "\n";
    o << "workers = " << cfg.harness.workers << "\n";
    return o.str();
}

std::string config_hash(const AgentConfig& cfg) {
    // FNV-1a over the canonical [agent] rendering.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : serialize_agent(cfg)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace effagents
