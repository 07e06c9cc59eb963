#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace effagents {

enum class SourceSet { Simple, Multi };
enum class MemoryMode { Simple, Summarized, NoExtra, ExtraSummarized, ExtraFixed, ExtraHybrid };
enum class PrmMode { Score, List };
enum class PageStrategy { CrawlerStatic, BrowserSimple, BrowserComplex };

std::string_view to_string(SourceSet v);
std::string_view to_string(MemoryMode v);
std::string_view to_string(PrmMode v);
std::string_view to_string(PageStrategy v);

// Parsers accept the canonical names above, case-insensitively.
SourceSet parse_source_set(std::string_view s);
MemoryMode parse_memory_mode(std::string_view s);
PrmMode parse_prm_mode(std::string_view s);
PageStrategy parse_page_strategy(std::string_view s);

inline constexpr std::string_view kGpt41 = "gpt-4.1";

/// One row of the experiment grid. Every field the efficiency study varies
/// lives here, plus the sampling knobs the agent loop needs.
struct AgentConfig {
    std::string backbone_id{kGpt41};
    int max_steps = 12;
    int plan_interval = 1;
    SourceSet source_set = SourceSet::Simple;
    int query_expansion_count = 10;
    int bon_n = 1;
    MemoryMode memory_mode = MemoryMode::Simple;
    PrmMode prm_mode = PrmMode::Score;
    PageStrategy page_strategy = PageStrategy::CrawlerStatic;
    // Empty means "judge with the backbone".
    std::string judge_model_id;
    double temperature = 0.0;
    double bon_temperature = 0.7;
    int retrieval_k = 3;
    int note_max_chars = 2000;
    int search_results_per_query = 3;

    const std::string& judge_model() const { return judge_model_id.empty() ? backbone_id : judge_model_id; }

    bool operator==(const AgentConfig&) const = default;
};

/// Baseline setup: GPT-4.1, 12 steps, replan every step, Google+Wikipedia,
/// 10 expanded queries, no Best-of-N, simple memory.
AgentConfig default_config();

/// The tuned configuration: same as the default except 8 steps, all five
/// search sources and 5 expanded queries.
AgentConfig efficient_agents_config();

/// Per-token prices held as integer picodollars so costs sum exactly.
class ModelPricing {
public:
    ModelPricing() = default;

    static ModelPricing per_token(double usd_in, double usd_out);
    static ModelPricing per_million(double usd_in_per_m, double usd_out_per_m);
    static ModelPricing from_pico(std::int64_t pico_in, std::int64_t pico_out);

    double c_in() const { return static_cast<double>(pico_in_) * 1e-12; }
    double c_out() const { return static_cast<double>(pico_out_) * 1e-12; }
    double usd_in_per_million() const { return static_cast<double>(pico_in_) * 1e-6; }
    double usd_out_per_million() const { return static_cast<double>(pico_out_) * 1e-6; }
    std::int64_t pico_in() const { return pico_in_; }
    std::int64_t pico_out() const { return pico_out_; }

    bool operator==(const ModelPricing&) const = default;

private:
    std::int64_t pico_in_ = 0;
    std::int64_t pico_out_ = 0;
};

class MissingPricing : public std::runtime_error {
public:
    explicit MissingPricing(std::string model);
    const std::string& model() const { return model_; }

private:
    std::string model_;
};

struct PricingTable {
    std::map<std::string, ModelPricing> entries;
    std::chrono::year_month_day effective_date{std::chrono::year{2025}, std::chrono::month{5}, std::chrono::day{1}};

    bool contains(std::string_view model) const { return entries.find(std::string(model)) != entries.end(); }
    // Throws MissingPricing; an unknown model never prices at zero.
    const ModelPricing& at(std::string_view model) const;

    bool operator==(const PricingTable&) const = default;
};

struct ConfigIssue {
    enum class Kind { MissingPricing, RangeError };
    Kind kind;
    std::string field;  // field name, or model id for MissingPricing
    std::string message;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

struct ValidatedConfig {
    std::optional<AgentConfig> config;
    std::vector<ConfigIssue> issues;

    bool ok() const { return config.has_value(); }
};

ValidatedConfig validate_config(const AgentConfig& cfg, const PricingTable& pricing);
// Throws ConfigError listing every issue.
const AgentConfig& require_valid(const AgentConfig& cfg, const PricingTable& pricing);

struct EndpointSettings {
    std::string base_url = "https://api.openai.com";
    std::string api_key_env = "OPENAI_API_KEY";
    bool operator==(const EndpointSettings&) const = default;
};

struct EmbeddingSettings {
    std::string base_url;  // empty selects the local hashing embedder
    std::string model = "text-embedding-3-small";
    std::string api_key_env = "OPENAI_API_KEY";
    int dimension = 256;
    bool operator==(const EmbeddingSettings&) const = default;
};

/// A JSON search endpoint. `url` may contain {query} and {limit};
/// the three paths are JSON pointers relative to each element of `items`.
struct SearchProviderSettings {
    std::string url;
    std::string api_key_env;
    std::string items = "/items";
    std::string title = "/title";
    std::string link = "/link";
    std::string snippet = "/snippet";
    bool operator==(const SearchProviderSettings&) const = default;
};

struct ToolSettings {
    int viewport_chars = 8000;
    int crawler_max_chars = 40000;
    std::string user_agent = "effagents/1.0 (+research crawler)";
    int politeness_ms = 500;
    bool respect_robots = true;
    bool operator==(const ToolSettings&) const = default;
};

struct HarnessSettings {
    int run_timeout_s = 600;
    int workers = 1;
    bool operator==(const HarnessSettings&) const = default;
};

/// Everything a config file can hold.
struct ExperimentConfig {
    AgentConfig agent;
    PricingTable pricing;
    std::map<std::string, EndpointSettings> endpoints;
    EmbeddingSettings embedding;
    std::map<std::string, SearchProviderSettings> search;
    ToolSettings tools;
    HarnessSettings harness;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the sectioned key/value format:
///
///   [agent]
///   backbone = "gpt-4.1"
///   max_steps = 12
///   [pricing]
///   effective_date = "2025-05-01"
///   [pricing.gpt-4.1]
///   input_per_million = 2.0
///   output_per_million = 8.0
///
/// Unknown sections or keys are errors. Prices are USD per 1M tokens.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Only the [agent] section; used for run ids and trace names.
std::string serialize_agent(const AgentConfig& cfg);
std::string config_hash(const AgentConfig& cfg);

// Parses a pricing-only document ([pricing] and [pricing.<id>] sections).
PricingTable parse_pricing(std::string_view text);

}  // namespace effagents
