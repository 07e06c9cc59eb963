#pragma once

#include "effagents/config.hpp"
#include "effagents/usage.hpp"

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace effagents {

/// Money as integer picodollars (1e-12 USD). Sums are exact; conversion to
/// floating USD happens only for display and ratios.
struct Money {
    std::int64_t pico = 0;

    static Money from_usd(double usd);
    double usd() const { return static_cast<double>(pico) * 1e-12; }
    // Whole micro-dollars, rounded half away from zero.
    std::int64_t micros() const;

    Money& operator+=(Money o) {
        pico += o.pico;
        return *this;
    }
    friend Money operator+(Money a, Money b) { return a += b; }
    auto operator<=>(const Money&) const = default;
};

/// C_m(p) for one call: n_in * c_in + n_out * c_out.
Money cost_of_attempt(const TokenUsage& usage, const ModelPricing& pricing);

/// Expected spend per solved problem: mean_cost / success_rate, +inf when
/// nothing is solved. Never NaN.
double cost_of_pass(double mean_cost, double success_rate);

struct LedgerEntry {
    std::string run_id;
    int step_index = 0;
    Purpose purpose = Purpose::Actor;
    std::string model_id;
    TokenUsage usage;
    Money cost;
    // Set when the call failed after retries; usage is then zero.
    std::string error;

    bool operator==(const LedgerEntry&) const = default;
};

struct LedgerTotals {
    std::int64_t n_in = 0;
    std::int64_t n_out = 0;
    Money cost;

    std::int64_t tokens() const { return n_in + n_out; }
    bool operator==(const LedgerTotals&) const = default;
};

/// Per-run accounting. Written by the run's own loop only.
class RunLedger {
public:
    explicit RunLedger(std::string run_id = {}) : run_id_(std::move(run_id)) {}

    const std::string& run_id() const { return run_id_; }

    // Prices the call and appends it. Returns the stored entry.
    const LedgerEntry& record(int step_index, Purpose purpose, const std::string& model_id, const TokenUsage& usage,
                              const ModelPricing& pricing);
    const LedgerEntry& record_failure(int step_index, Purpose purpose, const std::string& model_id,
                                      std::string error);
    void append(LedgerEntry entry);

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    const LedgerTotals& totals() const { return totals_; }
    std::size_t count(Purpose p) const;
    std::size_t count(Purpose p, int step_index) const;

private:
    std::string run_id_;
    std::vector<LedgerEntry> entries_;
    LedgerTotals totals_;
};

enum class Scope { All, L1, L2, L3 };
std::string_view to_string(Scope s);

struct AggregateRow {
    Scope scope = Scope::All;
    int task_count = 0;
    int solved_count = 0;
    double accuracy = 0.0;  // in [0, 1]
    Money total_cost;
    std::int64_t total_tokens = 0;
    double mean_cost_usd = 0.0;
    double mean_tokens = 0.0;
    double cost_of_pass = 0.0;  // may be +inf

    bool operator==(const AggregateRow&) const = default;
};

struct OutcomeSample {
    int level = 1;
    bool solved = false;
    Money cost;
    std::int64_t tokens = 0;
};

class EmptyBenchmark : public std::runtime_error {
public:
    EmptyBenchmark() : std::runtime_error("benchmark has no outcomes") {}
};

/// Rows for all, l1, l2, l3 in that order; scopes without tasks are omitted.
/// Cost-of-pass is the ratio of averages: total cost / solved count.
std::vector<AggregateRow> aggregate(const std::vector<OutcomeSample>& outcomes);

struct Comparison {
    double cost_reduction_pct = 0.0;
    double performance_retention_pct = 0.0;
};

class DivisionByZero : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Throws DivisionByZero when the baseline has zero cost or zero accuracy.
Comparison comparison_metrics(const AggregateRow& ours, const AggregateRow& baseline);
Comparison comparison_metrics(double ours_cost, double ours_accuracy, double baseline_cost, double baseline_accuracy);

}  // namespace effagents
