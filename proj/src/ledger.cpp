#include "effagents/ledger.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace effagents {

std::string_view to_string(Purpose p) {
    switch (p) {
        case Purpose::Actor: return "actor";
        case Purpose::Planner: return "planner";
        case Purpose::Prm: return "prm";
        case Purpose::Memory: return "memory";
        case Purpose::QueryExpansion: return "query_expansion";
    }
    return "?";
}

Purpose parse_purpose(std::string_view s) {
    for (auto p : {Purpose::Actor, Purpose::Planner, Purpose::Prm, Purpose::Memory, Purpose::QueryExpansion}) {
        if (to_string(p) == s) return p;
    }
    throw std::invalid_argument(fmt::format("unknown purpose tag '{}'", s));
}

Money Money::from_usd(double usd) { return Money{std::llround(usd * 1e12)}; }

std::int64_t Money::micros() const {
    const std::int64_t q = pico / 1000000;
    const std::int64_t r = pico % 1000000;
    if (r >= 500000) return q + 1;
    if (r <= -500000) return q - 1;
    return q;
}

Money cost_of_attempt(const TokenUsage& usage, const ModelPricing& pricing) {
    return Money{usage.n_in * pricing.pico_in() + usage.n_out * pricing.pico_out()};
}

double cost_of_pass(double mean_cost, double success_rate) {
    if (success_rate > 0.0) return mean_cost / success_rate;
    return std::numeric_limits<double>::infinity();
}

const LedgerEntry& RunLedger::record(int step_index, Purpose purpose, const std::string& model_id,
                                     const TokenUsage& usage, const ModelPricing& pricing) {
    LedgerEntry e;
    e.run_id = run_id_;
    e.step_index = step_index;
    e.purpose = purpose;
    e.model_id = model_id;
    e.usage = usage;
    e.cost = cost_of_attempt(usage, pricing);
    append(std::move(e));
    return entries_.back();
}

const LedgerEntry& RunLedger::record_failure(int step_index, Purpose purpose, const std::string& model_id,
                                             std::string error) {
    LedgerEntry e;
    e.run_id = run_id_;
    e.step_index = step_index;
    e.purpose = purpose;
    e.model_id = model_id;
    e.error = error.empty() ? "error" : std::move(error);
    append(std::move(e));
    return entries_.back();
}

void RunLedger::append(LedgerEntry entry) {
    totals_.n_in += entry.usage.n_in;
    totals_.n_out += entry.usage.n_out;
    totals_.cost += entry.cost;
    entries_.push_back(std::move(entry));
}

std::size_t RunLedger::count(Purpose p) const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [&](const LedgerEntry& e) { return e.purpose == p; }));
}

std::size_t RunLedger::count(Purpose p, int step_index) const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [&](const LedgerEntry& e) {
        return e.purpose == p && e.step_index == step_index;
    }));
}

std::string_view to_string(Scope s) {
    switch (s) {
        case Scope::All: return "all";
        case Scope::L1: return "l1";
        case Scope::L2: return "l2";
        case Scope::L3: return "l3";
    }
    return "?";
}

std::vector<AggregateRow> aggregate(const std::vector<OutcomeSample>& outcomes) {
    if (outcomes.empty()) throw EmptyBenchmark();

    std::array<AggregateRow, 4> rows{};
    for (int i = 0; i < 4; ++i) rows[i].scope = static_cast<Scope>(i);

    for (const auto& o : outcomes) {
        if (o.level < 1 || o.level > 3) throw std::invalid_argument(fmt::format("task level {} outside 1..3", o.level));
        for (auto* row : {&rows[0], &rows[o.level]}) {
            row->task_count += 1;
            row->solved_count += o.solved ? 1 : 0;
            row->total_cost += o.cost;
            row->total_tokens += o.tokens;
        }
    }

    std::vector<AggregateRow> out;
    for (auto& row : rows) {
        if (row.task_count == 0) continue;
        const double n = row.task_count;
        row.accuracy = row.solved_count / n;
        row.mean_cost_usd = row.total_cost.usd() / n;
        row.mean_tokens = static_cast<double>(row.total_tokens) / n;
        // mean / (solved / n) == total / solved, computed without the extra rounding.
        row.cost_of_pass = row.solved_count > 0 ? row.total_cost.usd() / row.solved_count
                                                : std::numeric_limits<double>::infinity();
        out.push_back(row);
    }
    return out;
}

Comparison comparison_metrics(double ours_cost, double ours_accuracy, double baseline_cost, double baseline_accuracy) {
    if (!(baseline_cost > 0.0)) throw DivisionByZero("baseline mean cost must be > 0");
    if (!(baseline_accuracy > 0.0)) throw DivisionByZero("baseline accuracy must be > 0");
    return Comparison{(1.0 - ours_cost / baseline_cost) * 100.0, (ours_accuracy / baseline_accuracy) * 100.0};
}

Comparison comparison_metrics(const AggregateRow& ours, const AggregateRow& baseline) {
    return comparison_metrics(ours.mean_cost_usd, ours.accuracy, baseline.mean_cost_usd, baseline.accuracy);
}

}  // namespace effagents
