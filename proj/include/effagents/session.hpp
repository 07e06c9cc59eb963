#pragma once

#include "effagents/backend.hpp"
#include "effagents/config.hpp"
#include "effagents/ledger.hpp"
#include "effagents/trace.hpp"

#include <chrono>
#include <optional>
#include <string>

namespace effagents {

class RunTimeout : public std::runtime_error {
public:
    RunTimeout() : std::runtime_error("run exceeded its wall-clock limit") {}
};

/// The only path from a run to a model. Each call is priced into the run's
/// ledger and written to its trace, including calls that fail after retries.
class LlmSession {
public:
    LlmSession(ChatBackend& backend, const PricingTable& pricing, RunLedger& ledger, TraceSink* trace,
               std::string run_id, std::string task_id);

    // Fills run_id/task_id, checks the deadline, then calls the backend.
    ChatResponse complete(ChatRequest request, int step_index);

    void set_deadline(std::chrono::steady_clock::time_point deadline) { deadline_ = deadline; }
    void check_deadline() const;

    const RunLedger& ledger() const { return ledger_; }
    TraceSink* trace() const { return trace_; }
    const std::string& run_id() const { return run_id_; }
    const std::string& task_id() const { return task_id_; }
    void emit(json event) const;

private:
    ChatBackend& backend_;
    const PricingTable& pricing_;
    RunLedger& ledger_;
    TraceSink* trace_;
    std::string run_id_;
    std::string task_id_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    int seq_ = 0;
};

}  // namespace effagents
