#pragma once

#include "effagents/backend.hpp"
#include "effagents/config.hpp"
#include "effagents/ledger.hpp"

#include "json.hpp"

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace effagents {

using json = nlohmann::json;

inline constexpr std::string_view kArtifactVersion = "1.0.0";

/// Receives structured run events in issue order.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void emit(json event) = 0;
};

/// Buffers one run's events as compact JSON lines. Saved gzip-compressed.
class TraceWriter : public TraceSink {
public:
    void emit(json event) override;

    std::vector<std::string> lines() const;
    std::string text() const;
    // gzip; the output has no timestamp so identical runs give identical bytes.
    void save(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    std::vector<std::string> lines_;
};

struct TraceFile {
    json header;
    std::vector<json> events;
};

void write_gzip(const std::filesystem::path& path, std::string_view data);
std::string read_gzip(const std::filesystem::path& path);
TraceFile read_trace(const std::filesystem::path& path);
TraceFile parse_trace(std::string_view text);

json trace_header(const std::string& run_id, const std::string& task_id, const AgentConfig& cfg,
                  const PricingTable& pricing);
AgentConfig config_from_header(const json& header);
PricingTable pricing_from_header(const json& header);

json to_json(const ChatRequest& r);
ChatRequest request_from_json(const json& j);
json to_json(const ChatResponse& r);
ChatResponse response_from_json(const json& j);
json to_json(const LedgerEntry& e);
LedgerEntry ledger_entry_from_json(const json& j);

class ReplayMismatch : public BackendError {
public:
    explicit ReplayMismatch(const std::string& message) : BackendError(BackendErrorKind::ReplayMismatch, message) {}
};

/// The recorded external I/O of one run, consumed in order during replay.
class RunReplay {
public:
    explicit RunReplay(const TraceFile& trace);

    const json& header() const { return header_; }

    // Returns the recorded response for the next model call, or rethrows the
    // recorded failure. Throws ReplayMismatch if the live request differs.
    ChatResponse next_response(const ChatRequest& live);
    // Pops the next recorded event of `type` (search, fetch, embed).
    json next(const std::string& type);
    bool exhausted() const;

private:
    struct Exchange {
        json request;
        json outcome;
    };

    json header_;
    mutable std::mutex mu_;
    std::deque<Exchange> llm_;
    std::map<std::string, std::deque<json>> queues_;
};

class ReplayBackend : public ChatBackend {
public:
    explicit ReplayBackend(std::shared_ptr<RunReplay> replay) : replay_(std::move(replay)) {}
    ChatResponse complete(const ChatRequest& request) override { return replay_->next_response(request); }

private:
    std::shared_ptr<RunReplay> replay_;
};

}  // namespace effagents
