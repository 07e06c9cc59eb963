#pragma once

#include "effagents/agent.hpp"
#include "effagents/backend.hpp"
#include "effagents/config.hpp"
#include "effagents/embedder.hpp"
#include "effagents/ledger.hpp"
#include "effagents/report.hpp"
#include "effagents/templates.hpp"
#include "effagents/tools.hpp"
#include "effagents/trace.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace effagents {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DuplicateId : public std::runtime_error {
public:
    explicit DuplicateId(const std::string& task_id);
};

/// GAIA metadata lines: task_id, Level, Question, "Final answer", file_name.
/// Attachment names resolve against `base_dir`.
std::vector<Task> parse_tasks(std::string_view text, const std::filesystem::path& base_dir = {});
std::vector<Task> load_tasks(const std::filesystem::path& path);

struct TaskOutcome {
    std::string task_id;
    int level = 1;
    bool solved = false;
    std::string final_answer;
    Money cost;
    std::int64_t tokens = 0;
    TerminatedBy terminated_by = TerminatedBy::FinalAnswer;
    std::string error;
    bool operator==(const TaskOutcome&) const = default;
};

TaskOutcome grade_record(const Task& task, const TaskRunRecord& record);
std::vector<AggregateRow> aggregate_outcomes(const std::vector<TaskOutcome>& outcomes);

json to_json(const TaskOutcome& o);
TaskOutcome outcome_from_json(const json& j);
json to_json(const Task& t);
Task task_from_json(const json& j);
void save_outcomes(const std::filesystem::path& path, const std::vector<TaskOutcome>& outcomes);
std::vector<TaskOutcome> load_outcomes(const std::filesystem::path& path);

/// Read-only collaborators shared by every run of a benchmark.
struct Services {
    std::shared_ptr<ChatBackend> backend;
    ProviderMap providers;
    std::shared_ptr<PageFetcher> fetcher;
    std::shared_ptr<Embedder> embedder;
    ToolSettings tools;
    PromptTemplates templates = PromptTemplates::builtin();
};

// Fixture search/pages under `fixture_dir`, hashing embedder.
Services fixture_services(std::shared_ptr<ChatBackend> backend, const std::filesystem::path& fixture_dir,
                          const ExperimentConfig& cfg);
// HTTP search endpoints from [search.*], live page fetching, configured embedder.
Services live_services(std::shared_ptr<ChatBackend> backend, const ExperimentConfig& cfg);

// "<task_id>.<config hash>"; also the trace file stem.
std::string run_id_for(const std::string& task_id, const AgentConfig& cfg);
std::string trace_file_name(const std::string& task_id, const AgentConfig& cfg);

struct RunResult {
    TaskRunRecord record;
    TaskOutcome outcome;
    std::shared_ptr<TraceWriter> trace;
};

/// One traced run. `timeout` of zero disables the wall-clock limit.
RunResult run_one(const Task& task, const AgentConfig& cfg, const PricingTable& pricing, const Services& services,
                  std::chrono::seconds timeout);

/// Re-executes a recorded run with every external answer taken from the trace.
RunResult replay_one(const TraceFile& trace, const PromptTemplates& templates);

struct BenchmarkOptions {
    int workers = 1;
    std::optional<std::filesystem::path> trace_dir;
    std::chrono::seconds run_timeout{600};
};

struct BenchmarkResult {
    std::vector<TaskOutcome> outcomes;  // sorted by task_id
    std::vector<AggregateRow> rows;
};

class BenchmarkAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs every task with at most `workers` in flight. Failed runs count as
/// unsolved with their partial cost; if every run aborts, throws BenchmarkAborted.
BenchmarkResult run_benchmark(const std::vector<Task>& tasks, const AgentConfig& cfg, const PricingTable& pricing,
                              const Services& services, const BenchmarkOptions& options);

/// Replays every trace (sorted by file name); writes fresh traces to `trace_dir` if given.
BenchmarkResult replay_benchmark(const std::vector<std::filesystem::path>& traces, const PromptTemplates& templates,
                                 const std::optional<std::filesystem::path>& trace_dir);

class UnknownAxis : public std::invalid_argument {
public:
    explicit UnknownAxis(const std::string& axis);
};

const std::vector<std::string>& sweepable_axes();

/// One config per value, each equal to `base` except for `axis`.
std::vector<AgentConfig> sweep_configs(const AgentConfig& base, const std::string& axis,
                                       const std::vector<std::string>& values);

struct SweepPoint {
    std::string value;
    AgentConfig config;
    BenchmarkResult result;
};

std::vector<SweepPoint> sweep(const AgentConfig& base, const std::string& axis, const std::vector<std::string>& values,
                              const std::vector<Task>& tasks, const PricingTable& pricing, const Services& services,
                              const BenchmarkOptions& options);

std::vector<ReportRow> label_rows(const std::string& label, const std::vector<AggregateRow>& rows);
std::vector<ReportRow> sweep_rows(const std::string& axis, const std::vector<SweepPoint>& points);

}  // namespace effagents
