#include "effagents/trace.hpp"

#include <fmt/format.h>
#include <zlib.h>

#include <sstream>

namespace effagents {

void TraceWriter::emit(json event) {
    auto line = event.dump();
    std::lock_guard lock(mu_);
    lines_.push_back(std::move(line));
}

std::vector<std::string> TraceWriter::lines() const {
    std::lock_guard lock(mu_);
    return lines_;
}

std::string TraceWriter::text() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& l : lines_) {
        out += l;
        out += '\n';
    }
    return out;
}

void TraceWriter::save(const std::filesystem::path& path) const { write_gzip(path, text()); }

void write_gzip(const std::filesystem::path& path, std::string_view data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    gzFile f = gzopen(path.string().c_str(), "wb9");
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    std::size_t off = 0;
    while (off < data.size()) {
        const auto chunk = static_cast<unsigned>(std::min<std::size_t>(data.size() - off, 1u << 20));
        if (gzwrite(f, data.data() + off, chunk) != static_cast<int>(chunk)) {
            gzclose(f);
            throw std::runtime_error(fmt::format("short write to '{}'", path.string()));
        }
        off += chunk;
    }
    if (gzclose(f) != Z_OK) throw std::runtime_error(fmt::format("failed to close '{}'", path.string()));
}

std::string read_gzip(const std::filesystem::path& path) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
    std::string out;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw std::runtime_error(fmt::format("corrupt gzip stream in '{}'", path.string()));
    return out;
}

TraceFile parse_trace(std::string_view text) {
    TraceFile tf;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(fmt::format("trace line {}: {}", lineno, e.what()));
        }
        if (lineno == 1) {
            if (j.value("type", "") != "header") throw std::runtime_error("trace does not start with a header record");
            tf.header = std::move(j);
        } else {
            tf.events.push_back(std::move(j));
        }
    }
    if (tf.header.is_null()) throw std::runtime_error("empty trace");
    return tf;
}

TraceFile read_trace(const std::filesystem::path& path) { return parse_trace(read_gzip(path)); }

json trace_header(const std::string& run_id, const std::string& task_id, const AgentConfig& cfg,
                  const PricingTable& pricing) {
    json prices = json::object();
    for (const auto& [model, p] : pricing.entries) {
        prices[model] = {{"in_pico_per_token", p.pico_in()}, {"out_pico_per_token", p.pico_out()}};
    }
    const auto& d = pricing.effective_date;
    return {{"type", "header"},
            {"version", std::string(kArtifactVersion)},
            {"run_id", run_id},
            {"task_id", task_id},
            {"config", serialize_agent(cfg)},
            {"pricing",
             {{"effective_date", fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                                             static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()))},
              {"models", prices}}}};
}

AgentConfig config_from_header(const json& header) {
    return parse_config(header.at("config").get<std::string>()).agent;
}

PricingTable pricing_from_header(const json& header) {
    PricingTable t;
    const auto& p = header.at("pricing");
    t = parse_pricing(fmt::format("[pricing]\neffective_date = \"{}\"\n", p.at("effective_date").get<std::string>()));
    for (const auto& [model, v] : p.at("models").items()) {
        t.entries[model] = ModelPricing::from_pico(v.at("in_pico_per_token").get<std::int64_t>(),
                                                   v.at("out_pico_per_token").get<std::int64_t>());
    }
    return t;
}

json to_json(const ChatRequest& r) {
    json msgs = json::array();
    for (const auto& m : r.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    json j = {{"model", r.model_id},
              {"messages", msgs},
              {"temperature", r.temperature},
              {"purpose", to_string(r.purpose)},
              {"run_id", r.run_id},
              {"task_id", r.task_id}};
    if (r.max_output_tokens) j["max_output_tokens"] = *r.max_output_tokens;
    return j;
}

ChatRequest request_from_json(const json& j) {
    ChatRequest r;
    r.model_id = j.at("model").get<std::string>();
    for (const auto& m : j.at("messages"))
        r.messages.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    r.temperature = j.at("temperature").get<double>();
    r.purpose = parse_purpose(j.at("purpose").get<std::string>());
    r.run_id = j.value("run_id", "");
    r.task_id = j.value("task_id", "");
    if (j.contains("max_output_tokens")) r.max_output_tokens = j.at("max_output_tokens").get<int>();
    return r;
}

json to_json(const ChatResponse& r) {
    return {{"text", r.text},
            {"n_in", r.usage.n_in},
            {"n_out", r.usage.n_out},
            {"estimated", r.usage.estimated},
            {"latency_ms", r.latency_ms}};
}

ChatResponse response_from_json(const json& j) {
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.usage.n_in = j.at("n_in").get<std::int64_t>();
    r.usage.n_out = j.at("n_out").get<std::int64_t>();
    r.usage.estimated = j.value("estimated", false);
    r.latency_ms = j.value("latency_ms", 0);
    return r;
}

json to_json(const LedgerEntry& e) {
    return {{"run_id", e.run_id},
            {"step", e.step_index},
            {"purpose", to_string(e.purpose)},
            {"model", e.model_id},
            {"n_in", e.usage.n_in},
            {"n_out", e.usage.n_out},
            {"estimated", e.usage.estimated},
            {"cost_pico", e.cost.pico},
            {"error", e.error}};
}

LedgerEntry ledger_entry_from_json(const json& j) {
    LedgerEntry e;
    e.run_id = j.at("run_id").get<std::string>();
    e.step_index = j.at("step").get<int>();
    e.purpose = parse_purpose(j.at("purpose").get<std::string>());
    e.model_id = j.at("model").get<std::string>();
    e.usage.n_in = j.at("n_in").get<std::int64_t>();
    e.usage.n_out = j.at("n_out").get<std::int64_t>();
    e.usage.estimated = j.value("estimated", false);
    e.cost.pico = j.at("cost_pico").get<std::int64_t>();
    e.error = j.value("error", "");
    return e;
}

RunReplay::RunReplay(const TraceFile& trace) : header_(trace.header) {
    for (const auto& ev : trace.events) {
        const auto type = ev.value("type", "");
        if (type == "request") {
            llm_.push_back({ev.at("request"), json()});
        } else if (type == "response" || type == "call_error") {
            if (llm_.empty() || !llm_.back().outcome.is_null())
                throw std::runtime_error("trace has a model response without a request");
            llm_.back().outcome = ev;
        } else if (type == "search" || type == "fetch" || type == "embed") {
            queues_[type].push_back(ev);
        }
    }
}

ChatResponse RunReplay::next_response(const ChatRequest& live) {
    std::lock_guard lock(mu_);
    if (llm_.empty()) throw ReplayMismatch("run issued more model calls than the trace recorded");
    auto ex = std::move(llm_.front());
    llm_.pop_front();
    const auto live_json = to_json(live);
    if (live_json != ex.request)
        throw ReplayMismatch(fmt::format("request diverges from trace (purpose {}, recorded purpose {})",
                                         to_string(live.purpose), ex.request.value("purpose", "?")));
    if (ex.outcome.is_null()) throw ReplayMismatch("recorded request has no outcome");
    if (ex.outcome.at("type") == "call_error") {
        throw BackendError(parse_backend_error_kind(ex.outcome.at("kind").get<std::string>()),
                           ex.outcome.at("message").get<std::string>());
    }
    return response_from_json(ex.outcome.at("response"));
}

json RunReplay::next(const std::string& type) {
    std::lock_guard lock(mu_);
    auto& q = queues_[type];
    if (q.empty()) throw ReplayMismatch(fmt::format("no recorded '{}' event left", type));
    auto ev = std::move(q.front());
    q.pop_front();
    return ev;
}

bool RunReplay::exhausted() const {
    std::lock_guard lock(mu_);
    if (!llm_.empty()) return false;
    for (const auto& [_, q] : queues_) {
        if (!q.empty()) return false;
    }
    return true;
}

}  // namespace effagents
