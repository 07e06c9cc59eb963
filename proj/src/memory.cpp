#include "effagents/memory.hpp"

#include "effagents/tools.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace effagents {

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t got)
    : std::invalid_argument(fmt::format("vector dimension {} does not match {}", got, expected)) {}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector();
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

VectorStore::VectorStore(int dimension) : dimension_(dimension) {
    if (dimension < 1) throw std::invalid_argument("vector store dimension must be positive");
}

void VectorStore::add(SummaryEntry entry) {
    if (static_cast<int>(entry.embedding.size()) != dimension_)
        throw DimensionMismatch(static_cast<std::size_t>(dimension_), entry.embedding.size());
    normalize(entry.embedding);
    entries_.push_back(std::move(entry));
}

std::vector<SummaryEntry> retrieve_top_k(const VectorStore& store, std::span<const double> query, int k) {
    if (static_cast<int>(query.size()) != store.dimension())
        throw DimensionMismatch(static_cast<std::size_t>(store.dimension()), query.size());
    const auto& entries = store.entries();
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        scored.emplace_back(cosine_similarity(entries[i].embedding, query), i);
    std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        const auto sx = entries[x.second].step_index;
        const auto sy = entries[y.second].step_index;
        return sx != sy ? sx < sy : x.second < y.second;
    });
    const auto n = std::min(scored.size(), static_cast<std::size_t>(std::max(k, 0)));
    std::vector<SummaryEntry> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(entries[scored[i].second]);
    return out;
}

LongTermNote::LongTermNote(int max_chars) : max_chars_(max_chars) {
    if (max_chars < 1) throw std::invalid_argument("note_max_chars must be positive");
}

void LongTermNote::set(std::string_view text) { text_ = std::string(utf8_prefix(text, static_cast<std::size_t>(max_chars_))); }

namespace {

std::string action_text(const Step& step) {
    if (step.action) return format_action(*step.action);
    return "(no valid action)";
}

}  // namespace

std::string render_step_brief(const Step& step) {
    std::string out = fmt::format("Step {}:\nAction: {}", step.index, action_text(step));
    if (!step.observation.empty()) out += "\nObservation: " + step.observation;
    return out;
}

std::string render_step_full(const Step& step) {
    std::string out = fmt::format("Step {}:\nModel output: {}\nAction: {}", step.index, step.model_output, action_text(step));
    if (!step.observation.empty()) out += "\nObservation: " + step.observation;
    return out;
}

bool uses_summaries(MemoryMode mode) {
    return mode == MemoryMode::Summarized || mode == MemoryMode::ExtraSummarized || mode == MemoryMode::ExtraHybrid;
}

bool uses_note(MemoryMode mode) { return mode == MemoryMode::ExtraFixed || mode == MemoryMode::ExtraHybrid; }

std::vector<ContextBlock> render_context(MemoryMode mode, const std::vector<Step>& steps, const VectorStore* store,
                                         const LongTermNote* note, std::optional<std::span<const double>> query,
                                         int k) {
    using Kind = ContextBlock::Kind;
    std::vector<ContextBlock> blocks;
    if (mode == MemoryMode::Simple) {
        for (const auto& s : steps) blocks.push_back({Kind::Step, s.index, render_step_brief(s)});
        return blocks;
    }
    if (mode != MemoryMode::Summarized) {
        for (const auto& s : steps) blocks.push_back({Kind::Step, s.index, render_step_full(s)});
    }
    if (uses_summaries(mode) && store && !store->empty()) {
        if (!query) throw std::invalid_argument("summarized memory needs a retrieval query");
        for (const auto& e : retrieve_top_k(*store, *query, k))
            blocks.push_back({Kind::Summary, e.step_index, fmt::format("Summary of step {}:\n{}", e.step_index, e.summary_text)});
    } else if (uses_summaries(mode) && store && query && static_cast<int>(query->size()) != store->dimension()) {
        throw DimensionMismatch(static_cast<std::size_t>(store->dimension()), query->size());
    }
    if (mode == MemoryMode::Summarized && !steps.empty() && !steps.back().observation.empty()) {
        const auto& last = steps.back();
        blocks.push_back({Kind::LastObservation, last.index, "Latest observation:\n" + last.observation});
    }
    if (uses_note(mode) && note && !note->text().empty()) blocks.push_back({Kind::Note, -1, "Long-term memory:\n" + note->text()});
    return blocks;
}

std::string join_context(const std::vector<ContextBlock>& blocks) {
    if (blocks.empty()) return "No previous steps.";
    std::string out;
    for (const auto& b : blocks) {
        if (!out.empty()) out += "\n\n";
        out += b.text;
    }
    return out;
}

std::string summarize_step(const Step& step, LlmSession& llm, const std::string& model_id,
                           const PromptTemplates& templates) {
    ChatRequest req;
    req.model_id = model_id;
    req.purpose = Purpose::Memory;
    req.messages.push_back({Role::User, templates.render("memory_summarize", {{"current_step", render_step_full(step)}})});
    auto reply = llm.complete(std::move(req), step.index);
    if (reply.text.find_first_not_of(" \t\r\n") == std::string::npos) {
        return step.action ? fmt::format("Step {}: called {}.", step.index, to_string(step.action->name))
                           : fmt::format("Step {}: produced no valid action.", step.index);
    }
    return reply.text;
}

LongTermNote update_long_term_note(const LongTermNote& note, const Step& previous_step, LlmSession& llm,
                                   const std::string& model_id, const PromptTemplates& templates) {
    ChatRequest req;
    req.model_id = model_id;
    req.purpose = Purpose::Memory;
    req.messages.push_back({Role::User, templates.render("memory_long_term",
                                                         {{"previous_step", render_step_full(previous_step)},
                                                          {"long_term_memory", note.text().empty() ? "None" : note.text()},
                                                          {"max_chars", std::to_string(note.max_chars())}})});
    auto reply = llm.complete(std::move(req), previous_step.index);
    LongTermNote next(note.max_chars());
    next.set(reply.text);
    return next;
}

MemoryManager::MemoryManager(const AgentConfig& cfg, LlmSession& llm, std::shared_ptr<Embedder> embedder,
                             const PromptTemplates& templates)
    : cfg_(cfg),
      llm_(llm),
      embedder_(std::move(embedder)),
      templates_(templates),
      store_(embedder_ ? embedder_->dimension() : 1),
      note_(cfg.note_max_chars) {
    if (uses_summaries(cfg.memory_mode) && !embedder_) throw std::invalid_argument("summarized memory needs an embedder");
}

void MemoryManager::after_step(const Step& step) {
    if (uses_summaries(cfg_.memory_mode)) {
        SummaryEntry entry{step.index, summarize_step(step, llm_, cfg_.backbone_id, templates_), {}};
        entry.embedding = embedder_->embed(entry.summary_text);
        store_.add(entry);
        llm_.emit({{"type", "memory"},
                   {"kind", "summary"},
                   {"step", step.index},
                   {"text", entry.summary_text},
                   {"embedding", store_.entries().back().embedding}});
    }
    if (uses_note(cfg_.memory_mode)) {
        note_ = update_long_term_note(note_, step, llm_, cfg_.backbone_id, templates_);
        llm_.emit({{"type", "memory"}, {"kind", "note"}, {"step", step.index}, {"text", note_.text()}});
    }
}

std::vector<ContextBlock> MemoryManager::context(const std::vector<Step>& steps, const std::string& focus) {
    std::optional<Vector> query;
    if (uses_summaries(cfg_.memory_mode) && !store_.empty()) {
        std::string q = focus;
        if (!steps.empty() && !steps.back().observation.empty()) q += "\n" + steps.back().observation;
        query = embedder_->embed(q);
    }
    std::optional<std::span<const double>> view;
    if (query) view = std::span<const double>(*query);
    return render_context(cfg_.memory_mode, steps, &store_, &note_, view, cfg_.retrieval_k);
}

}  // namespace effagents
