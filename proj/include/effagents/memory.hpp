#pragma once

#include "effagents/config.hpp"
#include "effagents/embedder.hpp"
#include "effagents/session.hpp"
#include "effagents/step.hpp"
#include "effagents/templates.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace effagents {

class DimensionMismatch : public std::invalid_argument {
public:
    DimensionMismatch(std::size_t expected, std::size_t got);
};

class ZeroVector : public std::invalid_argument {
public:
    ZeroVector() : std::invalid_argument("cosine similarity of a zero vector") {}
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct SummaryEntry {
    int step_index = 0;
    std::string summary_text;
    Vector embedding;  // unit norm
    bool operator==(const SummaryEntry&) const = default;
};

class VectorStore {
public:
    explicit VectorStore(int dimension);

    // Normalizes the embedding; throws DimensionMismatch or ZeroVector.
    void add(SummaryEntry entry);
    const std::vector<SummaryEntry>& entries() const { return entries_; }
    int dimension() const { return dimension_; }
    bool empty() const { return entries_.empty(); }

private:
    int dimension_;
    std::vector<SummaryEntry> entries_;
};

/// min(k, size) entries by descending cosine similarity, lower step first on ties.
std::vector<SummaryEntry> retrieve_top_k(const VectorStore& store, std::span<const double> query, int k);

/// Bounded text rewritten after every step; size() <= max_chars always.
class LongTermNote {
public:
    explicit LongTermNote(int max_chars);

    // Keeps the longest prefix within max_chars bytes that ends on a UTF-8 boundary.
    void set(std::string_view text);
    const std::string& text() const { return text_; }
    int max_chars() const { return max_chars_; }

private:
    std::string text_;
    int max_chars_;
};

struct ContextBlock {
    enum class Kind { Step, Summary, Note, LastObservation };
    Kind kind = Kind::Step;
    int step_index = -1;
    std::string text;
    bool operator==(const ContextBlock&) const = default;
};

// Renderings shared by the memory modes and the PRM prompts.
std::string render_step_brief(const Step& step);  // action and observation only
std::string render_step_full(const Step& step);   // model output, action, observation

/// The step-history portion of the actor context for `mode`.
/// `store`/`query` are used by the summarized variants, `note` by the fixed ones.
std::vector<ContextBlock> render_context(MemoryMode mode, const std::vector<Step>& steps, const VectorStore* store,
                                         const LongTermNote* note, std::optional<std::span<const double>> query,
                                         int k);

std::string join_context(const std::vector<ContextBlock>& blocks);

bool uses_summaries(MemoryMode mode);
bool uses_note(MemoryMode mode);

/// One memory call summarizing a step; an empty reply becomes a one-line
/// fallback naming the step's action.
std::string summarize_step(const Step& step, LlmSession& llm, const std::string& model_id,
                           const PromptTemplates& templates);

/// One memory call folding the previous step into the note.
LongTermNote update_long_term_note(const LongTermNote& note, const Step& previous_step, LlmSession& llm,
                                   const std::string& model_id, const PromptTemplates& templates);

/// Per-run memory for one mode: owns the store and note and performs the
/// after-step updates the mode requires. Simple and NoExtra never call a model.
class MemoryManager {
public:
    MemoryManager(const AgentConfig& cfg, LlmSession& llm, std::shared_ptr<Embedder> embedder,
                  const PromptTemplates& templates);

    void after_step(const Step& step);
    // `focus` is the current plan text; the retrieval query also includes the latest observation.
    std::vector<ContextBlock> context(const std::vector<Step>& steps, const std::string& focus);

    const VectorStore& store() const { return store_; }
    const LongTermNote& note() const { return note_; }

private:
    const AgentConfig& cfg_;
    LlmSession& llm_;
    std::shared_ptr<Embedder> embedder_;
    const PromptTemplates& templates_;
    VectorStore store_;
    LongTermNote note_;
};

}  // namespace effagents
