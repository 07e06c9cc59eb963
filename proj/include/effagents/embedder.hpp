#pragma once

#include "effagents/config.hpp"
#include "effagents/trace.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace effagents {

using Vector = std::vector<double>;

class EmbeddingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text to unit-norm vector of a fixed dimension. Shareable across runs.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Vector embed(const std::string& text) = 0;
    virtual int dimension() const = 0;
};

// Scales v to unit length; throws ZeroVector for the zero vector.
void normalize(Vector& v);

/// Signed feature hashing of lowercased word unigrams and bigrams.
/// Deterministic for a given (dimension, seed).
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(int dimension = 256, std::uint64_t seed = 0x9e3779b97f4a7c15ULL);
    Vector embed(const std::string& text) override;
    int dimension() const override { return dimension_; }

private:
    int dimension_;
    std::uint64_t seed_;
};

/// POST {base}/v1/embeddings in the common embeddings wire format.
class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(EmbeddingSettings settings);
    Vector embed(const std::string& text) override;
    int dimension() const override { return settings_.dimension; }

private:
    EmbeddingSettings settings_;
};

/// Records every vector as an "embed" trace event (decimal array).
class TracingEmbedder : public Embedder {
public:
    TracingEmbedder(std::shared_ptr<Embedder> inner, TraceSink* sink) : inner_(std::move(inner)), sink_(sink) {}
    Vector embed(const std::string& text) override;
    int dimension() const override { return inner_->dimension(); }

private:
    std::shared_ptr<Embedder> inner_;
    TraceSink* sink_;
};

class ReplayEmbedder : public Embedder {
public:
    ReplayEmbedder(std::shared_ptr<RunReplay> replay, int dimension) : replay_(std::move(replay)), dimension_(dimension) {}
    Vector embed(const std::string& text) override;
    int dimension() const override { return dimension_; }

private:
    std::shared_ptr<RunReplay> replay_;
    int dimension_;
};

std::shared_ptr<Embedder> make_embedder(const EmbeddingSettings& settings);

}  // namespace effagents
