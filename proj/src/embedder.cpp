#include "effagents/embedder.hpp"

#include "effagents/http_backend.hpp"
#include "effagents/http_util.hpp"
#include "effagents/memory.hpp"

#include "httplib.h"

#include <fmt/format.h>

#include <cctype>
#include <cmath>

namespace effagents {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    // Final avalanche so nearby inputs spread across buckets.
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

void normalize(Vector& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq == 0.0 || !std::isfinite(sq)) throw ZeroVector();
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

HashEmbedder::HashEmbedder(int dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension < 1) throw std::invalid_argument("embedding dimension must be positive");
}

Vector HashEmbedder::embed(const std::string& text) {
    Vector v(static_cast<std::size_t>(dimension_), 0.0);
    const auto d = static_cast<std::uint64_t>(dimension_);
    auto add = [&](std::string_view feature, double weight) {
        const auto h = fnv1a(feature, seed_);
        v[h % d] += (h >> 63) ? -weight : weight;
    };
    const auto w = words(text);
    for (std::size_t i = 0; i < w.size(); ++i) {
        add(w[i], 1.0);
        if (i + 1 < w.size()) add(w[i] + ' ' + w[i + 1], 0.5);
    }
    bool zero = true;
    for (double x : v) zero = zero && x == 0.0;
    if (zero) v[fnv1a(text, seed_ ^ 0x5bd1e995ULL) % d] = 1.0;
    normalize(v);
    return v;
}

HttpEmbedder::HttpEmbedder(EmbeddingSettings settings) : settings_(std::move(settings)) {}

Vector HttpEmbedder::embed(const std::string& text) {
    UrlParts url;
    if (!parse_url(settings_.base_url, url))
        throw EmbeddingError(fmt::format("bad embedding endpoint '{}'", settings_.base_url));
    std::string path = url.path == "/" ? std::string() : url.path;
    while (!path.empty() && path.back() == '/') path.pop_back();
    path += "/v1/embeddings";

    httplib::Client client(url.origin());
    client.set_read_timeout(std::chrono::seconds(60));
    httplib::Headers headers;
    if (auto key = process_env(settings_.api_key_env)) headers.emplace("Authorization", "Bearer " + *key);
    const json body{{"model", settings_.model}, {"input", text}};
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw EmbeddingError(fmt::format("embedding request failed: {}", httplib::to_string(res.error())));
    if (res->status != 200) throw EmbeddingError(fmt::format("embedding request failed: HTTP {}", res->status));
    Vector v;
    try {
        v = json::parse(res->body).at("data").at(0).at("embedding").get<Vector>();
    } catch (const json::exception& e) {
        throw EmbeddingError(fmt::format("malformed embedding response: {}", e.what()));
    }
    if (static_cast<int>(v.size()) != settings_.dimension)
        throw EmbeddingError(fmt::format("embedding has dimension {}, configured {}", v.size(), settings_.dimension));
    normalize(v);
    return v;
}

Vector TracingEmbedder::embed(const std::string& text) {
    auto v = inner_->embed(text);
    if (sink_) sink_->emit({{"type", "embed"}, {"text", text}, {"vector", v}});
    return v;
}

Vector ReplayEmbedder::embed(const std::string& text) {
    auto ev = replay_->next("embed");
    if (ev.at("text") != text) throw ReplayMismatch("embedding input diverges from trace");
    return ev.at("vector").get<Vector>();
}

std::shared_ptr<Embedder> make_embedder(const EmbeddingSettings& settings) {
    if (settings.base_url.empty()) return std::make_shared<HashEmbedder>(settings.dimension);
    return std::make_shared<HttpEmbedder>(settings);
}

}  // namespace effagents
