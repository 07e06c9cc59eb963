#pragma once

#include <cstdint>
#include <string_view>

namespace effagents {

/// Why a model call was made. Every ledger entry carries the tag of the
/// request that produced it.
enum class Purpose { Actor, Planner, Prm, Memory, QueryExpansion };

std::string_view to_string(Purpose p);
Purpose parse_purpose(std::string_view s);

struct TokenUsage {
    std::int64_t n_in = 0;
    std::int64_t n_out = 0;
    // True only when the provider omitted usage and we fell back to estimate_tokens.
    bool estimated = false;

    std::int64_t total() const { return n_in + n_out; }
    bool operator==(const TokenUsage&) const = default;
};

}  // namespace effagents
