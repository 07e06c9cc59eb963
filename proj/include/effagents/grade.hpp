#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace effagents {

// Trim, collapse whitespace, lowercase, strip surrounding quotes and trailing periods.
std::string normalize_answer(std::string_view s);

// The value of a normalized answer once commas and '%' are removed, if it is a plain decimal number.
std::optional<double> as_number(std::string_view normalized);

// Splits on commas outside quotes and brackets; parts are trimmed.
std::vector<std::string> split_top_level(std::string_view s);

/// Quasi-exact match: numeric comparison (relative 1e-9) when both sides
/// are numbers, unordered element-wise comparison when the expected answer
/// is a comma list, exact equality of normalized strings otherwise.
bool grade(std::string_view answer, std::string_view expected);

}  // namespace effagents
