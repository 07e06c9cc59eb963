#pragma once

#include "effagents/ledger.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace effagents {

/// One aggregate row tagged with the configuration it belongs to.
struct ReportRow {
    std::string label;
    AggregateRow row;
    bool operator==(const ReportRow&) const = default;
};

enum class ReportFormat { Table, Csv, Svg };
ReportFormat parse_report_format(std::string_view s);

// %.17g, with +inf as "inf"; round-trips through parse_number.
std::string format_number(double v);
double parse_number(std::string_view s);

std::string render_table(const std::vector<ReportRow>& rows);
std::string render_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_csv(std::string_view text);
/// Accuracy (%) against mean cost (USD), one point per "all"-scope row.
/// Each point carries data-x/data-y attributes with the exact values.
std::string render_svg(const std::vector<ReportRow>& rows);

std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format);

}  // namespace effagents
