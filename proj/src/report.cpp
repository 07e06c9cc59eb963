#include "effagents/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace effagents {

namespace {

constexpr std::string_view kCsvHeader =
    "config,scope,tasks,solved,accuracy,cost_of_pass_usd,mean_cost_usd,mean_tokens,total_cost_pico,total_tokens";

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

Scope parse_scope(std::string_view s) {
    for (auto sc : {Scope::All, Scope::L1, Scope::L2, Scope::L3}) {
        if (to_string(sc) == s) return sc;
    }
    throw std::invalid_argument(fmt::format("unknown scope '{}'", s));
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument(fmt::format("bad integer '{}'", s));
    return v;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string cop_cell(double v) { return std::isinf(v) ? "inf" : fmt::format("{:.4f}", v); }

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
    if (s == "table") return ReportFormat::Table;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "svg") return ReportFormat::Svg;
    throw std::invalid_argument(fmt::format("unknown report format '{}' (table, csv, svg)", s));
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

double parse_number(std::string_view s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument(fmt::format("bad number '{}'", s));
    return v;
}

std::string render_table(const std::vector<ReportRow>& rows) {
    std::size_t label_w = 6;
    for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
    std::string out = fmt::format("{:<{}}  {:<5}  {:>5}  {:>12}  {:>12}  {:>12}  {:>12}\n", "Config", label_w, "Scope",
                                  "Tasks", "Cost-of-Pass", "Accuracy(%)", "Cost(USD)", "#Tokens");
    out += std::string(label_w + 2 + 5 + 2 + 5 + 4 * 14, '-') + "\n";
    for (const auto& r : rows) {
        const auto& a = r.row;
        out += fmt::format("{:<{}}  {:<5}  {:>5}  {:>12}  {:>12.2f}  {:>12.4f}  {:>12.0f}\n", r.label, label_w,
                           to_string(a.scope), a.task_count, cop_cell(a.cost_of_pass), a.accuracy * 100.0,
                           a.mean_cost_usd, a.mean_tokens);
    }
    return out;
}

std::string render_csv(const std::vector<ReportRow>& rows) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        const auto& a = r.row;
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.label), to_string(a.scope), a.task_count,
                           a.solved_count, format_number(a.accuracy), format_number(a.cost_of_pass),
                           format_number(a.mean_cost_usd), format_number(a.mean_tokens), a.total_cost.pico,
                           a.total_tokens);
    }
    return out;
}

std::vector<ReportRow> parse_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("not a report CSV");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 10) throw std::invalid_argument(fmt::format("report CSV row has {} fields", f.size()));
        ReportRow r;
        r.label = f[0];
        r.row.scope = parse_scope(f[1]);
        r.row.task_count = static_cast<int>(parse_int(f[2]));
        r.row.solved_count = static_cast<int>(parse_int(f[3]));
        r.row.accuracy = parse_number(f[4]);
        r.row.cost_of_pass = parse_number(f[5]);
        r.row.mean_cost_usd = parse_number(f[6]);
        r.row.mean_tokens = parse_number(f[7]);
        r.row.total_cost.pico = parse_int(f[8]);
        r.row.total_tokens = parse_int(f[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string render_svg(const std::vector<ReportRow>& rows) {
    constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 30, kTop = 30, kBottom = 60;
    std::vector<const ReportRow*> points;
    for (const auto& r : rows) {
        if (r.row.scope == Scope::All) points.push_back(&r);
    }
    double max_x = 0.0;
    for (const auto* p : points) max_x = std::max(max_x, p->row.mean_cost_usd);
    max_x = max_x > 0.0 ? max_x * 1.1 : 1.0;
    const double max_y = 100.0;
    auto sx = [&](double x) { return kLeft + x / max_x * (kW - kLeft - kRight); };
    auto sy = [&](double y) { return kH - kBottom - y / max_y * (kH - kTop - kBottom); };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n", kW, kH, kW, kH);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", kLeft, kH - kBottom,
                       kW - kRight, kH - kBottom);
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", kLeft, kTop, kLeft,
                       kH - kBottom);
    for (int i = 0; i <= 4; ++i) {
        const double xv = max_x * i / 4.0;
        const double yv = max_y * i / 4.0;
        out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{:.3f}</text>\n", sx(xv),
                           kH - kBottom + 18, xv);
        out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"end\">{:.0f}</text>\n", kLeft - 8,
                           sy(yv) + 4, yv);
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">Mean cost per task (USD)</text>\n",
                       (kLeft + kW - kRight) / 2, kH - 15);
    out += fmt::format(
        "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">Accuracy (%)</text>\n",
        (kTop + kH - kBottom) / 2, (kTop + kH - kBottom) / 2);
    for (const auto* p : points) {
        const double x = p->row.mean_cost_usd;
        const double y = p->row.accuracy * 100.0;
        out += fmt::format(
            "<circle class=\"point\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"steelblue\" data-label=\"{}\" "
            "data-x=\"{}\" data-y=\"{}\"/>\n",
            sx(x), sy(y), xml_escape(p->label), format_number(x), format_number(y));
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\">{}</text>\n", sx(x) + 8, sy(y) - 6,
                           xml_escape(p->label));
    }
    out += "</svg>\n";
    return out;
}

std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format) {
    if (rows.empty()) throw std::invalid_argument("report has no rows");
    switch (format) {
        case ReportFormat::Table: return render_table(rows);
        case ReportFormat::Csv: return render_csv(rows);
        case ReportFormat::Svg: return render_svg(rows);
    }
    return {};
}

}  // namespace effagents
