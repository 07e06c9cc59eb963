#include "effagents/grade.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace effagents {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

bool is_quote(char c) { return c == '"' || c == '\''; }

bool numbers_equal(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

bool scalar_equal(const std::string& a, const std::string& b) {
    auto x = as_number(a);
    auto y = as_number(b);
    if (x && y) return numbers_equal(*x, *y);
    return a == b;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
    std::string out;
    bool pending = false;
    for (unsigned char c : s) {
        if (is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out += ' ';
        pending = false;
        out += static_cast<char>(std::tolower(c));
    }
    // Quotes and trailing periods may wrap each other ("'paris.'" or "paris.").
    bool changed = true;
    while (changed && !out.empty()) {
        changed = false;
        if (out.size() >= 2 && is_quote(out.front()) && out.back() == out.front()) {
            out = out.substr(1, out.size() - 2);
            changed = true;
        }
        while (!out.empty() && out.back() == '.') {
            out.pop_back();
            changed = true;
        }
        while (!out.empty() && is_space(static_cast<unsigned char>(out.back()))) out.pop_back();
        while (!out.empty() && is_space(static_cast<unsigned char>(out.front()))) out.erase(out.begin());
    }
    return out;
}

std::optional<double> as_number(std::string_view normalized) {
    std::string digits;
    for (char c : normalized) {
        if (c == ',' || c == '%') continue;
        digits += c;
    }
    if (digits.empty()) return std::nullopt;
    bool seen_digit = false;
    for (char c : digits) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            seen_digit = true;
        } else if (c != '.' && c != '-' && c != '+' && c != 'e') {
            return std::nullopt;
        }
    }
    if (!seen_digit) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(digits.c_str(), &end);
    if (end != digits.c_str() + digits.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::vector<std::string> split_top_level(std::string_view s) {
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    char quote = 0;
    for (char c : s) {
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"') {
            quote = c;
        } else if (c == '(' || c == '[' || c == '{') {
            ++depth;
        } else if ((c == ')' || c == ']' || c == '}') && depth > 0) {
            --depth;
        } else if (c == ',' && depth == 0) {
            parts.push_back(trim(cur));
            cur.clear();
            continue;
        }
        cur += c;
    }
    parts.push_back(trim(cur));
    return parts;
}

bool grade(std::string_view answer, std::string_view expected) {
    const auto a = normalize_answer(answer);
    const auto e = normalize_answer(expected);
    auto x = as_number(a);
    auto y = as_number(e);
    if (x && y) return numbers_equal(*x, *y);

    auto expected_items = split_top_level(e);
    if (expected_items.size() > 1) {
        auto answer_items = split_top_level(a);
        if (answer_items.size() != expected_items.size()) return false;
        for (auto& item : expected_items) item = normalize_answer(item);
        for (auto& item : answer_items) item = normalize_answer(item);
        std::vector<bool> used(answer_items.size(), false);
        for (const auto& want : expected_items) {
            bool found = false;
            for (std::size_t i = 0; i < answer_items.size() && !found; ++i) {
                if (!used[i] && scalar_equal(answer_items[i], want)) {
                    used[i] = true;
                    found = true;
                }
            }
            if (!found) return false;
        }
        return true;
    }
    return a == e;
}

}  // namespace effagents
