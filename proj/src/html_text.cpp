#include "effagents/html_text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace effagents {

namespace {

const std::set<std::string, std::less<>> kBlockTags{
    "address", "article", "aside",  "blockquote", "body",    "br",     "caption", "center", "dd",
    "details", "dialog",  "div",    "dl",         "dt",      "fieldset", "figcaption", "figure",
    "footer",  "form",    "h1",     "h2",         "h3",      "h4",     "h5",      "h6",     "header",
    "hr",      "html",    "li",     "main",       "nav",     "ol",     "option",  "p",      "pre",
    "section", "summary", "table",  "tbody",      "thead",   "tfoot",  "tr",      "ul"};

const std::set<std::string, std::less<>> kSkipContent{"script", "style", "noscript", "template", "title", "svg",
                                                      "iframe", "object", "head"};

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

struct Tag {
    std::string name;
    bool closing = false;
    bool self_closing = false;
    std::string href;
};

// Parses the tag starting at s[pos] == '<'. Returns the index after '>' or npos.
std::size_t parse_tag(std::string_view s, std::size_t pos, Tag& tag) {
    std::size_t i = pos + 1;
    if (i < s.size() && s[i] == '/') {
        tag.closing = true;
        ++i;
    }
    std::size_t name_start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '-' || s[i] == ':')) ++i;
    tag.name = lower(s.substr(name_start, i - name_start));
    // Attributes: only href is kept.
    while (i < s.size() && s[i] != '>') {
        if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '>') {
            tag.self_closing = true;
            ++i;
            continue;
        }
        if (is_space(s[i])) {
            ++i;
            continue;
        }
        std::size_t an = i;
        while (i < s.size() && !is_space(s[i]) && s[i] != '=' && s[i] != '>' && s[i] != '/') ++i;
        std::string attr = lower(s.substr(an, i - an));
        if (i == an) {
            ++i;
            continue;
        }
        while (i < s.size() && is_space(s[i])) ++i;
        std::string value;
        if (i < s.size() && s[i] == '=') {
            ++i;
            while (i < s.size() && is_space(s[i])) ++i;
            if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
                char q = s[i++];
                auto end = s.find(q, i);
                if (end == std::string_view::npos) return std::string_view::npos;
                value = std::string(s.substr(i, end - i));
                i = end + 1;
            } else {
                std::size_t vs = i;
                while (i < s.size() && !is_space(s[i]) && s[i] != '>') ++i;
                value = std::string(s.substr(vs, i - vs));
            }
        }
        if (attr == "href") tag.href = decode_entities(value);
    }
    if (i >= s.size()) return std::string_view::npos;
    return i + 1;
}

class TextBuilder {
public:
    void text(std::string_view t) {
        for (char c : t) {
            if (is_space(c)) {
                pending_space_ = !line_.empty();
            } else {
                if (pending_space_) line_ += ' ';
                pending_space_ = false;
                line_ += c;
            }
        }
    }

    void flush() {
        if (!line_.empty()) lines_.push_back(prefix_ + line_);
        line_.clear();
        pending_space_ = false;
    }

    void set_prefix(std::string p) { prefix_ = std::move(p); }
    std::size_t mark() const { return line_.size(); }
    bool has_text_since(std::size_t mark) const { return line_.size() > mark; }

    std::string finish() {
        flush();
        std::string out;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            if (i) out += '\n';
            out += lines_[i];
        }
        return out;
    }

private:
    std::vector<std::string> lines_;
    std::string line_;
    std::string prefix_;
    bool pending_space_ = false;
};

std::optional<std::size_t> find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size() && ok; ++k)
            ok = std::tolower(static_cast<unsigned char>(hay[i + k])) == needle[k];
        if (ok) return i;
    }
    return std::nullopt;
}

}  // namespace

std::string decode_entities(std::string_view text) {
    static const std::array<std::pair<std::string_view, std::string_view>, 23> named{{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
        {"mdash", "—"}, {"ndash", "–"}, {"hellip", "…"}, {"copy", "©"},
        {"reg", "®"}, {"deg", "°"}, {"laquo", "«"}, {"raquo", "»"},
        {"rsquo", "’"}, {"lsquo", "‘"}, {"ldquo", "“"}, {"rdquo", "”"},
        {"times", "×"}, {"middot", "·"}, {"bull", "•"}, {"euro", "€"}, {"pound", "£"},
    }};
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '&') {
            out += text[i];
            continue;
        }
        auto semi = text.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += '&';
            continue;
        }
        auto ref = text.substr(i + 1, semi - i - 1);
        bool done = false;
        if (!ref.empty() && ref[0] == '#') {
            std::uint32_t cp = 0;
            const bool hex = ref.size() > 1 && (ref[1] == 'x' || ref[1] == 'X');
            auto digits = ref.substr(hex ? 2 : 1);
            auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
            if (!digits.empty() && ec == std::errc{} && p == digits.data() + digits.size()) {
                append_utf8(out, cp == 0xA0 ? 0x20 : cp);
                done = true;
            }
        } else {
            for (const auto& [name, value] : named) {
                if (ref == name) {
                    out += value;
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            i = semi;
        } else {
            out += '&';
        }
    }
    return out;
}

std::string extract_static_text(std::string_view html) {
    TextBuilder b;
    struct OpenLink {
        std::string href;
        std::size_t mark;
    };
    std::optional<OpenLink> link;
    std::size_t pos = 0;
    std::string text_run;

    auto emit_text = [&] {
        if (!text_run.empty()) {
            b.text(decode_entities(text_run));
            text_run.clear();
        }
    };

    while (pos < html.size()) {
        char c = html[pos];
        if (c != '<') {
            text_run += c;
            ++pos;
            continue;
        }
        if (html.substr(pos, 4) == "<!--") {
            emit_text();
            auto end = html.find("-->", pos + 4);
            pos = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        const char next = pos + 1 < html.size() ? html[pos + 1] : '\0';
        if (next == '!' || next == '?') {
            emit_text();
            auto end = html.find('>', pos);
            pos = end == std::string_view::npos ? html.size() : end + 1;
            continue;
        }
        if (!std::isalpha(static_cast<unsigned char>(next)) && next != '/') {
            text_run += c;
            ++pos;
            continue;
        }
        Tag tag;
        auto after = parse_tag(html, pos, tag);
        if (after == std::string_view::npos) break;
        emit_text();
        pos = after;

        if (!tag.closing && kSkipContent.count(tag.name) && !tag.self_closing) {
            auto close = find_ci(html, "</" + tag.name, pos);
            if (!close) break;
            auto gt = html.find('>', *close);
            pos = gt == std::string_view::npos ? html.size() : gt + 1;
            continue;
        }

        const bool heading = tag.name.size() == 2 && tag.name[0] == 'h' && tag.name[1] >= '1' && tag.name[1] <= '6';
        if (tag.name == "a") {
            if (!tag.closing) {
                link = OpenLink{tag.href, b.mark()};
            } else if (link) {
                const auto& href = link->href;
                if (!href.empty() && href[0] != '#' && href.rfind("javascript:", 0) != 0 && b.has_text_since(link->mark))
                    b.text(" (" + href + ")");
                link.reset();
            }
            continue;
        }
        if (tag.name == "td" || tag.name == "th") {
            b.text(" ");
            continue;
        }
        if (kBlockTags.count(tag.name)) {
            b.flush();
            if (heading) {
                b.set_prefix(tag.closing ? std::string() : std::string(static_cast<std::size_t>(tag.name[1] - '0'), '#') + " ");
            } else if (tag.name == "li") {
                b.set_prefix(tag.closing ? std::string() : "- ");
            } else {
                b.set_prefix({});
            }
        }
    }
    emit_text();
    return b.finish();
}

}  // namespace effagents
