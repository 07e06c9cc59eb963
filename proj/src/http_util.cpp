#include "effagents/http_util.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace effagents {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::string UrlParts::origin() const {
    std::string o = scheme + "://" + host;
    if (port != 0) o += ":" + std::to_string(port);
    return o;
}

bool parse_url(std::string_view url, UrlParts& out) {
    auto sep = url.find("://");
    if (sep == std::string_view::npos) return false;
    out.scheme = lower(url.substr(0, sep));
    if (out.scheme != "http" && out.scheme != "https") return false;
    auto rest = url.substr(sep + 3);
    auto hash = rest.find('#');
    out.fragment = hash == std::string_view::npos ? std::string() : std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
    auto slash = rest.find_first_of("/?");
    auto authority = rest.substr(0, slash);
    out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    if (!out.path.empty() && out.path[0] == '?') out.path = "/" + out.path;
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
    out.port = 0;
    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        auto port_str = authority.substr(colon + 1);
        int port = 0;
        auto [p, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), port);
        if (ec != std::errc{} || p != port_str.data() + port_str.size() || port <= 0 || port > 65535) return false;
        out.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) return false;
    out.host = lower(authority);
    return true;
}

bool is_http_url(std::string_view url) {
    UrlParts p;
    return parse_url(url, p);
}

std::string normalize_url(std::string_view url) {
    UrlParts p;
    if (!parse_url(url, p)) {
        auto hash = url.find('#');
        return std::string(url.substr(0, hash));
    }
    std::string out = p.origin();
    out += p.path;
    return out;
}

std::string percent_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int v = 0;
            auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
            if (ec == std::errc{} && p == s.data() + i + 3) {
                out += static_cast<char>(v);
                i += 2;
                continue;
            }
        }
        out += s[i];
    }
    return out;
}

}  // namespace effagents
