#pragma once

#include <string>
#include <string_view>

namespace effagents {

struct UrlParts {
    std::string scheme;  // lowercased
    std::string host;    // lowercased, without port
    int port = 0;        // 0 when absent
    std::string path;    // starts with '/', includes the query string
    std::string fragment;

    // scheme://host[:port]
    std::string origin() const;
};

// Returns false for anything that is not an absolute http(s) URL.
bool parse_url(std::string_view url, UrlParts& out);
bool is_http_url(std::string_view url);

/// Lowercased scheme and host, fragment dropped; used as the dedup key.
std::string normalize_url(std::string_view url);

// RFC 3986 unreserved characters pass through, everything else is %XX.
std::string percent_encode(std::string_view s);
std::string percent_decode(std::string_view s);

}  // namespace effagents
