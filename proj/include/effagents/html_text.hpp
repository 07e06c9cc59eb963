#pragma once

#include <string>
#include <string_view>

namespace effagents {

/// Static-text rendering of an HTML document, the way the crawler sees it:
/// script/style/noscript/template content dropped, headings as "#"-prefixed
/// lines, list items as "- " lines, links as "text (href)", one line per
/// block element, whitespace collapsed, empty lines removed. Never throws on
/// malformed markup.
std::string extract_static_text(std::string_view html);

// Decodes named (common subset) and numeric character references.
std::string decode_entities(std::string_view text);

}  // namespace effagents
