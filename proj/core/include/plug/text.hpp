#pragma once

#include <string>
#include <string_view>

namespace plug::text {

// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD, one per
// offending byte, so every input byte is accounted for.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view cps);
std::string encode(char32_t cp);

bool is_space(char32_t c);
bool is_punct(char32_t c);

// Strips a leading byte-order mark if present.
std::string_view strip_bom(std::string_view utf8);

std::u32string lower(std::u32string_view s);
std::string lower(std::string_view utf8);

// Concatenation of the non-whitespace code points of s.
std::u32string strip_spaces(std::u32string_view s);

}  // namespace plug::text
