#pragma once

#include <string>
#include <string_view>

namespace tokenweight::text {

// All character offsets in this project count Unicode code points of the
// source text. Malformed UTF-8 bytes decode to U+FFFD one byte at a time so
// decoding never fails.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view chars);
std::string encode_utf8(char32_t ch);

// ASCII-only case folding; other code points are returned unchanged.
char32_t to_lower(char32_t ch);
std::u32string to_lower(std::u32string_view s);
std::string to_lower(std::string_view s);

// Letters and digits. Non-ASCII code points count as letters.
bool is_alnum(char32_t ch);

// Word characters for keyword boundaries: letters, digits and hyphens.
inline bool is_word_char(char32_t ch) { return ch == U'-' || is_alnum(ch); }

std::string_view trim(std::string_view s);

}  // namespace tokenweight::text
