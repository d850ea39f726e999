#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace peacelens::util {

/// Decodes UTF-8, replacing invalid sequences with U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

bool is_unicode_space(char32_t c);
bool is_unicode_punct(char32_t c);
/// Simple case folding for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
char32_t to_lower(char32_t c);

/// Longest prefix of `s` no longer than `max_bytes` that ends on a code point
/// boundary.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes);

}  // namespace peacelens::util
