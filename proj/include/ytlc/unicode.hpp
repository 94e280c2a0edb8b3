#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ytlc::uni {

// UTF-8 <-> codepoints. Invalid byte sequences decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(const std::vector<char32_t>& cps);
void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp);
// Unicode categories P and S, table-backed for the ranges that occur in
// news titles (ASCII, Latin-1, general/currency punctuation, CJK brackets,
// fullwidth forms, arrows/symbols).
bool is_punct_or_symbol(char32_t cp);

char32_t to_lower(char32_t cp);
std::string lowercase(std::string_view s);

// Canonical composition limited to Latin base + combining diacritics; the
// corpus is English-dominated and full NFC tables are out of proportion
// here.
std::string nfc(std::string_view s);

// NFC, then collapse runs of whitespace to single spaces and trim.
std::string clean_title(std::string_view s);

}  // namespace ytlc::uni
