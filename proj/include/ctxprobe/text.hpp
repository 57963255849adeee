#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. All text in the library is UTF-8 in std::string; character
// offsets that cross file boundaries are Unicode code points.
namespace ctxprobe::text {

std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
std::string encode_utf8(char32_t c);

std::size_t codepoint_count(std::string_view s);

/// Byte offset of code point `cp_offset`; `cp_offset == count` maps to s.size().
/// Throws std::out_of_range past the end.
std::size_t byte_offset(std::string_view s, std::size_t cp_offset);
std::size_t codepoint_offset(std::string_view s, std::size_t byte_off);

/// Unicode NFC normalization.
std::string nfc(std::string_view s);

/// Whitespace as Python's str.isspace() defines it.
bool is_space(char32_t c);
bool is_word_char(char32_t c);

/// Python str.split() with no separator: runs of whitespace split, empties dropped.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Copies the case of `original`'s first letter onto `word`'s first letter.
std::string match_leading_case(std::string_view word, std::string_view original);

bool contains_control(std::string_view s);

}  // namespace ctxprobe::text
