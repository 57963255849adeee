#include "ctxprobe/text.hpp"

#include <stdexcept>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace ctxprobe::text {
namespace {

// Decodes one code point starting at s[i]; malformed input yields U+FFFD and
// consumes one byte.
char32_t next_cp(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      i += 2;
      return (char32_t(b0 & 0x1F) << 6) | char32_t(c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      i += 3;
      return (char32_t(b0 & 0x0F) << 12) | (char32_t(c1) << 6) | char32_t(c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      i += 4;
      return (char32_t(b0 & 0x07) << 18) | (char32_t(c1) << 12) | (char32_t(c2) << 6) |
             char32_t(c3);
    }
  }
  ++i;
  return 0xFFFD;
}

}  // namespace

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) out.push_back(next_cp(s, i));
  return out;
}

std::string encode_utf8(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) out += encode_utf8(c);
  return out;
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++n) next_cp(s, i);
  return n;
}

std::size_t byte_offset(std::string_view s, std::size_t cp_offset) {
  std::size_t i = 0;
  for (std::size_t k = 0; k < cp_offset; ++k) {
    if (i >= s.size()) throw std::out_of_range("code point offset past end of text");
    next_cp(s, i);
  }
  return i;
}

std::size_t codepoint_offset(std::string_view s, std::size_t byte_off) {
  std::size_t i = 0, n = 0;
  while (i < byte_off && i < s.size()) {
    next_cp(s, i);
    ++n;
  }
  return n;
}

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), int32_t(s.size())));
  if (norm->isNormalized(src, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  const icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

bool is_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x1C: case 0x1D: case 0x1E: case 0x1F: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_word_char(char32_t c) { return c == U'_' || u_isalnum(UChar32(c)); }

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0, start = 0;
  bool in_word = false;
  while (i < s.size()) {
    const std::size_t at = i;
    const char32_t c = next_cp(s, i);
    if (is_space(c)) {
      if (in_word) out.push_back(s.substr(start, at - start));
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      start = at;
    }
  }
  if (in_word) out.push_back(s.substr(start));
  return out;
}

std::string trim(std::string_view s) {
  const std::u32string cps = decode_utf8(s);
  std::size_t b = 0, e = cps.size();
  while (b < e && is_space(cps[b])) ++b;
  while (e > b && is_space(cps[e - 1])) --e;
  return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::u32string cps = decode_utf8(s);
  for (char32_t& c : cps) c = char32_t(u_tolower(UChar32(c)));
  return encode_utf8(cps);
}

std::string match_leading_case(std::string_view word, std::string_view original) {
  if (word.empty() || original.empty()) return std::string(word);
  std::u32string w = decode_utf8(word);
  const char32_t first = decode_utf8(original).front();
  if (u_isupper(UChar32(first))) {
    w.front() = char32_t(u_toupper(UChar32(w.front())));
  } else if (u_islower(UChar32(first))) {
    w.front() = char32_t(u_tolower(UChar32(w.front())));
  }
  return encode_utf8(w);
}

bool contains_control(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    if (u_iscntrl(UChar32(next_cp(s, i)))) return true;
  }
  return false;
}

}  // namespace ctxprobe::text
