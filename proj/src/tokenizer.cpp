#include "ctxprobe/tokenizer.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/text.hpp"

namespace ctxprobe {

std::vector<int> Vocabulary::samplable_ids() const {
  std::vector<int> out;
  out.reserve(size);
  auto ex = excluded.begin();
  for (int id = 0; id < int(size); ++id) {
    while (ex != excluded.end() && *ex < id) ++ex;
    if (ex != excluded.end() && *ex == id) continue;
    out.push_back(id);
  }
  return out;
}

CharTokenizer::CharTokenizer(std::u32string alphabet) : alphabet_(std::move(alphabet)) {
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    if (!index_.emplace(alphabet_[i], int(i)).second) {
      throw ConfigError("duplicate character in tokenizer alphabet", "tokenizer");
    }
  }
}

std::u32string CharTokenizer::default_alphabet() {
  std::u32string a;
  a.push_back(U'\n');
  for (char32_t c = 0x20; c < 0x7F; ++c) a.push_back(c);
  for (char32_t c = 0xA1; c <= 0xFF; ++c) a.push_back(c);
  for (char32_t c : std::u32string_view(U"ŒœŸ‘’‚“”„–—…€«»")) {
    if (a.find(c) == std::u32string::npos) a.push_back(c);
  }
  return a;
}

std::vector<int> CharTokenizer::encode(std::string_view text_in) const {
  std::vector<int> ids;
  for (char32_t c : text::decode_utf8(text_in)) {
    const auto it = index_.find(c);
    if (it == index_.end()) {
      throw DataError(fmt::format("character U+{:04X} is not in the tokenizer alphabet", std::uint32_t(c)));
    }
    ids.push_back(it->second);
  }
  return ids;
}

std::string CharTokenizer::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out += token_text(id);
  return out;
}

Vocabulary CharTokenizer::vocabulary() const {
  Vocabulary v{alphabet_.size(), {}};
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    if (text::contains_control(text::encode_utf8(alphabet_[i]))) v.excluded.push_back(int(i));
  }
  return v;
}

std::string CharTokenizer::token_text(int id) const {
  if (id < 0 || std::size_t(id) >= alphabet_.size()) throw DataError(fmt::format("token id {} out of range", id));
  return text::encode_utf8(alphabet_[std::size_t(id)]);
}

namespace {

constexpr int kForms = 3;  // bare, space-prefixed, newline-prefixed

bool is_separator(char c) { return c == ' ' || c == '\n'; }

}  // namespace

WordTokenizer::WordTokenizer(std::vector<std::string> words) {
  std::set<std::string> unique(words.begin(), words.end());
  unique.erase("");
  words_.push_back("");
  for (const auto& w : unique) {
    if (std::any_of(w.begin(), w.end(), is_separator)) {
      throw ConfigError("tokenizer word contains a separator", "tokenizer");
    }
    words_.push_back(w);
  }
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], int(i));
}

std::unique_ptr<WordTokenizer> WordTokenizer::from_texts(const std::vector<std::string>& texts) {
  std::vector<std::string> words;
  for (const auto& t : texts) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= t.size(); ++i) {
      if (i == t.size() || is_separator(t[i])) {
        if (i > start) words.push_back(t.substr(start, i - start));
        start = i + 1;
      }
    }
  }
  return std::make_unique<WordTokenizer>(std::move(words));
}

int WordTokenizer::word_id(std::string_view word, std::string_view text) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) {
    throw DataError(fmt::format("word '{}' is not in the tokenizer vocabulary (text: '{}')", word,
                                text.substr(0, 60)));
  }
  return it->second;
}

std::vector<int> WordTokenizer::encode(std::string_view t) const {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < t.size() && !is_separator(t[i])) ++i;
  if (i > 0) ids.push_back(word_id(t.substr(0, i), t) * kForms);
  while (i < t.size()) {
    const int form = t[i] == ' ' ? 1 : 2;
    const std::size_t start = ++i;
    while (i < t.size() && !is_separator(t[i])) ++i;
    ids.push_back(word_id(t.substr(start, i - start), t) * kForms + form);
  }
  return ids;
}

std::string WordTokenizer::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out += token_text(id);
  return out;
}

Vocabulary WordTokenizer::vocabulary() const {
  Vocabulary v{words_.size() * kForms, {}};
  for (std::size_t w = 0; w < words_.size(); ++w) {
    const bool bad_word = w == 0 || text::contains_control(words_[w]);
    for (int form = 0; form < kForms; ++form) {
      if (form != 1 || bad_word) v.excluded.push_back(int(w) * kForms + form);
    }
  }
  return v;
}

std::string WordTokenizer::token_text(int id) const {
  if (id < 0 || std::size_t(id) >= words_.size() * kForms) {
    throw DataError(fmt::format("token id {} out of range", id));
  }
  const auto& w = words_[std::size_t(id / kForms)];
  switch (id % kForms) {
    case 1: return " " + w;
    case 2: return "\n" + w;
    default: return w;
  }
}

}  // namespace ctxprobe
