#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctxprobe {

/// Token-id space of a backend together with the ids that must never be
/// sampled (special and control tokens).
struct Vocabulary {
  std::size_t size = 0;
  std::vector<int> excluded;  // sorted

  std::vector<int> samplable_ids() const;
};

/// Local tokenizer. Used by the in-process mock backend; real backends
/// tokenize server-side through the client.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<int> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const int> ids) const = 0;
  virtual Vocabulary vocabulary() const = 0;
  /// Surface text of a single token.
  virtual std::string token_text(int id) const = 0;
};

/// One token per code point of a fixed alphabet. Any decoded id sequence
/// re-encodes to the same length.
class CharTokenizer final : public Tokenizer {
 public:
  explicit CharTokenizer(std::u32string alphabet);
  /// Printable ASCII, newline, Latin-1 letters and common typographic marks.
  static std::u32string default_alphabet();

  std::vector<int> encode(std::string_view text) const override;
  std::string decode(std::span<const int> ids) const override;
  Vocabulary vocabulary() const override;
  std::string token_text(int id) const override;

 private:
  std::u32string alphabet_;
  std::unordered_map<char32_t, int> index_;
};

/// Closed-vocabulary word tokenizer in the metaspace style: every word has a
/// bare form, a space-prefixed form and a newline-prefixed form, so encoding
/// is exact and lossless. Only space-prefixed forms are samplable; any
/// sequence of them decodes to text that re-encodes to the same length.
class WordTokenizer final : public Tokenizer {
 public:
  explicit WordTokenizer(std::vector<std::string> words);
  /// Collects the words of `texts` (split at spaces and newlines).
  static std::unique_ptr<WordTokenizer> from_texts(const std::vector<std::string>& texts);

  std::vector<int> encode(std::string_view text) const override;
  std::string decode(std::span<const int> ids) const override;
  Vocabulary vocabulary() const override;
  std::string token_text(int id) const override;

  const std::vector<std::string>& words() const { return words_; }

 private:
  int word_id(std::string_view word, std::string_view text) const;

  std::vector<std::string> words_;  // words_[0] is the empty word
  std::unordered_map<std::string, int> index_;
};

}  // namespace ctxprobe
