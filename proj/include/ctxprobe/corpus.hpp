#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctxprobe/jsonl.hpp"

namespace ctxprobe {

struct SentencePair {
  std::string src;
  std::optional<std::string> tgt;  // absent for source-only corpora

  bool operator==(const SentencePair&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<SentencePair> sentences;

  bool operator==(const Document&) const = default;
};

struct DocumentCorpus {
  std::vector<Document> documents;

  std::size_t sentence_count() const;
  const Document* find(std::string_view doc_id) const;
  bool operator==(const DocumentCorpus&) const = default;
};

enum class CorpusFormat {
  kJsonl,      // {"doc_id": ..., "sentences": [{"src": ..., "tgt": ...}]} per line
  kIwsltXml,   // IWSLT <doc docid=..><seg id=..> source file; reference file alongside
};

CorpusFormat parse_corpus_format(std::string_view id);

/// Loads a document corpus. For kIwsltXml, `path` is the source-side XML and
/// `reference_path` (optional) the target-side XML with the same doc/seg ids.
DocumentCorpus load_documents(const std::filesystem::path& path, CorpusFormat format,
                              const std::optional<std::filesystem::path>& reference_path = {});

std::string serialize_documents(const DocumentCorpus& corpus);

enum class Side { kSource, kTarget };

std::string_view to_string(Side side);
Side parse_side(std::string_view s);

/// Antecedent mention inside one context sentence. Offsets are code points,
/// end-exclusive, relative to the referenced sentence on the given side.
struct AntecedentSpan {
  Side side = Side::kTarget;
  int context_index = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const AntecedentSpan&) const = default;
};

struct ContrastiveExample {
  std::string example_id;
  std::string src;
  std::string gold_target;
  std::vector<std::string> contrastive_targets;
  std::string gold_pronoun;
  std::vector<std::string> contrastive_pronouns;
  std::vector<SentencePair> context;  // most recent last
  std::vector<AntecedentSpan> antecedent_spans;
  std::string antecedent_pos;
  std::string antecedent_gender;

  bool operator==(const ContrastiveExample&) const = default;
};

json to_json(const SentencePair& pair);
json to_json(const Document& doc);
json to_json(const AntecedentSpan& span);
json to_json(const ContrastiveExample& example);
Document document_from_json(const json& j);
ContrastiveExample contrastive_from_json(const json& j);

/// Throws DataError describing the first violated ContrastiveExample invariant.
void validate_example(const ContrastiveExample& example, std::size_t max_context);

struct Rejection {
  std::string example_id;
  std::string reason;
};

struct ContrastiveSet {
  std::vector<ContrastiveExample> accepted;
  std::vector<Rejection> rejected;
  std::size_t input_count = 0;
};

enum class ContrastiveFormat { kJsonl, kContraPro };

ContrastiveFormat parse_contrastive_format(std::string_view id);

struct ContrastiveLoadOptions {
  std::size_t max_context = 16;
  // ContraPro layout only: context files with `contrapro_context_size` lines
  // per example (oldest first, blank = missing).
  std::optional<std::filesystem::path> context_src_path;
  std::optional<std::filesystem::path> context_tgt_path;
  std::size_t contrapro_context_size = 1;
};

ContrastiveSet load_contrastive_set(const std::filesystem::path& path, ContrastiveFormat format,
                                    const ContrastiveLoadOptions& options = {});

std::string serialize_contrastive(const std::vector<ContrastiveExample>& examples);

struct PronounClassSet {
  std::string language_pair;
  std::vector<std::string> classes;

  /// Lowercases and validates (distinct, at least two).
  static PronounClassSet make(std::string language_pair, std::vector<std::string> classes);
};

/// Draws n / |classes| examples per gold-pronoun class, then shuffles the
/// union. Classes come from `classes` when given, else from the data.
std::vector<ContrastiveExample> sample_balanced_subset(const std::vector<ContrastiveExample>& examples,
                                                       std::size_t n, std::uint64_t seed,
                                                       const PronounClassSet* classes = nullptr);

class GenderLexicon {
 public:
  using Key = std::pair<std::string, std::string>;  // (pos_tag, gender)

  /// Throws DataError if the word is already filed under another key.
  void add(const std::string& word, const std::string& pos, const std::string& gender);

  const std::map<Key, std::vector<std::string>>& buckets() const { return buckets_; }
  std::vector<std::string> genders() const;
  std::optional<Key> lookup(const std::string& word) const;
  std::size_t size() const { return index_.size(); }

 private:
  std::map<Key, std::vector<std::string>> buckets_;
  std::map<std::string, Key> index_;
};

GenderLexicon load_lexicon(const std::filesystem::path& path);

/// Views each contrastive example as a small document (context pairs followed
/// by the example's own pair); used as the donor pool for perturbed context.
DocumentCorpus corpus_from_examples(const std::vector<ContrastiveExample>& examples);

}  // namespace ctxprobe
