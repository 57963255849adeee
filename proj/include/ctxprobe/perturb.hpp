#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctxprobe/corpus.hpp"
#include "ctxprobe/jsonl.hpp"
#include "ctxprobe/tokenizer.hpp"

namespace ctxprobe {

enum class ContextCondition { kNone, kGold, kPerturbed, kRandom, kAntecedentSwapped };

std::string_view to_string(ContextCondition c);
ContextCondition parse_condition(std::string_view s);

/// Source of a context window, kept for audit and reproduction.
struct Provenance {
  std::string description;
  std::uint64_t seed = 0;
  std::vector<std::string> doc_ids;
  std::size_t start_index = 0;
  // Random condition: sampled ids per slot, source then target for each pair.
  std::vector<std::vector<int>> sampled_ids;
};

struct SwapRecord {
  AntecedentSpan original_span;
  AntecedentSpan replaced_span;  // where the replacement now sits
  std::string original_word;
  std::string replacement_word;
  std::string original_gender;
  std::string replacement_gender;
  bool pos_matched = true;
};

struct ContextWindow {
  ContextCondition condition = ContextCondition::kNone;
  std::vector<SentencePair> pairs;  // oldest first
  Provenance provenance;
  // Antecedent spans re-indexed to `pairs` (only for windows built from
  // contrastive examples).
  std::vector<AntecedentSpan> antecedent_spans;
};

json to_json(const ContextWindow& window);
json to_json(const SwapRecord& record);
ContextWindow window_from_json(const json& j);

/// Backend-side tokenization used to size random context. Implemented by the
/// local tokenizers and by the API client.
class TokenizerHandle {
 public:
  virtual ~TokenizerHandle() = default;
  virtual std::vector<int> tokenize(const std::string& text) = 0;
  virtual std::string detokenize(const std::vector<int>& ids) = 0;
};

/// Adapts a local Tokenizer to the handle interface.
class LocalTokenizerHandle final : public TokenizerHandle {
 public:
  explicit LocalTokenizerHandle(const Tokenizer& tok) : tok_(tok) {}
  std::vector<int> tokenize(const std::string& text) override { return tok_.encode(text); }
  std::string detokenize(const std::vector<int>& ids) override { return tok_.decode(ids); }

 private:
  const Tokenizer& tok_;
};

ContextWindow none_context();

/// The min(k, index) pairs immediately preceding `index`, in document order.
ContextWindow gold_context(const Document& doc, std::size_t index, std::size_t k);

/// Gold window of a contrastive example: its last k context pairs, with the
/// antecedent spans that fall inside them.
ContextWindow gold_context(const ContrastiveExample& example, std::size_t k);

/// A contiguous run of `size` pairs from one uniformly chosen other document,
/// starting at a uniform offset. Donors shorter than `size` are not eligible.
ContextWindow perturbed_context(const DocumentCorpus& corpus, const std::string& doc_id,
                                std::size_t size, std::uint64_t seed);

/// Overload matching the gold window of (doc_id, index, k).
ContextWindow perturbed_context(const DocumentCorpus& corpus, const std::string& doc_id,
                                std::size_t index, std::size_t k, std::uint64_t seed);

struct RandomContextOptions {
  // Redraw a slot when its decoded text does not re-tokenize to the target
  // length (possible with merge-based tokenizers).
  int max_redraws = 16;
};

/// Replaces every slot of the gold window with uniformly drawn token ids of
/// the same token length, decoded to text.
ContextWindow random_context(const ContextWindow& gold, const std::vector<int>& vocab,
                             TokenizerHandle* tokenizer, std::uint64_t seed,
                             const RandomContextOptions& options = {});

struct SwapOptions {
  bool include_source_side = false;
};

/// Replaces antecedent mentions in the window with lexicon words of the same
/// POS and a different gender (any POS when the tag has no such word).
std::pair<ContextWindow, std::vector<SwapRecord>> swap_antecedents(const ContextWindow& gold,
                                                                   const ContrastiveExample& example,
                                                                   const GenderLexicon& lexicon,
                                                                   std::uint64_t seed,
                                                                   const SwapOptions& options = {});

/// Convenience: swap over the example's full context.
std::pair<ContextWindow, std::vector<SwapRecord>> swap_antecedents(const ContrastiveExample& example,
                                                                   const GenderLexicon& lexicon,
                                                                   std::uint64_t seed,
                                                                   const SwapOptions& options = {});

}  // namespace ctxprobe
