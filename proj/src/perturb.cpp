#include "ctxprobe/perturb.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/random.hpp"
#include "ctxprobe/text.hpp"

namespace ctxprobe {

std::string_view to_string(ContextCondition c) {
  switch (c) {
    case ContextCondition::kNone: return "none";
    case ContextCondition::kGold: return "gold";
    case ContextCondition::kPerturbed: return "perturbed";
    case ContextCondition::kRandom: return "random";
    case ContextCondition::kAntecedentSwapped: return "antecedent_swapped";
  }
  return "none";
}

ContextCondition parse_condition(std::string_view s) {
  if (s == "none") return ContextCondition::kNone;
  if (s == "gold") return ContextCondition::kGold;
  if (s == "perturbed") return ContextCondition::kPerturbed;
  if (s == "random") return ContextCondition::kRandom;
  if (s == "antecedent_swapped") return ContextCondition::kAntecedentSwapped;
  throw ConfigError(fmt::format("unknown context condition '{}'", s), "conditions");
}

json to_json(const SwapRecord& r) {
  return {{"span", to_json(r.original_span)},
          {"replaced_span", to_json(r.replaced_span)},
          {"original_word", r.original_word},
          {"replacement_word", r.replacement_word},
          {"original_gender", r.original_gender},
          {"replacement_gender", r.replacement_gender},
          {"pos_matched", r.pos_matched}};
}

json to_json(const ContextWindow& w) {
  json pairs = json::array();
  for (const auto& p : w.pairs) pairs.push_back(to_json(p));
  json spans = json::array();
  for (const auto& s : w.antecedent_spans) spans.push_back(to_json(s));
  json prov = {{"description", w.provenance.description},
               {"seed", w.provenance.seed},
               {"doc_ids", w.provenance.doc_ids},
               {"start_index", w.provenance.start_index}};
  if (!w.provenance.sampled_ids.empty()) prov["sampled_ids"] = w.provenance.sampled_ids;
  return {{"condition", to_string(w.condition)},
          {"pairs", std::move(pairs)},
          {"antecedent_spans", std::move(spans)},
          {"provenance", std::move(prov)}};
}

ContextWindow window_from_json(const json& j) {
  ContextWindow w;
  w.condition = parse_condition(j.at("condition").get<std::string>());
  for (const auto& p : j.at("pairs")) {
    SentencePair sp{p.at("src").get<std::string>(), std::nullopt};
    if (p.contains("tgt")) sp.tgt = p["tgt"].get<std::string>();
    w.pairs.push_back(std::move(sp));
  }
  for (const auto& s : j.value("antecedent_spans", json::array())) {
    w.antecedent_spans.push_back({parse_side(s.at("side").get<std::string>()), s.at("index").get<int>(),
                                  s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()});
  }
  const json& prov = j.at("provenance");
  w.provenance.description = prov.value("description", "");
  w.provenance.seed = prov.value("seed", std::uint64_t{0});
  w.provenance.doc_ids = prov.value("doc_ids", std::vector<std::string>{});
  w.provenance.start_index = prov.value("start_index", std::size_t{0});
  if (prov.contains("sampled_ids")) {
    w.provenance.sampled_ids = prov["sampled_ids"].get<std::vector<std::vector<int>>>();
  }
  return w;
}

ContextWindow none_context() {
  ContextWindow w;
  w.provenance.description = "no context";
  return w;
}

ContextWindow gold_context(const Document& doc, std::size_t index, std::size_t k) {
  if (index >= doc.sentences.size()) {
    throw DataError(fmt::format("sentence index {} out of range for document '{}' ({} sentences)", index,
                                doc.doc_id, doc.sentences.size()));
  }
  const std::size_t n = std::min(k, index);
  ContextWindow w;
  w.condition = ContextCondition::kGold;
  w.pairs.assign(doc.sentences.begin() + long(index - n), doc.sentences.begin() + long(index));
  w.provenance.description = "preceding pairs of the same document";
  w.provenance.doc_ids = {doc.doc_id};
  w.provenance.start_index = index - n;
  return w;
}

ContextWindow gold_context(const ContrastiveExample& ex, std::size_t k) {
  const std::size_t n = std::min(k, ex.context.size());
  const std::size_t first = ex.context.size() - n;
  ContextWindow w;
  w.condition = ContextCondition::kGold;
  w.pairs.assign(ex.context.begin() + long(first), ex.context.end());
  for (auto span : ex.antecedent_spans) {
    if (span.context_index < int(first)) continue;
    span.context_index -= int(first);
    w.antecedent_spans.push_back(span);
  }
  w.provenance.description = "preceding pairs of the same document";
  w.provenance.doc_ids = {ex.example_id};
  w.provenance.start_index = first;
  return w;
}

ContextWindow perturbed_context(const DocumentCorpus& corpus, const std::string& doc_id, std::size_t size,
                                std::uint64_t seed) {
  if (corpus.documents.size() < 2) throw DataError("perturbed context needs a corpus with at least two documents");
  std::vector<const Document*> donors;
  for (const auto& d : corpus.documents) {
    if (d.doc_id != doc_id && d.sentences.size() >= size) donors.push_back(&d);
  }
  if (donors.empty()) {
    throw DataError(fmt::format("no donor document other than '{}' has at least {} sentences", doc_id, size));
  }
  Rng rng(seed);
  const Document& donor = *donors[rng.uniform_index(donors.size())];
  const std::size_t start = rng.uniform_index(donor.sentences.size() - size + 1);
  ContextWindow w;
  w.condition = ContextCondition::kPerturbed;
  w.pairs.assign(donor.sentences.begin() + long(start), donor.sentences.begin() + long(start + size));
  w.provenance.description = "contiguous run from a different document";
  w.provenance.seed = seed;
  w.provenance.doc_ids = {donor.doc_id};
  w.provenance.start_index = start;
  return w;
}

ContextWindow perturbed_context(const DocumentCorpus& corpus, const std::string& doc_id, std::size_t index,
                                std::size_t k, std::uint64_t seed) {
  const Document* doc = corpus.find(doc_id);
  if (doc == nullptr) throw DataError("unknown document '" + doc_id + "'");
  return perturbed_context(corpus, doc_id, gold_context(*doc, index, k).pairs.size(), seed);
}

namespace {

std::string ltrim_spaces(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::string random_slot(const std::string& gold_text, const std::vector<int>& vocab, TokenizerHandle& tok,
                        Rng& rng, int max_redraws, std::vector<int>& ids_out) {
  const std::size_t len = tok.tokenize(gold_text).size();
  std::string decoded;
  for (int attempt = 0; attempt <= max_redraws; ++attempt) {
    ids_out.clear();
    for (std::size_t i = 0; i < len; ++i) ids_out.push_back(vocab[rng.uniform_index(vocab.size())]);
    decoded = tok.detokenize(ids_out);
    const std::string trimmed = ltrim_spaces(decoded);
    if (trimmed != decoded && tok.tokenize(trimmed).size() == len) return trimmed;
    if (tok.tokenize(decoded).size() == len) return decoded;
  }
  return decoded;
}

}  // namespace

ContextWindow random_context(const ContextWindow& gold, const std::vector<int>& vocab, TokenizerHandle* tokenizer,
                             std::uint64_t seed, const RandomContextOptions& options) {
  if (gold.condition != ContextCondition::kGold) throw Error("random context must be built from a gold window");
  ContextWindow w;
  w.condition = ContextCondition::kRandom;
  w.provenance.description = "uniform vocabulary tokens matching gold slot lengths";
  w.provenance.seed = seed;
  w.provenance.doc_ids = gold.provenance.doc_ids;
  if (gold.pairs.empty()) return w;
  if (tokenizer == nullptr) throw CapabilityError("random context requires a tokenizer");
  if (vocab.empty()) throw Error("random context requires a non-empty vocabulary");

  Rng rng(seed);
  for (const auto& pair : gold.pairs) {
    SentencePair out;
    std::vector<int> ids;
    out.src = random_slot(pair.src, vocab, *tokenizer, rng, options.max_redraws, ids);
    w.provenance.sampled_ids.push_back(ids);
    if (pair.tgt) {
      out.tgt = random_slot(*pair.tgt, vocab, *tokenizer, rng, options.max_redraws, ids);
      w.provenance.sampled_ids.push_back(ids);
    }
    w.pairs.push_back(std::move(out));
  }
  return w;
}

std::pair<ContextWindow, std::vector<SwapRecord>> swap_antecedents(const ContextWindow& gold,
                                                                   const ContrastiveExample& ex,
                                                                   const GenderLexicon& lexicon, std::uint64_t seed,
                                                                   const SwapOptions& options) {
  if (lexicon.genders().size() < 2) {
    throw DataError("antecedent swap needs a lexicon with at least two gender labels");
  }
  std::vector<AntecedentSpan> spans;
  for (const auto& s : gold.antecedent_spans) {
    if (s.side == Side::kTarget || options.include_source_side) spans.push_back(s);
  }
  const bool has_target = std::any_of(spans.begin(), spans.end(), [](const auto& s) { return s.side == Side::kTarget; });
  if (!has_target) {
    throw DataError(fmt::format("example '{}' has no target-side antecedent span in its context window", ex.example_id));
  }
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
    return std::tie(a.context_index, a.side, a.start) < std::tie(b.context_index, b.side, b.start);
  });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    const auto& a = spans[i - 1];
    const auto& b = spans[i];
    if (a.context_index == b.context_index && a.side == b.side && b.start < a.end) {
      throw DataError(fmt::format("example '{}' has overlapping antecedent spans", ex.example_id));
    }
  }

  const std::string gender = text::to_lower(ex.antecedent_gender);
  std::vector<std::string> same_pos, any_pos;
  for (const auto& [key, words] : lexicon.buckets()) {
    if (key.second == gender) continue;
    any_pos.insert(any_pos.end(), words.begin(), words.end());
    if (key.first == ex.antecedent_pos) same_pos.insert(same_pos.end(), words.begin(), words.end());
  }
  if (any_pos.empty()) {
    throw DataError(fmt::format("lexicon has no word with a gender different from '{}'", gender));
  }
  const bool pos_matched = !same_pos.empty();
  const std::vector<std::string>& pool = pos_matched ? same_pos : any_pos;

  ContextWindow out = gold;
  out.condition = ContextCondition::kAntecedentSwapped;
  out.provenance.description = "gold context with antecedents replaced by different-gender words";
  out.provenance.seed = seed;
  out.antecedent_spans.clear();

  Rng rng(seed);
  std::vector<SwapRecord> records;
  // Spans are applied in document order; `shift` carries each sentence's
  // length change forward to the later spans in it.
  std::vector<std::string> picks;
  for (std::size_t i = 0; i < spans.size(); ++i) picks.push_back(pool[rng.uniform_index(pool.size())]);

  std::map<std::pair<int, Side>, long> shift;  // cumulative code point delta per sentence
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const AntecedentSpan& span = spans[i];
    auto& pair = out.pairs.at(std::size_t(span.context_index));
    std::string& sentence = span.side == Side::kSource ? pair.src : pair.tgt.value();
    long& delta = shift[{span.context_index, span.side}];
    const std::size_t start = std::size_t(long(span.start) + delta);
    const std::size_t end = std::size_t(long(span.end) + delta);
    const std::size_t b0 = text::byte_offset(sentence, start);
    const std::size_t b1 = text::byte_offset(sentence, end);
    const std::string original = sentence.substr(b0, b1 - b0);
    const std::string replacement = text::match_leading_case(picks[i], original);
    sentence.replace(b0, b1 - b0, replacement);

    SwapRecord rec;
    rec.original_span = span;
    rec.replaced_span = span;
    rec.replaced_span.start = start;
    rec.replaced_span.end = start + text::codepoint_count(replacement);
    rec.original_word = original;
    rec.replacement_word = replacement;
    rec.original_gender = gender;
    const auto key = lexicon.lookup(picks[i]);
    rec.replacement_gender = key ? key->second : std::string{};
    rec.pos_matched = pos_matched;
    delta += long(text::codepoint_count(replacement)) - long(end - start);
    out.antecedent_spans.push_back(rec.replaced_span);
    records.push_back(std::move(rec));
  }
  // Source-side spans that were not swapped keep their positions.
  if (!options.include_source_side) {
    for (const auto& s : gold.antecedent_spans) {
      if (s.side == Side::kSource) out.antecedent_spans.push_back(s);
    }
  }
  return {std::move(out), std::move(records)};
}

std::pair<ContextWindow, std::vector<SwapRecord>> swap_antecedents(const ContrastiveExample& example,
                                                                   const GenderLexicon& lexicon, std::uint64_t seed,
                                                                   const SwapOptions& options) {
  return swap_antecedents(gold_context(example, example.context.size()), example, lexicon, seed, options);
}

}  // namespace ctxprobe
