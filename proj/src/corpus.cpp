#include "ctxprobe/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/random.hpp"
#include "ctxprobe/text.hpp"

namespace ctxprobe {

namespace fs = std::filesystem;

std::size_t DocumentCorpus::sentence_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.sentences.size();
  return n;
}

const Document* DocumentCorpus::find(std::string_view doc_id) const {
  for (const auto& d : documents) {
    if (d.doc_id == doc_id) return &d;
  }
  return nullptr;
}

CorpusFormat parse_corpus_format(std::string_view id) {
  if (id == "jsonl") return CorpusFormat::kJsonl;
  if (id == "iwslt-xml") return CorpusFormat::kIwsltXml;
  throw ConfigError(fmt::format("unsupported corpus format '{}'", id), "corpus_format");
}

std::string_view to_string(Side side) { return side == Side::kSource ? "source" : "target"; }

Side parse_side(std::string_view s) {
  if (s == "source") return Side::kSource;
  if (s == "target") return Side::kTarget;
  throw DataError(fmt::format("unknown span side '{}'", s));
}

json to_json(const SentencePair& pair) {
  json j = {{"src", pair.src}};
  if (pair.tgt) j["tgt"] = *pair.tgt;
  return j;
}

json to_json(const Document& doc) {
  json sentences = json::array();
  for (const auto& s : doc.sentences) sentences.push_back(to_json(s));
  return {{"doc_id", doc.doc_id}, {"sentences", std::move(sentences)}};
}

json to_json(const AntecedentSpan& span) {
  return {{"side", to_string(span.side)},
          {"index", span.context_index},
          {"start", span.start},
          {"end", span.end}};
}

json to_json(const ContrastiveExample& ex) {
  json context = json::array();
  for (const auto& p : ex.context) context.push_back(to_json(p));
  json spans = json::array();
  for (const auto& s : ex.antecedent_spans) spans.push_back(to_json(s));
  return {{"example_id", ex.example_id},
          {"src", ex.src},
          {"gold_target", ex.gold_target},
          {"contrastive_targets", ex.contrastive_targets},
          {"gold_pronoun", ex.gold_pronoun},
          {"contrastive_pronouns", ex.contrastive_pronouns},
          {"context", std::move(context)},
          {"antecedent_spans", std::move(spans)},
          {"antecedent_pos", ex.antecedent_pos},
          {"antecedent_gender", ex.antecedent_gender}};
}

namespace {

SentencePair pair_from_json(const json& j) {
  SentencePair p;
  p.src = j.at("src").get<std::string>();
  if (j.contains("tgt") && !j["tgt"].is_null()) p.tgt = j["tgt"].get<std::string>();
  return p;
}

SentencePair normalized(SentencePair p) {
  p.src = text::nfc(p.src);
  if (p.tgt) p.tgt = text::nfc(*p.tgt);
  return p;
}

std::string xml_unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    static constexpr std::pair<std::string_view, char> kEntities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
    bool matched = false;
    for (const auto& [ent, ch] : kEntities) {
      if (s.substr(i, ent.size()) == ent) {
        out.push_back(ch);
        i += ent.size() - 1;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back('&');
  }
  return out;
}

std::string xml_attr(std::string_view tag, std::string_view name) {
  const std::string key = std::string(name) + "=";
  const auto pos = tag.find(key);
  if (pos == std::string_view::npos) return {};
  std::size_t b = pos + key.size();
  if (b >= tag.size()) return {};
  const char quote = tag[b];
  if (quote != '"' && quote != '\'') return {};
  const auto e = tag.find(quote, b + 1);
  if (e == std::string_view::npos) return {};
  return std::string(tag.substr(b + 1, e - b - 1));
}

// (doc_id, [segment text]) in file order.
std::vector<std::pair<std::string, std::vector<std::string>>> parse_iwslt_xml(const fs::path& path) {
  const std::string data = read_file(path);
  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  std::size_t pos = 0;
  while (true) {
    const auto doc_open = data.find("<doc", pos);
    if (doc_open == std::string::npos) break;
    const auto doc_tag_end = data.find('>', doc_open);
    const auto doc_close = data.find("</doc>", doc_open);
    if (doc_tag_end == std::string::npos || doc_close == std::string::npos) {
      throw DataError(fmt::format("{}: unterminated <doc> element", path.string()));
    }
    std::string doc_id = xml_attr(std::string_view(data).substr(doc_open, doc_tag_end - doc_open), "docid");
    if (doc_id.empty()) {
      const auto line = std::count(data.begin(), data.begin() + long(doc_open), '\n') + 1;
      throw DataError(fmt::format("{}:{}: <doc> without docid", path.string(), line));
    }
    std::vector<std::string> segs;
    std::size_t seg_pos = doc_tag_end;
    while (true) {
      const auto seg_open = data.find("<seg", seg_pos);
      if (seg_open == std::string::npos || seg_open > doc_close) break;
      const auto seg_tag_end = data.find('>', seg_open);
      const auto seg_close = data.find("</seg>", seg_open);
      if (seg_tag_end == std::string::npos || seg_close == std::string::npos || seg_close > doc_close) {
        const auto line = std::count(data.begin(), data.begin() + long(seg_open), '\n') + 1;
        throw DataError(fmt::format("{}:{}: malformed <seg>", path.string(), line));
      }
      segs.push_back(text::trim(xml_unescape(
          std::string_view(data).substr(seg_tag_end + 1, seg_close - seg_tag_end - 1))));
      seg_pos = seg_close + 6;
    }
    docs.emplace_back(std::move(doc_id), std::move(segs));
    pos = doc_close + 6;
  }
  return docs;
}

void check_document(const Document& doc, const std::string& where) {
  if (doc.doc_id.empty()) throw DataError(where + ": empty doc_id");
  if (doc.sentences.empty()) throw DataError(where + ": document '" + doc.doc_id + "' has no sentences");
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    if (text::trim(doc.sentences[i].src).empty()) {
      throw DataError(fmt::format("{}: document '{}' sentence {} has empty source", where, doc.doc_id, i));
    }
  }
}

}  // namespace

Document document_from_json(const json& j) {
  Document d;
  d.doc_id = j.at("doc_id").get<std::string>();
  for (const auto& s : j.at("sentences")) d.sentences.push_back(pair_from_json(s));
  return d;
}

DocumentCorpus load_documents(const fs::path& path, CorpusFormat format,
                              const std::optional<fs::path>& reference_path) {
  if (!fs::exists(path)) throw DataError("corpus not found: " + path.string());
  DocumentCorpus corpus;
  std::unordered_set<std::string> seen;
  auto add = [&](Document doc, const std::string& where) {
    check_document(doc, where);
    if (!seen.insert(doc.doc_id).second) {
      throw DataError(where + ": duplicate doc_id '" + doc.doc_id + "'");
    }
    for (auto& s : doc.sentences) s = normalized(std::move(s));
    corpus.documents.push_back(std::move(doc));
  };

  if (format == CorpusFormat::kJsonl) {
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
      const std::string where = fmt::format("{}:{}", path.string(), line);
      Document doc;
      try {
        doc = document_from_json(j);
      } catch (const json::exception& e) {
        throw DataError(where + ": malformed document record: " + e.what());
      }
      add(std::move(doc), where);
    });
    return corpus;
  }

  const auto src_docs = parse_iwslt_xml(path);
  std::vector<std::pair<std::string, std::vector<std::string>>> ref_docs;
  if (reference_path) {
    ref_docs = parse_iwslt_xml(*reference_path);
    if (ref_docs.size() != src_docs.size()) {
      throw DataError("source and reference XML disagree on document count");
    }
  }
  for (std::size_t d = 0; d < src_docs.size(); ++d) {
    Document doc{src_docs[d].first, {}};
    if (reference_path && (ref_docs[d].first != doc.doc_id ||
                           ref_docs[d].second.size() != src_docs[d].second.size())) {
      throw DataError("reference XML does not align with source for doc '" + doc.doc_id + "'");
    }
    for (std::size_t s = 0; s < src_docs[d].second.size(); ++s) {
      SentencePair p{src_docs[d].second[s], std::nullopt};
      if (reference_path) p.tgt = ref_docs[d].second[s];
      doc.sentences.push_back(std::move(p));
    }
    add(std::move(doc), path.string());
  }
  return corpus;
}

std::string serialize_documents(const DocumentCorpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents) out += to_json(d).dump() + "\n";
  return out;
}

ContrastiveExample contrastive_from_json(const json& j) {
  ContrastiveExample ex;
  ex.example_id = j.at("example_id").get<std::string>();
  ex.src = j.at("src").get<std::string>();
  ex.gold_target = j.at("gold_target").get<std::string>();
  ex.contrastive_targets = j.at("contrastive_targets").get<std::vector<std::string>>();
  ex.gold_pronoun = j.at("gold_pronoun").get<std::string>();
  ex.contrastive_pronouns = j.at("contrastive_pronouns").get<std::vector<std::string>>();
  if (j.contains("context")) {
    for (const auto& p : j["context"]) ex.context.push_back(pair_from_json(p));
  }
  if (j.contains("antecedent_spans")) {
    for (const auto& s : j["antecedent_spans"]) {
      AntecedentSpan span;
      span.side = parse_side(s.at("side").get<std::string>());
      span.context_index = s.at("index").get<int>();
      const auto start = s.at("start").get<long long>();
      const auto end = s.at("end").get<long long>();
      if (start < 0 || end < 0) throw DataError("negative span offset");
      span.start = std::size_t(start);
      span.end = std::size_t(end);
      ex.antecedent_spans.push_back(span);
    }
  }
  ex.antecedent_pos = j.value("antecedent_pos", "");
  ex.antecedent_gender = j.value("antecedent_gender", "");
  return ex;
}

namespace {

const std::string* span_sentence(const ContrastiveExample& ex, const AntecedentSpan& span) {
  if (span.context_index < 0 || std::size_t(span.context_index) >= ex.context.size()) return nullptr;
  const auto& pair = ex.context[std::size_t(span.context_index)];
  if (span.side == Side::kSource) return &pair.src;
  return pair.tgt ? &*pair.tgt : nullptr;
}

// NFC-normalizes the example. Sentences carrying spans are normalized piecewise
// between span boundaries so the offsets stay valid.
void normalize_example(ContrastiveExample& ex) {
  ex.src = text::nfc(ex.src);
  ex.gold_target = text::nfc(ex.gold_target);
  for (auto& t : ex.contrastive_targets) t = text::nfc(t);
  ex.gold_pronoun = text::to_lower(text::nfc(ex.gold_pronoun));
  for (auto& p : ex.contrastive_pronouns) p = text::to_lower(text::nfc(p));
  ex.antecedent_gender = text::to_lower(ex.antecedent_gender);

  for (std::size_t ci = 0; ci < ex.context.size(); ++ci) {
    for (Side side : {Side::kSource, Side::kTarget}) {
      auto& pair = ex.context[ci];
      std::string* sentence = side == Side::kSource ? &pair.src : (pair.tgt ? &*pair.tgt : nullptr);
      if (sentence == nullptr) continue;
      std::vector<AntecedentSpan*> spans;
      for (auto& s : ex.antecedent_spans) {
        if (s.context_index == int(ci) && s.side == side) spans.push_back(&s);
      }
      if (spans.empty()) {
        *sentence = text::nfc(*sentence);
        continue;
      }
      const std::u32string cps = text::decode_utf8(*sentence);
      std::set<std::size_t> cuts{0, cps.size()};
      for (const auto* s : spans) {
        cuts.insert(std::min(s->start, cps.size()));
        cuts.insert(std::min(s->end, cps.size()));
      }
      std::map<std::size_t, std::size_t> remap;
      std::string rebuilt;
      std::size_t new_len = 0;
      std::size_t prev = 0;
      remap[0] = 0;
      for (std::size_t cut : cuts) {
        if (cut == 0) continue;
        const std::string piece = text::nfc(text::encode_utf8(std::u32string_view(cps).substr(prev, cut - prev)));
        rebuilt += piece;
        new_len += text::codepoint_count(piece);
        remap[cut] = new_len;
        prev = cut;
      }
      *sentence = std::move(rebuilt);
      for (auto* s : spans) {
        if (s->start <= cps.size()) s->start = remap[s->start];
        if (s->end <= cps.size()) s->end = remap[s->end];
      }
    }
  }
}

}  // namespace

void validate_example(const ContrastiveExample& ex, std::size_t max_context) {
  if (ex.example_id.empty()) throw DataError("example without id");
  if (text::trim(ex.src).empty()) throw DataError("empty source sentence");
  if (ex.contrastive_targets.empty()) throw DataError("no contrastive targets");
  if (ex.contrastive_targets.size() != ex.contrastive_pronouns.size()) {
    throw DataError(fmt::format("{} contrastive targets but {} contrastive pronouns",
                                ex.contrastive_targets.size(), ex.contrastive_pronouns.size()));
  }
  for (const auto& t : ex.contrastive_targets) {
    if (t == ex.gold_target) throw DataError("contrastive target identical to gold target");
  }
  if (ex.context.size() > max_context) {
    throw DataError(fmt::format("context length {} exceeds maximum {}", ex.context.size(), max_context));
  }
  for (const auto& span : ex.antecedent_spans) {
    const std::string* sentence = span_sentence(ex, span);
    if (sentence == nullptr) {
      throw DataError(fmt::format("antecedent span references missing {} context sentence {}",
                                  to_string(span.side), span.context_index));
    }
    const std::size_t len = text::codepoint_count(*sentence);
    if (span.start >= span.end || span.end > len) {
      throw DataError(fmt::format("antecedent span [{}, {}) outside {} context sentence {} of length {}",
                                  span.start, span.end, to_string(span.side), span.context_index, len));
    }
  }
}

ContrastiveFormat parse_contrastive_format(std::string_view id) {
  if (id == "jsonl") return ContrastiveFormat::kJsonl;
  if (id == "contrapro") return ContrastiveFormat::kContraPro;
  throw ConfigError(fmt::format("unsupported contrastive format '{}'", id), "contrastive_format");
}

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Code point range of the first whole-word occurrence of `needle` in `hay`.
std::optional<std::pair<std::size_t, std::size_t>> find_word(const std::string& hay, const std::string& needle) {
  if (needle.empty()) return std::nullopt;
  const std::u32string h = text::decode_utf8(hay);
  const std::u32string n = text::decode_utf8(needle);
  for (std::size_t pos = h.find(n); pos != std::u32string::npos; pos = h.find(n, pos + 1)) {
    const bool left_ok = pos == 0 || !text::is_word_char(h[pos - 1]);
    const bool right_ok = pos + n.size() == h.size() || !text::is_word_char(h[pos + n.size()]);
    if (left_ok && right_ok) return std::make_pair(pos, pos + n.size());
  }
  return std::nullopt;
}

std::string gender_from_pronoun(const std::string& pronoun) {
  static const std::map<std::string, std::string> kMap = {
      {"er", "masc"}, {"sie", "fem"}, {"es", "neut"}, {"il", "masc"}, {"elle", "fem"}};
  const auto it = kMap.find(text::to_lower(pronoun));
  return it == kMap.end() ? std::string{} : it->second;
}

// Public ContraPro JSON list; context comes from the extracted context files.
ContrastiveSet load_contrapro(const fs::path& path, const ContrastiveLoadOptions& options) {
  json root;
  try {
    root = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": malformed ContraPro JSON: " + e.what());
  }
  if (!root.is_array()) throw DataError(path.string() + ": ContraPro file must be a JSON list");

  std::vector<std::string> ctx_src, ctx_tgt;
  const std::size_t csize = options.contrapro_context_size;
  if (options.context_src_path) ctx_src = read_lines(*options.context_src_path);
  if (options.context_tgt_path) ctx_tgt = read_lines(*options.context_tgt_path);
  if (!ctx_src.empty() && ctx_src.size() < root.size() * csize) {
    throw DataError("source context file shorter than contrastive set x context size");
  }
  if (!ctx_tgt.empty() && ctx_tgt.size() < root.size() * csize) {
    throw DataError("target context file shorter than contrastive set x context size");
  }

  ContrastiveSet out;
  out.input_count = root.size();
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& r = root[i];
    ContrastiveExample ex;
    ex.example_id = fmt::format("{}:{}", r.value("document id", std::string("doc")),
                                r.contains("segment id") ? r["segment id"].dump() : std::to_string(i));
    try {
      ex.src = r.at("src segment").get<std::string>();
      ex.gold_target = r.at("ref segment").get<std::string>();
      ex.gold_pronoun = r.at("ref pronoun").get<std::string>();
      for (const auto& e : r.at("errors")) {
        ex.contrastive_targets.push_back(e.at("contrastive").get<std::string>());
        ex.contrastive_pronouns.push_back(e.at("replacement").get<std::string>());
      }
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}: record {} lacks ContraPro fields: {}", path.string(), i, e.what()));
    }
    // Keep only the non-empty tail of the context block, preserving order.
    for (std::size_t k = 0; k < csize; ++k) {
      const std::size_t line = i * csize + k;
      std::string s = line < ctx_src.size() ? ctx_src[line] : std::string{};
      std::optional<std::string> t;
      if (line < ctx_tgt.size()) t = ctx_tgt[line];
      if (s.empty() && (!t || t->empty())) continue;
      ex.context.push_back({s, t});
    }
    ex.antecedent_pos = r.value("ref ante head pos", std::string{});
    ex.antecedent_gender = r.value("ref ante head gender", gender_from_pronoun(ex.gold_pronoun));
    const int distance = r.value("ante distance", 0);
    std::string reason;
    if (distance >= 1 && std::size_t(distance) <= ex.context.size()) {
      const int idx = int(ex.context.size()) - distance;
      const auto& pair = ex.context[std::size_t(idx)];
      if (pair.tgt && r.contains("ref ante head") && r["ref ante head"].is_string()) {
        if (auto hit = find_word(*pair.tgt, r["ref ante head"].get<std::string>())) {
          ex.antecedent_spans.push_back({Side::kTarget, idx, hit->first, hit->second});
        } else {
          reason = "target antecedent head not found in its context sentence";
        }
      }
      if (r.contains("src ante head") && r["src ante head"].is_string()) {
        if (auto hit = find_word(pair.src, r["src ante head"].get<std::string>())) {
          ex.antecedent_spans.push_back({Side::kSource, idx, hit->first, hit->second});
        }
      }
    }
    if (reason.empty()) {
      try {
        normalize_example(ex);
        validate_example(ex, options.max_context);
      } catch (const DataError& e) {
        reason = e.what();
      }
    }
    if (reason.empty()) {
      out.accepted.push_back(std::move(ex));
    } else {
      out.rejected.push_back({ex.example_id, reason});
    }
  }
  return out;
}

}  // namespace

ContrastiveSet load_contrastive_set(const fs::path& path, ContrastiveFormat format,
                                    const ContrastiveLoadOptions& options) {
  if (!fs::exists(path)) throw DataError("contrastive set not found: " + path.string());
  if (format == ContrastiveFormat::kContraPro) return load_contrapro(path, options);

  ContrastiveSet out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    ++out.input_count;
    ContrastiveExample ex;
    try {
      ex = contrastive_from_json(j);
    } catch (const std::exception& e) {
      throw DataError(fmt::format("{}:{}: malformed contrastive record: {}", path.string(), line, e.what()));
    }
    try {
      normalize_example(ex);
      validate_example(ex, options.max_context);
    } catch (const DataError& e) {
      out.rejected.push_back({ex.example_id, e.what()});
      return;
    }
    out.accepted.push_back(std::move(ex));
  });
  return out;
}

std::string serialize_contrastive(const std::vector<ContrastiveExample>& examples) {
  std::string out;
  for (const auto& ex : examples) out += to_json(ex).dump() + "\n";
  return out;
}

PronounClassSet PronounClassSet::make(std::string language_pair, std::vector<std::string> classes) {
  std::set<std::string> seen;
  for (auto& c : classes) {
    c = text::to_lower(c);
    if (!seen.insert(c).second) throw ConfigError("duplicate pronoun class '" + c + "'", "pronoun_classes");
  }
  if (classes.size() < 2) throw ConfigError("need at least two pronoun classes", "pronoun_classes");
  return {std::move(language_pair), std::move(classes)};
}

std::vector<ContrastiveExample> sample_balanced_subset(const std::vector<ContrastiveExample>& examples,
                                                       std::size_t n, std::uint64_t seed,
                                                       const PronounClassSet* classes) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  if (classes != nullptr) {
    for (const auto& c : classes->classes) by_class[c];
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::string c = text::to_lower(examples[i].gold_pronoun);
    if (classes != nullptr && !by_class.contains(c)) continue;
    by_class[c].push_back(i);
  }
  if (by_class.empty()) throw DataError("no pronoun classes to balance over");
  const std::size_t k = by_class.size();
  if (n % k != 0) {
    throw DataError(fmt::format("subset size {} is not divisible by the {} pronoun classes", n, k));
  }
  const std::size_t per_class = n / k;
  for (const auto& [c, idx] : by_class) {
    if (idx.size() < per_class) {
      throw DataError(fmt::format("pronoun class '{}' has {} examples, needs {} (shortfall {})", c,
                                  idx.size(), per_class, per_class - idx.size()));
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  for (auto& [c, idx] : by_class) {
    rng.shuffle(std::span<std::size_t>(idx));
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + long(per_class));
  }
  rng.shuffle(std::span<std::size_t>(chosen));
  std::vector<ContrastiveExample> out;
  out.reserve(n);
  for (std::size_t i : chosen) out.push_back(examples[i]);
  return out;
}

void GenderLexicon::add(const std::string& word, const std::string& pos, const std::string& gender) {
  const Key key{pos, gender};
  if (const auto it = index_.find(word); it != index_.end()) {
    if (it->second == key) return;
    throw DataError(fmt::format("lexicon word '{}' listed under both {}/{} and {}/{}", word,
                                it->second.first, it->second.second, pos, gender));
  }
  index_.emplace(word, key);
  buckets_[key].push_back(word);
}

std::vector<std::string> GenderLexicon::genders() const {
  std::set<std::string> g;
  for (const auto& [key, words] : buckets_) g.insert(key.second);
  return {g.begin(), g.end()};
}

std::optional<GenderLexicon::Key> GenderLexicon::lookup(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

GenderLexicon load_lexicon(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("lexicon not found: " + path.string());
  GenderLexicon lex;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(text::trim(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start)));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError(fmt::format("{}:{}: expected 'word<TAB>pos<TAB>gender'", path.string(), i + 1));
    }
    lex.add(text::nfc(fields[0]), fields[1], text::to_lower(fields[2]));
  }
  if (lex.size() == 0) throw DataError("lexicon is empty: " + path.string());
  return lex;
}

DocumentCorpus corpus_from_examples(const std::vector<ContrastiveExample>& examples) {
  DocumentCorpus corpus;
  corpus.documents.reserve(examples.size());
  for (const auto& ex : examples) {
    Document d{ex.example_id, ex.context};
    d.sentences.push_back({ex.src, ex.gold_target});
    corpus.documents.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace ctxprobe
