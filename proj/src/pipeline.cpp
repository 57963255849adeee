#include "ctxprobe/pipeline.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/metrics.hpp"
#include "ctxprobe/parallel.hpp"
#include "ctxprobe/random.hpp"
#include "ctxprobe/report.hpp"
#include "ctxprobe/text.hpp"

namespace ctxprobe {

namespace fs = std::filesystem;

namespace {

// Typed access to one config object; remembers which keys were read so the
// rest can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string prefix) : prefix_(std::move(prefix)) {
    if (j.is_null()) {
      j_ = json::object();
    } else if (!j.is_object()) {
      throw ConfigError("must be an object", prefix_.empty() ? "<root>" : prefix_);
    } else {
      j_ = j;
    }
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_[key].is_null();
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    try {
      return j_[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("has the wrong type ({})", j_[key].type_name()), field(key));
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    auto v = opt<T>(key);
    return v ? *v : fallback;
  }

  template <class T>
  T require(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) throw ConfigError("is required", field(key));
    return *v;
  }

  Section sub(const std::string& key) {
    used_.insert(key);
    return Section(j_.contains(key) ? j_[key] : json(), field(key));
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    static const json null_json;
    return j_.contains(key) ? j_[key] : null_json;
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!used_.count(k)) throw ConfigError("unknown key", field(k));
  }

 private:
  json j_;
  std::string prefix_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& dir, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : dir / path;
}

template <class T, class Parse>
std::vector<T> parse_list(Section& s, const std::string& key, std::vector<T> fallback, Parse parse) {
  auto names = s.opt<std::vector<std::string>>(key);
  if (!names) return fallback;
  std::vector<T> out;
  for (const auto& n : *names) {
    try {
      out.push_back(parse(n));
    } catch (const Error& e) {
      throw ConfigError(e.what(), s.field(key));
    }
  }
  return out;
}

}  // namespace

RunConfig parse_config(const json& j_in, const fs::path& config_dir, const ConfigOverrides& ov) {
  json j = j_in;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  // Apply overrides to the raw document so run.json records what ran.
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.model_id) j["model_id"] = *ov.model_id;
  if (ov.output_dir) j["output_dir"] = *ov.output_dir;
  if (ov.base_url || ov.max_parallel || ov.cache_dir) {
    if (!j.contains("backend") || j["backend"].is_null()) j["backend"] = json::object();
    if (ov.base_url) j["backend"]["base_url"] = *ov.base_url;
    if (ov.max_parallel) j["backend"]["max_parallel"] = *ov.max_parallel;
    if (ov.cache_dir) j["backend"]["cache_dir"] = *ov.cache_dir;
  }

  RunConfig c;
  c.config_dir = config_dir;
  c.raw = j;
  Section root(j, "");
  c.run_id = root.require<std::string>("run_id");
  if (c.run_id.empty() || c.run_id.find('/') != std::string::npos || c.run_id == "." || c.run_id == "..")
    throw ConfigError("must be a plain directory name", "run_id");
  c.output_dir = resolve(config_dir, root.get<std::string>("output_dir", "reports"));
  c.seed = root.get<std::uint64_t>("seed", 0);
  c.model_id = root.require<std::string>("model_id");

  {
    Section s = root.sub("languages");
    c.src_lang = s.get<std::string>("src", c.src_lang);
    c.tgt_lang = s.get<std::string>("tgt", c.tgt_lang);
    c.src_name = s.get<std::string>("src_name", c.src_name);
    c.tgt_name = s.get<std::string>("tgt_name", c.tgt_name);
    s.finish();
  }
  {
    Section s = root.sub("backend");
    c.backend_kind = s.get<std::string>("kind", "mock");
    if (c.backend_kind != "mock" && c.backend_kind != "http")
      throw ConfigError("must be 'mock' or 'http'", "backend.kind");
    c.backend.model_id = c.model_id;
    c.backend.base_url = s.get<std::string>("base_url", c.backend_kind == "mock" ? "mock://local" : "");
    if (c.backend.base_url.empty()) throw ConfigError("is required for http backends", "backend.base_url");
    c.api_key_env = s.get<std::string>("api_key_env", "");
    if (!c.api_key_env.empty())
      if (const char* key = std::getenv(c.api_key_env.c_str())) c.backend.api_key = key;
    c.backend.max_parallel = s.get<int>("max_parallel", 4);
    c.backend.max_retries = s.get<int>("max_retries", 3);
    c.backend.request_timeout_s = s.get<double>("timeout_s", 120.0);
    c.backend.retry_backoff = std::chrono::milliseconds(s.get<long>("retry_backoff_ms", 250));
    if (auto cd = s.opt<std::string>("cache_dir")) c.backend.cache_dir = resolve(config_dir, *cd);
    c.backend.vocab_size = s.opt<std::size_t>("vocab_size");
    c.backend.excluded_token_ids = s.get<std::vector<int>>("excluded_token_ids", {});
    {
      Section m = s.sub("mock");
      c.mock.model = m.get<std::string>("model", c.mock.model);
      c.mock.tokenizer = m.get<std::string>("tokenizer", c.mock.tokenizer);
      c.mock.seed = m.get<std::uint64_t>("seed", c.seed);
      static const std::set<std::string> models = {"desk", "uniform", "random", "echo"};
      if (!models.count(c.mock.model)) throw ConfigError("must be desk, uniform, random or echo", "backend.mock.model");
      if (c.mock.tokenizer != "word" && c.mock.tokenizer != "char")
        throw ConfigError("must be word or char", "backend.mock.tokenizer");
      m.finish();
    }
    s.finish();
    c.backend.validate();
  }
  {
    Section s = root.sub("data");
    if (auto p = s.opt<std::string>("corpus")) c.corpus = resolve(config_dir, *p);
    if (auto f = s.opt<std::string>("corpus_format")) {
      try {
        c.corpus_format = parse_corpus_format(*f);
      } catch (const Error& e) {
        throw ConfigError(e.what(), "data.corpus_format");
      }
    }
    if (auto p = s.opt<std::string>("corpus_reference")) c.corpus_reference = resolve(config_dir, *p);
    if (auto p = s.opt<std::string>("contrastive")) c.contrastive = resolve(config_dir, *p);
    if (auto f = s.opt<std::string>("contrastive_format")) {
      try {
        c.contrastive_format = parse_contrastive_format(*f);
      } catch (const Error& e) {
        throw ConfigError(e.what(), "data.contrastive_format");
      }
    }
    if (auto p = s.opt<std::string>("contrapro_context_src")) c.contrastive_options.context_src_path = resolve(config_dir, *p);
    if (auto p = s.opt<std::string>("contrapro_context_tgt")) c.contrastive_options.context_tgt_path = resolve(config_dir, *p);
    c.contrastive_options.contrapro_context_size = s.get<std::size_t>("contrapro_context_size", 1);
    c.contrastive_options.max_context = s.get<std::size_t>("max_context", 16);
    if (auto p = s.opt<std::string>("lexicon")) c.lexicon = resolve(config_dir, *p);
    c.pronoun_classes = s.get<std::vector<std::string>>("pronoun_classes", {});
    s.finish();
  }
  {
    Section s = root.sub("translate");
    c.translate_kinds = parse_list(s, "prompt_kinds", c.translate_kinds, parse_prompt_kind);
    c.translate_conditions = parse_list(s, "conditions", c.translate_conditions, parse_condition);
    c.translate_context_size = s.get<std::size_t>("context_size", c.translate_context_size);
    c.translate_limit = s.get<std::size_t>("limit", 0);
    for (auto cond : c.translate_conditions)
      if (cond == ContextCondition::kNone || cond == ContextCondition::kAntecedentSwapped)
        throw ConfigError(fmt::format("'{}' is not a document-translation condition", to_string(cond)),
                          "translate.conditions");
    s.finish();
  }
  {
    Section s = root.sub("pronoun");
    if (auto k = s.opt<std::string>("prompt_kind")) c.pronoun_kind = parse_prompt_kind(*k);
    if (c.pronoun_kind == PromptKind::kSentence)
      throw ConfigError("must be a context prompt (generic or explicit)", "pronoun.prompt_kind");
    c.pronoun_conditions = parse_list(s, "conditions", c.pronoun_conditions, parse_condition);
    c.pronoun_context_size = s.get<std::size_t>("context_size", c.pronoun_context_size);
    c.pronoun_subset = s.get<std::size_t>("subset", 0);
    c.swap_source_side = s.get<bool>("swap_source_side", false);
    s.finish();
  }
  {
    Section s = root.sub("attribution");
    if (auto k = s.opt<std::string>("prompt_kind")) c.attribution_kind = parse_prompt_kind(*k);
    if (c.attribution_kind == PromptKind::kSentence)
      throw ConfigError("must be a context prompt (generic or explicit)", "attribution.prompt_kind");
    c.attribution_conditions = parse_list(s, "conditions", c.attribution_conditions, parse_condition);
    for (auto cond : c.attribution_conditions)
      if (cond == ContextCondition::kNone)
        throw ConfigError("attribution needs a context condition", "attribution.conditions");
    c.attribution_context_size = s.get<std::size_t>("context_size", c.attribution_context_size);
    c.attribution_subset = s.get<std::size_t>("subset", c.attribution_subset);
    if (auto v = s.opt<std::string>("sweep")) c.erasure.scope = parse_scope(*v);
    if (auto v = s.opt<std::string>("granularity")) c.erasure.granularity = parse_granularity(*v);
    if (auto v = s.opt<std::string>("aggregate")) c.aggregation = parse_aggregation(*v);
    for (const auto& p : s.get<std::vector<std::string>>("import", {}))
      c.attribution_imports.push_back(resolve(config_dir, p));
    s.finish();
  }
  {
    Section s = root.sub("prompt");
    c.chat_wrap = s.get<bool>("chat_wrap", false);
    const json& t = s.raw("templates");
    if (!t.is_null()) c.templates = PromptTemplates::from_json(t);
    s.finish();
  }
  {
    Section s = root.sub("decoding");
    c.decoding.max_tokens = s.get<int>("max_tokens", c.decoding.max_tokens);
    c.decoding.temperature = s.get<double>("temperature", c.decoding.temperature);
    c.decoding.stop = s.get<std::vector<std::string>>("stop", c.decoding.stop);
    if (c.decoding.max_tokens < 1) throw ConfigError("must be >= 1", "decoding.max_tokens");
    s.finish();
  }
  {
    Section s = root.sub("comet");
    if (auto p = s.opt<std::string>("scores")) c.comet_scores = resolve(config_dir, *p);
    s.finish();
  }
  root.finish();

  auto uses_swap = [](const std::vector<ContextCondition>& v) {
    return std::find(v.begin(), v.end(), ContextCondition::kAntecedentSwapped) != v.end();
  };
  if ((uses_swap(c.pronoun_conditions) || uses_swap(c.attribution_conditions)) && !c.lexicon)
    throw ConfigError("antecedent_swapped needs a gender lexicon", "data.lexicon");
  if (!c.corpus && !c.contrastive) throw ConfigError("needs a corpus or a contrastive set", "data");
  return c;
}

RunConfig load_config(const fs::path& path, const ConfigOverrides& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("cannot read {}: {}", path.string(), e.what()), "--config");
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()), "--config");
  }
  return parse_config(j, fs::absolute(path).parent_path(), overrides);
}

struct Pipeline::Data {
  DocumentCorpus corpus;
  bool has_corpus = false;
  ContrastiveSet contrastive;
  bool has_contrastive = false;
  std::optional<GenderLexicon> lexicon;
  std::optional<PronounClassSet> classes;
};

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}
Pipeline::~Pipeline() = default;

const Pipeline::Data& Pipeline::data() {
  if (data_) return *data_;
  auto d = std::make_unique<Data>();
  if (config_.corpus) {
    d->corpus = load_documents(*config_.corpus, config_.corpus_format, config_.corpus_reference);
    d->has_corpus = true;
  }
  if (config_.contrastive) {
    d->contrastive = load_contrastive_set(*config_.contrastive, config_.contrastive_format, config_.contrastive_options);
    d->has_contrastive = true;
  }
  if (config_.lexicon) d->lexicon = load_lexicon(*config_.lexicon);
  if (!config_.pronoun_classes.empty())
    d->classes = PronounClassSet::make(config_.language_pair(), config_.pronoun_classes);
  data_ = std::move(d);
  return *data_;
}

namespace {

void add_template_words(std::vector<std::string>& texts, const RunConfig& c) {
  auto expand = [&](std::string s) {
    for (auto [from, to] : {std::pair<std::string, std::string>{"{src_lang}", c.src_name},
                            {"{tgt_lang}", c.tgt_name},
                            {"{src}", ""},
                            {"{tgt}", ""}}) {
      for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from)) s.replace(pos, from.size(), to);
    }
    return s;
  };
  const auto& t = c.templates;
  for (const auto& s : {t.sentence_instruction, t.explicit_instruction, t.pair_line, t.final_line})
    texts.push_back(expand(s));
  const ChatMarkers m;
  texts.push_back(m.user_prefix + m.user_suffix + m.assistant_prefix);
  texts.push_back("Hello world");
}

// Lexicon words as they can appear after a swap: both leading cases and
// common punctuation attached.
void add_lexicon_words(std::vector<std::string>& texts, const GenderLexicon& lex) {
  static const std::vector<std::string> suffixes = {"", ".", ",", "!", "?", ":", ";", "\"", "'", ")", ".\"", ",\"", "'s", "s"};
  static const std::vector<std::string> prefixes = {"", "\"", "("};
  for (const auto& [key, words] : lex.buckets())
    for (const auto& w : words)
      for (const auto& form : {w, text::match_leading_case(w, "X"), text::match_leading_case(w, "x")})
        for (const auto& p : prefixes)
          for (const auto& s : suffixes) texts.push_back(p + form + s);
}

}  // namespace

Client& Pipeline::client() {
  if (client_) return *client_;
  std::shared_ptr<Transport> transport;
  if (config_.backend_kind == "mock") {
    const Data& d = data();
    std::shared_ptr<Tokenizer> tok;
    if (config_.mock.tokenizer == "char") {
      tok = std::make_shared<CharTokenizer>(CharTokenizer::default_alphabet());
    } else {
      std::vector<std::string> texts;
      for (const auto& doc : d.corpus.documents)
        for (const auto& p : doc.sentences) {
          texts.push_back(p.src);
          if (p.tgt) texts.push_back(*p.tgt);
        }
      for (const auto& ex : d.contrastive.accepted) {
        texts.push_back(ex.src);
        texts.push_back(ex.gold_target);
        for (const auto& t : ex.contrastive_targets) texts.push_back(t);
        for (const auto& p : ex.context) {
          texts.push_back(p.src);
          if (p.tgt) texts.push_back(*p.tgt);
        }
      }
      if (d.lexicon) add_lexicon_words(texts, *d.lexicon);
      add_template_words(texts, config_);
      tok = WordTokenizer::from_texts(texts);
    }
    std::shared_ptr<MockModel> model;
    if (config_.mock.model == "desk") {
      std::unordered_map<std::string, std::vector<DeskEntry>> table;
      for (const auto& doc : d.corpus.documents)
        for (std::size_t i = 0; i < doc.sentences.size(); ++i)
          if (doc.sentences[i].tgt)
            table[doc.sentences[i].src].push_back(
                {*doc.sentences[i].tgt, i > 0 ? doc.sentences[i - 1].tgt.value_or("") : std::string(), {}});
      for (const auto& ex : d.contrastive.accepted) {
        std::string cue;
        for (const auto& span : ex.antecedent_spans)
          if (span.side == Side::kTarget && ex.context.at(std::size_t(span.context_index)).tgt)
            cue = *ex.context[std::size_t(span.context_index)].tgt;
        table[ex.src].push_back({ex.gold_target, cue, ex.contrastive_targets});
      }
      model = std::make_shared<DeskTranslatorModel>(std::move(table), config_.mock.seed);
    } else if (config_.mock.model == "uniform") {
      model = std::make_shared<UniformModel>(tok->vocabulary().size);
    } else if (config_.mock.model == "random") {
      model = std::make_shared<RandomScoreModel>(config_.mock.seed);
    } else {
      model = std::make_shared<EchoModel>(tok->vocabulary().size);
    }
    mock_ = std::make_shared<MockServer>(tok, model, config_.model_id);
    transport = mock_;
  } else {
    transport = std::make_shared<HttpTransport>(config_.backend.base_url, config_.backend.api_key,
                                                config_.backend.request_timeout_s);
  }
  client_ = std::make_unique<Client>(config_.backend, transport);
  return *client_;
}

namespace {

std::string rstrip_spaces(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

json instance_base(const std::string& id, const std::string& task, const std::string& example_id, PromptKind kind,
                   ContextCondition cond, std::uint64_t seed, const ContextWindow& window,
                   const RenderedPrompt& prompt) {
  return {{"instance_id", id},
          {"task", task},
          {"example_id", example_id},
          {"prompt_kind", to_string(kind)},
          {"condition", to_string(cond)},
          {"seed", seed},
          {"context", to_json(window)},
          {"prompt", to_json(prompt)}};
}

// Byte ranges in the prompt text covered by the window's antecedent spans.
std::vector<std::pair<std::size_t, std::size_t>> antecedent_ranges(const ContextWindow& w, const RenderedPrompt& p) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& span : w.antecedent_spans) {
    const auto want = span.side == Side::kSource ? SegmentKind::kContextSource : SegmentKind::kContextTarget;
    for (const auto& seg : p.segments) {
      if (seg.kind != want || seg.pair_index != span.context_index) continue;
      const auto& pair = w.pairs.at(std::size_t(span.context_index));
      const std::string& s = span.side == Side::kSource ? pair.src : *pair.tgt;
      out.emplace_back(seg.begin + text::byte_offset(s, span.start), seg.begin + text::byte_offset(s, span.end));
    }
  }
  return out;
}

}  // namespace

std::size_t Pipeline::prepare() {
  const Data& d = data();
  const RunConfig& c = config_;
  std::vector<json> instances;
  json report = json::object();
  auto seed_for = [&](const std::string& key) { return derive_seed(c.seed, key); };
  auto spec_for = [&](PromptKind kind) {
    PromptSpec s;
    s.kind = kind;
    s.src_lang_name = c.src_name;
    s.tgt_lang_name = c.tgt_name;
    s.chat_wrap = c.chat_wrap;
    s.templates = c.templates;
    return s;
  };

  auto needs_random = [](const std::vector<ContextCondition>& v) {
    return std::find(v.begin(), v.end(), ContextCondition::kRandom) != v.end();
  };
  std::vector<int> vocab_ids;
  if ((d.has_corpus && needs_random(c.translate_conditions)) ||
      (d.has_contrastive && (needs_random(c.pronoun_conditions) || needs_random(c.attribution_conditions)))) {
    client().check_capabilities(false, true);
    vocab_ids = client().vocabulary().samplable_ids();
  }
  TokenizerHandle* tokenizer = client_ ? static_cast<TokenizerHandle*>(client_.get()) : nullptr;

  std::size_t swaps = 0, fallbacks = 0;
  // Builds the context window for a contrastive example under a condition.
  auto example_window = [&](const ContrastiveExample& ex, ContextCondition cond, std::size_t k,
                            const DocumentCorpus& donors, json& swap_json) {
    const std::uint64_t seed = seed_for(fmt::format("{}/{}/{}", to_string(cond), k, ex.example_id));
    const ContextWindow gold = gold_context(ex, k);
    switch (cond) {
      case ContextCondition::kNone:
        return none_context();
      case ContextCondition::kGold:
        return gold;
      case ContextCondition::kPerturbed:
        return perturbed_context(donors, ex.example_id, gold.pairs.size(), seed);
      case ContextCondition::kRandom:
        return random_context(gold, vocab_ids, tokenizer, seed);
      case ContextCondition::kAntecedentSwapped: {
        auto [w, records] = swap_antecedents(gold, ex, *d.lexicon, seed, SwapOptions{c.swap_source_side});
        swap_json = json::array();
        for (const auto& r : records) {
          swap_json.push_back(to_json(r));
          ++swaps;
          if (!r.pos_matched) ++fallbacks;
        }
        return w;
      }
    }
    throw std::logic_error("unhandled condition");
  };

  if (d.has_corpus && !c.translate_kinds.empty()) {
    std::size_t taken = 0;
    json r = {{"documents", d.corpus.documents.size()}, {"sentences", d.corpus.sentence_count()}};
    for (const auto& doc : d.corpus.documents) {
      for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
        if (c.translate_limit && taken >= c.translate_limit) break;
        ++taken;
        const auto& pair = doc.sentences[i];
        if (!pair.tgt) throw DataError(fmt::format("document {} sentence {} has no reference", doc.doc_id, i));
        const ContextWindow gold = gold_context(doc, i, c.translate_context_size);
        for (PromptKind kind : c.translate_kinds) {
          std::vector<ContextCondition> conds =
              kind == PromptKind::kSentence ? std::vector<ContextCondition>{ContextCondition::kNone}
                                            : c.translate_conditions;
          for (ContextCondition cond : conds) {
            const std::string key = fmt::format("{}/{}/{}", to_string(cond), doc.doc_id, i);
            const std::uint64_t seed = seed_for(key);
            ContextWindow w;
            switch (cond) {
              case ContextCondition::kNone: w = none_context(); break;
              case ContextCondition::kGold: w = gold; break;
              case ContextCondition::kPerturbed:
                w = perturbed_context(d.corpus, doc.doc_id, gold.pairs.size(), seed);
                break;
              case ContextCondition::kRandom: w = random_context(gold, vocab_ids, tokenizer, seed); break;
              default: throw std::logic_error("unsupported translation condition");
            }
            const RenderedPrompt prompt = build_prompt(spec_for(kind), w, pair.src);
            json inst = instance_base(fmt::format("tr/{}/{}/{}/{}", doc.doc_id, i, to_string(kind), to_string(cond)),
                                      "translate", fmt::format("{}/{}", doc.doc_id, i), kind, cond, seed, w, prompt);
            inst["source"] = pair.src;
            inst["reference"] = *pair.tgt;
            instances.push_back(std::move(inst));
          }
        }
      }
    }
    r["sentences_used"] = taken;
    report["corpus"] = r;
  }

  if (d.has_contrastive) {
    json rejected = json::array();
    for (const auto& rj : d.contrastive.rejected) rejected.push_back({{"example_id", rj.example_id}, {"reason", rj.reason}});
    report["contrastive"] = {{"input", d.contrastive.input_count},
                             {"accepted", d.contrastive.accepted.size()},
                             {"rejected", rejected}};
    if (d.lexicon) {
      json buckets = json::array();
      for (const auto& [key, words] : d.lexicon->buckets())
        buckets.push_back({{"pos", key.first}, {"gender", key.second}, {"size", words.size()}});
      report["lexicon"] = {{"entries", d.lexicon->size()}, {"buckets", buckets}};
    }
    const DocumentCorpus donors = corpus_from_examples(d.contrastive.accepted);
    const PronounClassSet* classes = d.classes ? &*d.classes : nullptr;

    if (!c.pronoun_conditions.empty()) {
      std::vector<ContrastiveExample> examples = d.contrastive.accepted;
      if (c.pronoun_subset) examples = sample_balanced_subset(examples, c.pronoun_subset, seed_for("pronoun-subset"), classes);
      report["pronoun_examples"] = examples.size();
      for (const auto& ex : examples) {
        for (ContextCondition cond : c.pronoun_conditions) {
          const PromptKind kind = cond == ContextCondition::kNone ? PromptKind::kSentence : c.pronoun_kind;
          json swap_json;
          const ContextWindow w = example_window(ex, cond, c.pronoun_context_size, donors, swap_json);
          const RenderedPrompt prompt = build_prompt(spec_for(kind), w, ex.src);
          json inst = instance_base(fmt::format("pr/{}/{}", ex.example_id, to_string(cond)), "pronoun", ex.example_id,
                                    kind, cond, seed_for(fmt::format("{}/{}/{}", to_string(cond), c.pronoun_context_size, ex.example_id)),
                                    w, prompt);
          inst["source"] = ex.src;
          inst["reference"] = ex.gold_target;
          inst["contrastive_targets"] = ex.contrastive_targets;
          inst["gold_pronoun"] = ex.gold_pronoun;
          inst["contrastive_pronouns"] = ex.contrastive_pronouns;
          if (!swap_json.is_null()) inst["swaps"] = swap_json;
          instances.push_back(std::move(inst));
        }
      }
    }

    if (!c.attribution_conditions.empty()) {
      std::vector<ContrastiveExample> eligible;
      for (const auto& ex : d.contrastive.accepted)
        if (!gold_context(ex, c.attribution_context_size).antecedent_spans.empty() &&
            find_word(ex.gold_target, ex.gold_pronoun))
          eligible.push_back(ex);
      std::vector<ContrastiveExample> chosen = eligible;
      std::string how = "all";
      if (c.attribution_subset && c.attribution_subset < eligible.size()) {
        try {
          chosen = sample_balanced_subset(eligible, c.attribution_subset, seed_for("attribution-subset"), classes);
          how = "balanced";
        } catch (const DataError&) {
          Rng rng(seed_for("attribution-subset"));
          rng.shuffle(std::span(chosen));
          chosen.resize(c.attribution_subset);
          how = "shuffled";
        }
      }
      report["attribution_examples"] = {{"eligible", eligible.size()}, {"chosen", chosen.size()}, {"selection", how}};
      for (const auto& ex : chosen) {
        for (ContextCondition cond : c.attribution_conditions) {
          json swap_json;
          const ContextWindow w = example_window(ex, cond, c.attribution_context_size, donors, swap_json);
          const RenderedPrompt prompt = build_prompt(spec_for(c.attribution_kind), w, ex.src);
          const std::size_t pos = *find_word(ex.gold_target, ex.gold_pronoun);
          const std::size_t len = text::byte_offset(
              std::string_view(ex.gold_target).substr(pos), text::codepoint_count(ex.gold_pronoun));
          json inst = instance_base(fmt::format("at/{}/{}", ex.example_id, to_string(cond)), "attribute",
                                    ex.example_id, c.attribution_kind, cond,
                                    seed_for(fmt::format("{}/{}/{}", to_string(cond), c.attribution_context_size, ex.example_id)),
                                    w, prompt);
          inst["source"] = ex.src;
          inst["reference"] = ex.gold_target;
          inst["forced_prefix"] = ex.gold_target.substr(0, pos);
          inst["pronoun_text"] = ex.gold_target.substr(pos, len);
          json ranges = json::array();
          for (auto [b, e] : antecedent_ranges(w, prompt)) ranges.push_back({b, e});
          inst["antecedent_ranges"] = ranges;
          if (!swap_json.is_null()) inst["swaps"] = swap_json;
          instances.push_back(std::move(inst));
        }
      }
    }
    if (swaps) report["swaps"] = {{"count", swaps}, {"pos_fallbacks", fallbacks},
                                   {"fallback_fraction", double(fallbacks) / double(swaps)}};
  }

  if (instances.empty()) throw DataError("configuration produces no instances");
  std::set<std::string> ids;
  for (const auto& inst : instances)
    if (!ids.insert(inst["instance_id"].get<std::string>()).second)
      throw DataError(fmt::format("duplicate instance id {}", inst["instance_id"].get<std::string>()));
  report["instances"] = instances.size();
  fs::create_directories(run_dir());
  write_jsonl(run_dir() / "instances.jsonl", instances);
  atomic_write(run_dir() / "prepare.json", report.dump(2) + "\n");
  return instances.size();
}

std::vector<json> Pipeline::load_instances() const {
  const fs::path p = run_dir() / "instances.jsonl";
  if (!fs::exists(p)) throw DataError(fmt::format("{} not found; run prepare first", p.string()));
  return read_jsonl(p);
}

namespace {

// Processes `todo` in parallel batches and appends results in input order.
// Instances already recorded in `out` are skipped. On the first failure the
// successful prefix of the batch is flushed, resume.json is written and the
// stage halts.
StageSummary run_stage(const std::string& stage, const fs::path& run_dir, const std::vector<const json*>& todo,
                       const fs::path& out, int workers, const std::function<json(const json&)>& process) {
  StageSummary summary{stage, todo.size(), 0, 0};
  fs::create_directories(out.parent_path());
  std::set<std::string> done;
  if (fs::exists(out)) {
    repair_jsonl_tail(out);
    for (const auto& r : read_jsonl(out)) done.insert(r.at("instance_id").get<std::string>());
  }
  std::vector<const json*> pending;
  for (const json* inst : todo) {
    if (done.count(inst->at("instance_id").get<std::string>())) ++summary.skipped;
    else pending.push_back(inst);
  }
  const fs::path resume = run_dir / "resume.json";
  JsonlAppender sink(out);
  const std::size_t batch = std::size_t(std::max(1, workers)) * 8;
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t n = std::min(batch, pending.size() - start);
    std::vector<json> results(n);
    std::vector<std::exception_ptr> errors(n);
    parallel_for(n, workers, [&](std::size_t i) {
      try {
        results[i] = process(*pending[start + i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (errors[i]) {
        std::string message;
        try {
          std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
          message = e.what();
        }
        const std::string failed = pending[start + i]->at("instance_id").get<std::string>();
        atomic_write(resume, json{{"stage", stage},
                                  {"completed", summary.skipped + summary.processed},
                                  {"remaining", pending.size() - start - i},
                                  {"failed_instance", failed},
                                  {"error", message}}
                                     .dump(2) +
                                 "\n");
        try {
          std::rethrow_exception(errors[i]);
        } catch (const ConfigError&) {
          throw;
        } catch (const DataError&) {
          throw;
        } catch (const std::exception& e) {
          throw StageHalted(fmt::format("{} halted at {}: {}; rerun to resume", stage, failed, e.what()), stage,
                            summary.skipped + summary.processed);
        }
      }
      sink.append(results[i]);
      ++summary.processed;
    }
  }
  if (fs::exists(resume)) {
    const json r = json::parse(read_file(resume));
    if (r.value("stage", std::string()) == stage) fs::remove(resume);
  }
  return summary;
}

std::vector<const json*> select_task(const std::vector<json>& instances, std::initializer_list<std::string_view> tasks) {
  std::vector<const json*> out;
  for (const auto& inst : instances) {
    const auto t = inst.at("task").get<std::string>();
    for (auto want : tasks)
      if (t == want) out.push_back(&inst);
  }
  return out;
}

std::string clean_hypothesis(const std::string& raw) {
  std::string s = raw;
  if (auto nl = s.find('\n'); nl != std::string::npos) {
    // a leading newline is treated as part of the cue
    const std::string t = text::trim(s);
    s = t.substr(0, t.find('\n'));
  }
  return text::trim(s);
}

}  // namespace

StageSummary Pipeline::translate() {
  const std::vector<json> instances = load_instances();
  const auto todo = select_task(instances, {"translate", "pronoun"});
  Client& cl = client();
  return run_stage("translate", run_dir(), todo, run_dir() / "judgments" / "translations.jsonl",
                   config_.backend.max_parallel, [&](const json& inst) {
                     const RenderedPrompt prompt = prompt_from_json(inst.at("prompt"));
                     const GenerationResult g = cl.generate(prompt, config_.decoding);
                     return json{{"instance_id", inst["instance_id"]},
                                 {"task", inst["task"]},
                                 {"example_id", inst["example_id"]},
                                 {"prompt_kind", inst["prompt_kind"]},
                                 {"condition", inst["condition"]},
                                 {"hypothesis", clean_hypothesis(g.text)},
                                 {"finish_reason", g.finish_reason}};
                   });
}

StageSummary Pipeline::contrast() {
  const std::vector<json> instances = load_instances();
  const auto todo = select_task(instances, {"pronoun"});
  Client& cl = client();
  if (!todo.empty()) cl.check_capabilities(true, false);
  return run_stage("contrast", run_dir(), todo, run_dir() / "judgments" / "contrast.jsonl",
                   config_.backend.max_parallel, [&](const json& inst) {
                     const RenderedPrompt prompt = prompt_from_json(inst.at("prompt"));
                     const auto pronouns = inst.at("contrastive_pronouns").get<std::vector<std::string>>();
                     const auto targets = inst.at("contrastive_targets").get<std::vector<std::string>>();
                     json variants = json::array();
                     std::vector<CprVariant> cv;
                     auto add = [&](const std::string& label, bool gold, const std::string& target) {
                       const ScoredSequence s = cl.score_continuation(prompt, " " + target);
                       variants.push_back({{"label", label},
                                           {"gold", gold},
                                           {"total_logprob", s.total_logprob},
                                           {"n_tokens", s.tokens.size()}});
                       cv.push_back({label, gold, s.total_logprob});
                     };
                     add(inst.at("gold_pronoun").get<std::string>(), true, inst.at("reference").get<std::string>());
                     for (std::size_t i = 0; i < targets.size(); ++i)
                       add(i < pronouns.size() ? pronouns[i] : fmt::format("contrastive_{}", i + 1), false, targets[i]);
                     const PronounJudgment j = cpr(cv, inst["instance_id"].get<std::string>());
                     return json{{"instance_id", inst["instance_id"]},
                                 {"example_id", inst["example_id"]},
                                 {"prompt_kind", inst["prompt_kind"]},
                                 {"condition", inst["condition"]},
                                 {"variants", variants},
                                 {"correct", j.correct}};
                   });
}

StageSummary Pipeline::attribute() {
  const std::vector<json> instances = load_instances();
  const auto todo = select_task(instances, {"attribute"});
  Client& cl = client();
  if (!todo.empty()) cl.check_capabilities(true, true);
  ErasureOptions opts = config_.erasure;
  opts.max_parallel = 1;
  return run_stage(
      "attribute", run_dir(), todo, run_dir() / "judgments" / "attributions.jsonl", config_.backend.max_parallel,
      [&](const json& inst) {
        const RenderedPrompt prompt = prompt_from_json(inst.at("prompt"));
        const std::string prefix = inst.at("forced_prefix").get<std::string>();
        const std::string pronoun = inst.at("pronoun_text").get<std::string>();
        std::string input_text = prompt.text;
        std::string target_text = " " + pronoun;
        if (!prefix.empty()) {
          const std::string trimmed = rstrip_spaces(prefix);
          input_text += " " + trimmed;
          target_text = (trimmed.size() < prefix.size() ? " " : "") + pronoun;
        }
        const auto offsets = cl.tokenize_with_offsets(input_text);
        ErasureInstance e;
        e.example_id = inst.at("instance_id").get<std::string>();
        for (const auto& o : offsets) {
          e.input_ids.push_back(o.id);
          e.input_tokens.push_back(input_text.substr(o.begin, o.end - o.begin));
        }
        e.target_ids = cl.tokenize(target_text);
        auto overlaps = [](const TokenOffset& t, std::size_t b, std::size_t en) { return t.begin < en && t.end > b; };
        std::vector<std::size_t> context, source, antecedent;
        for (std::size_t i = 0; i < offsets.size(); ++i) {
          bool in_ctx = false, in_src = false, in_ante = false;
          for (const auto& seg : prompt.segments) {
            if (!overlaps(offsets[i], seg.begin, seg.end)) continue;
            if (seg.kind == SegmentKind::kSourceSentence) in_src = true;
            else in_ctx = true;
          }
          for (const auto& r : inst.at("antecedent_ranges"))
            if (overlaps(offsets[i], r[0].get<std::size_t>(), r[1].get<std::size_t>())) in_ante = true;
          if (in_ctx) context.push_back(i);
          if (in_src) source.push_back(i);
          if (in_ante && in_ctx) antecedent.push_back(i);
        }
        e.spans = {{"context", context}, {"antecedent", antecedent}, {"source_sentence", source}};
        AttributionVector v = erasure_attribution(
            e, [&](const std::vector<int>& in, const std::vector<int>& tgt) { return cl.score_ids(in, tgt).total_logprob; },
            opts);
        v.meta["instance_id"] = inst["instance_id"];
        v.meta["example"] = inst["example_id"];
        v.meta["condition"] = inst["condition"];
        v.meta["prompt_kind"] = inst["prompt_kind"];
        v.meta["model"] = config_.model_id;
        v.meta["language_pair"] = config_.language_pair();
        json rec = to_ap_json(v);
        rec["instance_id"] = inst["instance_id"];
        return rec;
      });
}

void Pipeline::score() {
  const fs::path dir = run_dir();
  const fs::path jdir = dir / "judgments";
  const fs::path tr_path = jdir / "translations.jsonl", ct_path = jdir / "contrast.jsonl",
                 at_path = jdir / "attributions.jsonl";
  if (!fs::exists(tr_path) && !fs::exists(ct_path) && !fs::exists(at_path) && config_.attribution_imports.empty())
    throw DataError(fmt::format("{} has no judgments to score", dir.string()));
  const std::vector<json> instances = load_instances();
  std::map<std::string, const json*> by_id;
  for (const auto& inst : instances) by_id[inst.at("instance_id").get<std::string>()] = &inst;
  auto instance = [&](const std::string& id) -> const json& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError(fmt::format("judgment for unknown instance {}", id));
    return *it->second;
  };

  std::map<std::string, double> comet;
  if (config_.comet_scores) comet = read_external_scores(*config_.comet_scores);

  ResultsMatrix matrix;
  const std::string pair = config_.language_pair();
  const std::string model = config_.model_id;

  using CellId = std::pair<PromptKind, ContextCondition>;
  auto cell_of = [](const json& r) {
    return CellId{parse_prompt_kind(r.at("prompt_kind").get<std::string>()),
                  parse_condition(r.at("condition").get<std::string>())};
  };
  auto add_comet = [&](const CellId& cell, const std::vector<std::string>& ids) {
    if (comet.empty() || ids.empty()) return;
    double sum = 0.0;
    for (const auto& id : ids) {
      auto it = comet.find(id);
      if (it == comet.end()) return;
      sum += it->second;
    }
    matrix.set({model, pair, cell.first, cell.second}, "COMET", 100.0 * sum / double(ids.size()), ids.size());
  };

  std::vector<json> pronoun_judgments;
  if (fs::exists(tr_path)) {
    struct Group {
      std::vector<std::string> hyps, refs, ids;
      std::vector<PronounJudgment> gpr;
    };
    std::map<CellId, Group> translate_groups, pronoun_groups;
    for (const auto& r : read_jsonl(tr_path, true)) {
      const std::string id = r.at("instance_id").get<std::string>();
      const json& inst = instance(id);
      const std::string hyp = r.at("hypothesis").get<std::string>();
      const bool is_pronoun = inst.at("task") == "pronoun";
      Group& g = (is_pronoun ? pronoun_groups : translate_groups)[cell_of(inst)];
      g.hyps.push_back(hyp);
      g.refs.push_back(inst.at("reference").get<std::string>());
      g.ids.push_back(id);
      if (is_pronoun) {
        PronounJudgment j = gpr(hyp, inst.at("gold_pronoun").get<std::string>(),
                                inst.at("contrastive_pronouns").get<std::vector<std::string>>(), id);
        json rec = to_json(j);
        rec["kind"] = "gpr";
        rec["condition"] = inst["condition"];
        rec["prompt_kind"] = inst["prompt_kind"];
        pronoun_judgments.push_back(std::move(rec));
        g.gpr.push_back(std::move(j));
      }
    }
    for (const auto& [cell, g] : translate_groups) {
      const MetricReport b = bleu(g.hyps, g.refs);
      const MetricReport ch = chrf(g.hyps, g.refs);
      matrix.set({model, pair, cell.first, cell.second}, "BLEU", b.value, b.n_items);
      matrix.set({model, pair, cell.first, cell.second}, "chrF", ch.value, ch.n_items);
      add_comet(cell, g.ids);
    }
    for (const auto& [cell, g] : pronoun_groups) {
      matrix.set({model, pair, cell.first, cell.second}, "GPR", accuracy_raw(g.gpr), g.gpr.size());
      add_comet(cell, g.ids);
    }
  }
  if (fs::exists(ct_path)) {
    std::map<CellId, std::vector<PronounJudgment>> groups;
    for (const auto& r : read_jsonl(ct_path, true)) {
      const std::string id = r.at("instance_id").get<std::string>();
      const json& inst = instance(id);
      std::vector<CprVariant> vs;
      for (const auto& v : r.at("variants"))
        vs.push_back({v.at("label").get<std::string>(), v.at("gold").get<bool>(), v.at("total_logprob").get<double>()});
      PronounJudgment j = cpr(vs, id);
      json rec = to_json(j);
      rec["kind"] = "cpr";
      rec["condition"] = inst["condition"];
      rec["prompt_kind"] = inst["prompt_kind"];
      pronoun_judgments.push_back(std::move(rec));
      groups[cell_of(inst)].push_back(std::move(j));
    }
    for (const auto& [cell, js] : groups)
      matrix.set({model, pair, cell.first, cell.second}, "CPR", accuracy_raw(js), js.size());
  }

  fs::create_directories(dir / "tables");
  fs::create_directories(dir / "figures");
  fs::create_directories(jdir);
  if (!matrix.empty()) {
    for (const char* layout : {"translation", "chrf", "pronoun"}) {
      emit_table(matrix, layout, TableFormat::kMarkdown, dir / "tables" / fmt::format("{}.md", layout));
      emit_table(matrix, layout, TableFormat::kCsv, dir / "tables" / fmt::format("{}.csv", layout));
    }
  }
  if (!pronoun_judgments.empty()) write_jsonl(jdir / "pronoun_judgments.jsonl", pronoun_judgments);

  // Attribution aggregates, grouped by model and method label.
  std::map<std::pair<std::string, std::string>, std::vector<AttributionVector>> groups;
  json rejected = json::array();
  auto add_vector = [&](AttributionVector v, const std::string& fallback_model) {
    const std::string m = v.meta.contains("model") && v.meta["model"].is_string() ? v.meta["model"].get<std::string>()
                                                                                   : fallback_model;
    std::string label = v.method;
    if (v.meta.contains("condition") && v.meta["condition"].is_string() && v.meta["condition"] != "gold")
      label += ":" + v.meta["condition"].get<std::string>();
    groups[{m, label}].push_back(std::move(v));
  };
  if (fs::exists(at_path)) {
    for (const auto& r : read_jsonl(at_path, true)) {
      auto parsed = parse_ap_record(r);
      if (auto* reason = std::get_if<std::string>(&parsed)) {
        rejected.push_back({{"example_id", r.value("example_id", std::string())}, {"reason", *reason}});
        continue;
      }
      add_vector(std::get<AttributionVector>(std::move(parsed)), model);
    }
  }
  for (const auto& path : config_.attribution_imports) {
    ApImport imp = import_attributions(path);
    for (auto& [id, reason] : imp.rejected) rejected.push_back({{"example_id", id}, {"reason", reason}, {"file", path.string()}});
    for (auto& v : imp.vectors) add_vector(std::move(v), path.stem().string());
  }
  std::vector<ApAggregate> aggregates;
  json no_signal = json::array();
  for (const auto& [key, vectors] : groups) {
    for (const char* span : {"context", "antecedent"}) {
      try {
        ApAggregate a = aggregate_ap(vectors, span, config_.aggregation);
        a.model = key.first;
        a.method = key.second;
        if (a.n_no_signal)
          no_signal.push_back({{"model", a.model}, {"method", a.method}, {"span_kind", span}, {"count", a.n_no_signal}});
        aggregates.push_back(std::move(a));
      } catch (const DataError&) {
        no_signal.push_back({{"model", key.first}, {"method", key.second}, {"span_kind", span}, {"count", vectors.size()}});
      }
    }
  }
  if (!groups.empty()) emit_figure_data(aggregates, dir / "figures" / "attribution.csv");
  if (matrix.empty() && groups.empty()) throw DataError(fmt::format("{} has no judgments to score", dir.string()));

  json run = {
      {"run_id", config_.run_id},
      {"model_id", model},
      {"language_pair", pair},
      {"seed", config_.seed},
      {"config", config_.raw},
      {"cache", {{"dir", config_.backend.cache_dir.empty() ? json(nullptr) : json(config_.backend.cache_dir.string())},
                 {"entries", config_.backend.cache_dir.empty() || !fs::exists(config_.backend.cache_dir)
                                 ? 0
                                 : ResponseCache(config_.backend.cache_dir).entry_count()}}},
      {"rules",
       {{"gpr", kGprRuleId},
        {"cpr_ties", "incorrect"},
        {"bleu", kBleuSignature},
        {"chrf", kChrfSignature},
        {"comet", config_.comet_scores ? "external scores, mean x 100" : "not provided"},
        {"ap_aggregation", to_string(config_.aggregation)},
        {"erasure",
         {{"operation", "deletion"},
          {"delta_space", "probability"},
          {"sweep", to_string(config_.erasure.scope)},
          {"granularity", to_string(config_.erasure.granularity)}}}}},
      {"results", matrix.to_json()},
      {"attribution", {{"groups", groups.size()}, {"no_signal", no_signal}, {"rejected", rejected}}},
  };
  atomic_write(dir / "run.json", run.dump(2) + "\n");
}

}  // namespace ctxprobe
