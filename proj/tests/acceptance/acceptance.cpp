// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// values. Exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "ctxprobe/attribution.hpp"
#include "ctxprobe/client.hpp"
#include "ctxprobe/corpus.hpp"
#include "ctxprobe/metrics.hpp"
#include "ctxprobe/mock_backend.hpp"
#include "ctxprobe/parallel.hpp"
#include "ctxprobe/perturb.hpp"
#include "ctxprobe/pipeline.hpp"
#include "ctxprobe/prompt.hpp"
#include "ctxprobe/random.hpp"
#include "ctxprobe/text.hpp"

using namespace ctxprobe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kMetricTolerance = 0.05;
constexpr double kMetricSeconds = 5.0;
constexpr double kCalibrationBand = 3.0;  // percentage points
constexpr double kBinomialAlpha = 0.01;
constexpr double kCalibrationSeconds = 60.0;
constexpr double kApTolerance = 1e-9;
constexpr double kApSeconds = 10.0;
constexpr double kErasureShare = 99.0;
constexpr double kFallbackTarget = 0.002;
constexpr double kFallbackTolerance = 0.001;
constexpr double kE2eSeconds = 120.0;

const fs::path kSource = CTXPROBE_SOURCE_DIR;
const fs::path kDesk = kSource / "data" / "desk";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

BackendConfig backend(int parallel = 8) {
  BackendConfig c;
  c.base_url = "mock://acceptance";
  c.model_id = "m";
  c.max_parallel = parallel;
  c.retry_backoff = std::chrono::milliseconds(0);
  return c;
}

RenderedPrompt plain(std::string text) {
  RenderedPrompt p;
  p.text = std::move(text);
  return p;
}

// Exact two-sided binomial test: total probability of outcomes no more likely
// than the observed one.
double binomial_two_sided(std::size_t k, std::size_t n, double p) {
  auto log_pmf = [&](std::size_t i) {
    return std::lgamma(double(n) + 1) - std::lgamma(double(i) + 1) - std::lgamma(double(n - i) + 1) +
           double(i) * std::log(p) + double(n - i) * std::log1p(-p);
  };
  const double observed = log_pmf(k);
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double lp = log_pmf(i);
    if (lp <= observed + 1e-7) total += std::exp(lp);
  }
  return std::min(1.0, total);
}

Outcome metric_parity() {
  const auto t0 = Clock::now();
  const json oracle = json::parse(read_file(kSource / "tests/data/metric_oracle.json"));
  std::vector<std::string> hyps, refs;
  for (const auto& r : read_jsonl(kSource / "tests/data/metric_pairs.jsonl")) {
    hyps.push_back(r.at("hyp"));
    refs.push_back(r.at("ref"));
  }
  const double b = bleu(hyps, refs).value;
  const double c = chrf(hyps, refs).value;
  const double db = std::abs(b - oracle["corpus"]["bleu"].get<double>());
  const double dc = std::abs(c - oracle["corpus"]["chrf"].get<double>());
  double worst_single = 0.0;
  for (const auto& s : oracle["single"]) {
    worst_single = std::max(worst_single, std::abs(bleu({s["hyp"]}, {s["ref"]}).value - s["bleu"].get<double>()));
    worst_single = std::max(worst_single, std::abs(chrf({s["hyp"]}, {s["ref"]}).value - s["chrf"].get<double>()));
  }
  const bool signatures = oracle["bleu_signature"] == std::string(kBleuSignature) &&
                          oracle["chrf_signature"] == std::string(kChrfSignature);
  const double secs = seconds_since(t0);
  return {hyps.size() >= 50 && hyps.size() <= 100 && db <= kMetricTolerance && dc <= kMetricTolerance &&
              worst_single <= kMetricTolerance && signatures && secs < kMetricSeconds,
          fmt::format("n={} BLEU {:.4f} (|d|={:.5f}) chrF {:.4f} (|d|={:.5f}) worst single |d|={:.5f} "
                      "signatures {} {:.2f}s",
                      hyps.size(), b, db, c, dc, worst_single, signatures ? "match" : "DIFFER", secs)};
}

// CPR over `n` synthetic examples whose variants differ only in a single-word
// pronoun, scored by an i.i.d. random-score backend.
struct Calibration {
  double accuracy = 0;
  double p_value = 0;
  std::map<std::string, std::size_t> gold_counts;
};

Calibration cpr_calibration(std::size_t n, const std::vector<std::string>& pronouns, const std::string& rest,
                            std::uint64_t seed) {
  std::vector<std::string> texts = {rest};
  for (const auto& p : pronouns) texts.push_back(p);
  for (std::size_t i = 0; i < n; ++i) texts.push_back(fmt::format("example{} context", i));
  std::shared_ptr<const Tokenizer> tok(WordTokenizer::from_texts(texts).release());
  auto server = std::make_shared<MockServer>(tok, std::make_shared<RandomScoreModel>(seed), "m");
  Client client(backend(), server);

  // Balanced gold classes: 667/667/666 for three pronouns, 1000/1000 for two.
  std::vector<std::size_t> gold(n);
  for (std::size_t i = 0; i < n; ++i) gold[i] = i % pronouns.size();
  std::vector<PronounJudgment> judgments(n);
  parallel_for(n, 8, [&](std::size_t i) {
    const RenderedPrompt prompt = plain(fmt::format("example{} context", i));
    std::vector<CprVariant> variants;
    for (std::size_t v = 0; v < pronouns.size(); ++v) {
      const auto s = client.score_continuation(prompt, " " + pronouns[v] + " " + rest);
      variants.push_back({pronouns[v], v == gold[i], s.total_logprob});
    }
    judgments[i] = cpr(variants, std::to_string(i));
  });
  Calibration c;
  c.accuracy = accuracy_raw(judgments);
  std::size_t correct = 0;
  for (const auto& j : judgments) correct += j.correct;
  c.p_value = binomial_two_sided(correct, n, 1.0 / double(pronouns.size()));
  for (auto g : gold) ++c.gold_counts[pronouns[g]];
  return c;
}

Outcome cpr_null_calibration() {
  const auto t0 = Clock::now();
  const auto de = cpr_calibration(2000, {"Er", "Sie", "Es"}, "ist sehr alt.", 20240607);
  const auto fr = cpr_calibration(2000, {"Il", "Elle"}, "est très vieux.", 20240607);
  const double secs = seconds_since(t0);
  const bool de_ok = std::abs(de.accuracy - 100.0 / 3) <= kCalibrationBand && de.p_value >= kBinomialAlpha;
  const bool fr_ok = std::abs(fr.accuracy - 50.0) <= kCalibrationBand && fr.p_value >= kBinomialAlpha;
  return {de_ok && fr_ok && secs < kCalibrationSeconds,
          fmt::format("en-de {:.2f}% (p={:.3f}, classes {}/{}/{}) en-fr {:.2f}% (p={:.3f}) {:.1f}s", de.accuracy,
                      de.p_value, de.gold_counts.at("Er"), de.gold_counts.at("Sie"), de.gold_counts.at("Es"), fr.accuracy,
                      fr.p_value, secs)};
}

Outcome ap_invariants() {
  const auto t0 = Clock::now();
  Rng rng(7);
  std::size_t violations = 0;
  std::string first;
  auto fail = [&](std::string what) {
    if (!violations++) first = std::move(what);
  };
  std::size_t tested = 0;
  for (int it = 0; it < 1000; ++it) {
    const std::size_t n = 1 + rng.uniform_index(60);
    std::vector<double> a(n);
    for (auto& x : a) x = rng.uniform01() < 0.2 ? 0.0 : rng.uniform01() * 10.0;
    a[rng.uniform_index(n)] += 0.5;  // at least one positive score
    // Random partition into up to 4 parts; context is parts 0..1, antecedent
    // a random subset of part 0.
    std::vector<std::vector<std::size_t>> parts(4);
    for (std::size_t i = 0; i < n; ++i) parts[rng.uniform_index(4)].push_back(i);
    double sum = 0;
    for (const auto& p : parts) sum += *attribution_percentage(a, p);
    if (std::abs(sum - 100.0) > kApTolerance) fail(fmt::format("partition sums to {}", sum));

    std::vector<std::size_t> context = parts[0];
    context.insert(context.end(), parts[1].begin(), parts[1].end());
    std::vector<std::size_t> antecedent;
    for (auto i : parts[0])
      if (rng.uniform01() < 0.5) antecedent.push_back(i);
    AttributionVector v;
    v.example_id = std::to_string(it);
    for (std::size_t i = 0; i < n; ++i) v.tokens.push_back("t");
    v.scores = a;
    v.spans = {{"context", context}, {"antecedent", antecedent}};
    v.validate();
    const double ap_ante = *attribution_percentage(v, "antecedent");
    const double ap_ctx = *attribution_percentage(v, "context");
    if (ap_ante > ap_ctx + kApTolerance) fail("antecedent exceeds context");
    if (std::abs(*attribution_percentage(v, "input") - 100.0) > kApTolerance) fail("AP(X) != 100");
    if (*attribution_percentage(a, {}) != 0.0) fail("AP(empty) != 0");

    const double scale = std::exp(rng.uniform01() * 20.0 - 10.0);
    std::vector<double> scaled = a;
    for (auto& x : scaled) x *= scale;
    if (std::abs(*attribution_percentage(scaled, context) - ap_ctx) > kApTolerance) fail("scale changes AP");

    // Monotonicity: growing the index set never lowers AP.
    std::vector<std::size_t> grown = antecedent;
    double prev = ap_ante;
    for (std::size_t i = 0; i < n; ++i) {
      grown.push_back(i);
      const double now = *attribution_percentage(a, grown);
      if (now + kApTolerance < prev) fail("AP decreased when adding an index");
      prev = now;
    }
    ++tested;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && tested == 1000 && secs < kApSeconds,
          fmt::format("{} vectors, {} violations{} {:.2f}s", tested, violations,
                      violations ? " (first: " + first + ")" : std::string(), secs)};
}

struct ErasureSetup {
  std::shared_ptr<const Tokenizer> tokenizer;
  std::vector<ContrastiveExample> examples;
};

ErasureSetup erasure_setup() {
  ErasureSetup s;
  s.examples = load_contrastive_set(kDesk / "contrastive_en_de.jsonl", ContrastiveFormat::kJsonl).accepted;
  std::vector<std::string> texts = {" sie", "German: English:"};
  for (const auto& ex : s.examples) {
    texts.push_back(ex.src);
    for (const auto& p : ex.context) {
      texts.push_back(p.src);
      texts.push_back(*p.tgt);
    }
  }
  PromptSpec spec;
  spec.kind = PromptKind::kGeneric;
  texts.push_back(render(spec, none_context(), "").text);
  s.tokenizer.reset(WordTokenizer::from_texts(texts).release());
  return s;
}

Outcome erasure_oracle() {
  const auto t0 = Clock::now();
  const ErasureSetup setup = erasure_setup();
  PromptSpec spec;
  spec.kind = PromptKind::kGeneric;
  LocalTokenizerHandle local(*setup.tokenizer);

  std::size_t used = 0, skipped = 0, share_ok = 0, ap_ok = 0, no_signal = 0;
  double worst_share = 100.0, worst_ap = 100.0;
  for (const auto& ex : setup.examples) {
    if (used == 100) break;
    const ContextWindow w = gold_context(ex, 2);
    const RenderedPrompt prompt = render(spec, w, ex.src);
    // Byte range of the target-side antecedent in the prompt.
    std::size_t ab = 0, ae = 0;
    bool found = false;
    for (const auto& span : w.antecedent_spans) {
      if (span.side != Side::kTarget) continue;
      for (const auto& seg : prompt.segments)
        if (seg.kind == SegmentKind::kContextTarget && seg.pair_index == span.context_index) {
          const std::string& t = *w.pairs[std::size_t(span.context_index)].tgt;
          ab = seg.begin + text::byte_offset(t, span.start);
          ae = seg.begin + text::byte_offset(t, span.end);
          found = true;
        }
    }
    if (!found) {
      ++skipped;
      continue;
    }
    auto server_tok = setup.tokenizer;
    auto probe = std::make_shared<MockServer>(server_tok, std::make_shared<UniformModel>(10), "m");
    Client probe_client(backend(1), probe);
    const auto offsets = probe_client.tokenize_with_offsets(prompt.text);
    ErasureInstance inst;
    inst.example_id = ex.example_id;
    std::vector<std::size_t> context, antecedent;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      inst.input_ids.push_back(offsets[i].id);
      inst.input_tokens.push_back(prompt.text.substr(offsets[i].begin, offsets[i].end - offsets[i].begin));
      for (const auto& seg : prompt.segments)
        if (seg.kind != SegmentKind::kSourceSentence && offsets[i].begin < seg.end && offsets[i].end > seg.begin) {
          context.push_back(i);
          break;
        }
      if (offsets[i].begin < ae && offsets[i].end > ab) antecedent.push_back(i);
    }
    // The dependence must be on exactly one token: the antecedent must be a
    // single token whose surface occurs once in the input.
    if (antecedent.size() != 1) {
      ++skipped;
      continue;
    }
    const std::string keyword = text::trim(inst.input_tokens[antecedent[0]]);
    std::size_t occurrences = 0;
    for (const auto& t : inst.input_tokens) occurrences += text::trim(t) == keyword;
    if (occurrences != 1) {
      ++skipped;
      continue;
    }
    inst.spans = {{"context", context}, {"antecedent", antecedent}};
    inst.target_ids = local.tokenize(" sie");

    auto keyword_server = std::make_shared<MockServer>(
        server_tok, std::make_shared<KeywordModel>(keyword, std::set<std::string>{"sie"}, 0.9, 0.1), "m");
    Client kc(backend(1), keyword_server);
    const auto v = erasure_attribution(inst, [&](const std::vector<int>& in, const std::vector<int>& t) {
      return kc.score_ids(in, t).total_logprob;
    });
    double total = 0;
    for (double x : v.scores) total += x;
    const double share = total > 0 ? 100.0 * v.scores[antecedent[0]] / total : 0.0;
    const double ap = attribution_percentage(v, "antecedent").value_or(0.0);
    worst_share = std::min(worst_share, share);
    worst_ap = std::min(worst_ap, ap);
    share_ok += share >= kErasureShare;
    ap_ok += ap >= kErasureShare;

    auto flat_server = std::make_shared<MockServer>(server_tok, std::make_shared<UniformModel>(1000), "m");
    Client fc(backend(1), flat_server);
    const auto flat = erasure_attribution(inst, [&](const std::vector<int>& in, const std::vector<int>& t) {
      return fc.score_ids(in, t).total_logprob;
    });
    no_signal += !attribution_percentage(flat, "context").has_value();
    ++used;
  }
  const double secs = seconds_since(t0);
  return {used == 100 && share_ok == used && ap_ok == used && no_signal == used,
          fmt::format("{} desk instances ({} skipped: antecedent not a unique single token); keyword share min "
                      "{:.3f}%, AP(antecedent) min {:.3f}%, context-independent no-signal {}/{} {:.1f}s",
                      used, skipped, worst_share, worst_ap, no_signal, used, secs)};
}

Outcome perturbation_invariants() {
  const auto t0 = Clock::now();
  const auto set = load_contrastive_set(kDesk / "contrastive_en_de.jsonl", ContrastiveFormat::kJsonl);
  const auto& examples = set.accepted;
  const DocumentCorpus donors = corpus_from_examples(examples);

  std::vector<std::string> texts;
  for (const auto& ex : examples) {
    texts.push_back(ex.src);
    for (const auto& p : ex.context) {
      texts.push_back(p.src);
      texts.push_back(*p.tgt);
    }
  }
  std::shared_ptr<const Tokenizer> tok(WordTokenizer::from_texts(texts).release());
  auto server = std::make_shared<MockServer>(tok, std::make_shared<UniformModel>(10), "m");
  Client client(backend(), server);
  const auto vocab = client.vocabulary().samplable_ids();

  const GenderLexicon lexicon = load_lexicon(kDesk / "lexicon_de.tsv");
  const GenderLexicon full = load_lexicon(kDesk / "lexicon_de_full.tsv");

  std::size_t perturbed_ok = 0, random_ok = 0, swaps = 0, gender_changed = 0, fallbacks = 0;
  std::size_t full_swaps = 0, full_fallbacks = 0;
  const std::size_t k = 5;
  for (const auto& ex : examples) {
    const ContextWindow gold = gold_context(ex, k);
    const std::uint64_t seed = derive_seed(20240607, ex.example_id);
    const auto pert = perturbed_context(donors, ex.example_id, gold.pairs.size(), seed);
    perturbed_ok += pert.pairs.size() == gold.pairs.size();

    const auto rnd = random_context(gold, vocab, &client, seed);
    bool same = rnd.pairs.size() == gold.pairs.size();
    for (std::size_t i = 0; same && i < gold.pairs.size(); ++i) {
      same = client.tokenize(rnd.pairs[i].src).size() == client.tokenize(gold.pairs[i].src).size() &&
             client.tokenize(*rnd.pairs[i].tgt).size() == client.tokenize(*gold.pairs[i].tgt).size();
    }
    random_ok += same;

    const auto [w, records] = swap_antecedents(gold, ex, lexicon, seed);
    for (const auto& r : records) {
      ++swaps;
      gender_changed += r.replacement_gender != r.original_gender;
      fallbacks += !r.pos_matched;
    }
    const auto [wf, full_records] = swap_antecedents(gold, ex, full, seed);
    for (const auto& r : full_records) {
      ++full_swaps;
      full_fallbacks += !r.pos_matched;
    }
  }
  const double n = double(examples.size());
  const double f = swaps ? double(fallbacks) / double(swaps) : 1.0;
  const double f_full = full_swaps ? double(full_fallbacks) / double(full_swaps) : 1.0;
  const bool ok = examples.size() == 500 && perturbed_ok == examples.size() && random_ok == examples.size() &&
                  swaps > 0 && gender_changed == swaps && std::abs(f - kFallbackTarget) <= kFallbackTolerance &&
                  f_full == 0.0;
  return {ok, fmt::format("{} examples: perturbed pair counts {:.1f}%, random per-slot lengths {:.1f}%, "
                          "gender changed {}/{}, POS fallback {:.4f} (rare-POS lexicon) {:.4f} (full lexicon) {:.1f}s",
                          examples.size(), 100.0 * double(perturbed_ok) / n, 100.0 * double(random_ok) / n,
                          gender_changed, swaps, f, f_full, seconds_since(t0))};
}

Outcome prompt_goldens() {
  const fs::path dir = kSource / "tests" / "golden";
  const json in = json::parse(read_file(dir / "inputs.json"));
  auto window = [&](const char* key, ContextCondition cond) {
    ContextWindow w;
    w.condition = cond;
    for (const auto& p : in[key]) w.pairs.push_back({p.at("src").get<std::string>(), p.at("tgt").get<std::string>()});
    return w;
  };
  auto spec = [](PromptKind kind, bool chat) {
    PromptSpec s;
    s.kind = kind;
    s.chat_wrap = chat;
    return s;
  };
  const std::string src = in["source"];
  const auto gold = window("gold", ContextCondition::kGold);
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"format_a_sentence.txt", build_prompt(spec(PromptKind::kSentence, false), gold, src).text},
      {"format_b_generic.txt", build_prompt(spec(PromptKind::kGeneric, false), gold, src).text},
      {"format_c_explicit.txt", build_prompt(spec(PromptKind::kExplicit, false), gold, src).text},
      {"condition_gold.txt", build_prompt(spec(PromptKind::kExplicit, false), gold, src).text},
      {"condition_perturbed.txt",
       build_prompt(spec(PromptKind::kExplicit, false), window("perturbed", ContextCondition::kPerturbed), src).text},
      {"condition_random.txt",
       build_prompt(spec(PromptKind::kExplicit, false), window("random", ContextCondition::kRandom), src).text},
      {"chat_explicit_gold.txt", build_prompt(spec(PromptKind::kExplicit, true), gold, src).text},
      {"chat_sentence.txt", build_prompt(spec(PromptKind::kSentence, true), none_context(), src).text},
  };
  std::vector<std::string> mismatched;
  for (const auto& [name, got] : cases)
    if (read_file(dir / name) != got) mismatched.push_back(name);
  std::string detail = fmt::format("{}/{} golden files byte-exact", cases.size() - mismatched.size(), cases.size());
  for (const auto& m : mismatched) detail += " [differs: " + m + "]";
  return {mismatched.empty(), detail};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return files;
}

Outcome end_to_end() {
  const fs::path tmp = fs::temp_directory_path() / fmt::format("ctxprobe-acceptance-{}", ::getpid());
  fs::remove_all(tmp);
  json cfg = json::parse(read_file(kSource / "configs" / "desk_mock.json"));
  cfg["output_dir"] = (tmp / "reports").string();
  cfg["backend"]["cache_dir"] = (tmp / "cache").string();

  auto run = [&]() {
    Pipeline p(parse_config(cfg, kSource / "configs"));
    const std::size_t n = p.prepare();
    p.translate();
    p.contrast();
    p.attribute();
    p.score();
    return std::make_pair(n, p.run_dir());
  };

  const auto t0 = Clock::now();
  const auto [instances, run_dir] = run();
  const double secs = seconds_since(t0);
  const auto first = snapshot(run_dir);

  std::size_t sentences = 0;
  for (const auto& inst : read_jsonl(run_dir / "instances.jsonl"))
    sentences += inst["task"] == "translate" && inst["prompt_kind"] == "sentence";
  std::set<std::string> cells;
  for (const auto& inst : read_jsonl(run_dir / "instances.jsonl"))
    if (inst["task"] == "translate")
      cells.insert(inst["prompt_kind"].get<std::string>() + "/" + inst["condition"].get<std::string>());

  const std::string table = first.count("tables/translation.md") ? first.at("tables/translation.md") : "";
  const std::string figure = first.count("figures/attribution.csv") ? first.at("figures/attribution.csv") : "";
  const bool table_ok = table.find("sentence baseline BLEU") != std::string::npos &&
                        table.find("explicit gold BLEU") != std::string::npos && table.find("--") != std::string::npos;
  const bool figure_ok = figure.rfind("model,method,span_kind,mean_ap,n\n", 0) == 0 &&
                         figure.find(",erasure,context,") != std::string::npos &&
                         figure.find(",erasure,antecedent,") != std::string::npos;

  fs::remove_all(run_dir);
  fs::remove_all(tmp / "cache");
  run();
  const auto second = snapshot(run_dir);
  std::size_t differing = 0;
  for (const auto& [name, body] : first)
    if (!second.count(name) || second.at(name) != body) ++differing;
  differing += second.size() > first.size() ? second.size() - first.size() : 0;
  fs::remove_all(tmp);

  const bool ok = sentences >= 100 && cells.size() == 7 && table_ok && figure_ok && differing == 0 &&
                  secs < kE2eSeconds;
  return {ok, fmt::format("{} instances over {} sentences, {} translation cells; table {} figure {}; rerun {} of {} "
                          "files differ; {:.1f}s",
                          instances, sentences, cells.size(), table_ok ? "ok" : "MISSING", figure_ok ? "ok" : "MISSING",
                          differing, first.size(), secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric parity", metric_parity},
      {"CPR null calibration", cpr_null_calibration},
      {"AP invariants", ap_invariants},
      {"erasure oracle", erasure_oracle},
      {"perturbation invariants", perturbation_invariants},
      {"prompt goldens", prompt_goldens},
      {"end-to-end mock run", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !o.pass;
    std::printf("%s  %-24s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
