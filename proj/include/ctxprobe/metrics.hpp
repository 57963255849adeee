#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxprobe/jsonl.hpp"

namespace ctxprobe {

inline constexpr std::string_view kBleuSignature =
    "nrefs:1|case:mixed|eff:yes|tok:13a|smooth:exp|version:2.4.0";
inline constexpr std::string_view kChrfSignature =
    "nrefs:1|case:mixed|eff:yes|nc:6|nw:0|space:no|version:2.4.0";
/// Version tag of the generative pronoun matching rule, recorded in reports.
inline constexpr std::string_view kGprRuleId = "gpr-wordcount-v1";

struct MetricReport {
  std::string metric;
  double value = 0.0;  // [0, 100]
  std::string signature;
  std::size_t n_items = 0;
};

json to_json(const MetricReport& r);

/// mteval-v13a tokenization as done by the canonical scorer, including its
/// right-strip of the segment.
std::string tokenize_13a(std::string_view line);

struct BleuStats {
  std::size_t sys_len = 0;
  std::size_t ref_len = 0;
  std::array<std::size_t, 4> correct{};
  std::array<std::size_t, 4> total{};

  BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(std::string_view hypothesis, std::string_view reference);
/// BLEU from summed statistics: exponential smoothing, effective order.
double bleu_from_stats(const BleuStats& s);

/// Corpus BLEU, single reference per hypothesis.
MetricReport bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

inline constexpr int kChrfOrder = 6;

/// Per order: hypothesis n-grams, reference n-grams, matches.
struct ChrfStats {
  std::array<std::size_t, 3 * kChrfOrder> counts{};
  ChrfStats& operator+=(const ChrfStats& o);
};

ChrfStats chrf_stats(std::string_view hypothesis, std::string_view reference);
double chrf_from_stats(const ChrfStats& s);

/// Corpus chrF (beta 2, character 6-grams, whitespace removed).
MetricReport chrf(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

struct PronounJudgment {
  std::string example_id;
  bool correct = false;
  json detail;  // per-pronoun counts or per-variant scores
};

json to_json(const PronounJudgment& j);
PronounJudgment judgment_from_json(const json& j);

/// Case-insensitive count of `word` in `text` at word boundaries.
std::size_t count_word(std::string_view text, std::string_view word);

/// Byte offset of the first case-insensitive, word-bounded occurrence of
/// `word` in `text`.
std::optional<std::size_t> find_word(std::string_view text, std::string_view word);

/// Generative pronoun judgment: correct iff the gold pronoun occurs and
/// occurs more often than every contrastive pronoun.
PronounJudgment gpr(std::string_view hypothesis, const std::string& gold,
                    const std::vector<std::string>& contrastive, std::string example_id = {});

struct CprVariant {
  std::string label;
  bool gold = false;
  double total_logprob = 0.0;
};

/// Contrastive judgment: correct iff the gold variant scores strictly
/// highest. Needs at least two variants and exactly one gold.
PronounJudgment cpr(const std::vector<CprVariant>& variants, std::string example_id = {});

/// 100 * correct / total rounded to one decimal, halves away from zero.
double accuracy(const std::vector<PronounJudgment>& judgments);

/// Unrounded 100 * correct / total.
double accuracy_raw(const std::vector<PronounJudgment>& judgments);

/// Rounds to one decimal, halves away from zero.
double round1(double x);

/// Reads externally computed segment scores, one `{id, score}` per line.
std::map<std::string, double> read_external_scores(const std::filesystem::path& path);

}  // namespace ctxprobe
