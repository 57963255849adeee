#include "ctxprobe/metrics.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/text.hpp"

namespace ctxprobe {

json to_json(const MetricReport& r) {
  return {{"metric", r.metric}, {"value", r.value}, {"signature", r.signature}, {"n_items", r.n_items}};
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string_view rstrip(std::string_view s) {
  const std::u32string cps = text::decode_utf8(s);
  std::size_t keep = cps.size();
  while (keep > 0 && text::is_space(cps[keep - 1])) --keep;
  return s.substr(0, text::byte_offset(s, keep));
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_dot_comma(char c) { return c == '.' || c == ','; }

bool is_13a_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x7B && u <= 0x7E) || (u >= 0x5B && u <= 0x60) || (u >= 0x20 && u <= 0x26) ||
         (u >= 0x28 && u <= 0x2B) || (u >= 0x3A && u <= 0x40) || u == '/';
}

// Left-to-right, non-overlapping two-character substitutions. The patterns
// only name ASCII characters, so scanning bytes gives the same result as
// scanning code points.
template <class First, class Second, class Emit>
std::string two_char_rule(const std::string& s, First first, Second second, Emit emit) {
  std::string out;
  out.reserve(s.size() + s.size() / 4);
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && first(s[i]) && second(s[i + 1])) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out += s[i++];
    }
  }
  return out;
}

std::string join_split(std::string_view s) {
  std::string out;
  for (auto w : text::split_whitespace(s)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::string tokenize_13a(std::string_view raw) {
  std::string line(rstrip(raw));
  replace_all(line, "<skipped>", "");
  replace_all(line, "-\n", "");
  replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    replace_all(line, "&quot;", "\"");
    replace_all(line, "&amp;", "&");
    replace_all(line, "&lt;", "<");
    replace_all(line, "&gt;", ">");
  }
  std::string s;
  s.reserve(line.size() * 2 + 2);
  s += ' ';
  for (char c : line) {
    if (is_13a_punct(c)) {
      s += ' ';
      s += c;
      s += ' ';
    } else {
      s += c;
    }
  }
  s += ' ';
  auto not_digit = [](char c) { return !is_digit(c); };
  s = two_char_rule(s, not_digit, is_dot_comma, [](std::string& o, char a, char b) {
    o += a;
    o += ' ';
    o += b;
    o += ' ';
  });
  s = two_char_rule(s, is_dot_comma, not_digit, [](std::string& o, char a, char b) {
    o += ' ';
    o += a;
    o += ' ';
    o += b;
  });
  s = two_char_rule(s, is_digit, [](char c) { return c == '-'; }, [](std::string& o, char a, char b) {
    o += a;
    o += ' ';
    o += b;
    o += ' ';
  });
  return join_split(s);
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  sys_len += o.sys_len;
  ref_len += o.ref_len;
  for (std::size_t n = 0; n < 4; ++n) {
    correct[n] += o.correct[n];
    total[n] += o.total[n];
  }
  return *this;
}

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

std::array<NgramCounts, 4> word_ngrams(const std::vector<std::string_view>& toks) {
  std::array<NgramCounts, 4> out;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key(toks[i]);
      for (std::size_t k = 1; k < n; ++k) {
        key += ' ';
        key += toks[i + k];
      }
      out[n - 1][key]++;
    }
  }
  return out;
}

void check_sizes(const std::vector<std::string>& h, const std::vector<std::string>& r) {
  if (h.size() != r.size())
    throw DataError(fmt::format("{} hypotheses but {} references", h.size(), r.size()));
  if (h.empty()) throw DataError("no segments to score");
}

}  // namespace

BleuStats bleu_stats(std::string_view hypothesis, std::string_view reference) {
  const std::string h = tokenize_13a(hypothesis);
  const std::string r = tokenize_13a(reference);
  const auto htoks = text::split_whitespace(h);
  const auto rtoks = text::split_whitespace(r);
  const auto hng = word_ngrams(htoks);
  const auto rng = word_ngrams(rtoks);
  BleuStats s;
  s.sys_len = htoks.size();
  s.ref_len = rtoks.size();
  for (std::size_t n = 0; n < 4; ++n) {
    for (const auto& [g, c] : hng[n]) {
      s.total[n] += c;
      if (auto it = rng[n].find(g); it != rng[n].end()) s.correct[n] += std::min(c, it->second);
    }
  }
  return s;
}

double bleu_from_stats(const BleuStats& s) {
  double bp = 1.0;
  if (s.sys_len < s.ref_len) bp = s.sys_len > 0 ? std::exp(1.0 - double(s.ref_len) / double(s.sys_len)) : 0.0;
  bool any = false;
  for (auto c : s.correct) any = any || c > 0;
  if (!any) return 0.0;
  std::array<double, 4> prec{};
  double smooth = 1.0;
  int eff = 4;
  for (int n = 1; n <= 4; ++n) {
    const auto tot = s.total[std::size_t(n - 1)];
    const auto cor = s.correct[std::size_t(n - 1)];
    if (tot == 0) break;
    eff = n;
    if (cor == 0) {
      smooth *= 2;
      prec[std::size_t(n - 1)] = 100.0 / (smooth * double(tot));
    } else {
      prec[std::size_t(n - 1)] = 100.0 * double(cor) / double(tot);
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < eff; ++n) log_sum += prec[std::size_t(n)] == 0.0 ? -9999999999.0 : std::log(prec[std::size_t(n)]);
  return bp * std::exp(log_sum / eff);
}

MetricReport bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  check_sizes(hypotheses, references);
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += bleu_stats(hypotheses[i], references[i]);
  return {"BLEU", bleu_from_stats(total), std::string(kBleuSignature), hypotheses.size()};
}

ChrfStats& ChrfStats::operator+=(const ChrfStats& o) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  return *this;
}

namespace {

std::array<std::unordered_map<std::u32string, std::size_t>, kChrfOrder> char_ngrams(std::string_view line) {
  std::u32string cps;
  for (char32_t c : text::decode_utf8(line))
    if (!text::is_space(c)) cps.push_back(c);
  std::array<std::unordered_map<std::u32string, std::size_t>, kChrfOrder> out;
  for (std::size_t n = 1; n <= std::size_t(kChrfOrder); ++n)
    for (std::size_t i = 0; i + n <= cps.size(); ++i) out[n - 1][cps.substr(i, n)]++;
  return out;
}

}  // namespace

ChrfStats chrf_stats(std::string_view hypothesis, std::string_view reference) {
  const auto h = char_ngrams(hypothesis);
  const auto r = char_ngrams(reference);
  ChrfStats s;
  for (std::size_t n = 0; n < std::size_t(kChrfOrder); ++n) {
    std::size_t hyp = 0, match = 0, ref = 0;
    for (const auto& [g, c] : h[n]) {
      hyp += c;
      if (auto it = r[n].find(g); it != r[n].end()) match += std::min(c, it->second);
    }
    for (const auto& [g, c] : r[n]) ref += c;
    // hypothesis n-grams only count when the reference has n-grams of this order
    s.counts[3 * n] = r[n].empty() ? 0 : hyp;
    s.counts[3 * n + 1] = ref;
    s.counts[3 * n + 2] = match;
  }
  return s;
}

double chrf_from_stats(const ChrfStats& s) {
  constexpr double beta2 = 4.0;
  double avg_p = 0.0, avg_r = 0.0;
  int eff = 0;
  for (std::size_t n = 0; n < std::size_t(kChrfOrder); ++n) {
    const auto hyp = s.counts[3 * n], ref = s.counts[3 * n + 1], match = s.counts[3 * n + 2];
    if (hyp > 0 && ref > 0) {
      avg_p += double(match) / double(hyp);
      avg_r += double(match) / double(ref);
      ++eff;
    }
  }
  if (eff == 0) return 0.0;
  avg_p /= eff;
  avg_r /= eff;
  if (avg_p + avg_r == 0.0) return 0.0;
  return 100.0 * (1 + beta2) * avg_p * avg_r / (beta2 * avg_p + avg_r);
}

MetricReport chrf(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  check_sizes(hypotheses, references);
  ChrfStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += chrf_stats(hypotheses[i], references[i]);
  return {"chrF", chrf_from_stats(total), std::string(kChrfSignature), hypotheses.size()};
}

json to_json(const PronounJudgment& j) {
  return {{"example_id", j.example_id}, {"correct", j.correct}, {"detail", j.detail}};
}

PronounJudgment judgment_from_json(const json& j) {
  return {j.at("example_id").get<std::string>(), j.at("correct").get<bool>(), j.value("detail", json::object())};
}

std::size_t count_word(std::string_view text_in, std::string_view word) {
  const std::u32string hay = text::decode_utf8(text::to_lower(text_in));
  const std::u32string needle = text::decode_utf8(text::to_lower(word));
  if (needle.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t pos = hay.find(needle); pos != std::u32string::npos; pos = hay.find(needle, pos + 1)) {
    const bool left = pos == 0 || !text::is_word_char(hay[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right = end == hay.size() || !text::is_word_char(hay[end]);
    if (left && right) ++count;
  }
  return count;
}

std::optional<std::size_t> find_word(std::string_view text_in, std::string_view word) {
  const std::u32string hay = text::decode_utf8(text_in);
  std::u32string lower;
  lower.reserve(hay.size());
  // lowercase per code point so positions line up with the original
  for (char32_t c : hay) {
    const std::u32string l = text::decode_utf8(text::to_lower(text::encode_utf8(c)));
    lower.push_back(l.size() == 1 ? l[0] : c);
  }
  const std::u32string needle = text::decode_utf8(text::to_lower(word));
  if (needle.empty()) return std::nullopt;
  for (std::size_t pos = lower.find(needle); pos != std::u32string::npos; pos = lower.find(needle, pos + 1)) {
    const bool left = pos == 0 || !text::is_word_char(lower[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right = end == lower.size() || !text::is_word_char(lower[end]);
    if (left && right) return text::byte_offset(text_in, pos);
  }
  return std::nullopt;
}

PronounJudgment gpr(std::string_view hypothesis, const std::string& gold, const std::vector<std::string>& contrastive,
                    std::string example_id) {
  PronounJudgment j;
  j.example_id = std::move(example_id);
  const std::size_t g = count_word(hypothesis, gold);
  std::size_t best_other = 0;
  json counts = json::object();
  counts[gold] = g;
  for (const auto& c : contrastive) {
    const std::size_t n = count_word(hypothesis, c);
    counts[c] = n;
    best_other = std::max(best_other, n);
  }
  j.correct = g >= 1 && g > best_other;
  j.detail = {{"rule", kGprRuleId}, {"gold", gold}, {"counts", counts}};
  return j;
}

PronounJudgment cpr(const std::vector<CprVariant>& variants, std::string example_id) {
  if (variants.size() < 2) throw DataError("contrastive judgment needs at least two variants");
  const CprVariant* gold = nullptr;
  for (const auto& v : variants) {
    if (!v.gold) continue;
    if (gold) throw DataError(fmt::format("example {}: more than one gold variant", example_id));
    gold = &v;
  }
  if (!gold) throw DataError(fmt::format("example {}: no gold variant", example_id));
  bool strictly_best = true;
  json scores = json::array();
  for (const auto& v : variants) {
    scores.push_back({{"label", v.label}, {"gold", v.gold}, {"total_logprob", v.total_logprob}});
    if (&v != gold && !(gold->total_logprob > v.total_logprob)) strictly_best = false;
  }
  return {std::move(example_id), strictly_best, {{"variants", scores}}};
}

double accuracy_raw(const std::vector<PronounJudgment>& judgments) {
  if (judgments.empty()) throw DataError("accuracy over zero judgments");
  std::size_t c = 0;
  for (const auto& j : judgments) c += j.correct ? 1 : 0;
  return 100.0 * double(c) / double(judgments.size());
}

double accuracy(const std::vector<PronounJudgment>& judgments) {
  if (judgments.empty()) throw DataError("accuracy over zero judgments");
  std::size_t c = 0;
  for (const auto& j : judgments) c += j.correct ? 1 : 0;
  const std::size_t t = judgments.size();
  // tenths of a percent, exact integer rounding
  const std::size_t tenths = (2000 * c + t) / (2 * t);
  return double(tenths) / 10.0;
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

std::map<std::string, double> read_external_scores(const std::filesystem::path& path) {
  std::map<std::string, double> out;
  for_each_jsonl(path, [&](const json& r, std::size_t line) {
    if (!r.contains("id") || !r.contains("score") || !r["score"].is_number())
      throw DataError(fmt::format("{}:{}: expected {{id, score}}", path.string(), line));
    const std::string id = r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump();
    if (!out.emplace(id, r["score"].get<double>()).second)
      throw DataError(fmt::format("{}:{}: duplicate id {}", path.string(), line, id));
  });
  return out;
}

}  // namespace ctxprobe
