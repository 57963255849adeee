#include "ctxprobe/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/parallel.hpp"

namespace ctxprobe {

void AttributionVector::validate() const {
  if (scores.size() != tokens.size())
    throw DataError(fmt::format("{} scores for {} tokens", scores.size(), tokens.size()));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw DataError(fmt::format("score {} is not finite", i));
    if (scores[i] < 0) throw DataError(fmt::format("negative score {} at token {}", scores[i], i));
  }
  for (const auto& [name, idx] : spans)
    for (auto i : idx)
      if (i >= tokens.size())
        throw DataError(fmt::format("span '{}' index {} out of range [0, {})", name, i, tokens.size()));
  auto ante = spans.find("antecedent");
  auto ctx = spans.find("context");
  if (ante != spans.end() && !ante->second.empty()) {
    if (ctx == spans.end()) throw DataError("antecedent span without a context span");
    const std::set<std::size_t> c(ctx->second.begin(), ctx->second.end());
    for (auto i : ante->second)
      if (!c.count(i)) throw DataError(fmt::format("antecedent index {} is outside the context span", i));
  }
}

std::vector<std::size_t> span_indices(const AttributionVector& v, const std::string& span_kind) {
  if (span_kind == "input") {
    std::vector<std::size_t> all(v.tokens.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  auto it = v.spans.find(span_kind);
  if (it == v.spans.end()) throw DataError(fmt::format("example {} has no '{}' span", v.example_id, span_kind));
  return it->second;
}

std::optional<double> attribution_percentage(const std::vector<double>& scores,
                                             const std::vector<std::size_t>& indices) {
  double total = 0.0;
  for (double s : scores) total += s;
  if (!(total > 0.0)) return std::nullopt;
  // duplicates in the index list count once
  std::vector<std::size_t> idx = indices;
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  double part = 0.0;
  for (auto i : idx) {
    if (i >= scores.size()) throw DataError(fmt::format("span index {} out of range", i));
    part += scores[i];
  }
  return 100.0 * part / total;
}

std::optional<double> attribution_percentage(const AttributionVector& v, const std::string& span_kind) {
  return attribution_percentage(v.scores, span_indices(v, span_kind));
}

std::string_view to_string(ApAggregation a) {
  return a == ApAggregation::kMeanOfAps ? "mean_of_aps" : "ratio_of_sums";
}

ApAggregation parse_aggregation(std::string_view s) {
  if (s == "mean_of_aps") return ApAggregation::kMeanOfAps;
  if (s == "ratio_of_sums") return ApAggregation::kRatioOfSums;
  throw ConfigError(fmt::format("unknown aggregation '{}' (mean_of_aps, ratio_of_sums)", s), "attribution.aggregate");
}

ApAggregate aggregate_ap(const std::vector<AttributionVector>& vectors, const std::string& span_kind,
                         ApAggregation rule) {
  ApAggregate agg;
  agg.span_kind = span_kind;
  agg.rule = rule;
  if (!vectors.empty()) agg.method = vectors.front().method;
  double part_sum = 0.0, total_sum = 0.0;
  for (const auto& v : vectors) {
    const auto ap = attribution_percentage(v, span_kind);
    if (!ap) {
      ++agg.n_no_signal;
      continue;
    }
    agg.per_example.push_back(*ap);
    for (double s : v.scores) total_sum += s;
    for (auto i : span_indices(v, span_kind)) part_sum += v.scores[i];
  }
  agg.n_examples = agg.per_example.size();
  if (agg.n_examples == 0)
    throw DataError(fmt::format("no attribution signal in any of {} vectors for span '{}'", agg.n_no_signal, span_kind));
  if (rule == ApAggregation::kMeanOfAps) {
    double s = 0.0;
    for (double x : agg.per_example) s += x;
    agg.mean_ap = s / double(agg.n_examples);
  } else {
    agg.mean_ap = 100.0 * part_sum / total_sum;
  }
  return agg;
}

json to_json(const ErasureInstance& inst) {
  json spans = json::object();
  for (const auto& [k, v] : inst.spans) spans[k] = v;
  return {{"example_id", inst.example_id}, {"input_ids", inst.input_ids}, {"input_tokens", inst.input_tokens},
          {"target_ids", inst.target_ids}, {"spans", spans}};
}

ErasureInstance erasure_instance_from_json(const json& j) {
  ErasureInstance inst;
  inst.example_id = j.at("example_id").get<std::string>();
  inst.input_ids = j.at("input_ids").get<std::vector<int>>();
  inst.input_tokens = j.at("input_tokens").get<std::vector<std::string>>();
  inst.target_ids = j.at("target_ids").get<std::vector<int>>();
  for (const auto& [k, v] : j.at("spans").items()) inst.spans[k] = v.get<std::vector<std::size_t>>();
  return inst;
}

std::string_view to_string(ErasureScope s) { return s == ErasureScope::kContext ? "context" : "full_input"; }
std::string_view to_string(ErasureGranularity g) { return g == ErasureGranularity::kToken ? "token" : "span"; }

ErasureScope parse_scope(std::string_view s) {
  if (s == "context") return ErasureScope::kContext;
  if (s == "full_input") return ErasureScope::kFullInput;
  throw ConfigError(fmt::format("unknown sweep '{}' (context, full_input)", s), "attribution.sweep");
}

ErasureGranularity parse_granularity(std::string_view s) {
  if (s == "token") return ErasureGranularity::kToken;
  if (s == "span") return ErasureGranularity::kSpan;
  throw ConfigError(fmt::format("unknown granularity '{}' (token, span)", s), "attribution.granularity");
}

AttributionVector erasure_attribution(const ErasureInstance& inst, const ForcedScorer& score,
                                      const ErasureOptions& options) {
  if (inst.target_ids.empty()) throw DataError(fmt::format("example {}: empty forced target", inst.example_id));
  if (inst.input_tokens.size() != inst.input_ids.size())
    throw DataError(fmt::format("example {}: token strings and ids differ in length", inst.example_id));
  const std::size_t n = inst.input_ids.size();

  std::vector<bool> swept(n, options.scope == ErasureScope::kFullInput);
  if (options.scope == ErasureScope::kContext) {
    auto it = inst.spans.find("context");
    if (it != inst.spans.end())
      for (auto i : it->second) swept.at(i) = true;
  }

  // Each query erases a group of input positions.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<bool> grouped(n, false);
  if (options.granularity == ErasureGranularity::kSpan) {
    auto it = inst.spans.find("antecedent");
    if (it != inst.spans.end() && !it->second.empty()) {
      std::vector<std::size_t> g;
      for (auto i : it->second)
        if (swept.at(i) && !grouped[i]) {
          g.push_back(i);
          grouped[i] = true;
        }
      if (!g.empty()) groups.push_back(std::move(g));
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (swept[i] && !grouped[i]) groups.push_back({i});

  const double p_full = std::exp(score(inst.input_ids, inst.target_ids));
  std::vector<double> p_without(groups.size());
  parallel_for(groups.size(), options.max_parallel, [&](std::size_t g) {
    std::vector<bool> drop(n, false);
    for (auto i : groups[g]) drop[i] = true;
    std::vector<int> erased;
    erased.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!drop[i]) erased.push_back(inst.input_ids[i]);
    p_without[g] = std::exp(score(erased, inst.target_ids));
  });

  AttributionVector v;
  v.example_id = inst.example_id;
  v.tokens = inst.input_tokens;
  v.scores.assign(n, 0.0);
  v.spans = inst.spans;
  v.method = "erasure";
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double delta = std::max(0.0, p_full - p_without[g]);
    for (auto i : groups[g]) v.scores[i] = delta / double(groups[g].size());
  }
  v.meta = {{"erasure", "deletion"},
            {"delta_space", "probability"},
            {"scope", to_string(options.scope)},
            {"granularity", to_string(options.granularity)},
            {"p_full", p_full},
            {"target_ids", inst.target_ids}};
  v.validate();
  return v;
}

json to_ap_json(const AttributionVector& v) {
  json spans = json::object();
  for (const auto& [k, idx] : v.spans) spans[k] = idx;
  if (!spans.contains("context")) spans["context"] = json::array();
  if (!spans.contains("antecedent")) spans["antecedent"] = json::array();
  json meta = v.meta.is_object() ? v.meta : json::object();
  json ap = json::object();
  for (const auto& [k, idx] : v.spans) {
    const auto a = attribution_percentage(v.scores, idx);
    ap[k] = a ? json(*a) : json(nullptr);
  }
  meta["ap"] = ap;
  return {{"schema", kApSchema}, {"example_id", v.example_id}, {"tokens", v.tokens}, {"scores", v.scores},
          {"spans", spans},      {"method", v.method},         {"meta", meta}};
}

std::variant<AttributionVector, std::string> parse_ap_record(const json& j) {
  if (!j.is_object()) return std::string("record is not an object");
  const std::string schema = j.value("schema", std::string());
  if (schema != kApSchema)
    throw DataError(fmt::format("attribution schema '{}' is not supported (expected {})", schema, kApSchema));
  AttributionVector v;
  try {
    v.example_id = j.at("example_id").get<std::string>();
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    v.scores = j.at("scores").get<std::vector<double>>();
    v.method = j.at("method").get<std::string>();
    const json& spans = j.at("spans");
    for (const auto& [k, idx] : spans.items()) {
      for (const auto& i : idx)
        if (!i.is_number_integer() || i.get<long long>() < 0)
          return fmt::format("span '{}' has a non-index entry", k);
      v.spans[k] = idx.get<std::vector<std::size_t>>();
    }
    if (!v.spans.count("context") || !v.spans.count("antecedent")) return std::string("spans need context and antecedent");
    v.meta = j.value("meta", json::object());
  } catch (const json::exception& e) {
    return fmt::format("malformed record: {}", e.what());
  }
  if (v.method != "erasure" && v.method != "alti_logit") return fmt::format("unknown method '{}'", v.method);
  try {
    v.validate();
  } catch (const DataError& e) {
    return std::string(e.what());
  }
  // When the producer reported its own AP values they must agree with ours.
  if (v.meta.contains("ap") && v.meta["ap"].is_object()) {
    for (const auto& [k, reported] : v.meta["ap"].items()) {
      if (!reported.is_number() || !v.spans.count(k)) continue;
      const auto ours = attribution_percentage(v.scores, v.spans[k]);
      if (!ours || std::abs(*ours - reported.get<double>()) > 1e-9)
        return fmt::format("reported AP for '{}' does not match the scores", k);
    }
  }
  return v;
}

ApImport import_attributions(const std::filesystem::path& path) {
  ApImport out;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    auto r = parse_ap_record(j);
    if (auto* reason = std::get_if<std::string>(&r)) {
      out.rejected.emplace_back(j.is_object() ? j.value("example_id", fmt::format("line {}", line))
                                              : fmt::format("line {}", line),
                                *reason);
      return;
    }
    auto& v = std::get<AttributionVector>(r);
    if (!seen.insert(v.example_id).second) {
      out.rejected.emplace_back(v.example_id, "duplicate example_id");
      return;
    }
    out.vectors.push_back(std::move(v));
  });
  return out;
}

void export_attributions(const std::filesystem::path& path, const std::vector<AttributionVector>& vectors) {
  std::vector<json> records;
  records.reserve(vectors.size());
  for (const auto& v : vectors) records.push_back(to_ap_json(v));
  write_jsonl(path, records);
}

}  // namespace ctxprobe
