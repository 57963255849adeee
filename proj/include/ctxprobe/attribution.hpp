#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ctxprobe/jsonl.hpp"

namespace ctxprobe {

inline constexpr std::string_view kApSchema = "ap-v1";

/// Per-token attribution scores over a model input. Spans map a name
/// ("context", "antecedent", "source_sentence") to token indices.
struct AttributionVector {
  std::string example_id;
  std::vector<std::string> tokens;
  std::vector<double> scores;
  std::map<std::string, std::vector<std::size_t>> spans;
  std::string method = "erasure";
  json meta = json::object();

  /// Throws DataError describing the first violated invariant.
  void validate() const;
};

/// Indices for a span name; "input" is the whole input. Unknown names throw.
std::vector<std::size_t> span_indices(const AttributionVector& v, const std::string& span_kind);

/// Share of the total attribution falling on `indices`, in percent.
/// Returns nullopt (no signal) when all scores are zero.
std::optional<double> attribution_percentage(const std::vector<double>& scores, const std::vector<std::size_t>& indices);
std::optional<double> attribution_percentage(const AttributionVector& v, const std::string& span_kind);

enum class ApAggregation { kMeanOfAps, kRatioOfSums };

std::string_view to_string(ApAggregation a);
ApAggregation parse_aggregation(std::string_view s);

struct ApAggregate {
  std::string model;
  std::string method;
  std::string span_kind;
  ApAggregation rule = ApAggregation::kMeanOfAps;
  double mean_ap = 0.0;
  std::size_t n_examples = 0;   // vectors with signal
  std::size_t n_no_signal = 0;  // excluded from the mean
  std::vector<double> per_example;
};

/// Aggregates AP over vectors with signal. Throws DataError when none has
/// signal.
ApAggregate aggregate_ap(const std::vector<AttributionVector>& vectors, const std::string& span_kind,
                         ApAggregation rule = ApAggregation::kMeanOfAps);

/// A forced-decode instance: the input ids X, the forced target ids (the
/// pronoun), and token-index spans over X.
struct ErasureInstance {
  std::string example_id;
  std::vector<int> input_ids;
  std::vector<std::string> input_tokens;
  std::vector<int> target_ids;
  std::map<std::string, std::vector<std::size_t>> spans;
};

json to_json(const ErasureInstance& inst);
ErasureInstance erasure_instance_from_json(const json& j);

enum class ErasureScope { kContext, kFullInput };
enum class ErasureGranularity { kToken, kSpan };

std::string_view to_string(ErasureScope s);
std::string_view to_string(ErasureGranularity g);
ErasureScope parse_scope(std::string_view s);
ErasureGranularity parse_granularity(std::string_view s);

struct ErasureOptions {
  ErasureScope scope = ErasureScope::kFullInput;
  ErasureGranularity granularity = ErasureGranularity::kToken;
  int max_parallel = 1;
};

/// Total log-probability of `target` forced after `input`.
using ForcedScorer = std::function<double(const std::vector<int>& input, const std::vector<int>& target)>;

/// a_t = max(0, p_full - p_without_t), probabilities of the whole target.
/// Tokens are deleted from the input. With span granularity the antecedent
/// span is erased in one query and its delta is split evenly over its
/// tokens; other tokens are erased one by one.
AttributionVector erasure_attribution(const ErasureInstance& inst, const ForcedScorer& score,
                                      const ErasureOptions& options = {});

json to_ap_json(const AttributionVector& v);

struct ApImport {
  std::vector<AttributionVector> vectors;
  std::vector<std::pair<std::string, std::string>> rejected;  // (example_id, reason)
};

/// Parses an ap-v1 record; returns the rejection reason on invalid content.
/// A schema other than ap-v1 throws DataError.
std::variant<AttributionVector, std::string> parse_ap_record(const json& j);

ApImport import_attributions(const std::filesystem::path& path);
void export_attributions(const std::filesystem::path& path, const std::vector<AttributionVector>& vectors);

}  // namespace ctxprobe
