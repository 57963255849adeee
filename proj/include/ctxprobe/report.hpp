#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxprobe/attribution.hpp"
#include "ctxprobe/jsonl.hpp"
#include "ctxprobe/perturb.hpp"
#include "ctxprobe/prompt.hpp"

namespace ctxprobe {

struct ConditionKey {
  std::string model_id;
  std::string language_pair;  // e.g. "en-de"
  PromptKind prompt_kind = PromptKind::kSentence;
  ContextCondition condition = ContextCondition::kNone;

  auto operator<=>(const ConditionKey&) const = default;
};

struct CellValue {
  double value = 0.0;
  std::size_t n_items = 0;
};

/// Metric values per (condition, metric name).
class ResultsMatrix {
 public:
  /// Throws DataError if the (key, metric) cell is already set.
  void set(const ConditionKey& key, const std::string& metric, double value, std::size_t n_items);
  std::optional<CellValue> get(const ConditionKey& key, const std::string& metric) const;
  bool empty() const { return cells_.empty(); }
  /// Distinct (language_pair, model_id) rows in sorted order.
  std::vector<std::pair<std::string, std::string>> rows() const;
  json to_json() const;

 private:
  std::map<std::pair<ConditionKey, std::string>, CellValue> cells_;
};

enum class TableFormat { kCsv, kMarkdown };

/// Layouts: "translation" (COMET, BLEU), "chrf" (chrF), each over the
/// sentence baseline and generic/explicit x random/perturbed/gold columns;
/// "pronoun" (COMET, GPR, CPR) over sentence/random/perturbed/gold.
/// Missing cells render as "--".
std::string render_table(const ResultsMatrix& matrix, const std::string& layout, TableFormat format);

void emit_table(const ResultsMatrix& matrix, const std::string& layout, TableFormat format,
                const std::filesystem::path& path);

/// Long-format CSV: model, method, span_kind, mean_ap, n.
std::string render_figure_data(const std::vector<ApAggregate>& aggregates);
void emit_figure_data(const std::vector<ApAggregate>& aggregates, const std::filesystem::path& path);

}  // namespace ctxprobe
