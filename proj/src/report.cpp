#include "ctxprobe/report.hpp"

#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/metrics.hpp"

namespace ctxprobe {

void ResultsMatrix::set(const ConditionKey& key, const std::string& metric, double value, std::size_t n_items) {
  if (!cells_.emplace(std::make_pair(key, metric), CellValue{value, n_items}).second)
    throw DataError(fmt::format("duplicate result for {}/{}/{}/{} {}", key.model_id, key.language_pair,
                                to_string(key.prompt_kind), to_string(key.condition), metric));
}

std::optional<CellValue> ResultsMatrix::get(const ConditionKey& key, const std::string& metric) const {
  auto it = cells_.find({key, metric});
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, std::string>> ResultsMatrix::rows() const {
  std::set<std::pair<std::string, std::string>> r;
  for (const auto& [k, _] : cells_) r.emplace(k.first.language_pair, k.first.model_id);
  return {r.begin(), r.end()};
}

json ResultsMatrix::to_json() const {
  json out = json::array();
  for (const auto& [k, v] : cells_)
    out.push_back({{"model", k.first.model_id},
                   {"language_pair", k.first.language_pair},
                   {"prompt_kind", to_string(k.first.prompt_kind)},
                   {"condition", to_string(k.first.condition)},
                   {"metric", k.second},
                   {"value", v.value},
                   {"n", v.n_items}});
  return out;
}

namespace {

struct Column {
  std::string group;  // header label, e.g. "generic random"
  PromptKind kind;
  ContextCondition condition;
};

struct Layout {
  std::vector<Column> columns;
  std::vector<std::string> metrics;
};

std::vector<Column> table1_columns() {
  std::vector<Column> cols = {{"sentence baseline", PromptKind::kSentence, ContextCondition::kNone}};
  for (PromptKind k : {PromptKind::kGeneric, PromptKind::kExplicit})
    for (ContextCondition c : {ContextCondition::kRandom, ContextCondition::kPerturbed, ContextCondition::kGold})
      cols.push_back({fmt::format("{} {}", to_string(k), to_string(c)), k, c});
  return cols;
}

Layout make_layout(const ResultsMatrix& m, const std::string& id) {
  if (id == "translation") return {table1_columns(), {"COMET", "BLEU"}};
  if (id == "chrf") return {table1_columns(), {"chrF"}};
  if (id == "pronoun") {
    // Context columns use the generic prompt unless only explicit results exist.
    PromptKind kind = PromptKind::kGeneric;
    bool generic = false, explicit_ = false;
    for (const auto& [pair, model] : m.rows())
      for (ContextCondition c : {ContextCondition::kRandom, ContextCondition::kPerturbed, ContextCondition::kGold})
        for (const char* metric : {"COMET", "GPR", "CPR"}) {
          generic = generic || m.get({model, pair, PromptKind::kGeneric, c}, metric).has_value();
          explicit_ = explicit_ || m.get({model, pair, PromptKind::kExplicit, c}, metric).has_value();
        }
    if (!generic && explicit_) kind = PromptKind::kExplicit;
    return {{{"sentence", PromptKind::kSentence, ContextCondition::kNone},
             {"random", kind, ContextCondition::kRandom},
             {"perturbed", kind, ContextCondition::kPerturbed},
             {"gold", kind, ContextCondition::kGold}},
            {"COMET", "GPR", "CPR"}};
  }
  throw ConfigError(fmt::format("unknown table layout '{}' (translation, chrf, pronoun)", id), "layout");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out += c == ' ' ? '_' : c;
  return out;
}

std::string fmt1(double v) { return fmt::format("{:.1f}", round1(v)); }

}  // namespace

std::string render_table(const ResultsMatrix& matrix, const std::string& layout_id, TableFormat format) {
  if (matrix.empty()) throw DataError("no results to tabulate");
  const Layout layout = make_layout(matrix, layout_id);
  std::string out;
  if (format == TableFormat::kCsv) {
    std::vector<std::string> head = {"language_pair", "model"};
    for (const auto& c : layout.columns)
      for (const auto& m : layout.metrics) {
        const std::string base = slug(c.group) + "_" + m;
        head.push_back(base);
        head.push_back(base + "_raw");
        head.push_back(base + "_n");
      }
    out += fmt::format("{}\n", fmt::join(head, ","));
    for (const auto& [pair, model] : matrix.rows()) {
      std::vector<std::string> row = {csv_field(pair), csv_field(model)};
      for (const auto& c : layout.columns)
        for (const auto& m : layout.metrics) {
          const auto cell = matrix.get({model, pair, c.kind, c.condition}, m);
          row.push_back(cell ? fmt1(cell->value) : "--");
          row.push_back(cell ? fmt::format("{}", cell->value) : "");
          row.push_back(cell ? fmt::format("{}", cell->n_items) : "");
        }
      out += fmt::format("{}\n", fmt::join(row, ","));
    }
    return out;
  }
  std::vector<std::string> head = {"model"};
  for (const auto& c : layout.columns)
    for (const auto& m : layout.metrics) head.push_back(fmt::format("{} {}", c.group, m));
  out += fmt::format("| {} |\n", fmt::join(head, " | "));
  std::string rule = "|---|";
  for (std::size_t i = 1; i < head.size(); ++i) rule += "---:|";
  out += rule + "\n";
  std::string current_pair;
  bool first = true;
  for (const auto& [pair, model] : matrix.rows()) {
    if (first || pair != current_pair) {
      out += fmt::format("| **{}** |{}\n", md_field(pair), std::string(head.size() - 1, '|'));
      current_pair = pair;
      first = false;
    }
    std::vector<std::string> row = {md_field(model)};
    for (const auto& c : layout.columns)
      for (const auto& m : layout.metrics) {
        const auto cell = matrix.get({model, pair, c.kind, c.condition}, m);
        row.push_back(cell ? fmt1(cell->value) : "--");
      }
    out += fmt::format("| {} |\n", fmt::join(row, " | "));
  }
  return out;
}

void emit_table(const ResultsMatrix& matrix, const std::string& layout, TableFormat format,
                const std::filesystem::path& path) {
  atomic_write(path, render_table(matrix, layout, format));
}

std::string render_figure_data(const std::vector<ApAggregate>& aggregates) {
  std::string out = "model,method,span_kind,mean_ap,n\n";
  for (const auto& a : aggregates)
    out += fmt::format("{},{},{},{},{}\n", csv_field(a.model), csv_field(a.method), csv_field(a.span_kind), a.mean_ap,
                       a.n_examples);
  return out;
}

void emit_figure_data(const std::vector<ApAggregate>& aggregates, const std::filesystem::path& path) {
  atomic_write(path, render_figure_data(aggregates));
}

}  // namespace ctxprobe
