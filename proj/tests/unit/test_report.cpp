#include <sstream>

#include <gtest/gtest.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/report.hpp"
#include "ctxprobe/text.hpp"
#include "support.hpp"

using namespace ctxprobe;
using ctxprobe::testing::TempDir;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

ResultsMatrix full_translation_matrix() {
  ResultsMatrix m;
  double v = 10.04;
  m.set({"m1", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "BLEU", v, 100);
  m.set({"m1", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "COMET", 80.25, 100);
  for (PromptKind k : {PromptKind::kGeneric, PromptKind::kExplicit})
    for (ContextCondition c : {ContextCondition::kRandom, ContextCondition::kPerturbed, ContextCondition::kGold}) {
      v += 3.0;
      m.set({"m1", "en-de", k, c}, "BLEU", v, 100);
      m.set({"m1", "en-de", k, c}, "COMET", 80 + v / 10, 100);
    }
  return m;
}

}  // namespace

TEST(Report, SevenColumnGroupsOneRow) {
  const auto m = full_translation_matrix();
  const auto csv = lines(render_table(m, "translation", TableFormat::kCsv));
  ASSERT_EQ(csv.size(), 2u);
  const auto head = fields(csv[0], ',');
  EXPECT_EQ(head.size(), 2u + 7 * 2 * 3);
  EXPECT_EQ(head[2], "sentence_baseline_COMET");
  EXPECT_EQ(head[8], "generic_random_COMET");
  const auto row = fields(csv[1], ',');
  EXPECT_EQ(row[0], "en-de");
  EXPECT_EQ(row[1], "m1");
  EXPECT_EQ(row[5], "10.0");  // sentence BLEU
  EXPECT_EQ(row[7], "100");

  const auto md = lines(render_table(m, "translation", TableFormat::kMarkdown));
  ASSERT_EQ(md.size(), 4u);  // header, rule, language-pair banner, model row
  EXPECT_EQ(md[2].rfind("| **en-de** |", 0), 0u);
  EXPECT_EQ(md[3].find("--"), std::string::npos);
}

TEST(Report, MissingCellsRenderAsDashes) {
  ResultsMatrix m;
  m.set({"m1", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "BLEU", 20.0, 10);
  const auto csv = lines(render_table(m, "translation", TableFormat::kCsv));
  const auto row = fields(csv[1], ',');
  EXPECT_EQ(row[2], "--");  // COMET
  EXPECT_EQ(row[3], "");
  EXPECT_EQ(row[5], "20.0");
  const auto md = render_table(m, "translation", TableFormat::kMarkdown);
  EXPECT_NE(md.find("| m1 | -- | 20.0 | -- |"), std::string::npos);
}

TEST(Report, CsvAndMarkdownAgree) {
  const auto m = full_translation_matrix();
  const auto csv = fields(lines(render_table(m, "translation", TableFormat::kCsv))[1], ',');
  auto md = fields(lines(render_table(m, "translation", TableFormat::kMarkdown))[3], '|');
  // md: "", " m1 ", cells..., ""
  std::vector<std::string> md_cells;
  for (std::size_t i = 2; i + 1 < md.size(); ++i) md_cells.push_back(text::trim(md[i]));
  ASSERT_EQ(md_cells.size(), 14u);
  for (std::size_t i = 0; i < md_cells.size(); ++i) EXPECT_EQ(md_cells[i], csv[2 + 3 * i]) << i;
}

TEST(Report, PronounLayout) {
  ResultsMatrix m;
  m.set({"m1", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "GPR", 40.0, 120);
  m.set({"m1", "en-de", PromptKind::kGeneric, ContextCondition::kGold}, "GPR", 91.66, 120);
  m.set({"m1", "en-de", PromptKind::kGeneric, ContextCondition::kGold}, "CPR", 35.0, 120);
  const auto md = lines(render_table(m, "pronoun", TableFormat::kMarkdown));
  EXPECT_EQ(md[0],
            "| model | sentence COMET | sentence GPR | sentence CPR | random COMET | random GPR | random CPR | "
            "perturbed COMET | perturbed GPR | perturbed CPR | gold COMET | gold GPR | gold CPR |");
  EXPECT_EQ(md[3], "| m1 | -- | 40.0 | -- | -- | -- | -- | -- | -- | -- | -- | 91.7 | 35.0 |");
}

TEST(Report, RowsGroupByLanguagePair) {
  ResultsMatrix m;
  m.set({"b", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "chrF", 1, 1);
  m.set({"a", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "chrF", 2, 1);
  m.set({"a", "en-fr", PromptKind::kSentence, ContextCondition::kNone}, "chrF", 3, 1);
  const auto md = lines(render_table(m, "chrf", TableFormat::kMarkdown));
  ASSERT_EQ(md.size(), 7u);
  EXPECT_EQ(md[3].rfind("| a |", 0), 0u);
  EXPECT_EQ(md[4].rfind("| b |", 0), 0u);
  EXPECT_EQ(md[5].rfind("| **en-fr** |", 0), 0u);
}

TEST(Report, Errors) {
  ResultsMatrix m;
  EXPECT_THROW(render_table(m, "translation", TableFormat::kCsv), DataError);
  m.set({"m", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "BLEU", 1, 1);
  EXPECT_THROW(render_table(m, "table9", TableFormat::kCsv), ConfigError);
  EXPECT_THROW(m.set({"m", "en-de", PromptKind::kSentence, ContextCondition::kNone}, "BLEU", 2, 1), DataError);
}

TEST(Report, FigureData) {
  std::vector<ApAggregate> aggs;
  for (const char* span : {"context", "antecedent"})
    for (const char* method : {"erasure", "alti_logit"}) {
      ApAggregate a;
      a.model = "m1";
      a.method = method;
      a.span_kind = span;
      a.mean_ap = std::string(span) == "context" ? 60.5 : 7.25;
      a.n_examples = 95;
      aggs.push_back(a);
    }
  const std::string csv = render_figure_data(aggs);
  EXPECT_EQ(csv,
            "model,method,span_kind,mean_ap,n\n"
            "m1,erasure,context,60.5,95\n"
            "m1,alti_logit,context,60.5,95\n"
            "m1,erasure,antecedent,7.25,95\n"
            "m1,alti_logit,antecedent,7.25,95\n");
  TempDir dir;
  emit_figure_data(aggs, dir / "a.csv");
  emit_figure_data(aggs, dir / "b.csv");
  EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
}
