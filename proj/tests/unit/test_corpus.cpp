#include <map>

#include <gtest/gtest.h>

#include "ctxprobe/corpus.hpp"
#include "ctxprobe/error.hpp"
#include "support.hpp"

using namespace ctxprobe;
using ctxprobe::testing::desk_dir;
using ctxprobe::testing::TempDir;

namespace {

const char* kTwoDocs =
    R"({"doc_id": "a", "sentences": [{"src": "One.", "tgt": "Eins."}, {"src": "Two.", "tgt": "Zwei."}, {"src": "Three.", "tgt": "Drei."}]})"
    "\n"
    R"({"doc_id": "b", "sentences": [{"src": "W.", "tgt": "W."}, {"src": "X.", "tgt": "X."}, {"src": "Y.", "tgt": "Y."}, {"src": "Z.", "tgt": "Z."}]})"
    "\n";

ContrastiveExample example(std::string id, std::string pronoun, std::vector<std::string> others) {
  ContrastiveExample ex;
  ex.example_id = std::move(id);
  ex.src = "It is old.";
  ex.gold_target = pronoun + " ist alt.";
  for (const auto& o : others) {
    ex.contrastive_targets.push_back(o + " ist alt.");
    ex.contrastive_pronouns.push_back(o);
  }
  ex.gold_pronoun = pronoun;
  ex.context = {{"I saw the cat.", "Ich sah die Katze."}};
  ex.antecedent_spans = {{Side::kTarget, 0, 12, 17}};
  ex.antecedent_pos = "NN";
  ex.antecedent_gender = "fem";
  return ex;
}

std::vector<ContrastiveExample> classes(std::size_t er, std::size_t sie, std::size_t es) {
  std::vector<ContrastiveExample> out;
  for (std::size_t i = 0; i < er; ++i) out.push_back(example("er" + std::to_string(i), "er", {"sie", "es"}));
  for (std::size_t i = 0; i < sie; ++i) out.push_back(example("sie" + std::to_string(i), "sie", {"er", "es"}));
  for (std::size_t i = 0; i < es; ++i) out.push_back(example("es" + std::to_string(i), "es", {"er", "sie"}));
  return out;
}

}  // namespace

TEST(LoadDocuments, CountsDocumentsAndSentences) {
  TempDir dir;
  const auto corpus = load_documents(dir.write("c.jsonl", kTwoDocs), CorpusFormat::kJsonl);
  EXPECT_EQ(corpus.documents.size(), 2u);
  EXPECT_EQ(corpus.sentence_count(), 7u);
}

TEST(LoadDocuments, DuplicateDocIdIsAnError) {
  TempDir dir;
  const std::string line = R"({"doc_id": "a", "sentences": [{"src": "x", "tgt": "y"}]})";
  EXPECT_THROW(load_documents(dir.write("c.jsonl", line + "\n" + line + "\n"), CorpusFormat::kJsonl), DataError);
}

TEST(LoadDocuments, MalformedRecordNamesLine) {
  TempDir dir;
  const std::string good = R"({"doc_id": "a", "sentences": [{"src": "x", "tgt": "y"}]})";
  try {
    load_documents(dir.write("c.jsonl", good + "\n" + good.substr(0, 20) + "\n"), CorpusFormat::kJsonl);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(LoadDocuments, EmptySourceRejected) {
  TempDir dir;
  EXPECT_THROW(load_documents(dir.write("c.jsonl", R"({"doc_id": "a", "sentences": [{"src": "  ", "tgt": "y"}]})"
                                                   "\n"),
                              CorpusFormat::kJsonl),
               DataError);
}

TEST(LoadDocuments, SerializeRoundTrip) {
  TempDir dir;
  const auto corpus = load_documents(desk_dir() / "corpus_en_de.jsonl", CorpusFormat::kJsonl);
  EXPECT_EQ(corpus.sentence_count(), 120u);
  const auto again = load_documents(dir.write("rt.jsonl", serialize_documents(corpus)), CorpusFormat::kJsonl);
  EXPECT_EQ(corpus, again);
}

TEST(LoadDocuments, IwsltXmlWithReference) {
  TempDir dir;
  const auto src = dir.write("s.xml",
                             "<mteval>\n<doc docid=\"d1\" genre=\"lectures\">\n<seg id=\"1\"> Hello &amp; bye. </seg>\n"
                             "<seg id=\"2\">Second.</seg>\n</doc>\n</mteval>\n");
  const auto ref = dir.write("r.xml",
                             "<mteval>\n<doc docid=\"d1\">\n<seg id=\"1\">Hallo &amp; tschüss.</seg>\n"
                             "<seg id=\"2\">Zweiter.</seg>\n</doc>\n</mteval>\n");
  const auto c = load_documents(src, CorpusFormat::kIwsltXml, ref);
  ASSERT_EQ(c.documents.size(), 1u);
  ASSERT_EQ(c.documents[0].sentences.size(), 2u);
  EXPECT_EQ(c.documents[0].sentences[0].src, "Hello & bye.");
  EXPECT_EQ(*c.documents[0].sentences[0].tgt, "Hallo & tschüss.");
}

TEST(LoadContrastive, DeskSetsHaveExpectedVariantCounts) {
  const auto de = load_contrastive_set(desk_dir() / "contrastive_en_de.jsonl", ContrastiveFormat::kJsonl);
  ASSERT_EQ(de.accepted.size(), 500u);
  for (const auto& ex : de.accepted) EXPECT_EQ(ex.contrastive_targets.size(), 2u);
  const auto fr = load_contrastive_set(desk_dir() / "contrastive_en_fr.jsonl", ContrastiveFormat::kJsonl);
  ASSERT_EQ(fr.accepted.size(), 200u);
  for (const auto& ex : fr.accepted) EXPECT_EQ(ex.contrastive_targets.size(), 1u);
}

TEST(LoadContrastive, SpanPastSentenceEndIsRejectedWithId) {
  TempDir dir;
  ContrastiveExample ok = example("ok", "sie", {"er", "es"});
  ContrastiveExample bad = example("bad", "sie", {"er", "es"});
  bad.antecedent_spans[0].end = 40;
  const auto path = dir.write("c.jsonl", serialize_contrastive({ok, bad}));
  const auto set = load_contrastive_set(path, ContrastiveFormat::kJsonl);
  EXPECT_EQ(set.input_count, 2u);
  ASSERT_EQ(set.accepted.size(), 1u);
  ASSERT_EQ(set.rejected.size(), 1u);
  EXPECT_EQ(set.rejected[0].example_id, "bad");
  EXPECT_EQ(set.accepted.size() + set.rejected.size(), set.input_count);
}

TEST(LoadContrastive, FileLevelParseFailureIsHard) {
  TempDir dir;
  EXPECT_THROW(load_contrastive_set(dir.write("c.jsonl", "{nope\n"), ContrastiveFormat::kJsonl), DataError);
}

TEST(LoadContrastive, SerializeRoundTrip) {
  TempDir dir;
  const auto de = load_contrastive_set(desk_dir() / "contrastive_en_de.jsonl", ContrastiveFormat::kJsonl);
  const auto again = load_contrastive_set(dir.write("rt.jsonl", serialize_contrastive(de.accepted)),
                                          ContrastiveFormat::kJsonl);
  EXPECT_EQ(de.accepted, again.accepted);
}

TEST(BalancedSubset, DivisibilityRule) {
  const auto all = classes(700, 700, 700);
  EXPECT_THROW(sample_balanced_subset(all, 2000, 1), DataError);
  const auto sub = sample_balanced_subset(all, 1998, 1);
  std::map<std::string, int> hist;
  for (const auto& ex : sub) hist[ex.gold_pronoun]++;
  EXPECT_EQ(hist["er"], 666);
  EXPECT_EQ(hist["sie"], 666);
  EXPECT_EQ(hist["es"], 666);
}

TEST(BalancedSubset, ExhaustsSmallestClass) {
  const auto all = classes(10, 4, 7);
  const auto sub = sample_balanced_subset(all, 12, 3);
  int sie = 0;
  for (const auto& ex : sub) sie += ex.gold_pronoun == "sie";
  EXPECT_EQ(sie, 4);
}

TEST(BalancedSubset, ShortfallNamesClass) {
  try {
    sample_balanced_subset(classes(10, 2, 10), 9, 3);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'sie'"), std::string::npos) << e.what();
  }
}

TEST(BalancedSubset, DeterministicAndShuffled) {
  const auto all = classes(50, 50, 50);
  const auto a = sample_balanced_subset(all, 30, 9);
  const auto b = sample_balanced_subset(all, 30, 9);
  EXPECT_EQ(a, b);
  // Not grouped by class: some neighbouring pair differs in gold pronoun
  // before position 10.
  bool mixed = false;
  for (std::size_t i = 1; i < 10; ++i) mixed |= a[i].gold_pronoun != a[i - 1].gold_pronoun;
  EXPECT_TRUE(mixed);
}

TEST(BalancedSubset, ConfiguredClassesMustAllBePresent) {
  const auto cls = PronounClassSet::make("en-de", {"Er", "sie", "es"});
  EXPECT_EQ(cls.classes[0], "er");
  EXPECT_THROW(sample_balanced_subset(classes(5, 5, 0), 6, 1, &cls), DataError);
  EXPECT_THROW(PronounClassSet::make("en-de", {"er"}), ConfigError);
  EXPECT_THROW(PronounClassSet::make("en-de", {"er", "ER"}), ConfigError);
}

TEST(Lexicon, ThreeBuckets) {
  TempDir dir;
  const auto lex = load_lexicon(dir.write("l.tsv", "# comment\nHund\tNOUN\tmasc\nKatze\tNOUN\tfem\nKind\tNOUN\tneut\n"));
  EXPECT_EQ(lex.buckets().size(), 3u);
  for (const auto& [key, words] : lex.buckets()) EXPECT_EQ(words.size(), 1u);
}

TEST(Lexicon, WordUnderTwoGendersIsAnError) {
  TempDir dir;
  try {
    load_lexicon(dir.write("l.tsv", "See\tNOUN\tmasc\nSee\tNOUN\tfem\n"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("See"), std::string::npos);
  }
}

TEST(Lexicon, EmptyFileIsAnError) {
  TempDir dir;
  EXPECT_THROW(load_lexicon(dir.write("l.tsv", "# nothing\n")), DataError);
}

TEST(Lexicon, SingleGenderLoadsButCannotSwap) {
  TempDir dir;
  const auto lex = load_lexicon(dir.write("l.tsv", "Hund\tNOUN\tmasc\nTisch\tNOUN\tmasc\n"));
  EXPECT_EQ(lex.genders().size(), 1u);
}
