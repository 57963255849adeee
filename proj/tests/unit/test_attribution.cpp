#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "ctxprobe/attribution.hpp"
#include "ctxprobe/error.hpp"
#include "support.hpp"

using namespace ctxprobe;
using ctxprobe::testing::TempDir;

namespace {

AttributionVector vec(std::string id, std::vector<double> scores, std::vector<std::size_t> context,
                      std::vector<std::size_t> antecedent) {
  AttributionVector v;
  v.example_id = std::move(id);
  for (std::size_t i = 0; i < scores.size(); ++i) v.tokens.push_back("t" + std::to_string(i));
  v.scores = std::move(scores);
  v.spans["context"] = std::move(context);
  v.spans["antecedent"] = std::move(antecedent);
  return v;
}

// "Die Katze schläft . Sie" -> pronoun; the pronoun is likely only when
// token id 7 ("Katze") is present.
ErasureInstance katze() {
  ErasureInstance inst;
  inst.example_id = "katze";
  inst.input_ids = {3, 7, 4, 5, 9};
  inst.input_tokens = {"Die", " Katze", " schläft", ".", " Sie"};
  inst.target_ids = {11};
  inst.spans["context"] = {0, 1, 2, 3};
  inst.spans["antecedent"] = {0, 1};
  return inst;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

TEST(Ap, WorkedExample) {
  const std::vector<double> a = {1, 3, 0, 4, 2};
  EXPECT_NEAR(*attribution_percentage(a, {1, 3}), 70.0, 1e-12);
  EXPECT_NEAR(*attribution_percentage(a, {0, 1, 2, 3, 4}), 100.0, 1e-12);
  EXPECT_EQ(*attribution_percentage(a, {}), 0.0);
  EXPECT_FALSE(attribution_percentage(std::vector<double>{0, 0, 0}, {0}).has_value());
  EXPECT_NEAR(*attribution_percentage(a, {1, 3, 3}), 70.0, 1e-12);
  EXPECT_THROW(attribution_percentage(a, {5}), DataError);
}

TEST(Ap, SpanLookup) {
  const auto v = vec("e", {1, 3, 0, 4, 2}, {0, 1, 2, 3}, {1, 3});
  EXPECT_NEAR(*attribution_percentage(v, "antecedent"), 70.0, 1e-12);
  EXPECT_NEAR(*attribution_percentage(v, "context"), 80.0, 1e-12);
  EXPECT_NEAR(*attribution_percentage(v, "input"), 100.0, 1e-12);
  EXPECT_THROW(attribution_percentage(v, "nonsense"), DataError);
}

TEST(Ap, MeanOfApsSkipsNoSignal) {
  const std::vector<AttributionVector> vs = {vec("a", {4, 6}, {0, 1}, {0}), vec("b", {6, 4}, {0, 1}, {0}),
                                             vec("c", {0, 0}, {0, 1}, {0})};
  const auto agg = aggregate_ap(vs, "antecedent");
  EXPECT_NEAR(agg.mean_ap, 50.0, 1e-12);
  EXPECT_EQ(agg.n_examples, 2u);
  EXPECT_EQ(agg.n_no_signal, 1u);
}

TEST(Ap, RatioOfSums) {
  const std::vector<AttributionVector> vs = {vec("a", {1, 9}, {0, 1}, {0}), vec("b", {30, 0}, {0, 1}, {0})};
  EXPECT_NEAR(aggregate_ap(vs, "antecedent").mean_ap, 55.0, 1e-12);
  EXPECT_NEAR(aggregate_ap(vs, "antecedent", ApAggregation::kRatioOfSums).mean_ap, 77.5, 1e-12);
}

TEST(Ap, AllNoSignalIsError) {
  EXPECT_THROW(aggregate_ap({vec("a", {0, 0}, {0}, {})}, "context"), DataError);
  EXPECT_THROW(aggregate_ap({}, "context"), DataError);
}

TEST(Ap, ValidationInvariants) {
  EXPECT_THROW(vec("a", {1, -1}, {0}, {}).validate(), DataError);
  EXPECT_THROW(vec("a", {1, 1}, {0}, {1}).validate(), DataError);
  EXPECT_THROW(vec("a", {1, 1}, {0, 2}, {}).validate(), DataError);
  auto v = vec("a", {1, 1}, {0}, {0});
  v.tokens.pop_back();
  EXPECT_THROW(v.validate(), DataError);
  EXPECT_NO_THROW(vec("a", {1, 1}, {0, 1}, {0}).validate());
}

TEST(Erasure, KeywordTokenGetsAllAttribution) {
  const auto v = erasure_attribution(katze(), [](const std::vector<int>& in, const std::vector<int>&) {
    return std::log(contains(in, 7) ? 0.9 : 0.1);
  });
  ASSERT_EQ(v.scores.size(), 5u);
  EXPECT_NEAR(v.scores[1], 0.8, 1e-12);
  for (std::size_t i : {0u, 2u, 3u, 4u}) EXPECT_EQ(v.scores[i], 0.0);
  EXPECT_NEAR(*attribution_percentage(v, "antecedent"), 100.0, 1e-9);
  EXPECT_EQ(v.meta["erasure"], "deletion");
  EXPECT_EQ(v.meta["scope"], "full_input");
}

TEST(Erasure, ContextIndependentModelHasNoSignal) {
  const auto v = erasure_attribution(katze(), [](const std::vector<int>&, const std::vector<int>&) {
    return std::log(0.3);
  });
  for (double s : v.scores) EXPECT_EQ(s, 0.0);
  EXPECT_FALSE(attribution_percentage(v, "context").has_value());
}

TEST(Erasure, NegativeDeltasClampToZero) {
  // Erasing "Die" makes the pronoun more likely.
  const auto v = erasure_attribution(katze(), [](const std::vector<int>& in, const std::vector<int>&) {
    return std::log(contains(in, 3) ? 0.2 : 0.6);
  });
  EXPECT_EQ(v.scores[0], 0.0);
  for (double s : v.scores) EXPECT_GE(s, 0.0);
}

TEST(Erasure, ContextScopeLeavesSourceUnscored) {
  ErasureOptions opts;
  opts.scope = ErasureScope::kContext;
  std::size_t calls = 0;
  const auto v = erasure_attribution(
      katze(),
      [&](const std::vector<int>& in, const std::vector<int>&) {
        ++calls;
        return std::log(contains(in, 9) ? 0.9 : 0.1);
      },
      opts);
  EXPECT_EQ(calls, 5u);  // full input + 4 context tokens
  EXPECT_EQ(v.scores[4], 0.0);
}

TEST(Erasure, SpanGranularitySplitsEvenly) {
  ErasureOptions opts;
  opts.granularity = ErasureGranularity::kSpan;
  std::size_t calls = 0;
  const auto v = erasure_attribution(
      katze(),
      [&](const std::vector<int>& in, const std::vector<int>&) {
        ++calls;
        return std::log(contains(in, 7) ? 0.9 : 0.1);
      },
      opts);
  EXPECT_EQ(calls, 5u);  // full + antecedent group + 3 single tokens
  EXPECT_NEAR(v.scores[0], 0.4, 1e-12);
  EXPECT_NEAR(v.scores[1], 0.4, 1e-12);
  EXPECT_EQ(v.scores[2], 0.0);
}

TEST(Erasure, InstanceErrors) {
  auto inst = katze();
  inst.target_ids.clear();
  const ForcedScorer s = [](const std::vector<int>&, const std::vector<int>&) { return 0.0; };
  EXPECT_THROW(erasure_attribution(inst, s), DataError);
  inst = katze();
  inst.input_tokens.pop_back();
  EXPECT_THROW(erasure_attribution(inst, s), DataError);
}

TEST(Erasure, InstanceJsonRoundTrip) {
  const auto inst = katze();
  const auto back = erasure_instance_from_json(to_json(inst));
  EXPECT_EQ(back.input_ids, inst.input_ids);
  EXPECT_EQ(back.input_tokens, inst.input_tokens);
  EXPECT_EQ(back.spans, inst.spans);
}

TEST(ApImport, ReadsValidRecords) {
  TempDir dir;
  dir.write("ap.jsonl",
            R"({"schema":"ap-v1","example_id":"a","tokens":["x","y","z"],"scores":[0.5,0.25,0.25],)"
            R"("spans":{"context":[0,1],"antecedent":[0]},"method":"alti_logit"})"
            "\n"
            R"({"schema":"ap-v1","example_id":"b","tokens":["x","y"],"scores":[0.0,1.0],)"
            R"("spans":{"context":[0],"antecedent":[]},"method":"erasure","meta":{"ap":{"context":0.0}}})"
            "\n");
  const auto imp = import_attributions(dir / "ap.jsonl");
  ASSERT_EQ(imp.vectors.size(), 2u);
  EXPECT_TRUE(imp.rejected.empty());
  EXPECT_NEAR(*attribution_percentage(imp.vectors[0], "context"), 75.0, 1e-12);
  EXPECT_EQ(imp.vectors[0].method, "alti_logit");
}

TEST(ApImport, RejectsInvalidRecordsWithReasons) {
  TempDir dir;
  dir.write("ap.jsonl",
            R"({"schema":"ap-v1","example_id":"neg","tokens":["x"],"scores":[-0.5],"spans":{"context":[0],"antecedent":[]},"method":"erasure"})"
            "\n"
            R"({"schema":"ap-v1","example_id":"len","tokens":["x","y"],"scores":[0.5],"spans":{"context":[0],"antecedent":[]},"method":"erasure"})"
            "\n"
            R"({"schema":"ap-v1","example_id":"ap","tokens":["x","y"],"scores":[1,1],"spans":{"context":[0],"antecedent":[]},"method":"erasure","meta":{"ap":{"context":60}}})"
            "\n"
            R"({"schema":"ap-v1","example_id":"ok","tokens":["x"],"scores":[1],"spans":{"context":[0],"antecedent":[0]},"method":"erasure"})"
            "\n"
            R"({"schema":"ap-v1","example_id":"ok","tokens":["x"],"scores":[1],"spans":{"context":[0],"antecedent":[0]},"method":"erasure"})"
            "\n");
  const auto imp = import_attributions(dir / "ap.jsonl");
  ASSERT_EQ(imp.vectors.size(), 1u);
  ASSERT_EQ(imp.rejected.size(), 4u);
  EXPECT_EQ(imp.rejected[0].first, "neg");
  EXPECT_NE(imp.rejected[0].second.find("negative"), std::string::npos);
  EXPECT_EQ(imp.rejected[1].first, "len");
  EXPECT_EQ(imp.rejected[2].first, "ap");
  EXPECT_EQ(imp.rejected[3].second, "duplicate example_id");
}

TEST(ApImport, UnknownSchemaIsHardError) {
  TempDir dir;
  dir.write("ap.jsonl",
            R"({"schema":"ap-v2","example_id":"a","tokens":["x"],"scores":[1],"spans":{"context":[0],"antecedent":[]},"method":"erasure"})"
            "\n");
  EXPECT_THROW(import_attributions(dir / "ap.jsonl"), DataError);
}

TEST(ApImport, ExportImportIsExact) {
  TempDir dir;
  const auto v1 = erasure_attribution(katze(), [](const std::vector<int>& in, const std::vector<int>&) {
    return std::log(contains(in, 7) ? 0.9 : 0.1) + (contains(in, 4) ? 0.0 : -0.3);
  });
  const auto v2 = vec("b", {0.1, 0.7, 0.2}, {0, 1}, {1});
  export_attributions(dir / "out.jsonl", {v1, v2});
  const auto imp = import_attributions(dir / "out.jsonl");
  ASSERT_EQ(imp.vectors.size(), 2u);
  EXPECT_TRUE(imp.rejected.empty());
  EXPECT_EQ(imp.vectors[0].scores, v1.scores);
  EXPECT_EQ(imp.vectors[0].tokens, v1.tokens);
  EXPECT_EQ(imp.vectors[0].spans, v1.spans);
  EXPECT_EQ(imp.vectors[1].scores, v2.scores);
  EXPECT_EQ(*attribution_percentage(imp.vectors[0], "antecedent"), *attribution_percentage(v1, "antecedent"));
}
