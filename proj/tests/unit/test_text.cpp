#include <gtest/gtest.h>

#include "ctxprobe/error.hpp"
#include "ctxprobe/jsonl.hpp"
#include "ctxprobe/random.hpp"
#include "ctxprobe/text.hpp"
#include "support.hpp"

using namespace ctxprobe;
using ctxprobe::testing::TempDir;

TEST(Text, Utf8RoundTripAndOffsets) {
  const std::string s = "Grüße, 世界!";
  EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
  EXPECT_EQ(text::codepoint_count(s), 10u);
  EXPECT_EQ(text::byte_offset(s, 3), 4u);  // after "Grü"
  EXPECT_EQ(text::codepoint_offset(s, 4), 3u);
  EXPECT_EQ(text::byte_offset(s, 10), s.size());
  EXPECT_THROW(text::byte_offset(s, 11), std::out_of_range);
}

TEST(Text, NfcComposes) {
  EXPECT_EQ(text::nfc("Mu\xCC\x88nchen"), "München");
}

TEST(Text, SplitWhitespaceMatchesPython) {
  const auto parts = text::split_whitespace("  a\tb\n c  ");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0], "a");
  EXPECT_EQ(parts[2], "c");
}

TEST(Text, MatchLeadingCase) {
  EXPECT_EQ(text::match_leading_case("hund", "Katze"), "Hund");
  EXPECT_EQ(text::match_leading_case("Hund", "katze"), "hund");
  EXPECT_EQ(text::match_leading_case("übel", "Katze"), "Übel");
}

TEST(Random, DeriveSeedIsStableAndKeyed) {
  EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
}

TEST(Random, UniformIndexInRangeAndDeterministic) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.uniform_index(7);
    EXPECT_LT(x, 7u);
    EXPECT_EQ(x, b.uniform_index(7));
  }
}

TEST(Jsonl, ParseErrorNamesLine) {
  TempDir dir;
  const auto p = dir.write("x.jsonl", "{\"a\": 1}\n{broken\n");
  try {
    read_jsonl(p);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(Jsonl, TornTailIsRepaired) {
  TempDir dir;
  const auto p = dir.write("x.jsonl", "{\"a\": 1}\n{\"a\": 2}\n{\"a\":");
  EXPECT_EQ(read_jsonl(p, true).size(), 2u);
  repair_jsonl_tail(p);
  EXPECT_EQ(read_file(p), "{\"a\": 1}\n{\"a\": 2}\n");
  JsonlAppender app(p);
  app.append({{"a", 3}});
  EXPECT_EQ(read_jsonl(p).size(), 3u);
}
