// Copyright 2026 The srpl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "srpl/embedding_io.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "srpl/benchgen.h"
#include "srpl/error.h"

namespace srpl {
namespace {

EmbeddingRecord Rec(std::string spk, std::string utt, std::vector<float> v) {
  return {std::move(spk), std::move(utt), std::move(v), std::nullopt};
}

std::string TempPath(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "srpl_io_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

template <typename Fn>
std::string ErrorOf(Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(Jsonl, ParsesThreeRecordsOfDimFour) {
  const std::string text =
      "{\"speaker\": \"a\", \"utt\": \"a1\", \"vec\": [1, 2, 3, 4]}\n"
      "{\"speaker\": \"a\", \"utt\": \"a2\", \"vec\": [0.5, 0, 0, 1]}\n"
      "{\"speaker\": \"b\", \"utt\": \"b1\", \"vec\": [-1, 2, 3, 4], \"tag\": \"enroll\"}\n";
  const Corpus c = Corpus::FromRecords(ParseJsonl(text));
  EXPECT_EQ(c.dimension(), 4);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.speakers(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.utterances_of(0), (std::vector<size_t>{0, 1}));
  EXPECT_EQ(c[2].tag, Tag::kEnroll);
  EXPECT_FALSE(c[0].tag.has_value());
}

TEST(Jsonl, NanEntryNamesRecord) {
  std::vector<EmbeddingRecord> recs = {Rec("a", "a1", {1.0f, std::nanf(""), 0.0f, 0.0f})};
  EXPECT_EQ(ErrorOf([&] { Corpus::FromRecords(recs); }), "non-finite entry at record 0");
  // JSON itself cannot carry NaN; bare tokens are reported the same way.
  EXPECT_EQ(ErrorOf([] { ParseJsonl("{\"speaker\":\"a\",\"utt\":\"u\",\"vec\":[NaN, 1]}\n"); }),
            "non-finite entry at record 0");
}

TEST(Jsonl, DimensionMismatchAcrossFiles) {
  const std::string a = ToJsonl({Rec("a", "a1", {1, 2, 3, 4})});
  const std::string b = ToJsonl({Rec("b", "b1", {1, 2, 3, 4, 5})});
  const std::string msg = ErrorOf([&] { Corpus::FromRecords(ParseJsonl(a + b)); });
  EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
}

TEST(Jsonl, DuplicatePairAndMalformedLineAreRejected) {
  const std::string dup = ToJsonl({Rec("a", "u", {1, 2}), Rec("a", "u", {3, 4})});
  EXPECT_NE(ErrorOf([&] { Corpus::FromRecords(ParseJsonl(dup)); }).find("duplicate"), std::string::npos);
  EXPECT_NE(ErrorOf([] { ParseJsonl("{\"speaker\": \"a\"}\n"); }).find("line 1"), std::string::npos);
  EXPECT_THROW(ParseJsonl("not json\n"), DataError);
  EXPECT_THROW(Corpus::FromRecords({}), DataError);
}

TEST(Jsonl, FloatsRoundTripExactly) {
  const Corpus c = Generate({4, 5, 7, 0.3, 1.0, 11});
  const auto back = ParseJsonl(ToJsonl(c.records()));
  ASSERT_EQ(back.size(), c.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(0, std::memcmp(back[i].vector.data(), c[i].vector.data(), 7 * sizeof(float)));
  }
}

TEST(Binary, RoundTripIsBitExact) {
  std::vector<EmbeddingRecord> recs = {
      Rec("spk", "u0", {1.5f, -0.0f, std::numeric_limits<float>::denorm_min(), 3e38f}),
      Rec("sp\xc3\xa9", "u1", {0.1f, 0.2f, 0.3f, 0.4f})};
  recs[1].tag = Tag::kNegative;
  const std::string bytes = ToBinary(recs);
  ASSERT_EQ(bytes.substr(0, 8), "SRPLEMB1");
  const auto back = ParseBinary(bytes);
  ASSERT_EQ(back.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].speaker_id, recs[i].speaker_id);
    EXPECT_EQ(back[i].utterance_id, recs[i].utterance_id);
    EXPECT_EQ(0, std::memcmp(back[i].vector.data(), recs[i].vector.data(), 4 * sizeof(float)));
  }
  EXPECT_EQ(ToBinary(back), bytes);
}

TEST(Binary, LayoutIsLittleEndian) {
  const std::string bytes = ToBinary({Rec("a", "b", {1.0f})});
  // magic, D=1, count=1, len 1 "a", len 1 "b", 1.0f
  const std::string expected = std::string("SRPLEMB1") + std::string("\x01\x00\x00\x00", 4) +
                               std::string("\x01\x00\x00\x00", 4) + std::string("\x01\x00", 2) +
                               "a" + std::string("\x01\x00", 2) + "b" +
                               std::string("\x00\x00\x80\x3f", 4);
  EXPECT_EQ(bytes, expected);
}

TEST(Binary, TruncatedAndBadMagicFail) {
  const std::string bytes = ToBinary({Rec("a", "b", {1.0f, 2.0f})});
  EXPECT_THROW(ParseBinary(bytes.substr(0, bytes.size() - 1)), DataError);
  EXPECT_THROW(ParseBinary("SRPLEMB0" + bytes.substr(8)), DataError);
}

TEST(Files, SaveLoadBothFormats) {
  const Corpus c = Generate({3, 4, 5, 0.2, 1.0, 3});
  for (Format f : {Format::kJsonl, Format::kBinary}) {
    const std::string path = TempPath(f == Format::kBinary ? "c.bin" : "c.jsonl");
    SaveRecords(c.records(), path, f);
    EXPECT_EQ(FormatFromPath(path), f);
    const Corpus back = LoadCorpus(path);
    EXPECT_EQ(back.records(), c.records());
  }
  EXPECT_THROW(LoadCorpus(TempPath("missing.jsonl")), DataError);
}

TEST(Negatives, ThousandRecordsRetaggedAndEmptyFileIsEmptyPool) {
  const auto negs = GenerateNegatives({10, 100, 4, 0.2, 1.0, 5});
  const std::string path = TempPath("negs.jsonl");
  auto untagged = negs;
  for (auto& r : untagged) r.tag = Tag::kEnroll;
  SaveRecords(untagged, path, Format::kJsonl);
  const auto pool = LoadNegatives(path);
  ASSERT_EQ(pool.size(), 1000u);
  for (const auto& r : pool) EXPECT_EQ(r.tag, Tag::kNegative);

  const std::string empty = TempPath("empty.jsonl");
  SaveRecords({}, empty, Format::kJsonl);
  EXPECT_TRUE(LoadNegatives(empty).empty());
}

TEST(Negatives, DimensionCheckedAtCombination) {
  const auto negs = GenerateNegatives({2, 3, 5, 0.2, 1.0, 5});
  EXPECT_NO_THROW(CheckCompatible(negs, 5));
  EXPECT_THROW(CheckCompatible(negs, 4), DataError);
  EXPECT_NO_THROW(CheckCompatible({}, 4));
}

TEST(Folds, DefaultBenchmarkShape) {
  const Corpus c = Generate({});
  const auto folds = MakeFolds(c, {});
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.target_speakers.size(), 10u);
    EXPECT_EQ(f.outlier_speakers.size(), 15u);
    EXPECT_EQ(f.reserved_speakers.size(), 25u);
    EXPECT_EQ(f.enroll_records.size(), 200u);
    EXPECT_EQ(f.test_target_records.size(), 50u);
    EXPECT_EQ(f.test_outlier_records.size(), 15u * 25u);
  }
}

TEST(Folds, Errors) {
  const Corpus three = Generate({3, 30, 4, 0.1, 1.0, 0});
  FoldOptions o;
  o.n_targets = 5;
  EXPECT_EQ(ErrorOf([&] { MakeFolds(three, o); }).rfind("insufficient speakers", 0), 0u);
  const Corpus thin = Generate({30, 20, 4, 0.1, 1.0, 0});
  const std::string msg = ErrorOf([&] { MakeFolds(thin, {}); });
  EXPECT_NE(msg.find("insufficient utterances"), std::string::npos) << msg;
}

class FoldProperties : public ::testing::TestWithParam<uint64_t> {};

TEST_P(FoldProperties, RolesDisjointRecordsConsistentAndCoverage) {
  const Corpus c = Generate({50, 25, 4, 0.1, 1.0, GetParam()});
  FoldOptions o;
  o.seed = GetParam();
  const auto folds = MakeFolds(c, o);
  std::set<std::string> tested;
  for (const auto& f : folds) {
    const std::set<std::string> t(f.target_speakers.begin(), f.target_speakers.end());
    const std::set<std::string> out(f.outlier_speakers.begin(), f.outlier_speakers.end());
    const std::set<std::string> res(f.reserved_speakers.begin(), f.reserved_speakers.end());
    EXPECT_EQ(t.size() + out.size() + res.size(), 50u);
    for (const auto& s : t) {
      EXPECT_FALSE(out.count(s));
      EXPECT_FALSE(res.count(s));
    }
    for (const auto& s : out) EXPECT_FALSE(res.count(s));
    tested.insert(t.begin(), t.end());
    tested.insert(out.begin(), out.end());

    std::set<size_t> enroll(f.enroll_records.begin(), f.enroll_records.end());
    std::map<std::string, int> shots;
    for (size_t i : f.enroll_records) {
      EXPECT_TRUE(t.count(c[i].speaker_id));
      ++shots[c[i].speaker_id];
    }
    for (const auto& [spk, n] : shots) EXPECT_EQ(n, 20) << spk;
    for (size_t i : f.test_target_records) {
      EXPECT_TRUE(t.count(c[i].speaker_id));
      EXPECT_FALSE(enroll.count(i));
    }
    for (size_t i : f.test_outlier_records) EXPECT_TRUE(out.count(c[i].speaker_id));
    for (size_t i : f.ReservedRecords(c)) EXPECT_TRUE(res.count(c[i].speaker_id));
  }
  // 5 x (10 + 15) >= 50, so every speaker is tested at least once.
  EXPECT_EQ(tested.size(), 50u);
  EXPECT_EQ(MakeFolds(c, o), folds);
  EXPECT_EQ(SplitsToJson(MakeFolds(c, o)).dump(), SplitsToJson(folds).dump());
}

INSTANTIATE_TEST_SUITE_P(Seeds, FoldProperties, ::testing::Values(0, 1, 2, 3, 7, 42));

TEST(Folds, JsonRoundTrip) {
  const Corpus c = Generate({});
  const auto folds = MakeFolds(c, {});
  EXPECT_EQ(SplitsFromJson(SplitsToJson(folds), c), folds);
}

}  // namespace
}  // namespace srpl
