/* Copyright 2026 The Retina Report Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "retina/error.hpp"
#include "retina/rng.hpp"
#include "retina/text.hpp"

namespace retina {
namespace {

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize("Optic Neuritis."), (Tokens{"optic", "neuritis"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("20/40 vision, OD"), (Tokens{"20/40", "vision", "od"}));
  EXPECT_EQ(tokenize("  (\"quoted\")  ... a;b  "), (Tokens{"quoted", "a;b"}));
  EXPECT_EQ(tokenize("Age 55 , male"), (Tokens{"age", "55", "male"}));
}

TEST(Keywords, SplitAndNormalize) {
  EXPECT_EQ(split_keywords("drusen, macula , AMD"), (std::vector<std::string>{"drusen", "macula", "amd"}));
  EXPECT_EQ(split_keywords(" , ,"), std::vector<std::string>{});
  EXPECT_EQ(normalize_keyword("  Macular Edema "), "macular edema");
}

TEST(Vocabulary, MinFrequencyAndReserved) {
  auto v = Vocabulary::build({{"a", "a", "b"}}, 2);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.index("a"), 4);
  EXPECT_EQ(v.index("b"), Vocabulary::kUnk);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(Vocabulary::kEnd), "<end>");
  EXPECT_THROW(v.token(5), DataError);
  EXPECT_EQ(Vocabulary::build({}, 1).size(), 4u);
  EXPECT_THROW(Vocabulary::build({}, 0), DataError);
}

TEST(Vocabulary, BuildIsDeterministic) {
  std::vector<Tokens> corpus{{"c", "b", "a"}, {"b", "a"}, {"a"}};
  EXPECT_EQ(Vocabulary::build(corpus, 1), Vocabulary::build(corpus, 1));
}

TEST(Vocabulary, MatchesCountSortOracle) {
  Rng rng(11);
  std::vector<Tokens> corpus;
  for (int i = 0; i < 100; ++i) {
    Tokens t;
    const int len = 3 + static_cast<int>(rng.below(10));
    for (int j = 0; j < len; ++j) t.push_back("w" + std::to_string(rng.below(30) * rng.below(3)));
    corpus.push_back(t);
  }
  const int min_freq = 3;
  auto vocab = Vocabulary::build(corpus, min_freq);

  std::map<std::string, int> counts;
  for (const auto& s : corpus)
    for (const auto& w : s) counts[w]++;
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [w, c] : counts)
    if (c >= min_freq) order.push_back({-c, w});
  std::sort(order.begin(), order.end());
  ASSERT_EQ(vocab.size(), order.size() + 4);
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(vocab.token(static_cast<int>(i + 4)), order[i].second);
  for (const auto& [w, c] : counts)
    if (c < min_freq) EXPECT_EQ(vocab.index(w), Vocabulary::kUnk);
}

TEST(Vocabulary, TextRoundTrip) {
  auto v = Vocabulary::build({{"macular edema", "drusen"}, {"drusen"}}, 1);
  const auto text = v.serialize();
  EXPECT_EQ(text.substr(0, text.find('\n')), "#retina-vocab v1 min_frequency=1");
  EXPECT_EQ(Vocabulary::parse(text), v);
  EXPECT_THROW(Vocabulary::parse("nonsense\n"), DataError);
  EXPECT_THROW(Vocabulary::parse("#retina-vocab v1\n<pad>\n<start>\n"), DataError);
}

TEST(Vocabulary, EncodeDecode) {
  auto v = Vocabulary::build({{"optic", "neuritis"}}, 1);
  auto target = v.encode_target({"optic", "zzz", "neuritis"});
  EXPECT_EQ(target.front(), Vocabulary::kStart);
  EXPECT_EQ(target.back(), Vocabulary::kEnd);
  EXPECT_EQ(target[2], Vocabulary::kUnk);
  EXPECT_EQ(v.decode({v.index("optic"), Vocabulary::kEnd, v.index("neuritis")}), (Tokens{"optic"}));
}

}  // namespace
}  // namespace retina
