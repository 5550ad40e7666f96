// Copyright 2026 The newsctx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "newsctx/relation.hpp"
#include "test_util.hpp"

namespace newsctx {
namespace {

RelationTriple T(const std::string& head, EntityTag ht, const std::string& tail, EntityTag tt,
                 double conf) {
  return {MakeMention(head, ht, 0), MakeMention(tail, tt, 0), "rel", conf, 0};
}

TEST(FilterRelations, StrictLowerBoundary) {
  std::vector<RelationTriple> t = {
      T("A", EntityTag::kPerson, "B", EntityTag::kDate, 0.70),
      T("A", EntityTag::kPerson, "C", EntityTag::kDate, 0.699999),
      T("A", EntityTag::kPerson, "D", EntityTag::kDate, 1.0),
      T("A", EntityTag::kPerson, "E", EntityTag::kDate, 0.0),
  };
  auto kept = FilterRelations(t, 0.7);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].tail.surface, "B");
  EXPECT_EQ(kept[1].tail.surface, "D");
  EXPECT_EQ(FilterRelations(t).size(), 2u);
  EXPECT_EQ(FilterRelations(t, 0.0).size(), 4u);
  EXPECT_THROW(FilterRelations(t, 1.5), UsageError);
  EXPECT_THROW(FilterRelations(t, -0.1), UsageError);
}

TEST(ExpandNonVisual, Examples) {
  std::vector<NamedEntityMention> visual = {MakeMention("Murray", EntityTag::kPerson, 6)};
  std::vector<RelationTriple> t = {
      T("Murray", EntityTag::kPerson, "Tuesday", EntityTag::kDate, 0.9),
      // Reversed direction still counts.
      T("Wimbledon", EntityTag::kEvent, "Murray", EntityTag::kPerson, 0.9),
      // Visual endpoint on the other side is never added.
      T("Murray", EntityTag::kPerson, "Djokovic", EntityTag::kPerson, 0.9),
      // WHO endpoint not in the visual set.
      T("Federer", EntityTag::kPerson, "Monday", EntityTag::kDate, 0.9),
  };
  auto add = ExpandNonVisual(t, visual);
  EXPECT_EQ(SurfacesOf(add), (SurfaceSet{"Tuesday", "Wimbledon"}));
  EXPECT_TRUE(ExpandNonVisual(t, {}).empty());
}

// Properties: additions are never visually grounded, each one is linked
// to a visual surface by some triple, and the result only grows with the
// visual set.
TEST(ExpandNonVisual, Properties) {
  std::mt19937 rng(23);
  const std::vector<std::string> names = {"A", "B", "C", "D", "E", "F"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<RelationTriple> triples;
    std::size_t k = rng() % 8;
    for (std::size_t i = 0; i < k; ++i) {
      triples.push_back(T(names[rng() % names.size()], static_cast<EntityTag>(rng() % 18),
                          names[rng() % names.size()], static_cast<EntityTag>(rng() % 18), 0.9));
    }
    std::vector<NamedEntityMention> small;
    std::vector<NamedEntityMention> large;
    for (const auto& n : names) {
      bool in_small = rng() % 3 == 0;
      if (in_small) small.push_back(MakeMention(n, EntityTag::kPerson));
      if (in_small || rng() % 2) large.push_back(MakeMention(n, EntityTag::kGpe));
    }
    auto a = ExpandNonVisual(triples, small);
    auto b = ExpandNonVisual(triples, large);
    SurfaceSet vs = SurfacesOf(small);
    for (const auto& m : a) {
      EXPECT_FALSE(m.visually_grounded());
      bool linked = false;
      for (const auto& t : triples) {
        linked |= (t.head == m && vs.contains(t.tail.surface)) ||
                  (t.tail == m && vs.contains(t.head.surface));
      }
      EXPECT_TRUE(linked);
      EXPECT_TRUE(b.contains(m));
    }
  }
}

TEST(LoadRelations, FixtureAndErrors) {
  auto idx = LoadRelations(testing::FixturePath("relations.jsonl"));
  ASSERT_EQ(idx.at("wimbledon").size(), 3u);
  EXPECT_EQ(idx.at("wimbledon")[2].sentence_index, 6u);
  EXPECT_TRUE(idx.at("exhausted").empty());

  auto dir = testing::TempDir("rel");
  testing::WriteFile(dir / "a.jsonl",
                     R"({"doc_id":"x","triples":[{"head":{"surface":"A","tag":"PERSON","sentence_index":0},)"
                     R"("tail":{"surface":"B","tag":"DATE","sentence_index":0},"label":"r","confidence":1.2}]})");
  EXPECT_THROW(LoadRelations(dir / "a.jsonl"), DataError);
  testing::WriteFile(dir / "b.jsonl",
                     R"({"doc_id":"x","triples":[{"head":{"surface":"A","tag":"PERSON","sentence_index":0},)"
                     R"("tail":{"surface":"B","tag":"DATE","sentence_index":1},"label":"r","confidence":0.9}]})");
  EXPECT_THROW(LoadRelations(dir / "b.jsonl"), DataError);
}

TEST(TripleToJson, RoundTrip) {
  auto t = T("A", EntityTag::kPerson, "B", EntityTag::kDate, 0.75);
  EXPECT_EQ(ParseTriple(Json::parse(TripleToJson(t).dump()), 1), t);
}

}  // namespace
}  // namespace newsctx
