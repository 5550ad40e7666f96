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

// Acceptance gate. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails. Runs offline from fixture files.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "invariants.hpp"
#include "metrics_expected.hpp"
#include "newsctx/newsctx.hpp"
#include "taxonomy_table.hpp"
#include "test_util.hpp"

namespace newsctx::testing {
namespace {

std::string Taxonomy() {
  auto rows = ReferenceTaxonomy();
  if (rows.size() != 18) return "reference table has " + std::to_string(rows.size()) + " rows";
  for (const auto& [tag, component] : rows) {
    if (CategoryName(MapEntityCategory(tag)) != component) return tag + " maps wrong";
    bool grounded = component == "WHO" || component == "WHERE";
    if (IsVisuallyGrounded(MapEntityCategory(tag)) != grounded) return tag + " grounding wrong";
  }
  if (ParseEntityTag("LANGUAGE") != EntityTag::kLan) return "LANGUAGE alias";
  return "";
}

std::string OracleEquivalence() {
  std::mt19937 rng(7);
  for (int i = 0; i < 250; ++i) {
    if (auto err = RandomOracleCase(rng, i); !err.empty()) return err;
  }
  return "";
}

std::string AssemblyInvariants() {
  std::mt19937 rng(11);
  for (int i = 0; i < 300; ++i) {
    if (auto err = RandomAssemblyCase(rng, i); !err.empty()) return err;
  }
  for (int i = 0; i < 300; ++i) {
    if (auto err = RandomAutoOracleCase(rng, i); !err.empty()) return err;
  }
  return "";
}

NamedEntityMention M(const std::string& s, EntityTag t) { return MakeMention(s, t); }

std::string RetrievalRules() {
  // Top-2 branch.
  {
    std::vector<std::vector<NamedEntityMention>> ents = {
        {M("Paris", EntityTag::kGpe)}, {M("Ann", EntityTag::kPerson)}, {M("Bob", EntityTag::kPerson)}};
    auto v = DetectVisualEntities(std::vector<ScoredSentence>{{1, .9}, {0, .8}, {2, .7}}, ents);
    if (SurfacesOf(v.visual) != SurfaceSet{"Ann", "Paris"} || v.exhausted) return "top-2 branch";
  }
  // Fallback descent.
  {
    std::vector<std::vector<NamedEntityMention>> ents = {
        {M("Monday", EntityTag::kDate)}, {}, {M("Ann", EntityTag::kPerson)}, {M("Bob", EntityTag::kPerson)}};
    auto v = DetectVisualEntities(
        std::vector<ScoredSentence>{{0, .9}, {1, .8}, {2, .7}, {3, .6}}, ents);
    if (SurfacesOf(v.visual) != SurfaceSet{"Ann"} || v.exhausted ||
        v.sentences_used != std::vector<std::size_t>{0, 1, 2}) {
      return "fallback branch";
    }
  }
  // Exhaustion.
  {
    std::vector<std::vector<NamedEntityMention>> ents = {{M("Monday", EntityTag::kDate)}, {}};
    auto v = DetectVisualEntities(std::vector<ScoredSentence>{{1, .9}, {0, .8}}, ents);
    if (!v.visual.empty() || !v.exhausted) return "exhausted branch";
  }
  // Cosine ranking on random sets.
  std::mt19937 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t dim = 1 + rng() % 16, n = 1 + rng() % 30;
    auto vec = [&] {
      EmbeddingVector v;
      for (std::size_t i = 0; i < dim; ++i) v.values.push_back(g(rng));
      return v;
    };
    EmbeddingVector image = vec();
    std::vector<EmbeddingVector> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(vec());
    if (n > 3 && trial % 3 == 0) s[n - 1] = s[0];
    auto ranked = CosineRankSentences(image, s);
    std::vector<double> by_index(n);
    for (const auto& r : ranked) {
      long double dot = 0, na = 0, nb = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        dot += static_cast<long double>(image.values[i]) * s[r.sentence_index].values[i];
        na += static_cast<long double>(image.values[i]) * image.values[i];
        nb += static_cast<long double>(s[r.sentence_index].values[i]) * s[r.sentence_index].values[i];
      }
      if (std::abs(r.score - static_cast<double>(dot / std::sqrt(na * nb))) > 1e-9) return "cosine value";
      by_index[r.sentence_index] = r.score;
    }
    for (std::size_t r = 1; r < n; ++r) {
      if (ranked[r - 1].score < ranked[r].score) return "not descending";
      if (ranked[r - 1].score == ranked[r].score &&
          ranked[r - 1].sentence_index > ranked[r].sentence_index) {
        return "tie-break";
      }
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<EmbeddingVector> shuffled;
    for (std::size_t i : perm) shuffled.push_back(s[i]);
    for (const auto& r : CosineRankSentences(image, shuffled)) {
      if (std::abs(r.score - by_index[perm[r.sentence_index]]) > 1e-9) return "permutation";
    }
  }
  return "";
}

std::string ThresholdBoundary() {
  auto t = [](const std::string& tail, double c) {
    return RelationTriple{M("A", EntityTag::kPerson), M(tail, EntityTag::kDate), "rel", c, 0};
  };
  std::vector<RelationTriple> in = {t("keep", 0.70), t("drop", 0.699999)};
  auto kept = FilterRelations(in, 0.7);
  if (kept.size() != 1 || kept[0].tail.surface != "keep") return "boundary";
  return "";
}

std::string MetricIdentities() {
  std::vector<Tokens> same = {NormalizeTokens("a man rides a horse on the beach")};
  std::vector<Tokens> other = {NormalizeTokens("two dogs sleep under old trees")};
  std::span<const Tokens> same_r(same), other_r(other);
  if (Bleu4(same, same_r) != 1.0) return "BLEU identical";
  if (Bleu4(same, other_r) != 0.0) return "BLEU disjoint";
  if (RougeL(same[0], same[0]) != 1.0) return "ROUGE identical";
  if (RougeL(same[0], other[0]) != 0.0) return "ROUGE disjoint";
  if (std::abs(CiderD(same, same_r) - 10.0) > 1e-6) return "CIDEr identical";
  auto r = Evaluate(FixtureExamples());
  if (r.bleu4 != kExpectedBleu4) return "fixture BLEU";
  if (r.rouge_l != kExpectedRougeL) return "fixture ROUGE-L";
  if (std::abs(r.cider - kExpectedCider) > kCiderTolerance) return "fixture CIDEr";
  if (r.ne_precision != 0.6 || r.ne_recall != 0.6) return "fixture NE";
  if (ReportToTable(r) != kExpectedTable) return "fixture table";
  return "";
}

std::string Coverage() {
  if (auto err = CheckCoverageFixture(); !err.empty()) return err;
  CoverageReport r;
  r.entries = {{"at", 7, 10, 0.7}, {"above", 8, 10, 0.8}};
  if (FilterHighCoverage(r, 0.7) != std::vector<std::string>{"above"}) return "not strict";
  return "";
}

std::string WimbledonArticle() {
  auto docs = LoadDataset(FixturePath("dataset.jsonl"));
  auto ann = LoadAnnotations(FixturePath("annotations.jsonl"));
  auto rel = LoadRelations(FixturePath("relations.jsonl"));
  auto emb = EmbeddingFileProvider::FromPath(FixturePath("embeddings.jsonl"));
  const auto& d = docs.at(0);
  SelectionInputs in{&ann.at(d.doc_id), &emb, &rel.at(d.doc_id)};
  auto seg = SegmentSentences(d);
  auto sel = SelectContext(strategy::AutoLocalPlusGlobal{}, seg, in, AutoParams{});
  if (!sel.visual_entities.contains("Murray")) return "Murray not visual";
  if (!sel.relation_entities.contains("Tuesday")) return "WHEN entity not expanded";
  auto global = BuildGlobalContext(seg);
  if (sel.text.rfind(global.text, 0) != 0) return "title and first paragraph missing";
  for (std::size_t s : {2u, 6u}) {
    if (sel.text.find(seg.sentences[s].text) == std::string::npos) return "guiding sentence missing";
  }
  return "";
}

std::string Determinism() {
  std::string cmd = Cli() + " select --dataset " + Q(FixturePath("dataset.jsonl")) +
                    " --annotations " + Q(FixturePath("annotations.jsonl")) + " --embeddings " +
                    Q(FixturePath("embeddings.jsonl")) + " --relations " +
                    Q(FixturePath("relations.jsonl"));
  auto a = Run(cmd);
  auto b = Run(cmd);
  if (a.exit_code != 0 || b.exit_code != 0) return "select failed";
  if (a.out.empty()) return "no output";
  if (a.out != b.out) return "outputs differ";
  return "";
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<std::string()> check;
};

}  // namespace
}  // namespace newsctx::testing

int main() {
  using namespace newsctx::testing;
  const std::vector<Criterion> criteria = {
      {"taxonomy exactness", 1, Taxonomy},
      {"oracle selection equivalence", 10, OracleEquivalence},
      {"assembly invariants", 10, AssemblyInvariants},
      {"retrieval rules", 60, RetrievalRules},
      {"threshold boundary", 60, ThresholdBoundary},
      {"metric identities", 60, MetricIdentities},
      {"coverage statistic", 60, Coverage},
      {"end-to-end wimbledon article", 60, WimbledonArticle},
      {"select determinism", 60, Determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string err;
    try {
      err = c.check();
    } catch (const std::exception& e) {
      err = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (err.empty() && secs > c.budget_seconds) err = "over time budget";
    std::printf("%s %s (%.3fs)%s%s\n", err.empty() ? "PASS" : "FAIL", c.name, secs,
                err.empty() ? "" : ": ", err.c_str());
    failed += !err.empty();
  }
  return failed == 0 ? 0 : 1;
}
