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

// Global + key-local context assembly and the end-to-end selection
// strategies.
//
// Assembly order is fixed: the global block (title and first paragraph)
// comes first, then local sentences in article order with any sentence
// already in the global block left out. The result is cut to a word cap.
// An empty local selection falls back to filling with leading body
// sentences so the output never collapses to the global block alone.

#ifndef NEWSCTX_ASSEMBLY_HPP_
#define NEWSCTX_ASSEMBLY_HPP_

#include <algorithm>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "newsctx/corpus.hpp"
#include "newsctx/entity.hpp"
#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"
#include "newsctx/oracle_select.hpp"
#include "newsctx/relation.hpp"
#include "newsctx/strategy.hpp"
#include "newsctx/text.hpp"
#include "newsctx/xmodal.hpp"

namespace newsctx {

enum class SelectionFlag {
  kFallbackNoLocal,
  kVisualExhausted,
  kTruncated,
  kNoImageAnchor,
};

inline std::string_view FlagName(SelectionFlag f) {
  switch (f) {
    case SelectionFlag::kFallbackNoLocal:
      return "FALLBACK_NO_LOCAL";
    case SelectionFlag::kVisualExhausted:
      return "VISUAL_EXHAUSTED";
    case SelectionFlag::kTruncated:
      return "TRUNCATED";
    case SelectionFlag::kNoImageAnchor:
      return "NO_IMAGE_ANCHOR";
  }
  return "?";
}

struct ContextSelection {
  std::string doc_id;
  SelectionStrategy strategy;
  std::string text;
  std::size_t word_count = 0;
  std::vector<std::size_t> global_sentences;
  std::vector<std::size_t> local_sentences;
  std::vector<std::size_t> fill_sentences;
  SurfaceSet guiding_entities;
  // Auto strategy only: the two halves of the guiding set.
  SurfaceSet visual_entities;
  SurfaceSet relation_entities;
  std::set<SelectionFlag> flags;

  bool has(SelectionFlag f) const { return flags.contains(f); }
};

struct GlobalContext {
  std::string text;
  std::vector<std::size_t> sentences;
};

inline GlobalContext BuildGlobalContext(const SegmentedDocument& doc) {
  GlobalContext g;
  g.text = NormalizeSpace(doc.document.title);
  auto [b, e] = doc.paragraph_sentences(0);
  for (std::size_t s = b; s < e; ++s) {
    if (!g.text.empty()) g.text.push_back(' ');
    g.text += doc.sentences[s].text;
    g.sentences.push_back(s);
  }
  return g;
}

// Sentences containing any guiding surface, ascending. Matching is per
// sentence, so a surface split across a sentence boundary never matches.
inline std::vector<std::size_t> SelectEntityGuidedLocal(
    const SegmentedDocument& doc, const SurfaceSet& guiding) {
  SurfaceSet normalized = NormalizeSurfaces(guiding);
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const std::string& text = doc.sentences[s].text;
    bool hit = std::any_of(normalized.begin(), normalized.end(),
                           [&](const std::string& e) {
                             return text.find(e) != std::string::npos;
                           });
    if (hit) out.push_back(s);
  }
  return out;
}

inline ContextSelection AssembleContext(const GlobalContext& global,
                                        std::vector<std::size_t> local,
                                        const SegmentedDocument& doc,
                                        std::size_t cap = kDefaultCap) {
  if (cap == 0) throw UsageError("word cap must be > 0");
  const std::size_t n = doc.sentences.size();
  for (std::size_t s : local) {
    if (s >= n) {
      throw UsageError("local sentence index " + std::to_string(s) +
                       " out of range for '" + doc.document.doc_id + "'");
    }
  }
  std::sort(local.begin(), local.end());
  local.erase(std::unique(local.begin(), local.end()), local.end());

  ContextSelection out;
  out.doc_id = doc.document.doc_id;
  out.strategy = strategy::AutoLocalPlusGlobal{};
  out.global_sentences = global.sentences;
  std::set<std::size_t> in_global(global.sentences.begin(), global.sentences.end());

  std::string text = global.text;
  std::size_t words = WordCount(text);
  auto append = [&](std::size_t s) {
    if (!text.empty()) text.push_back(' ');
    text += doc.sentences[s].text;
    words += doc.word_counts[s];
  };
  if (local.empty()) {
    out.flags.insert(SelectionFlag::kFallbackNoLocal);
    for (std::size_t s = 0; s < n && words < cap; ++s) {
      if (in_global.contains(s)) continue;
      append(s);
      out.fill_sentences.push_back(s);
    }
  } else {
    for (std::size_t s : local) {
      if (in_global.contains(s)) continue;
      append(s);
      out.local_sentences.push_back(s);
    }
  }
  if (words > cap) {
    text = TruncateWords(text, cap);
    out.flags.insert(SelectionFlag::kTruncated);
  }
  out.text = std::move(text);
  out.word_count = WordCount(out.text);
  return out;
}

// Global block plus the sentences holding any guiding surface.
inline ContextSelection AssembleGuided(const SegmentedDocument& doc,
                                       const SurfaceSet& guiding,
                                       std::size_t cap = kDefaultCap) {
  ContextSelection out =
      AssembleContext(BuildGlobalContext(doc), SelectEntityGuidedLocal(doc, guiding),
                      doc, cap);
  out.guiding_entities = NormalizeSurfaces(guiding);
  return out;
}

struct AutoParams {
  std::size_t cap = kDefaultCap;
  std::size_t top_sentences = kDefaultTopSentences;
  double relation_threshold = kDefaultRelationThreshold;
};

inline void ValidateAutoParams(const AutoParams& p) {
  if (p.cap == 0) throw UsageError("word cap must be > 0");
  if (p.top_sentences == 0) throw UsageError("k_top must be > 0");
  if (!(p.relation_threshold >= 0.0 && p.relation_threshold <= 1.0)) {
    throw UsageError("relation threshold must be in [0, 1]");
  }
}

// Rank -> visual entities -> relation filter -> non-visual expansion ->
// guided local selection -> assembly.
inline ContextSelection AutoSelectContext(
    const SegmentedDocument& doc,
    const std::vector<std::vector<NamedEntityMention>>& sentence_entities,
    std::span<const ScoredSentence> ranked,
    std::span<const RelationTriple> triples, const AutoParams& params = {}) {
  ValidateAutoParams(params);
  if (sentence_entities.size() != doc.sentences.size()) {
    throw DataError("sentence annotations for '" + doc.document.doc_id +
                    "' do not match its segmentation");
  }
  VisualDetection visual =
      DetectVisualEntities(ranked, sentence_entities, params.top_sentences);
  auto filtered = FilterRelations(triples, params.relation_threshold);
  auto additions = ExpandNonVisual(filtered, visual.visual);

  SurfaceSet visual_surfaces = SurfacesOf(visual.visual);
  SurfaceSet relation_surfaces = SurfacesOf(additions);
  SurfaceSet guiding = visual_surfaces;
  guiding.insert(relation_surfaces.begin(), relation_surfaces.end());

  ContextSelection out = AssembleGuided(doc, guiding, params.cap);
  out.strategy = strategy::AutoLocalPlusGlobal{};
  out.visual_entities = std::move(visual_surfaces);
  out.relation_entities = std::move(relation_surfaces);
  if (visual.exhausted) out.flags.insert(SelectionFlag::kVisualExhausted);
  return out;
}

// Everything a strategy may consume for one document. Pointers left null
// mean the corresponding sidecar was not supplied.
struct SelectionInputs {
  const DocumentAnnotations* annotations = nullptr;
  SimilarityProvider* similarity = nullptr;
  const std::vector<RelationTriple>* relations = nullptr;
};

namespace internal {

inline void Require(const void* p, std::string_view sidecar,
                    const SegmentedDocument& doc) {
  if (p == nullptr) {
    throw DataError("missing " + std::string(sidecar) + " for doc_id '" +
                    doc.document.doc_id + "'");
  }
}

inline ContextSelection FromWindow(const SegmentedDocument& doc, const WordWindow& w) {
  ContextSelection out;
  out.doc_id = doc.document.doc_id;
  out.text = w.text;
  out.word_count = WordCount(w.text);
  if (w.truncated()) out.flags.insert(SelectionFlag::kTruncated);
  if (w.anchor_fallback) out.flags.insert(SelectionFlag::kNoImageAnchor);
  return out;
}

}  // namespace internal

inline ContextSelection SelectContext(const SelectionStrategy& strategy,
                                      const SegmentedDocument& doc,
                                      const SelectionInputs& inputs,
                                      const AutoParams& params = {}) {
  ValidateStrategy(strategy);
  ValidateAutoParams(params);
  ContextSelection out = std::visit(
      [&](const auto& s) -> ContextSelection {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, strategy::OriginalFirstWords>) {
          return internal::FromWindow(doc, OriginalFirstWords(doc.document, s.limit));
        } else if constexpr (std::is_same_v<T, strategy::OriginalAroundImage>) {
          return internal::FromWindow(doc, OriginalAroundImage(doc.document, s.limit));
        } else if constexpr (std::is_same_v<T, strategy::OracleLocal> ||
                             std::is_same_v<T, strategy::OracleLocalPlusGlobal>) {
          internal::Require(inputs.annotations, "annotations", doc);
          SurfaceSet caption = SurfacesOf(inputs.annotations->caption_entities);
          auto units = OracleKeyLocal(doc, caption, s.granularity);
          if (s.granularity == Granularity::kParagraph) {
            units = ParagraphsToSentences(doc, units);
          }
          GlobalContext global;
          if constexpr (std::is_same_v<T, strategy::OracleLocalPlusGlobal>) {
            global = BuildGlobalContext(doc);
          }
          ContextSelection sel = AssembleContext(global, units, doc, params.cap);
          sel.guiding_entities = std::move(caption);
          return sel;
        } else if constexpr (std::is_same_v<T, strategy::AutoLocalPlusGlobal>) {
          internal::Require(inputs.annotations, "annotations", doc);
          internal::Require(inputs.similarity, "embeddings", doc);
          internal::Require(inputs.relations, "relations", doc);
          if (!inputs.annotations->sentence_entities) {
            throw DataError("missing sentence entity annotations for doc_id '" +
                            doc.document.doc_id + "'");
          }
          auto ranked = inputs.similarity->Rank(doc);
          return AutoSelectContext(doc, *inputs.annotations->sentence_entities, ranked,
                                   *inputs.relations, params);
        } else {
          internal::Require(inputs.similarity, "embeddings", doc);
          auto ranked = inputs.similarity->Rank(doc);
          auto retrieved = ClipTopKContext(ranked, s.k, doc);
          ContextSelection sel;
          sel.doc_id = doc.document.doc_id;
          sel.local_sentences = retrieved.sentences;
          sel.text = std::move(retrieved.text);
          if (WordCount(sel.text) > params.cap) {
            sel.text = TruncateWords(sel.text, params.cap);
            sel.flags.insert(SelectionFlag::kTruncated);
          }
          sel.word_count = WordCount(sel.text);
          return sel;
        }
      },
      strategy);
  out.strategy = strategy;
  return out;
}

template <typename Range>
OrderedJson IndexArray(const Range& r) {
  OrderedJson a = OrderedJson::array();
  for (auto v : r) a.push_back(v);
  return a;
}

inline OrderedJson SelectionToJson(const ContextSelection& sel) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["doc_id"] = sel.doc_id;
  j["strategy"] = StrategyToJson(sel.strategy);
  j["text"] = sel.text;
  j["word_count"] = sel.word_count;
  j["global_sentences"] = IndexArray(sel.global_sentences);
  j["local_sentences"] = IndexArray(sel.local_sentences);
  j["fill_sentences"] = IndexArray(sel.fill_sentences);
  j["guiding_entities"] = IndexArray(sel.guiding_entities);
  j["visual_entities"] = IndexArray(sel.visual_entities);
  j["relation_entities"] = IndexArray(sel.relation_entities);
  OrderedJson flags = OrderedJson::array();
  for (auto f : sel.flags) flags.push_back(std::string(FlagName(f)));
  j["flags"] = std::move(flags);
  return j;
}

}  // namespace newsctx

#endif  // NEWSCTX_ASSEMBLY_HPP_
