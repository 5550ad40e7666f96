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

#ifndef NEWSCTX_RELATION_HPP_
#define NEWSCTX_RELATION_HPP_

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "newsctx/entity.hpp"
#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"
#include "newsctx/strategy.hpp"

namespace newsctx {

// A relation between two mentions of the same sentence. The label is kept
// for provenance only; selection never looks at it.
struct RelationTriple {
  NamedEntityMention head;
  NamedEntityMention tail;
  std::string label;
  double confidence = 0.0;
  std::size_t sentence_index = 0;

  bool operator==(const RelationTriple&) const = default;
};

// Keeps triples with confidence >= threshold, in input order. Only scores
// strictly below the threshold are dropped.
inline std::vector<RelationTriple> FilterRelations(
    std::span<const RelationTriple> triples,
    double threshold = kDefaultRelationThreshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw UsageError("relation threshold must be in [0, 1]");
  }
  std::vector<RelationTriple> out;
  for (const auto& t : triples) {
    if (!(t.confidence < threshold)) out.push_back(t);
  }
  return out;
}

// WHEN/MISC endpoints of triples whose opposite endpoint matches (by
// normalized surface, anywhere in the document) a detected visually
// grounded entity. Additions keep their own coordinates.
inline std::set<NamedEntityMention> ExpandNonVisual(
    std::span<const RelationTriple> filtered,
    std::span<const NamedEntityMention> visual) {
  SurfaceSet visual_surfaces = SurfacesOf(visual);
  std::set<NamedEntityMention> additions;
  if (visual_surfaces.empty()) return additions;
  auto consider = [&](const NamedEntityMention& candidate,
                      const NamedEntityMention& other) {
    if (candidate.visually_grounded()) return;
    if (visual_surfaces.contains(NormalizeSurface(other.surface))) {
      additions.insert(candidate);
    }
  };
  for (const auto& t : filtered) {
    consider(t.head, t.tail);
    consider(t.tail, t.head);
  }
  return additions;
}

inline RelationTriple ParseTriple(const Json& obj, std::size_t line) {
  if (!obj.is_object()) throw DataError(LineTag(line) + ": triple must be an object");
  RelationTriple t;
  t.head = ParseMention(RequireField<Json>(obj, "head", line), line, std::nullopt);
  t.tail = ParseMention(RequireField<Json>(obj, "tail", line), line, std::nullopt);
  t.label = RequireField<std::string>(obj, "label", line);
  t.confidence = RequireField<double>(obj, "confidence", line);
  if (!(t.confidence >= 0.0 && t.confidence <= 1.0)) {
    throw DataError(LineTag(line) + ": confidence must be in [0, 1]");
  }
  if (!t.head.sentence_index || !t.tail.sentence_index) {
    throw DataError(LineTag(line) + ": triple endpoints need 'sentence_index'");
  }
  if (*t.head.sentence_index != *t.tail.sentence_index) {
    throw DataError(LineTag(line) + ": triple endpoints lie in different sentences");
  }
  t.sentence_index = *t.head.sentence_index;
  return t;
}

inline OrderedJson TripleToJson(const RelationTriple& t) {
  OrderedJson j;
  j["head"] = MentionToJson(t.head);
  j["tail"] = MentionToJson(t.tail);
  j["label"] = t.label;
  j["confidence"] = t.confidence;
  return j;
}

using RelationIndex = std::unordered_map<std::string, std::vector<RelationTriple>>;

inline RelationIndex LoadRelations(const std::filesystem::path& path) {
  RelationIndex index;
  ForEachJsonLine(path, [&](std::size_t line, const Json& obj) {
    std::vector<RelationTriple> triples;
    std::string id;
    try {
      id = RequireField<std::string>(obj, "doc_id", line);
      auto list = RequireField<Json>(obj, "triples", line);
      if (!list.is_array()) {
        throw DataError(LineTag(line) + ": field 'triples' must be an array");
      }
      for (const auto& t : list) triples.push_back(ParseTriple(t, line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    if (!index.emplace(id, std::move(triples)).second) {
      throw DataError(path.string() + ": " + LineTag(line) +
                      ": duplicate doc_id '" + id + "'");
    }
  });
  return index;
}

}  // namespace newsctx

#endif  // NEWSCTX_RELATION_HPP_
