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

// Named-entity taxonomy (18 spaCy-style tags folded into four caption
// components), mention records, and the annotation sidecar reader.

#ifndef NEWSCTX_ENTITY_HPP_
#define NEWSCTX_ENTITY_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "newsctx/corpus.hpp"
#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"
#include "newsctx/text.hpp"

namespace newsctx {

enum class EntityCategory { kWho, kWhen, kWhere, kMisc };

enum class EntityTag {
  kPerson,
  kNorp,
  kOrg,
  kDate,
  kTime,
  kFac,
  kGpe,
  kLoc,
  kProduct,
  kEvent,
  kArt,
  kLaw,
  kLan,
  kPercent,
  kMoney,
  kQuantity,
  kOrdinal,
  kCardinal,
};

inline constexpr std::size_t kNumEntityTags = 18;

struct TagInfo {
  EntityTag tag;
  std::string_view name;
  EntityCategory category;
};

inline constexpr std::array<TagInfo, kNumEntityTags> kTaxonomy = {{
    {EntityTag::kPerson, "PERSON", EntityCategory::kWho},
    {EntityTag::kNorp, "NORP", EntityCategory::kWho},
    {EntityTag::kOrg, "ORG", EntityCategory::kWho},
    {EntityTag::kDate, "DATE", EntityCategory::kWhen},
    {EntityTag::kTime, "TIME", EntityCategory::kWhen},
    {EntityTag::kFac, "FAC", EntityCategory::kWhere},
    {EntityTag::kGpe, "GPE", EntityCategory::kWhere},
    {EntityTag::kLoc, "LOC", EntityCategory::kWhere},
    {EntityTag::kProduct, "PRODUCT", EntityCategory::kMisc},
    {EntityTag::kEvent, "EVENT", EntityCategory::kMisc},
    {EntityTag::kArt, "ART", EntityCategory::kMisc},
    {EntityTag::kLaw, "LAW", EntityCategory::kMisc},
    {EntityTag::kLan, "LAN", EntityCategory::kMisc},
    {EntityTag::kPercent, "PERCENT", EntityCategory::kMisc},
    {EntityTag::kMoney, "MONEY", EntityCategory::kMisc},
    {EntityTag::kQuantity, "QUANTITY", EntityCategory::kMisc},
    {EntityTag::kOrdinal, "ORDINAL", EntityCategory::kMisc},
    {EntityTag::kCardinal, "CARDINAL", EntityCategory::kMisc},
}};

inline std::string_view TagName(EntityTag tag) {
  return kTaxonomy[static_cast<std::size_t>(tag)].name;
}

inline std::string_view CategoryName(EntityCategory c) {
  switch (c) {
    case EntityCategory::kWho:
      return "WHO";
    case EntityCategory::kWhen:
      return "WHEN";
    case EntityCategory::kWhere:
      return "WHERE";
    case EntityCategory::kMisc:
      return "MISC";
  }
  return "?";
}

// Accepts the 18 taxonomy names; "LANGUAGE" is canonicalized to LAN.
inline EntityTag ParseEntityTag(std::string_view name) {
  if (name == "LANGUAGE") return EntityTag::kLan;
  for (const auto& info : kTaxonomy) {
    if (info.name == name) return info.tag;
  }
  throw DataError("unknown entity tag '" + std::string(name) + "'");
}

inline EntityCategory MapEntityCategory(EntityTag tag) {
  return kTaxonomy[static_cast<std::size_t>(tag)].category;
}

inline EntityCategory MapEntityCategory(std::string_view tag_name) {
  return MapEntityCategory(ParseEntityTag(tag_name));
}

// WHO and WHERE entities can be tied to image regions (faces, landmarks).
inline bool IsVisuallyGrounded(EntityCategory c) {
  return c == EntityCategory::kWho || c == EntityCategory::kWhere;
}

// Byte offsets [start, end) into the UTF-8 sentence text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const CharSpan&) const = default;
};

struct NamedEntityMention {
  std::string surface;
  EntityTag tag = EntityTag::kPerson;
  EntityCategory category = EntityCategory::kWho;
  std::optional<std::size_t> sentence_index;
  std::optional<CharSpan> char_span;

  bool visually_grounded() const { return IsVisuallyGrounded(category); }

  auto operator<=>(const NamedEntityMention&) const = default;
};

inline NamedEntityMention MakeMention(
    std::string surface, EntityTag tag,
    std::optional<std::size_t> sentence_index = std::nullopt,
    std::optional<CharSpan> span = std::nullopt) {
  return {std::move(surface), tag, MapEntityCategory(tag), sentence_index,
          span};
}

// Sets of unique whitespace-normalized, case-sensitive surfaces.
using SurfaceSet = std::set<std::string>;

inline std::string NormalizeSurface(std::string_view surface) {
  return NormalizeSpace(surface);
}

template <typename Range>
SurfaceSet SurfacesOf(const Range& mentions) {
  SurfaceSet out;
  for (const auto& m : mentions) {
    std::string s = NormalizeSurface(m.surface);
    if (!s.empty()) out.insert(std::move(s));
  }
  return out;
}

inline SurfaceSet NormalizeSurfaces(const std::set<std::string>& raw) {
  SurfaceSet out;
  for (const auto& s : raw) {
    std::string n = NormalizeSurface(s);
    if (!n.empty()) out.insert(std::move(n));
  }
  return out;
}

// Exact-match intersection of normalized surfaces.
inline SurfaceSet MatchEntities(const SurfaceSet& generated,
                                const SurfaceSet& reference) {
  SurfaceSet g = NormalizeSurfaces(generated);
  SurfaceSet r = NormalizeSurfaces(reference);
  SurfaceSet out;
  std::set_intersection(g.begin(), g.end(), r.begin(), r.end(),
                        std::inserter(out, out.end()));
  return out;
}

// True when `text` contains any of `surfaces` as an exact substring.
inline bool ContainsAnySurface(std::string_view text,
                               const SurfaceSet& surfaces) {
  for (const auto& s : surfaces) {
    if (!s.empty() && text.find(s) != std::string_view::npos) return true;
  }
  return false;
}

// Annotation sidecar record for one document.
struct DocumentAnnotations {
  std::string doc_id;
  std::vector<NamedEntityMention> caption_entities;
  // One list per segmented sentence; absent when only caption entities
  // were annotated.
  std::optional<std::vector<std::vector<NamedEntityMention>>> sentence_entities;
};

inline NamedEntityMention ParseMention(const Json& obj, std::size_t line,
                                       std::optional<std::size_t> sentence) {
  if (!obj.is_object()) {
    throw DataError(LineTag(line) + ": entity must be an object");
  }
  auto surface = RequireField<std::string>(obj, "surface", line);
  auto tag_name = RequireField<std::string>(obj, "tag", line);
  EntityTag tag;
  try {
    tag = ParseEntityTag(tag_name);
  } catch (const DataError& e) {
    throw DataError(LineTag(line) + ": " + e.what());
  }
  std::optional<CharSpan> span;
  if (auto it = obj.find("char_span"); it != obj.end() && !it->is_null()) {
    auto v = RequireField<std::vector<std::size_t>>(obj, "char_span", line);
    if (v.size() != 2 || v[0] > v[1]) {
      throw DataError(LineTag(line) + ": field 'char_span' must be [start, end]");
    }
    span = CharSpan{v[0], v[1]};
  }
  if (auto it = obj.find("sentence_index"); it != obj.end() && !it->is_null()) {
    sentence = RequireField<std::size_t>(obj, "sentence_index", line);
  }
  return MakeMention(std::move(surface), tag, sentence, span);
}

inline OrderedJson MentionToJson(const NamedEntityMention& m) {
  OrderedJson j;
  j["surface"] = m.surface;
  j["tag"] = std::string(TagName(m.tag));
  if (m.sentence_index) j["sentence_index"] = *m.sentence_index;
  if (m.char_span) {
    j["char_span"] = {m.char_span->start, m.char_span->end};
  }
  return j;
}

inline DocumentAnnotations ParseAnnotations(const Json& obj, std::size_t line) {
  DocumentAnnotations ann;
  ann.doc_id = RequireField<std::string>(obj, "doc_id", line);
  auto caption = RequireField<Json>(obj, "caption_entities", line);
  if (!caption.is_array()) {
    throw DataError(LineTag(line) + ": field 'caption_entities' must be an array");
  }
  for (const auto& e : caption) {
    ann.caption_entities.push_back(ParseMention(e, line, std::nullopt));
  }
  if (auto it = obj.find("sentence_entities");
      it != obj.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw DataError(LineTag(line) +
                      ": field 'sentence_entities' must be an array");
    }
    std::vector<std::vector<NamedEntityMention>> per_sentence;
    for (std::size_t s = 0; s < it->size(); ++s) {
      const Json& list = (*it)[s];
      if (!list.is_array()) {
        throw DataError(LineTag(line) + ": sentence_entities[" +
                        std::to_string(s) + "] must be an array");
      }
      std::vector<NamedEntityMention> mentions;
      for (const auto& e : list) mentions.push_back(ParseMention(e, line, s));
      per_sentence.push_back(std::move(mentions));
    }
    ann.sentence_entities = std::move(per_sentence);
  }
  return ann;
}

using AnnotationIndex = std::unordered_map<std::string, DocumentAnnotations>;

inline AnnotationIndex LoadAnnotations(const std::filesystem::path& path) {
  AnnotationIndex index;
  ForEachJsonLine(path, [&](std::size_t line, const Json& obj) {
    DocumentAnnotations ann;
    try {
      ann = ParseAnnotations(obj, line);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    std::string id = ann.doc_id;
    if (!index.emplace(id, std::move(ann)).second) {
      throw DataError(path.string() + ": " + LineTag(line) +
                      ": duplicate doc_id '" + id + "'");
    }
  });
  return index;
}

// Checks that sentence annotations line up with the segmentation: one list
// per sentence, and every char_span slices its sentence to the surface.
inline void ValidateAnnotations(const DocumentAnnotations& ann,
                                const SegmentedDocument& doc) {
  if (!ann.sentence_entities) return;
  const auto& lists = *ann.sentence_entities;
  if (lists.size() != doc.sentences.size()) {
    throw DataError("annotations for '" + ann.doc_id + "': " +
                    std::to_string(lists.size()) +
                    " sentence entity lists for " +
                    std::to_string(doc.sentences.size()) + " sentences");
  }
  for (std::size_t s = 0; s < lists.size(); ++s) {
    const std::string& text = doc.sentences[s].text;
    for (const auto& m : lists[s]) {
      if (!m.char_span) continue;
      const CharSpan& span = *m.char_span;
      if (span.end > text.size() ||
          std::string_view(text).substr(span.start, span.end - span.start) !=
              m.surface) {
        throw DataError("annotations for '" + ann.doc_id + "': char_span of '" +
                        m.surface + "' does not match sentence " +
                        std::to_string(s));
      }
    }
  }
}

}  // namespace newsctx

#endif  // NEWSCTX_ENTITY_HPP_
