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

// Ground-truth-guided key local context and the two truncation baselines
// ("first N words" and "N words around the image").

#ifndef NEWSCTX_ORACLE_SELECT_HPP_
#define NEWSCTX_ORACLE_SELECT_HPP_

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "newsctx/corpus.hpp"
#include "newsctx/entity.hpp"
#include "newsctx/error.hpp"
#include "newsctx/strategy.hpp"
#include "newsctx/text.hpp"

namespace newsctx {

// Indices of the units (sentences or paragraphs) whose text contains at
// least one of `surfaces`, in article order.
inline std::vector<std::size_t> OracleKeyLocal(const SegmentedDocument& doc,
                                               const SurfaceSet& surfaces,
                                               Granularity granularity) {
  SurfaceSet wanted = NormalizeSurfaces(surfaces);
  std::vector<std::size_t> units;
  if (wanted.empty()) return units;
  if (granularity == Granularity::kSentence) {
    for (const auto& s : doc.sentences) {
      if (ContainsAnySurface(s.text, wanted)) units.push_back(s.sentence_index);
    }
  } else {
    for (std::size_t p = 0; p < doc.num_paragraphs(); ++p) {
      if (ContainsAnySurface(NormalizeSpace(doc.document.paragraphs[p]),
                             wanted)) {
        units.push_back(p);
      }
    }
  }
  return units;
}

inline std::vector<std::size_t> OracleKeyLocal(
    const SegmentedDocument& doc,
    const std::vector<NamedEntityMention>& caption_entities,
    Granularity granularity) {
  return OracleKeyLocal(doc, SurfacesOf(caption_entities), granularity);
}

// Expands paragraph indices to the sentence indices they hold.
inline std::vector<std::size_t> ParagraphsToSentences(
    const SegmentedDocument& doc, const std::vector<std::size_t>& paragraphs) {
  std::vector<std::size_t> out;
  for (std::size_t p : paragraphs) {
    auto [b, e] = doc.paragraph_sentences(p);
    for (std::size_t s = b; s < e; ++s) out.push_back(s);
  }
  return out;
}

// A contiguous run of body words [begin, end).
struct WordWindow {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t total_words = 0;
  // Set when the document has no image anchor and the window degraded to
  // the leading words.
  bool anchor_fallback = false;

  bool truncated() const { return end - begin < total_words; }
};

inline WordWindow OriginalFirstWords(const NewsDocument& doc,
                                     std::size_t limit = kDefaultFirstWordsLimit) {
  if (limit == 0) throw UsageError("word limit must be > 0");
  auto words = BodyWords(doc);
  WordWindow w;
  w.total_words = words.size();
  w.end = std::min(limit, words.size());
  w.text = JoinWords(words, 0, w.end);
  return w;
}

// Grows a window from the first word of the image paragraph, alternating one
// word left then one word right; when one side hits a document bound the
// other side keeps growing.
inline WordWindow OriginalAroundImage(const NewsDocument& doc,
                                      std::size_t limit = kDefaultAroundImageLimit) {
  if (limit == 0) throw UsageError("word limit must be > 0");
  if (!doc.image_paragraph_index) {
    WordWindow w = OriginalFirstWords(doc, limit);
    w.anchor_fallback = true;
    return w;
  }
  auto words = BodyWords(doc);
  const std::size_t n = words.size();
  std::size_t anchor = 0;
  for (std::size_t p = 0; p < *doc.image_paragraph_index; ++p) {
    anchor += WordCount(doc.paragraphs[p]);
  }
  WordWindow w;
  w.total_words = n;
  w.begin = anchor;
  w.end = anchor + 1;
  const std::size_t size = std::min(limit, n);
  bool left_turn = true;
  while (w.end - w.begin < size) {
    bool can_left = w.begin > 0;
    bool can_right = w.end < n;
    if ((left_turn && can_left) || !can_right) {
      --w.begin;
    } else {
      ++w.end;
    }
    left_turn = !left_turn;
  }
  w.text = JoinWords(words, w.begin, w.end);
  return w;
}

}  // namespace newsctx

#endif  // NEWSCTX_ORACLE_SELECT_HPP_
