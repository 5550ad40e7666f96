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

// News documents: ingestion from JSONL, validation, and rule-based
// sentence segmentation.

#ifndef NEWSCTX_CORPUS_HPP_
#define NEWSCTX_CORPUS_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"
#include "newsctx/text.hpp"

namespace newsctx {

struct NewsDocument {
  std::string doc_id;
  std::string title;
  std::vector<std::string> paragraphs;
  std::string caption;
  std::string image_ref;
  // Paragraph nearest the image, when the source records it.
  std::optional<std::size_t> image_paragraph_index;

  bool operator==(const NewsDocument&) const = default;
};

struct Sentence {
  std::string text;  // whitespace-normalized
  std::size_t paragraph_index = 0;
  std::size_t sentence_index = 0;

  bool operator==(const Sentence&) const = default;
};

struct SegmentedDocument {
  NewsDocument document;
  std::vector<Sentence> sentences;
  std::vector<std::size_t> word_counts;
  // paragraph_begin[p] is the first sentence index of paragraph p; the
  // trailing element equals sentences.size().
  std::vector<std::size_t> paragraph_begin;

  std::size_t num_paragraphs() const { return paragraph_begin.size() - 1; }

  // Half-open sentence index range [first, second) of paragraph p.
  std::pair<std::size_t, std::size_t> paragraph_sentences(std::size_t p) const {
    return {paragraph_begin.at(p), paragraph_begin.at(p + 1)};
  }

  bool operator==(const SegmentedDocument&) const = default;
};

// Throws DataError when a document breaks the NewsDocument invariants.
inline void ValidateDocument(const NewsDocument& doc) {
  if (doc.paragraphs.empty()) {
    throw DataError("document '" + doc.doc_id + "': empty paragraphs");
  }
  for (std::size_t p = 0; p < doc.paragraphs.size(); ++p) {
    if (Trim(doc.paragraphs[p]).empty()) {
      throw DataError("document '" + doc.doc_id + "': paragraph " +
                      std::to_string(p) + " is empty");
    }
  }
  if (doc.image_paragraph_index &&
      *doc.image_paragraph_index >= doc.paragraphs.size()) {
    throw DataError("document '" + doc.doc_id +
                    "': image_paragraph_index out of range");
  }
}

inline NewsDocument ParseDocument(const Json& obj, std::size_t line) {
  NewsDocument doc;
  doc.doc_id = RequireField<std::string>(obj, "doc_id", line);
  doc.title = RequireField<std::string>(obj, "title", line);
  doc.paragraphs = RequireField<std::vector<std::string>>(obj, "paragraphs", line);
  doc.caption = RequireField<std::string>(obj, "caption", line);
  if (auto it = obj.find("image_ref"); it != obj.end() && !it->is_null()) {
    doc.image_ref = RequireField<std::string>(obj, "image_ref", line);
  }
  if (auto it = obj.find("image_paragraph_index");
      it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 0) {
      throw DataError(LineTag(line) +
                      ": field 'image_paragraph_index' must be a "
                      "non-negative integer or null");
    }
    doc.image_paragraph_index = it->get<std::size_t>();
  }
  try {
    ValidateDocument(doc);
  } catch (const DataError& e) {
    throw DataError(LineTag(line) + ": " + e.what());
  }
  return doc;
}

inline OrderedJson SerializeDocument(const NewsDocument& doc) {
  OrderedJson j;
  j["doc_id"] = doc.doc_id;
  j["title"] = doc.title;
  j["paragraphs"] = doc.paragraphs;
  j["caption"] = doc.caption;
  j["image_ref"] = doc.image_ref;
  if (doc.image_paragraph_index) {
    j["image_paragraph_index"] = *doc.image_paragraph_index;
  } else {
    j["image_paragraph_index"] = nullptr;
  }
  return j;
}

inline std::vector<NewsDocument> LoadDataset(const std::filesystem::path& path) {
  std::vector<NewsDocument> docs;
  std::unordered_set<std::string> seen;
  ForEachJsonLine(path, [&](std::size_t line, const Json& obj) {
    NewsDocument doc;
    try {
      doc = ParseDocument(obj, line);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    if (!seen.insert(doc.doc_id).second) {
      throw DataError(path.string() + ": " + LineTag(line) +
                      ": duplicate doc_id '" + doc.doc_id + "'");
    }
    docs.push_back(std::move(doc));
  });
  return docs;
}

namespace internal {

inline constexpr std::array<std::string_view, 21> kAbbreviations = {
    "Mr.",   "Mrs.", "Ms.",  "Dr.",  "St.",  "U.S.", "a.m.", "p.m.",
    "vs.",   "Jan.", "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.",
    "Sep.",  "Sept.", "Oct.", "Nov.", "Dec."};

inline constexpr std::array<std::string_view, 6> kClosers = {
    "\"", "'", ")", "]", "\xE2\x80\x9D", "\xE2\x80\x99"};
inline constexpr std::array<std::string_view, 6> kOpeners = {
    "\"", "'", "(", "[", "\xE2\x80\x9C", "\xE2\x80\x98"};

inline std::string_view StripClosers(std::string_view w) {
  bool changed = true;
  while (changed && !w.empty()) {
    changed = false;
    for (auto c : kClosers) {
      if (w.size() > c.size() && w.ends_with(c)) {
        w.remove_suffix(c.size());
        changed = true;
      }
    }
  }
  return w;
}

inline std::string_view StripOpeners(std::string_view w) {
  bool changed = true;
  while (changed && !w.empty()) {
    changed = false;
    for (auto o : kOpeners) {
      if (w.size() > o.size() && w.starts_with(o)) {
        w.remove_prefix(o.size());
        changed = true;
      }
    }
  }
  return w;
}

inline bool EndsSentence(std::string_view word) {
  std::string_view core = StripClosers(word);
  if (core.empty()) return false;
  char last = core.back();
  if (last != '.' && last != '!' && last != '?') return false;
  if (last == '.' &&
      std::find(kAbbreviations.begin(), kAbbreviations.end(), core) !=
          kAbbreviations.end()) {
    return false;
  }
  return true;
}

inline bool StartsUpper(std::string_view word) {
  std::string_view core = StripOpeners(word);
  return !core.empty() && core.front() >= 'A' && core.front() <= 'Z';
}

}  // namespace internal

// Splits one paragraph into sentences. A sentence ends at a word whose
// last character (ignoring closing quotes/brackets) is '.', '!' or '?' when
// the next word starts with an uppercase letter or the paragraph ends.
// Words in the abbreviation list never end a sentence mid-paragraph.
inline std::vector<std::string> SplitSentences(std::string_view paragraph) {
  auto words = SplitWords(paragraph);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    bool last = i + 1 == words.size();
    if (last || (internal::EndsSentence(words[i]) &&
                 internal::StartsUpper(words[i + 1]))) {
      out.push_back(JoinWords(words, start, i + 1));
      start = i + 1;
    }
  }
  return out;
}

inline SegmentedDocument SegmentSentences(const NewsDocument& doc) {
  SegmentedDocument seg;
  seg.document = doc;
  for (std::size_t p = 0; p < doc.paragraphs.size(); ++p) {
    seg.paragraph_begin.push_back(seg.sentences.size());
    for (auto& text : SplitSentences(doc.paragraphs[p])) {
      std::size_t idx = seg.sentences.size();
      seg.word_counts.push_back(WordCount(text));
      seg.sentences.push_back({std::move(text), p, idx});
    }
  }
  seg.paragraph_begin.push_back(seg.sentences.size());
  return seg;
}

// All body words in reading order (title excluded).
inline std::vector<std::string_view> BodyWords(const NewsDocument& doc) {
  std::vector<std::string_view> words;
  for (const auto& p : doc.paragraphs) {
    auto w = SplitWords(p);
    words.insert(words.end(), w.begin(), w.end());
  }
  return words;
}

}  // namespace newsctx

#endif  // NEWSCTX_CORPUS_HPP_
