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

// Whitespace-level text helpers shared by every module. A "word" is a
// maximal run of non-whitespace bytes; all caps and counts use that unit.

#ifndef NEWSCTX_TEXT_HPP_
#define NEWSCTX_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace newsctx {

inline bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string_view Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && IsSpace(s[b])) ++b;
  while (e > b && IsSpace(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::size_t WordCount(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (IsSpace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

inline std::vector<std::string_view> SplitWords(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

// Collapses internal whitespace runs to one space and trims both ends.
inline std::string NormalizeSpace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::string_view w : SplitWords(text)) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  return out;
}

template <typename Range>
std::string JoinWords(const Range& words, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out.append(words[i]);
  }
  return out;
}

// Keeps the first `limit` words of `text`, single-space joined.
inline std::string TruncateWords(std::string_view text, std::size_t limit) {
  auto words = SplitWords(text);
  return JoinWords(words, 0, words.size() < limit ? words.size() : limit);
}

namespace internal {

inline bool IsWordByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

// Length of a UTF-8 General Punctuation code point (U+2000..U+206F) at
// position i, or 0.
inline std::size_t GeneralPunctuationAt(std::string_view s, std::size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2) {
    auto b1 = static_cast<unsigned char>(s[i + 1]);
    if (b1 == 0x80 || b1 == 0x81) return 3;
  }
  return 0;
}

}  // namespace internal

// Lowercased tokens with punctuation stripped, except hyphens and
// apostrophes between two word characters ("state-of-the-art", "don't").
// The typographic apostrophe U+2019 is folded to '\''.
inline std::vector<std::string> NormalizeTokens(std::string_view text) {
  enum class Kind { kWord, kApostrophe, kHyphen, kOther };
  std::vector<std::string> tokens;
  for (std::string_view raw : SplitWords(text)) {
    std::vector<std::pair<Kind, char>> units;
    for (std::size_t i = 0; i < raw.size();) {
      if (std::size_t w = internal::GeneralPunctuationAt(raw, i)) {
        bool curly = raw.substr(i, 3) == "\xE2\x80\x99";
        units.emplace_back(curly ? Kind::kApostrophe : Kind::kOther, '\'');
        i += w;
        continue;
      }
      char c = raw[i++];
      if (c == '\'') {
        units.emplace_back(Kind::kApostrophe, c);
      } else if (c == '-') {
        units.emplace_back(Kind::kHyphen, c);
      } else if (internal::IsWordByte(static_cast<unsigned char>(c))) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        units.emplace_back(Kind::kWord, c);
      } else {
        units.emplace_back(Kind::kOther, c);
      }
    }
    std::string tok;
    for (std::size_t i = 0; i < units.size(); ++i) {
      auto [kind, c] = units[i];
      if (kind == Kind::kWord) {
        tok.push_back(c);
      } else if (kind == Kind::kApostrophe || kind == Kind::kHyphen) {
        bool inner = i > 0 && i + 1 < units.size() &&
                     units[i - 1].first == Kind::kWord &&
                     units[i + 1].first == Kind::kWord;
        if (inner) tok.push_back(c);
      }
    }
    if (!tok.empty()) tokens.push_back(std::move(tok));
  }
  return tokens;
}

}  // namespace newsctx

#endif  // NEWSCTX_TEXT_HPP_
