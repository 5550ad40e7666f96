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

#ifndef NEWSCTX_STRATEGY_HPP_
#define NEWSCTX_STRATEGY_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"

namespace newsctx {

inline constexpr std::size_t kDefaultFirstWordsLimit = 500;
inline constexpr std::size_t kDefaultAroundImageLimit = 512;
inline constexpr std::size_t kDefaultCap = 500;
inline constexpr std::size_t kDefaultTopSentences = 2;
inline constexpr double kDefaultRelationThreshold = 0.7;
inline constexpr std::size_t kDefaultClipTopK = 10;

enum class Granularity { kSentence, kParagraph };

inline std::string_view GranularityName(Granularity g) {
  return g == Granularity::kSentence ? "sentence" : "paragraph";
}

namespace strategy {

struct OriginalFirstWords {
  std::size_t limit = kDefaultFirstWordsLimit;
};
struct OriginalAroundImage {
  std::size_t limit = kDefaultAroundImageLimit;
};
struct OracleLocal {
  Granularity granularity = Granularity::kSentence;
};
struct OracleLocalPlusGlobal {
  Granularity granularity = Granularity::kSentence;
};
struct AutoLocalPlusGlobal {};
struct ClipTopK {
  std::size_t k = kDefaultClipTopK;
};

}  // namespace strategy

using SelectionStrategy =
    std::variant<strategy::OriginalFirstWords, strategy::OriginalAroundImage,
                 strategy::OracleLocal, strategy::OracleLocalPlusGlobal,
                 strategy::AutoLocalPlusGlobal, strategy::ClipTopK>;

inline void ValidateStrategy(const SelectionStrategy& s) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, strategy::OriginalFirstWords> ||
                      std::is_same_v<T, strategy::OriginalAroundImage>) {
          if (v.limit == 0) throw UsageError("word limit must be > 0");
        } else if constexpr (std::is_same_v<T, strategy::ClipTopK>) {
          if (v.k == 0) throw UsageError("k must be > 0");
        }
      },
      s);
}

inline std::string_view StrategyName(const SelectionStrategy& s) {
  constexpr std::string_view kNames[] = {
      "original-first-words", "original-around-image", "oracle-local",
      "oracle-local-global",  "auto",                  "clip-topk"};
  return kNames[s.index()];
}

inline OrderedJson StrategyToJson(const SelectionStrategy& s) {
  OrderedJson j;
  j["name"] = std::string(StrategyName(s));
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, strategy::OriginalFirstWords> ||
                      std::is_same_v<T, strategy::OriginalAroundImage>) {
          j["limit"] = v.limit;
        } else if constexpr (std::is_same_v<T, strategy::OracleLocal> ||
                             std::is_same_v<T, strategy::OracleLocalPlusGlobal>) {
          j["granularity"] = std::string(GranularityName(v.granularity));
        } else if constexpr (std::is_same_v<T, strategy::ClipTopK>) {
          j["k"] = v.k;
        }
      },
      s);
  return j;
}

}  // namespace newsctx

#endif  // NEWSCTX_STRATEGY_HPP_
