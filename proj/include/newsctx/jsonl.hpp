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

#ifndef NEWSCTX_JSONL_HPP_
#define NEWSCTX_JSONL_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "newsctx/error.hpp"
#include "newsctx/text.hpp"

namespace newsctx {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Version stamped as the leading field of every JSONL record we emit.
inline constexpr int kSchemaVersion = 1;

inline std::string LineTag(std::size_t line) {
  return "line " + std::to_string(line);
}

// Calls fn(line_number, object) for each non-blank line of a JSONL file.
// Line numbers are 1-based.
template <typename Fn>
void ForEachJsonLine(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    Json value;
    try {
      value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(path.string() + ": " + LineTag(line_no) +
                      ": malformed JSON: " + e.what());
    }
    if (!value.is_object()) {
      throw DataError(path.string() + ": " + LineTag(line_no) +
                      ": expected a JSON object");
    }
    fn(line_no, value);
  }
}

// Typed field access that reports field name and line on failure.
template <typename T>
T RequireField(const Json& obj, std::string_view field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw DataError(LineTag(line) + ": missing field '" + std::string(field) +
                    "'");
  }
  try {
    return it->template get<T>();
  } catch (const Json::exception&) {
    throw DataError(LineTag(line) + ": field '" + std::string(field) +
                    "' has the wrong type");
  }
}

}  // namespace newsctx

#endif  // NEWSCTX_JSONL_HPP_
