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

// Cross-modal sentence ranking and the entity rules built on it:
// top-k visually grounded entity extraction with fallback descent, the
// top-k retrieved-context baseline, and hard-negative mining.

#ifndef NEWSCTX_XMODAL_HPP_
#define NEWSCTX_XMODAL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "newsctx/corpus.hpp"
#include "newsctx/entity.hpp"
#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"
#include "newsctx/text.hpp"

namespace newsctx {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

struct ScoredSentence {
  std::size_t sentence_index = 0;
  double score = 0.0;

  bool operator==(const ScoredSentence&) const = default;
};

inline double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

// Cosine similarity; both vectors must share a dimension and be non-zero.
inline double Cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw DataError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  }
  double na = Norm(a.values);
  double nb = Norm(b.values);
  if (na == 0.0 || nb == 0.0) throw DataError("zero-norm vector");
  double c = Dot(a.values, b.values) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

// Orders sentence scores descending; ties keep ascending sentence index.
inline std::vector<ScoredSentence> RankByScore(std::span<const double> scores) {
  std::vector<ScoredSentence> ranked(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = {i, scores[i]};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredSentence& a, const ScoredSentence& b) {
                     return a.score > b.score;
                   });
  return ranked;
}

inline std::vector<ScoredSentence> CosineRankSentences(
    const EmbeddingVector& image, std::span<const EmbeddingVector> sentences) {
  if (image.dim() == 0) throw DataError("image vector has dimension 0");
  double image_norm = Norm(image.values);
  if (image_norm == 0.0) throw DataError("image vector has zero norm");
  std::vector<double> scores(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& v = sentences[i];
    if (v.dim() != image.dim()) {
      throw DataError("sentence vector " + std::to_string(i) + " has dimension " +
                      std::to_string(v.dim()) + ", expected " +
                      std::to_string(image.dim()));
    }
    double n = Norm(v.values);
    if (n == 0.0) {
      throw DataError("sentence vector " + std::to_string(i) + " has zero norm");
    }
    scores[i] = std::clamp(Dot(image.values, v.values) / (image_norm * n), -1.0, 1.0);
  }
  return RankByScore(scores);
}

struct VisualDetection {
  std::vector<NamedEntityMention> visual;
  std::vector<std::size_t> sentences_used;  // in rank order
  // No sentence in the document holds a WHO/WHERE mention.
  bool exhausted = false;
};

// Takes the WHO/WHERE mentions of the `top` best-ranked sentences. When
// those hold none, walks further down the ranking and stops at the first
// sentence that contributes at least one.
inline VisualDetection DetectVisualEntities(
    std::span<const ScoredSentence> ranked,
    const std::vector<std::vector<NamedEntityMention>>& sentence_entities,
    std::size_t top = 2) {
  VisualDetection out;
  auto take = [&](std::size_t sentence) {
    if (sentence >= sentence_entities.size()) {
      throw DataError("no entity list for sentence " + std::to_string(sentence));
    }
    bool any = false;
    for (const auto& m : sentence_entities[sentence]) {
      if (m.visually_grounded()) {
        out.visual.push_back(m);
        any = true;
      }
    }
    return any;
  };
  std::size_t head = std::min(top, ranked.size());
  for (std::size_t r = 0; r < head; ++r) {
    take(ranked[r].sentence_index);
    out.sentences_used.push_back(ranked[r].sentence_index);
  }
  for (std::size_t r = head; out.visual.empty() && r < ranked.size(); ++r) {
    if (take(ranked[r].sentence_index)) {
      out.sentences_used.push_back(ranked[r].sentence_index);
    }
  }
  out.exhausted = out.visual.empty();
  return out;
}

struct RetrievedContext {
  std::string text;
  std::vector<std::size_t> sentences;  // ascending
};

// The k best-ranked sentences, put back into article order.
inline RetrievedContext ClipTopKContext(std::span<const ScoredSentence> ranked,
                                        std::size_t k,
                                        const SegmentedDocument& doc) {
  if (k == 0) throw UsageError("k must be > 0");
  RetrievedContext out;
  for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
    out.sentences.push_back(ranked[r].sentence_index);
  }
  std::sort(out.sentences.begin(), out.sentences.end());
  for (std::size_t s : out.sentences) {
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += doc.sentences.at(s).text;
  }
  return out;
}

// Built-in English stopword list, version 1. data/stopwords-en-v1.txt holds
// the same words.
inline constexpr std::string_view kStopwordListVersion = "en-v1";
inline constexpr std::array<std::string_view, 179> kBuiltinStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you",
    "you're", "you've", "you'll", "you'd", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "she's", "her", "hers",
    "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs",
    "themselves", "what", "which", "who", "whom", "this", "that", "that'll",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being",
    "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of",
    "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down",
    "in", "out", "on", "off", "over", "under", "again", "further", "then",
    "once", "here", "there", "when", "where", "why", "how", "all", "any",
    "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor",
    "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can",
    "will", "just", "don", "don't", "should", "should've", "now", "d", "ll",
    "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't",
    "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't",
    "haven", "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn",
    "mustn't", "needn", "needn't", "shan", "shan't", "shouldn", "shouldn't",
    "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't",
};

using StopwordSet = std::unordered_set<std::string>;

inline StopwordSet BuiltinStopwords() {
  StopwordSet words;
  for (auto w : kBuiltinStopwords) words.emplace(w);
  return words;
}

// One word per line; blank lines and '#' comments are skipped.
inline StopwordSet LoadStopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword list " + path.string());
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    auto t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (auto& tok : NormalizeTokens(t)) words.insert(std::move(tok));
  }
  return words;
}

inline std::unordered_set<std::string> ContentWords(std::string_view text,
                                                    const StopwordSet& stopwords) {
  std::unordered_set<std::string> out;
  for (auto& tok : NormalizeTokens(text)) {
    if (!stopwords.contains(tok)) out.insert(std::move(tok));
  }
  return out;
}

// Sentences sharing no content word with the caption.
inline std::vector<std::size_t> MineHardNegatives(
    std::string_view caption, std::span<const std::string> sentences,
    const StopwordSet& stopwords) {
  auto caption_words = ContentWords(caption, stopwords);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    bool overlap = false;
    for (const auto& w : ContentWords(sentences[i], stopwords)) {
      if (caption_words.contains(w)) {
        overlap = true;
        break;
      }
    }
    if (!overlap) out.push_back(i);
  }
  return out;
}

// Embedding sidecar record for one document.
struct DocumentEmbeddings {
  std::string doc_id;
  EmbeddingVector image;
  std::vector<EmbeddingVector> sentences;
};

inline DocumentEmbeddings ParseEmbeddings(const Json& obj, std::size_t line) {
  DocumentEmbeddings e;
  e.doc_id = RequireField<std::string>(obj, "doc_id", line);
  e.image.values = RequireField<std::vector<double>>(obj, "image_vec", line);
  for (auto& v :
       RequireField<std::vector<std::vector<double>>>(obj, "sentence_vecs", line)) {
    e.sentences.push_back({std::move(v)});
  }
  for (std::size_t i = 0; i < e.sentences.size(); ++i) {
    if (e.sentences[i].dim() != e.image.dim()) {
      throw DataError(LineTag(line) + ": sentence_vecs[" + std::to_string(i) +
                      "] dimension differs from image_vec");
    }
  }
  return e;
}

inline OrderedJson EmbeddingsToJson(const DocumentEmbeddings& e) {
  OrderedJson j;
  j["doc_id"] = e.doc_id;
  j["image_vec"] = e.image.values;
  OrderedJson vecs = OrderedJson::array();
  for (const auto& v : e.sentences) vecs.push_back(v.values);
  j["sentence_vecs"] = std::move(vecs);
  return j;
}

using EmbeddingIndex = std::unordered_map<std::string, DocumentEmbeddings>;

inline EmbeddingIndex LoadEmbeddingsJsonl(const std::filesystem::path& path) {
  EmbeddingIndex index;
  ForEachJsonLine(path, [&](std::size_t line, const Json& obj) {
    DocumentEmbeddings e;
    try {
      e = ParseEmbeddings(obj, line);
    } catch (const DataError& err) {
      throw DataError(path.string() + ": " + err.what());
    }
    std::string id = e.doc_id;
    if (!index.emplace(id, std::move(e)).second) {
      throw DataError(path.string() + ": " + LineTag(line) +
                      ": duplicate doc_id '" + id + "'");
    }
  });
  return index;
}

// Binary embedding store. The data file is a sequence of records, each an
// 8-byte header (dim: u32, count: u32, little-endian) followed by
// (1 + count) * dim little-endian f32 values: the image vector, then one
// vector per sentence. The index file has one "doc_id<TAB>offset" line per
// record.
namespace binary {

inline void PutU32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t GetU32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void PutF32(std::ostream& out, double v) {
  float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  PutU32(out, bits);
}

inline double GetF32(const unsigned char* b) {
  std::uint32_t bits = GetU32(b);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

inline void WriteStore(const std::filesystem::path& data_path,
                       const std::filesystem::path& index_path,
                       std::span<const DocumentEmbeddings> docs) {
  std::ofstream data(data_path, std::ios::binary);
  std::ofstream index(index_path, std::ios::binary);
  if (!data || !index) throw DataError("cannot write embedding store");
  for (const auto& d : docs) {
    index << d.doc_id << '\t' << static_cast<std::uint64_t>(data.tellp()) << '\n';
    auto dim = static_cast<std::uint32_t>(d.image.dim());
    PutU32(data, dim);
    PutU32(data, static_cast<std::uint32_t>(d.sentences.size()));
    for (double v : d.image.values) PutF32(data, v);
    for (const auto& s : d.sentences) {
      if (s.dim() != dim) throw DataError("embedding dimension mismatch in '" + d.doc_id + "'");
      for (double v : s.values) PutF32(data, v);
    }
  }
}

inline EmbeddingIndex ReadStore(const std::filesystem::path& data_path,
                                const std::filesystem::path& index_path) {
  std::ifstream data(data_path, std::ios::binary);
  std::ifstream index(index_path);
  if (!data) throw DataError("cannot open " + data_path.string());
  if (!index) throw DataError("cannot open " + index_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(data)),
                                   std::istreambuf_iterator<char>());
  EmbeddingIndex out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(index_path.string() + ": " + LineTag(line_no) +
                      ": expected doc_id<TAB>offset");
    }
    DocumentEmbeddings d;
    d.doc_id = line.substr(0, tab);
    std::uint64_t offset = 0;
    try {
      offset = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(index_path.string() + ": " + LineTag(line_no) + ": bad offset");
    }
    if (offset + 8 > bytes.size()) {
      throw DataError(index_path.string() + ": " + LineTag(line_no) +
                      ": offset past end of data");
    }
    std::uint32_t dim = GetU32(&bytes[offset]);
    std::uint32_t count = GetU32(&bytes[offset + 4]);
    std::uint64_t need = offset + 8 + 4ull * dim * (1ull + count);
    if (need > bytes.size()) {
      throw DataError(index_path.string() + ": " + LineTag(line_no) +
                      ": record for '" + d.doc_id + "' is truncated");
    }
    const unsigned char* p = &bytes[offset + 8];
    auto read_vec = [&] {
      EmbeddingVector v;
      v.values.resize(dim);
      for (auto& x : v.values) {
        x = GetF32(p);
        p += 4;
      }
      return v;
    };
    d.image = read_vec();
    for (std::uint32_t i = 0; i < count; ++i) d.sentences.push_back(read_vec());
    std::string id = d.doc_id;
    if (!out.emplace(id, std::move(d)).second) {
      throw DataError(index_path.string() + ": duplicate doc_id '" + id + "'");
    }
  }
  return out;
}

}  // namespace binary

// Source of image-sentence similarity rankings for a document.
// Implementations must allow concurrent Rank calls for distinct documents.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual std::vector<ScoredSentence> Rank(const SegmentedDocument& doc) = 0;
};

// Precomputed vectors from an embedding sidecar file. Read-only after load.
class EmbeddingFileProvider : public SimilarityProvider {
 public:
  explicit EmbeddingFileProvider(EmbeddingIndex index) : index_(std::move(index)) {}

  static EmbeddingFileProvider FromPath(const std::filesystem::path& path) {
    auto index_path = path;
    index_path += ".idx";
    if (path.extension() == ".bin" || std::filesystem::exists(index_path)) {
      return EmbeddingFileProvider(binary::ReadStore(path, index_path));
    }
    return EmbeddingFileProvider(LoadEmbeddingsJsonl(path));
  }

  std::vector<ScoredSentence> Rank(const SegmentedDocument& doc) override {
    const std::string& id = doc.document.doc_id;
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw DataError("missing embeddings sidecar entry for doc_id '" + id + "'");
    }
    const auto& e = it->second;
    if (e.sentences.size() != doc.sentences.size()) {
      throw DataError("embeddings for '" + id + "' cover " +
                      std::to_string(e.sentences.size()) + " sentences, document has " +
                      std::to_string(doc.sentences.size()));
    }
    try {
      return CosineRankSentences(e.image, e.sentences);
    } catch (const DataError& err) {
      throw DataError("embeddings for '" + id + "': " + err.what());
    }
  }

  const EmbeddingIndex& index() const { return index_; }

 private:
  EmbeddingIndex index_;
};

// Deterministic lexical stand-in for an image encoder, for tests: scores
// each sentence by TF-IDF cosine against a query text (by default the
// document caption). Sentences with no tokens score 0.
class LexicalTestScorer : public SimilarityProvider {
 public:
  LexicalTestScorer() = default;
  explicit LexicalTestScorer(std::unordered_map<std::string, std::string> queries)
      : queries_(std::move(queries)) {}

  std::vector<ScoredSentence> Rank(const SegmentedDocument& doc) override {
    std::string_view query = doc.document.caption;
    if (auto it = queries_.find(doc.document.doc_id); it != queries_.end()) {
      query = it->second;
    }
    const std::size_t n = doc.sentences.size();
    std::vector<std::unordered_map<std::string, double>> tf(n);
    std::unordered_map<std::string, std::size_t> df;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& t : NormalizeTokens(doc.sentences[i].text)) tf[i][t] += 1.0;
      for (const auto& [t, c] : tf[i]) ++df[t];
    }
    auto idf = [&](const std::string& t) {
      auto it = df.find(t);
      double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
      return std::log((1.0 + n) / (1.0 + d)) + 1.0;
    };
    std::unordered_map<std::string, double> q;
    for (auto& t : NormalizeTokens(query)) q[t] += 1.0;
    double qn = 0.0;
    for (auto& [t, w] : q) {
      w *= idf(t);
      qn += w * w;
    }
    qn = std::sqrt(qn);
    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      double sn = 0.0;
      for (const auto& [t, c] : tf[i]) {
        double w = c * idf(t);
        sn += w * w;
        if (auto it = q.find(t); it != q.end()) dot += w * it->second;
      }
      if (qn > 0.0 && sn > 0.0) scores[i] = dot / (qn * std::sqrt(sn));
    }
    return RankByScore(scores);
  }

 private:
  std::unordered_map<std::string, std::string> queries_;
};

}  // namespace newsctx

#endif  // NEWSCTX_XMODAL_HPP_
