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

// Caption evaluation: corpus BLEU-4, ROUGE-L, CIDEr-D, named-entity
// precision/recall, and article coverage of caption entities.
//
// All text metrics consume NormalizeTokens() output. Scores are
// reproducible within this library; parity with external toolkits is not
// a goal.

#ifndef NEWSCTX_METRICS_HPP_
#define NEWSCTX_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
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

using Tokens = std::vector<std::string>;

inline constexpr int kMaxNgram = 4;
inline constexpr double kRougeBeta = 1.2;
inline constexpr double kCiderSigma = 6.0;
inline constexpr double kCiderScale = 10.0;

using NgramCounts = std::unordered_map<std::string, double>;

// n-grams keyed by their tokens joined with U+001F.
inline NgramCounts CountNgrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += tokens[i + k];
    }
    counts[key] += 1.0;
  }
  return counts;
}

// Corpus BLEU-4 over candidates with one or more references each: modified
// n-gram precisions for n = 1..4 summed over the corpus, geometric mean,
// times the brevity penalty against the closest reference lengths.
inline double Bleu4(std::span<const Tokens> candidates,
                    std::span<const std::vector<Tokens>> references) {
  if (candidates.empty()) throw DataError("BLEU: empty corpus");
  if (candidates.size() != references.size()) {
    throw UsageError("BLEU: candidates and references differ in length");
  }
  double matched[kMaxNgram] = {};
  double total[kMaxNgram] = {};
  double cand_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Tokens& cand = candidates[i];
    const auto& refs = references[i];
    if (refs.empty()) throw UsageError("BLEU: example without a reference");
    cand_len += static_cast<double>(cand.size());
    std::size_t best = refs[0].size();
    for (const auto& r : refs) {
      auto diff = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (diff(r.size()) < diff(best) ||
          (diff(r.size()) == diff(best) && r.size() < best)) {
        best = r.size();
      }
    }
    ref_len += static_cast<double>(best);
    for (int n = 1; n <= kMaxNgram; ++n) {
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, c] : CountNgrams(r, n)) {
          max_ref[g] = std::max(max_ref[g], c);
        }
      }
      for (const auto& [g, c] : CountNgrams(cand, n)) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matched[n - 1] += std::min(c, it->second);
        total[n - 1] += c;
      }
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < kMaxNgram; ++n) {
    if (total[n] == 0.0 || matched[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / kMaxNgram);
}

inline double Bleu4(std::span<const Tokens> candidates,
                    std::span<const Tokens> references) {
  std::vector<std::vector<Tokens>> wrapped;
  wrapped.reserve(references.size());
  for (const auto& r : references) wrapped.push_back({r});
  return Bleu4(candidates, wrapped);
}

inline std::size_t LongestCommonSubsequence(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// ROUGE-L F-measure, beta = 1.2.
inline double RougeL(const Tokens& candidate, const Tokens& reference) {
  if (reference.empty()) throw DataError("ROUGE-L: empty reference");
  if (candidate.empty()) return 0.0;
  double lcs = static_cast<double>(LongestCommonSubsequence(candidate, reference));
  double p = lcs / static_cast<double>(candidate.size());
  double r = lcs / static_cast<double>(reference.size());
  if (p == 0.0 || r == 0.0) return 0.0;
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

inline double CorpusRougeL(std::span<const Tokens> candidates,
                           std::span<const Tokens> references) {
  if (candidates.empty()) throw DataError("ROUGE-L: empty corpus");
  if (candidates.size() != references.size()) {
    throw UsageError("ROUGE-L: candidates and references differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    sum += RougeL(candidates[i], references[i]);
  }
  return sum / static_cast<double>(candidates.size());
}

struct CiderOptions {
  double sigma = kCiderSigma;
  // Optional rewrite of each IDF weight, (n-gram order, default idf) -> idf.
  std::function<double(int, double)> idf_transform;
};

// CIDEr-D. Document frequencies come from the references of the evaluated
// set; an n-gram's IDF is log((N + 1) / max(1, df)) over N examples, which
// stays positive for a one-example corpus. Per order n the clipped
// TF-IDF cosine sum(min(c, r) * r) / (|c| |r|) is damped by a Gaussian
// length penalty; orders are averaged, references averaged, times 10.
inline double CiderD(std::span<const Tokens> candidates,
                     std::span<const std::vector<Tokens>> references,
                     const CiderOptions& options = {}) {
  if (candidates.empty()) throw DataError("CIDEr-D: empty corpus");
  if (candidates.size() != references.size()) {
    throw UsageError("CIDEr-D: candidates and references differ in length");
  }
  const double num_docs = static_cast<double>(candidates.size());
  std::unordered_map<std::string, double> df[kMaxNgram];
  std::vector<std::vector<std::array<NgramCounts, kMaxNgram>>> ref_counts(
      references.size());
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (references[i].empty()) throw UsageError("CIDEr-D: example without a reference");
    std::unordered_set<std::string> seen[kMaxNgram];
    for (const auto& r : references[i]) {
      std::array<NgramCounts, kMaxNgram> counts;
      for (int n = 1; n <= kMaxNgram; ++n) {
        counts[n - 1] = CountNgrams(r, n);
        for (const auto& [g, c] : counts[n - 1]) seen[n - 1].insert(g);
      }
      ref_counts[i].push_back(std::move(counts));
    }
    for (int n = 0; n < kMaxNgram; ++n) {
      for (const auto& g : seen[n]) df[n][g] += 1.0;
    }
  }
  auto to_vec = [&](const std::array<NgramCounts, kMaxNgram>& counts,
                    std::array<NgramCounts, kMaxNgram>& vec,
                    std::array<double, kMaxNgram>& norm) {
    for (int n = 0; n < kMaxNgram; ++n) {
      vec[n].clear();
      norm[n] = 0.0;
      for (const auto& [g, tf] : counts[n]) {
        auto it = df[n].find(g);
        double d = it == df[n].end() ? 0.0 : it->second;
        double idf = std::log((num_docs + 1.0) / std::max(1.0, d));
        if (options.idf_transform) idf = options.idf_transform(n + 1, idf);
        double w = tf * idf;
        vec[n][g] = w;
        norm[n] += w * w;
      }
      norm[n] = std::sqrt(norm[n]);
    }
  };
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::array<NgramCounts, kMaxNgram> cand_counts;
    for (int n = 1; n <= kMaxNgram; ++n) cand_counts[n - 1] = CountNgrams(candidates[i], n);
    std::array<NgramCounts, kMaxNgram> cvec;
    std::array<double, kMaxNgram> cnorm{};
    to_vec(cand_counts, cvec, cnorm);
    double example = 0.0;
    for (std::size_t k = 0; k < references[i].size(); ++k) {
      std::array<NgramCounts, kMaxNgram> rvec;
      std::array<double, kMaxNgram> rnorm{};
      to_vec(ref_counts[i][k], rvec, rnorm);
      double delta = static_cast<double>(candidates[i].size()) -
                     static_cast<double>(references[i][k].size());
      double penalty = std::exp(-(delta * delta) / (2.0 * options.sigma * options.sigma));
      double sum_n = 0.0;
      for (int n = 0; n < kMaxNgram; ++n) {
        double val = 0.0;
        for (const auto& [g, w] : cvec[n]) {
          auto it = rvec[n].find(g);
          if (it != rvec[n].end()) val += std::min(w, it->second) * it->second;
        }
        if (cnorm[n] != 0.0 && rnorm[n] != 0.0) val /= cnorm[n] * rnorm[n];
        sum_n += val * penalty;
      }
      example += sum_n / kMaxNgram;
    }
    total += kCiderScale * example / static_cast<double>(references[i].size());
  }
  return total / num_docs;
}

inline double CiderD(std::span<const Tokens> candidates,
                     std::span<const Tokens> references,
                     const CiderOptions& options = {}) {
  std::vector<std::vector<Tokens>> wrapped;
  wrapped.reserve(references.size());
  for (const auto& r : references) wrapped.push_back({r});
  return CiderD(candidates, wrapped, options);
}

struct EntityScores {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t matched = 0;
  std::size_t generated = 0;
  std::size_t reference = 0;
  // Set when the denominator was zero and the score defaulted to 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

enum class NeAveraging { kMicro, kMacro };

struct EntityMatchOptions {
  NeAveraging averaging = NeAveraging::kMicro;
  bool case_sensitive = true;
};

namespace internal {

inline SurfaceSet FoldCase(const SurfaceSet& in) {
  SurfaceSet out;
  for (const auto& s : in) {
    std::string t = s;
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.insert(std::move(t));
  }
  return out;
}

}  // namespace internal

// Entity precision and recall over parallel examples. Micro by default;
// macro averages per-example ratios over examples whose denominator is
// non-zero. Counts are always the micro totals.
inline EntityScores EntityPrecisionRecall(std::span<const SurfaceSet> generated,
                                          std::span<const SurfaceSet> reference,
                                          const EntityMatchOptions& options = {}) {
  if (generated.size() != reference.size()) {
    throw UsageError("entity P/R: generated and reference differ in length");
  }
  EntityScores s;
  double p_sum = 0, r_sum = 0;
  std::size_t p_n = 0, r_n = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    SurfaceSet g = NormalizeSurfaces(generated[i]);
    SurfaceSet r = NormalizeSurfaces(reference[i]);
    if (!options.case_sensitive) {
      g = internal::FoldCase(g);
      r = internal::FoldCase(r);
    }
    std::size_t m = MatchEntities(g, r).size();
    s.matched += m;
    s.generated += g.size();
    s.reference += r.size();
    if (!g.empty()) {
      p_sum += static_cast<double>(m) / g.size();
      ++p_n;
    }
    if (!r.empty()) {
      r_sum += static_cast<double>(m) / r.size();
      ++r_n;
    }
  }
  s.precision_undefined = s.generated == 0;
  s.recall_undefined = s.reference == 0;
  if (options.averaging == NeAveraging::kMicro) {
    if (s.generated) s.precision = static_cast<double>(s.matched) / s.generated;
    if (s.reference) s.recall = static_cast<double>(s.matched) / s.reference;
  } else {
    if (p_n) s.precision = p_sum / p_n;
    if (r_n) s.recall = r_sum / r_n;
  }
  return s;
}

// Title and body, one unit per line so no entity matches across units.
inline std::string ArticleText(const NewsDocument& doc) {
  std::string text = NormalizeSpace(doc.title);
  for (const auto& p : doc.paragraphs) {
    text.push_back('\n');
    text += NormalizeSpace(p);
  }
  return text;
}

struct CoverageEntry {
  std::string doc_id;
  std::size_t covered = 0;
  std::size_t total = 0;
  // Empty when the caption has no entities.
  std::optional<double> ratio;
};

struct CoverageReport {
  std::vector<CoverageEntry> entries;
  double mean = 0.0;
  std::size_t counted = 0;
  std::size_t excluded_no_entities = 0;
};

inline CoverageEntry CoverageRatio(const NewsDocument& doc, const SurfaceSet& caption) {
  CoverageEntry e;
  e.doc_id = doc.doc_id;
  SurfaceSet surfaces = NormalizeSurfaces(caption);
  e.total = surfaces.size();
  if (e.total == 0) return e;
  std::string text = ArticleText(doc);
  for (const auto& s : surfaces) {
    if (text.find(s) != std::string::npos) ++e.covered;
  }
  e.ratio = static_cast<double>(e.covered) / static_cast<double>(e.total);
  return e;
}

// `caption_entities` parallels `docs`.
inline CoverageReport CoverageStats(std::span<const NewsDocument> docs,
                                    std::span<const SurfaceSet> caption_entities) {
  if (docs.size() != caption_entities.size()) {
    throw UsageError("coverage: documents and annotations differ in length");
  }
  CoverageReport r;
  double sum = 0.0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    CoverageEntry e = CoverageRatio(docs[i], caption_entities[i]);
    if (e.ratio) {
      sum += *e.ratio;
      ++r.counted;
    } else {
      ++r.excluded_no_entities;
    }
    r.entries.push_back(std::move(e));
  }
  if (r.counted) r.mean = sum / static_cast<double>(r.counted);
  return r;
}

// Doc ids whose coverage is strictly above `min_ratio`.
inline std::vector<std::string> FilterHighCoverage(const CoverageReport& report,
                                                   double min_ratio = 0.7) {
  std::vector<std::string> keep;
  for (const auto& e : report.entries) {
    if (e.ratio && *e.ratio > min_ratio) keep.push_back(e.doc_id);
  }
  return keep;
}

struct EvalExample {
  std::string doc_id;
  std::string candidate;
  std::string reference;
  SurfaceSet generated_entities;
  SurfaceSet reference_entities;
};

struct EvalReport {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  double ne_precision = 0.0;
  double ne_recall = 0.0;
  std::size_t n_examples = 0;
  bool ne_precision_undefined = false;
  bool ne_recall_undefined = false;
};

struct EvalOptions {
  EntityMatchOptions entities;
};

inline EvalReport Evaluate(std::span<const EvalExample> examples,
                           const EvalOptions& options = {}) {
  if (examples.empty()) throw DataError("evaluation needs at least one example");
  std::vector<Tokens> cands;
  std::vector<Tokens> refs;
  std::vector<SurfaceSet> gen_ents;
  std::vector<SurfaceSet> ref_ents;
  for (const auto& e : examples) {
    cands.push_back(NormalizeTokens(e.candidate));
    refs.push_back(NormalizeTokens(e.reference));
    if (refs.back().empty()) {
      throw DataError("reference caption for '" + e.doc_id + "' has no tokens");
    }
    gen_ents.push_back(e.generated_entities);
    ref_ents.push_back(e.reference_entities);
  }
  EvalReport r;
  r.n_examples = examples.size();
  r.bleu4 = Bleu4(cands, std::span<const Tokens>(refs));
  r.rouge_l = CorpusRougeL(cands, refs);
  r.cider = CiderD(cands, std::span<const Tokens>(refs));
  auto ne = EntityPrecisionRecall(gen_ents, ref_ents, options.entities);
  r.ne_precision = ne.precision;
  r.ne_recall = ne.recall;
  r.ne_precision_undefined = ne.precision_undefined;
  r.ne_recall_undefined = ne.recall_undefined;
  return r;
}

inline OrderedJson ReportToJson(const EvalReport& r) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["bleu4"] = r.bleu4;
  j["rouge_l"] = r.rouge_l;
  j["cider"] = r.cider;
  j["ne_precision"] = r.ne_precision;
  j["ne_recall"] = r.ne_recall;
  j["n_examples"] = r.n_examples;
  OrderedJson flags = OrderedJson::array();
  if (r.ne_precision_undefined) flags.push_back("NE_PRECISION_UNDEFINED");
  if (r.ne_recall_undefined) flags.push_back("NE_RECALL_UNDEFINED");
  j["flags"] = std::move(flags);
  return j;
}

inline std::string ReportToTable(const EvalReport& r) {
  std::ostringstream out;
  char buf[64];
  auto row = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%-14s %10.4f\n", name, v);
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-14s %10s\n", "metric", "score");
  out << buf;
  row("BLEU-4", r.bleu4);
  row("ROUGE-L", r.rouge_l);
  row("CIDEr-D", r.cider);
  row("NE precision", r.ne_precision);
  row("NE recall", r.ne_recall);
  std::snprintf(buf, sizeof buf, "%-14s %10zu\n", "examples", r.n_examples);
  out << buf;
  return out.str();
}

}  // namespace newsctx

#endif  // NEWSCTX_METRICS_HPP_
