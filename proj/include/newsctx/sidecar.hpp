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

// Client for the model sidecar's JSON/HTTP protocol.
//
//   POST /v1/embed_text  {texts}                -> {dim, vectors}
//   POST /v1/embed_image {image_ref}            -> {dim, vector}
//   POST /v1/ner         {texts}                -> {mentions}
//   POST /v1/relations   {sentence, mentions}   -> {triples}
//   GET  /v1/health                             -> {status, model_revision}
//
// Every answer is stored in a content-addressed disk cache keyed by
// SHA-256 over (kind, canonical payload, model revision), so a given
// request reaches the network at most once per revision. Per-text kinds
// (embed_text, ner) are cached per text and batched on misses.

#ifndef NEWSCTX_SIDECAR_HPP_
#define NEWSCTX_SIDECAR_HPP_

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "httplib.h"
#include "newsctx/corpus.hpp"
#include "newsctx/entity.hpp"
#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"
#include "newsctx/relation.hpp"
#include "newsctx/xmodal.hpp"

namespace newsctx {

inline std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

enum class RequestKind { kEmbedText, kEmbedImage, kNer, kRelations };

inline std::string_view RequestKindName(RequestKind k) {
  switch (k) {
    case RequestKind::kEmbedText:
      return "EMBED_TEXT";
    case RequestKind::kEmbedImage:
      return "EMBED_IMAGE";
    case RequestKind::kNer:
      return "NER";
    case RequestKind::kRelations:
      return "RELATIONS";
  }
  return "?";
}

// Keys are deterministic: nlohmann::json objects serialize with sorted keys.
inline std::string CacheKey(RequestKind kind, const Json& payload,
                            std::string_view model_revision) {
  std::string material(RequestKindName(kind));
  material.push_back('\n');
  material += payload.dump();
  material.push_back('\n');
  material += model_revision;
  return Sha256Hex(material);
}

// One JSON file per key: {"key", "value", "checksum"}, checksum being the
// SHA-256 of the serialized value. Writes go to a temp file and are renamed
// into place. Entries failing the checksum read as misses.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path PathFor(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  std::optional<Json> Load(const std::string& key) const {
    std::ifstream in(PathFor(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    Json entry = Json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
    if (!entry.is_object() || !entry.contains("value") || !entry.contains("checksum") ||
        entry.value("key", "") != key) {
      return std::nullopt;
    }
    Json value = entry["value"];
    if (Sha256Hex(value.dump()) != entry["checksum"].get<std::string>()) {
      return std::nullopt;
    }
    return value;
  }

  void Store(const std::string& key, const Json& value) const {
    auto path = PathFor(key);
    std::filesystem::create_directories(path.parent_path());
    Json entry = {{"key", key}, {"value", value}, {"checksum", Sha256Hex(value.dump())}};
    auto tmp = path;
    tmp += ".tmp." + TempSuffix();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write cache file " + tmp.string());
      out << entry.dump();
      if (!out) throw DataError("cannot write cache file " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  static std::string TempSuffix() {
    static std::atomic<unsigned long long> counter{0};
    thread_local std::mt19937_64 rng{std::random_device{}()};
    return std::to_string(rng()) + "." + std::to_string(counter++);
  }

  std::filesystem::path dir_;
};

struct SidecarConfig {
  std::string url;  // e.g. "http://127.0.0.1:8080"
  std::filesystem::path cache_dir = ".newsctx-cache";
  // When unset, taken from /v1/health and remembered in the cache directory
  // so a warm cache keeps working while the sidecar is down.
  std::optional<std::string> model_revision;
  std::chrono::seconds timeout{60};
};

class SidecarClient {
 public:
  explicit SidecarClient(SidecarConfig config)
      : config_(std::move(config)), cache_(config_.cache_dir) {}

  const std::string& ModelRevision() {
    std::call_once(revision_once_, [this] { revision_ = ResolveRevision(); });
    if (!revision_) {
      throw SidecarError("sidecar " + config_.url +
                         " unreachable and no model revision is known");
    }
    return *revision_;
  }

  // Requests that actually went over the network.
  std::size_t network_requests() const { return network_requests_.load(); }

  std::vector<EmbeddingVector> EmbedTexts(std::span<const std::string> texts) {
    auto values = BatchedPerText(RequestKind::kEmbedText, "/v1/embed_text", texts,
                                 [](const Json& resp, std::size_t n) {
                                   return SplitEmbeddings(resp, n);
                                 });
    std::vector<EmbeddingVector> out;
    for (const auto& v : values) out.push_back({v.get<std::vector<double>>()});
    for (const auto& v : out) {
      if (v.dim() != out.front().dim()) {
        throw SidecarError("embed_text: dimension disagreement across batch");
      }
    }
    return out;
  }

  EmbeddingVector EmbedImage(const std::string& image_ref) {
    Json payload = {{"image_ref", image_ref}};
    Json v = Cached(RequestKind::kEmbedImage, payload, [&] {
      Json resp = Post("/v1/embed_image", payload);
      if (!resp.contains("vector") || !resp["vector"].is_array() || !resp.contains("dim")) {
        throw SidecarError("embed_image: malformed response");
      }
      if (resp["vector"].size() != resp["dim"].get<std::size_t>()) {
        throw SidecarError("embed_image: vector length disagrees with dim");
      }
      return resp["vector"];
    });
    return {v.get<std::vector<double>>()};
  }

  std::vector<std::vector<NamedEntityMention>> AnnotateNer(
      std::span<const std::string> texts) {
    auto values = BatchedPerText(
        RequestKind::kNer, "/v1/ner", texts, [](const Json& resp, std::size_t n) {
          if (!resp.contains("mentions") || !resp["mentions"].is_array() ||
              resp["mentions"].size() != n) {
            throw SidecarError("ner: expected one mention list per text");
          }
          return std::vector<Json>(resp["mentions"].begin(), resp["mentions"].end());
        });
    std::vector<std::vector<NamedEntityMention>> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::vector<NamedEntityMention> mentions;
      for (const auto& m : values[i]) {
        try {
          auto mention = ParseMention(m, 0, std::nullopt);
          if (mention.char_span) {
            const auto& sp = *mention.char_span;
            if (sp.end > texts[i].size() ||
                std::string_view(texts[i]).substr(sp.start, sp.end - sp.start) !=
                    mention.surface) {
              throw DataError("char_span does not slice to '" + mention.surface + "'");
            }
          }
          mentions.push_back(std::move(mention));
        } catch (const DataError& e) {
          throw SidecarError(std::string("ner: ") + e.what());
        }
      }
      out.push_back(std::move(mentions));
    }
    return out;
  }

  // Triples among `mentions` of one sentence. Fewer than two mentions need
  // no request.
  std::vector<RelationTriple> ExtractRelations(
      const std::string& sentence, std::span<const NamedEntityMention> mentions,
      std::size_t sentence_index) {
    if (mentions.size() < 2) return {};
    Json list = Json::array();
    for (const auto& m : mentions) {
      Json j = {{"surface", m.surface}, {"tag", std::string(TagName(m.tag))}};
      if (m.char_span) j["char_span"] = {m.char_span->start, m.char_span->end};
      list.push_back(std::move(j));
    }
    Json payload = {{"sentence", sentence}, {"mentions", list}};
    Json triples = Cached(RequestKind::kRelations, payload, [&] {
      Json resp = Post("/v1/relations", payload);
      if (!resp.contains("triples") || !resp["triples"].is_array()) {
        throw SidecarError("relations: malformed response");
      }
      return resp["triples"];
    });
    std::vector<RelationTriple> out;
    for (const auto& t : triples) {
      std::size_t h = 0;
      std::size_t tl = 0;
      double conf = 0.0;
      std::string label;
      try {
        h = t.at("head_idx").get<std::size_t>();
        tl = t.at("tail_idx").get<std::size_t>();
        conf = t.at("confidence").get<double>();
        label = t.at("label").get<std::string>();
      } catch (const Json::exception&) {
        throw SidecarError("relations: malformed triple");
      }
      if (h >= mentions.size() || tl >= mentions.size() || h == tl) {
        throw SidecarError("relations: mention index out of range");
      }
      if (!(conf >= 0.0 && conf <= 1.0)) {
        throw SidecarError("relations: confidence outside [0, 1]");
      }
      RelationTriple rt{mentions[h], mentions[tl], label, conf, sentence_index};
      rt.head.sentence_index = sentence_index;
      rt.tail.sentence_index = sentence_index;
      out.push_back(std::move(rt));
    }
    return out;
  }

  DiskCache& cache() { return cache_; }

 private:
  static std::vector<Json> SplitEmbeddings(const Json& resp, std::size_t n) {
    if (!resp.contains("vectors") || !resp["vectors"].is_array() ||
        resp["vectors"].size() != n || !resp.contains("dim")) {
      throw SidecarError("embed_text: expected one vector per text");
    }
    auto dim = resp["dim"].get<std::size_t>();
    for (const auto& v : resp["vectors"]) {
      if (!v.is_array() || v.size() != dim) {
        throw SidecarError("embed_text: dimension disagreement across batch");
      }
    }
    return std::vector<Json>(resp["vectors"].begin(), resp["vectors"].end());
  }

  std::optional<std::string> ResolveRevision() {
    if (config_.model_revision) return config_.model_revision;
    auto stamp = cache_.dir() / "MODEL_REVISION";
    try {
      Json health = Get("/v1/health");
      if (health.value("status", "") != "ok" || !health.contains("model_revision")) {
        throw SidecarError("health check failed");
      }
      auto rev = health["model_revision"].get<std::string>();
      std::ofstream(stamp, std::ios::trunc) << rev;
      return rev;
    } catch (const SidecarError&) {
      std::ifstream in(stamp);
      std::string rev;
      if (in && std::getline(in, rev) && !rev.empty()) return rev;
      return std::nullopt;
    }
  }

  std::unique_ptr<httplib::Client> MakeClient() const {
    if (config_.url.empty()) throw SidecarError("no sidecar URL configured");
    auto cli = std::make_unique<httplib::Client>(config_.url);
    cli->set_connection_timeout(config_.timeout);
    cli->set_read_timeout(config_.timeout);
    cli->set_write_timeout(config_.timeout);
    return cli;
  }

  Json Get(const std::string& path) {
    auto cli = MakeClient();
    ++network_requests_;
    auto res = cli->Get(path);
    return Decode(res, path);
  }

  Json Post(const std::string& path, const Json& body) {
    auto cli = MakeClient();
    ++network_requests_;
    auto res = cli->Post(path, body.dump(), "application/json");
    return Decode(res, path);
  }

  Json Decode(const httplib::Result& res, const std::string& path) const {
    if (!res) {
      throw SidecarError(config_.url + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw SidecarError(config_.url + path + ": HTTP " + std::to_string(res->status));
    }
    Json body = Json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (body.is_discarded() || !body.is_object()) {
      throw SidecarError(config_.url + path + ": response is not a JSON object");
    }
    return body;
  }

  // Looks `key` up in the cache, or computes it with at most one in-flight
  // computation per key across threads.
  template <typename Compute>
  Json Cached(RequestKind kind, const Json& payload, Compute&& compute) {
    std::string key = CacheKey(kind, payload, ModelRevision());
    if (auto hit = cache_.Load(key)) return *hit;
    std::shared_future<Json> pending;
    std::promise<Json> mine;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = inflight_.find(key);
      if (it != inflight_.end()) {
        pending = it->second;
      } else {
        pending = mine.get_future().share();
        inflight_.emplace(key, pending);
        owner = true;
      }
    }
    if (!owner) return pending.get();
    try {
      Json value = compute();
      cache_.Store(key, value);
      mine.set_value(value);
    } catch (...) {
      mine.set_exception(std::current_exception());
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      inflight_.erase(key);
    }
    return pending.get();
  }

  // Per-text caching for batch endpoints: misses go out in one request.
  template <typename Split>
  std::vector<Json> BatchedPerText(RequestKind kind, const std::string& path,
                                   std::span<const std::string> texts, Split&& split) {
    const std::string& rev = ModelRevision();
    std::vector<Json> out(texts.size());
    std::vector<std::string> keys(texts.size());
    std::vector<std::size_t> owned;
    std::vector<std::promise<Json>> promises;
    std::vector<std::pair<std::size_t, std::shared_future<Json>>> waiting;
    {
      std::lock_guard<std::mutex> lock(mu_);
      std::unordered_map<std::string, std::size_t> local;
      for (std::size_t i = 0; i < texts.size(); ++i) {
        keys[i] = CacheKey(kind, Json{{"text", texts[i]}}, rev);
        if (auto hit = cache_.Load(keys[i])) {
          out[i] = std::move(*hit);
          continue;
        }
        if (auto it = inflight_.find(keys[i]); it != inflight_.end()) {
          waiting.emplace_back(i, it->second);
          continue;
        }
        promises.emplace_back();
        inflight_.emplace(keys[i], promises.back().get_future().share());
        owned.push_back(i);
      }
    }
    if (!owned.empty()) {
      try {
        Json batch = Json::array();
        for (std::size_t i : owned) batch.push_back(texts[i]);
        Json resp = Post(path, Json{{"texts", batch}});
        std::vector<Json> values = split(resp, owned.size());
        for (std::size_t j = 0; j < owned.size(); ++j) {
          cache_.Store(keys[owned[j]], values[j]);
          out[owned[j]] = values[j];
          promises[j].set_value(values[j]);
        }
      } catch (...) {
        for (auto& p : promises) {
          try {
            p.set_exception(std::current_exception());
          } catch (const std::future_error&) {
          }
        }
        Release(keys, owned);
        throw;
      }
      Release(keys, owned);
    }
    for (auto& [i, f] : waiting) out[i] = f.get();
    return out;
  }

  void Release(const std::vector<std::string>& keys, const std::vector<std::size_t>& owned) {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i : owned) inflight_.erase(keys[i]);
  }

  SidecarConfig config_;
  DiskCache cache_;
  std::once_flag revision_once_;
  std::optional<std::string> revision_;
  std::atomic<std::size_t> network_requests_{0};
  std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<Json>> inflight_;
};

// Ranks sentences with sidecar image and text embeddings.
class SidecarSimilarityProvider : public SimilarityProvider {
 public:
  explicit SidecarSimilarityProvider(SidecarClient& client) : client_(client) {}

  std::vector<ScoredSentence> Rank(const SegmentedDocument& doc) override {
    std::vector<std::string> texts;
    for (const auto& s : doc.sentences) texts.push_back(s.text);
    try {
      auto image = client_.EmbedImage(doc.document.image_ref);
      auto sentences = client_.EmbedTexts(texts);
      return CosineRankSentences(image, sentences);
    } catch (const SidecarError& e) {
      throw SidecarError("doc_id '" + doc.document.doc_id + "': " + e.what());
    }
  }

 private:
  SidecarClient& client_;
};

// Caption and per-sentence mentions from the sidecar NER endpoint.
inline DocumentAnnotations AnnotateWithSidecar(SidecarClient& client,
                                               const SegmentedDocument& doc) {
  DocumentAnnotations ann;
  ann.doc_id = doc.document.doc_id;
  std::vector<std::string> texts;
  for (const auto& s : doc.sentences) texts.push_back(s.text);
  texts.push_back(doc.document.caption);
  try {
    auto mentions = client.AnnotateNer(texts);
    ann.caption_entities = std::move(mentions.back());
    mentions.pop_back();
    for (std::size_t s = 0; s < mentions.size(); ++s) {
      for (auto& m : mentions[s]) m.sentence_index = s;
    }
    ann.sentence_entities = std::move(mentions);
  } catch (const SidecarError& e) {
    throw SidecarError("doc_id '" + doc.document.doc_id + "': " + e.what());
  }
  return ann;
}

inline std::vector<RelationTriple> RelationsWithSidecar(
    SidecarClient& client, const SegmentedDocument& doc,
    const std::vector<std::vector<NamedEntityMention>>& sentence_entities) {
  std::vector<RelationTriple> out;
  try {
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      auto t = client.ExtractRelations(doc.sentences[s].text, sentence_entities.at(s), s);
      out.insert(out.end(), t.begin(), t.end());
    }
  } catch (const SidecarError& e) {
    throw SidecarError("doc_id '" + doc.document.doc_id + "': " + e.what());
  }
  return out;
}

}  // namespace newsctx

#endif  // NEWSCTX_SIDECAR_HPP_
