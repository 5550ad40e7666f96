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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fake_sidecar.hpp"
#include "newsctx/sidecar.hpp"
#include "test_util.hpp"

namespace newsctx {
namespace {

using testing::FakeSidecar;
using testing::TempDir;

SidecarConfig Config(const std::string& url, const std::filesystem::path& cache) {
  SidecarConfig c;
  c.url = url;
  c.cache_dir = cache;
  c.timeout = std::chrono::seconds(5);
  return c;
}

// A port nothing listens on: bind, read the port, close.
std::string DeadUrl() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return "http://127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(Sha256Hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(Sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CacheKey, DeterministicAndRevisionSensitive) {
  Json a = Json::parse(R"({"texts":["x"],"b":1})");
  Json b = Json::parse(R"({"b":1,"texts":["x"]})");
  EXPECT_EQ(CacheKey(RequestKind::kNer, a, "r1"), CacheKey(RequestKind::kNer, b, "r1"));
  EXPECT_NE(CacheKey(RequestKind::kNer, a, "r1"), CacheKey(RequestKind::kNer, a, "r2"));
  EXPECT_NE(CacheKey(RequestKind::kNer, a, "r1"), CacheKey(RequestKind::kEmbedText, a, "r1"));
}

TEST(DiskCache, RoundTripBitExact) {
  DiskCache cache(TempDir("cache"));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 50; ++i) {
    Json v = Json::array();
    for (int k = 0; k < 64; ++k) v.push_back(u(rng));
    v.push_back(0.1);
    v.push_back(1e-310);
    std::string key = Sha256Hex(std::to_string(i));
    cache.Store(key, v);
    auto back = cache.Load(key);
    ASSERT_TRUE(back.has_value());
    auto a = v.get<std::vector<double>>();
    auto b = back->get<std::vector<double>>();
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
  }
}

TEST(DiskCache, CorruptEntryIsMiss) {
  DiskCache cache(TempDir("cache"));
  std::string key = Sha256Hex("k");
  cache.Store(key, Json{{"v", 1}});
  auto path = cache.PathFor(key);
  std::string text = testing::ReadFile(path);
  text.replace(text.find("\"v\":1"), 5, "\"v\":2");
  testing::WriteFile(path, text);
  EXPECT_FALSE(cache.Load(key).has_value());
  EXPECT_FALSE(cache.Load(Sha256Hex("missing")).has_value());
}

TEST(SidecarClient, EmbedTextsShapeAndCache) {
  FakeSidecar fake;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  std::vector<std::string> texts = {"a", "b"};
  auto v = client.EmbedTexts(texts);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].dim(), v[1].dim());
  std::size_t before = client.network_requests();
  auto again = client.EmbedTexts(texts);
  EXPECT_EQ(client.network_requests(), before);
  EXPECT_EQ(again, v);
  EXPECT_EQ(fake.hits("/v1/embed_text"), 1);
}

TEST(SidecarClient, OnlyMissesGoOverTheWire) {
  FakeSidecar fake;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  client.EmbedTexts(std::vector<std::string>{"a", "b"});
  client.EmbedTexts(std::vector<std::string>{"b", "c", "a"});
  EXPECT_EQ(fake.hits("/v1/embed_text"), 2);
  EXPECT_EQ(fake.last_body("/v1/embed_text")["texts"], Json::array({"c"}));
}

TEST(SidecarClient, WarmCacheWithSidecarDown) {
  auto dir = TempDir("sc");
  std::vector<std::string> texts = {"Murray won.", "Rain fell."};
  std::vector<EmbeddingVector> first;
  {
    FakeSidecar fake;
    SidecarClient client(Config(fake.url(), dir));
    first = client.EmbedTexts(texts);
    client.EmbedImage("img.jpg");
    client.AnnotateNer(texts);
  }
  // Revision comes from the remembered stamp, not the dead server.
  SidecarClient offline(Config(DeadUrl(), dir));
  EXPECT_EQ(offline.EmbedTexts(texts), first);
  EXPECT_NO_THROW(offline.EmbedImage("img.jpg"));
  EXPECT_NO_THROW(offline.AnnotateNer(texts));
  EXPECT_EQ(offline.ModelRevision(), "fake-rev-1");
  EXPECT_THROW(offline.EmbedImage("other.jpg"), SidecarError);
}

TEST(SidecarClient, RevisionChangeInvalidates) {
  FakeSidecar fake;
  auto dir = TempDir("sc");
  SidecarClient a(Config(fake.url(), dir));
  a.EmbedImage("img.jpg");
  auto cfg = Config(fake.url(), dir);
  cfg.model_revision = "pinned-2";
  SidecarClient b(cfg);
  b.EmbedImage("img.jpg");
  EXPECT_EQ(fake.hits("/v1/embed_image"), 2);
}

TEST(SidecarClient, TransportFailureNamesEndpoint) {
  auto url = DeadUrl();
  auto cfg = Config(url, TempDir("sc"));
  cfg.model_revision = "r";
  SidecarClient client(cfg);
  try {
    client.EmbedImage("x.jpg");
    FAIL();
  } catch (const SidecarError& e) {
    EXPECT_NE(std::string(e.what()).find(url + "/v1/embed_image"), std::string::npos) << e.what();
  }
  SidecarClient no_rev(Config(url, TempDir("sc")));
  EXPECT_THROW(no_rev.ModelRevision(), SidecarError);
}

TEST(SidecarClient, DimensionDisagreement) {
  FakeSidecar fake;
  fake.bad_dim = true;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  EXPECT_THROW(client.EmbedTexts(std::vector<std::string>{"a", "b"}), SidecarError);
}

TEST(SidecarClient, NerGoldenReplay) {
  FakeSidecar fake;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  auto m = client.AnnotateNer(std::vector<std::string>{"Murray won."});
  ASSERT_EQ(m.size(), 1u);
  ASSERT_EQ(m[0].size(), 1u);
  EXPECT_EQ(m[0][0].surface, "Murray");
  EXPECT_EQ(m[0][0].tag, EntityTag::kPerson);
}

TEST(SidecarClient, NerTagOutsideTaxonomy) {
  FakeSidecar fake;
  fake.bad_tag = true;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  try {
    client.AnnotateNer(std::vector<std::string>{"They met Ann today."});
    FAIL();
  } catch (const SidecarError& e) {
    EXPECT_NE(std::string(e.what()).find("WORK_OF_ART"), std::string::npos);
  }
}

TEST(SidecarClient, RelationsNeedTwoMentions) {
  FakeSidecar fake;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  client.ModelRevision();
  std::size_t before = client.network_requests();
  std::vector<NamedEntityMention> one = {MakeMention("Murray", EntityTag::kPerson)};
  EXPECT_TRUE(client.ExtractRelations("Murray won.", one, 0).empty());
  EXPECT_TRUE(client.ExtractRelations("Won.", {}, 0).empty());
  EXPECT_EQ(client.network_requests(), before);
}

TEST(SidecarClient, RelationsValidated) {
  FakeSidecar fake;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  std::vector<NamedEntityMention> two = {MakeMention("Murray", EntityTag::kPerson),
                                         MakeMention("Tuesday", EntityTag::kDate)};
  auto t = client.ExtractRelations("Murray returned on Tuesday.", two, 6);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].head.surface, "Murray");
  EXPECT_EQ(t[0].tail.surface, "Tuesday");
  EXPECT_EQ(t[0].sentence_index, 6u);
  EXPECT_GE(t[0].confidence, 0.0);
  EXPECT_LE(t[0].confidence, 1.0);
  fake.bad_confidence = true;
  SidecarClient fresh(Config(fake.url(), TempDir("sc")));
  EXPECT_THROW(fresh.ExtractRelations("Murray returned on Tuesday.", two, 6), SidecarError);
}

TEST(SidecarClient, ConcurrentDuplicatesSuppressed) {
  FakeSidecar fake;
  fake.delay_ms = 200;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  client.ModelRevision();
  std::vector<std::thread> threads;
  std::vector<EmbeddingVector> results(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { results[i] = client.EmbedImage("same.jpg"); });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(fake.hits("/v1/embed_image"), 1);
  for (const auto& r : results) EXPECT_EQ(r, results[0]);
}

TEST(SidecarPipeline, AnnotateAndRank) {
  FakeSidecar fake;
  SidecarClient client(Config(fake.url(), TempDir("sc")));
  NewsDocument d{"s1", "T", {"Fans cheered Murray on Tuesday. Rain fell."}, "Players met Murray.",
                 "img.jpg", 0};
  auto seg = SegmentSentences(d);
  auto ann = AnnotateWithSidecar(client, seg);
  ASSERT_TRUE(ann.sentence_entities.has_value());
  ASSERT_EQ(ann.sentence_entities->size(), 2u);
  EXPECT_EQ(SurfacesOf((*ann.sentence_entities)[0]), (SurfaceSet{"Murray", "Tuesday"}));
  EXPECT_EQ(SurfacesOf(ann.caption_entities), (SurfaceSet{"Murray"}));
  EXPECT_NO_THROW(ValidateAnnotations(ann, seg));
  auto triples = RelationsWithSidecar(client, seg, *ann.sentence_entities);
  ASSERT_EQ(triples.size(), 1u);
  SidecarSimilarityProvider provider(client);
  EXPECT_EQ(provider.Rank(seg).size(), 2u);
}

}  // namespace
}  // namespace newsctx
