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

// In-process stand-in for the model sidecar. Speaks the same HTTP/JSON
// endpoints with deterministic toy models and replays recorded golden
// exchanges when a request matches one.

#ifndef NEWSCTX_TESTS_FAKE_SIDECAR_HPP_
#define NEWSCTX_TESTS_FAKE_SIDECAR_HPP_

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "newsctx/jsonl.hpp"
#include "newsctx/text.hpp"
#include "test_util.hpp"

namespace newsctx::testing {

class FakeSidecar {
 public:
  std::string revision = "fake-rev-1";
  std::atomic<bool> bad_dim{false};
  std::atomic<bool> bad_tag{false};
  std::atomic<bool> bad_confidence{false};
  std::atomic<int> delay_ms{0};

  FakeSidecar() {
    LoadGolden(FixturePath("sidecar_golden") / "ner_murray.json");
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      Count("/v1/health");
      Reply(res, Json{{"status", "ok"}, {"model_revision", revision}});
    });
    server_.Post("/v1/embed_text", [this](const httplib::Request& req, httplib::Response& res) {
      Json body = Count("/v1/embed_text", req);
      Json vectors = Json::array();
      for (const auto& t : body["texts"]) vectors.push_back(TextVector(t.get<std::string>()));
      if (bad_dim && vectors.size() > 1) vectors[1].push_back(0.5);
      Reply(res, Json{{"dim", 4}, {"vectors", vectors}});
    });
    server_.Post("/v1/embed_image", [this](const httplib::Request& req, httplib::Response& res) {
      Json body = Count("/v1/embed_image", req);
      Pause();
      Reply(res, Json{{"dim", 4}, {"vector", TextVector(body["image_ref"].get<std::string>())}});
    });
    server_.Post("/v1/ner", [this](const httplib::Request& req, httplib::Response& res) {
      Json body = Count("/v1/ner", req);
      if (auto it = golden_.find(body.dump()); it != golden_.end()) {
        Reply(res, it->second);
        return;
      }
      Json all = Json::array();
      for (const auto& t : body["texts"]) all.push_back(Mentions(t.get<std::string>()));
      Reply(res, Json{{"mentions", all}});
    });
    server_.Post("/v1/relations", [this](const httplib::Request& req, httplib::Response& res) {
      Json body = Count("/v1/relations", req);
      Json triples = Json::array();
      const auto& m = body["mentions"];
      for (std::size_t h = 0; h < m.size(); ++h) {
        for (std::size_t t = 0; t < m.size(); ++t) {
          if (h == t || m[h]["tag"] != "PERSON" || m[t]["tag"] == "PERSON") continue;
          triples.push_back({{"head_idx", h}, {"tail_idx", t}, {"label", "related_to"},
                             {"confidence", bad_confidence ? 1.5 : 0.9}});
        }
      }
      Reply(res, Json{{"triples", triples}});
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeSidecar() { Stop(); }

  void Stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  int hits(const std::string& path) {
    std::lock_guard<std::mutex> lock(mu_);
    return hits_[path];
  }

  Json last_body(const std::string& path) {
    std::lock_guard<std::mutex> lock(mu_);
    return last_[path];
  }

  // Toy embedding: letter statistics, never zero.
  static Json TextVector(const std::string& t) {
    double a = 0, e = 0, upper = 0;
    for (char c : t) {
      a += c == 'a' || c == 'A';
      e += c == 'e' || c == 'E';
      upper += c >= 'A' && c <= 'Z';
    }
    return Json::array({1.0, a, e, upper + static_cast<double>(WordCount(t))});
  }

  // Toy NER: capitalized words not at sentence start are PERSON, words
  // naming a weekday are DATE.
  Json Mentions(const std::string& text) const {
    static const std::vector<std::string> days = {"Monday", "Tuesday", "Wednesday", "Thursday",
                                                  "Friday", "Saturday", "Sunday"};
    Json out = Json::array();
    std::size_t i = 0;
    bool first = true;
    while (i < text.size()) {
      while (i < text.size() && IsSpace(text[i])) ++i;
      std::size_t b = i;
      while (i < text.size() && !IsSpace(text[i])) ++i;
      std::size_t e = i;
      while (e > b && !std::isalnum(static_cast<unsigned char>(text[e - 1]))) --e;
      if (e == b) continue;
      std::string w = text.substr(b, e - b);
      bool is_day = std::find(days.begin(), days.end(), w) != days.end();
      if (is_day || (!first && w[0] >= 'A' && w[0] <= 'Z')) {
        out.push_back({{"surface", w},
                       {"tag", bad_tag ? "WORK_OF_ART" : (is_day ? "DATE" : "PERSON")},
                       {"char_span", {b, e}}});
      }
      first = false;
    }
    return out;
  }

 private:
  void LoadGolden(const std::filesystem::path& p) {
    Json g = Json::parse(ReadFile(p));
    golden_[g["request"].dump()] = g["response"];
  }

  Json Count(const std::string& path, const httplib::Request& req) {
    Json body = Json::parse(req.body);
    std::lock_guard<std::mutex> lock(mu_);
    ++hits_[path];
    last_[path] = body;
    return body;
  }

  void Count(const std::string& path) {
    std::lock_guard<std::mutex> lock(mu_);
    ++hits_[path];
  }

  void Pause() const {
    if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms.load()));
  }

  static void Reply(httplib::Response& res, const Json& j) {
    res.set_content(j.dump(), "application/json");
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::mutex mu_;
  std::map<std::string, int> hits_;
  std::map<std::string, Json> last_;
  std::map<std::string, Json> golden_;
};

}  // namespace newsctx::testing

#endif  // NEWSCTX_TESTS_FAKE_SIDECAR_HPP_
