// Copyright 2026 The ASEE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cmath>
#include <thread>

#include "asee/errors.hpp"
#include "asee/gateway.hpp"
#include "asee/text.hpp"
#include "doctest.h"
#include "httplib.h"
#include "nlohmann/json.hpp"
#include "support.hpp"

using namespace asee;
using namespace asee::gateway;
using namespace std::chrono_literals;

namespace {

BackendConfig config_of(BackendKind kind, int retry_limit = 3, int max_in_flight = 4) {
  BackendConfig c;
  c.kind = kind;
  c.retry_limit = retry_limit;
  c.max_in_flight = max_in_flight;
  return c;
}

struct SleepLog {
  std::vector<std::chrono::milliseconds> waits;
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { waits.push_back(d); };
  }
};

class FlakyGenerator final : public GenerationBackend {
 public:
  explicit FlakyGenerator(int failures, bool refuse = false)
      : failures_(failures), refuse_(refuse) {}
  std::string id() const override { return "flaky"; }
  std::string complete(const GenerationRequest& request) override {
    ++calls;
    if (refuse_) throw BackendRefused("quota exhausted");
    if (calls <= failures_) throw TransportError("connection reset");
    return "ok:" + request.prompt;
  }
  std::atomic<int> calls{0};

 private:
  int failures_;
  bool refuse_;
};

class CountingGenerator final : public GenerationBackend {
 public:
  std::string id() const override { return "counting"; }
  std::string complete(const GenerationRequest&) override {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(3ms);
    --active;
    return "done";
  }
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
};

class FixedEmbedder final : public EmbeddingBackend {
 public:
  std::string id() const override { return "fixed"; }
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    ++calls;
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) {
      if (t == "zero") {
        out.push_back({0.0, 0.0});
      } else if (t == "wide") {
        out.push_back({1.0, 1.0, 1.0});
      } else {
        out.push_back({3.0, 4.0});
      }
    }
    return out;
  }
  int calls = 0;
};

// Independent re-derivation of the hashing embedder: FNV-1a written out
// here, bucket and sign rule applied, then L2 normalization.
std::vector<double> oracle_embedding(const std::string& text) {
  auto fnv = [](std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  };
  std::vector<double> v(64, 0.0);
  auto add = [&](std::string_view f) {
    const std::uint64_t h = fnv(f);
    v[h % 64] += (h & (1ULL << 63)) ? -1.0 : 1.0;
  };
  for (const auto& t : text::tokenize(text)) add(t);
  bool zero = true;
  for (double x : v) zero = zero && x == 0.0;
  if (zero) add(text);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  for (double& x : v) x /= std::sqrt(norm);
  return v;
}

}  // namespace

TEST_CASE("retry delays double from 250 ms with bounded jitter") {
  CHECK(RetryPolicy::delay(1, 0.5) == 250ms);
  CHECK(RetryPolicy::delay(2, 0.5) == 500ms);
  CHECK(RetryPolicy::delay(3, 0.5) == 1000ms);
  CHECK(RetryPolicy::delay(3, 0.0) == 800ms);
  CHECK(RetryPolicy::delay(1, 0.999999) == 300ms);
}

TEST_CASE("transient failures are retried with backoff") {
  auto backend = std::make_shared<FlakyGenerator>(2);
  SleepLog log;
  GenerationClient client(config_of(BackendKind::generation), backend, log.sleeper());
  CHECK(client.generate({.prompt = "hi"}) == "ok:hi");
  CHECK(backend->calls == 3);
  REQUIRE(log.waits.size() == 2);
  CHECK(log.waits[0] >= 200ms);
  CHECK(log.waits[0] <= 300ms);
  CHECK(log.waits[1] >= 400ms);
  CHECK(log.waits[1] <= 600ms);
}

TEST_CASE("retries stop at retry_limit") {
  auto backend = std::make_shared<FlakyGenerator>(100);
  SleepLog log;
  GenerationClient client(config_of(BackendKind::generation, 2), backend, log.sleeper());
  CHECK_THROWS_AS(client.generate({.prompt = "hi"}), TransportError);
  CHECK(backend->calls == 3);
  CHECK(log.waits.size() == 2);
}

TEST_CASE("refusals are never retried") {
  auto backend = std::make_shared<FlakyGenerator>(0, true);
  SleepLog log;
  GenerationClient client(config_of(BackendKind::generation), backend, log.sleeper());
  CHECK_THROWS_AS(client.generate({.prompt = "hi"}), BackendRefused);
  CHECK(backend->calls == 1);
  CHECK(log.waits.empty());
}

TEST_CASE("in-flight requests never exceed max_in_flight") {
  auto backend = std::make_shared<CountingGenerator>();
  GenerationClient client(config_of(BackendKind::generation, 0, 3), backend);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&client] {
      for (int j = 0; j < 4; ++j) client.generate({.prompt = "p"});
    });
  }
  threads.clear();
  CHECK(backend->peak <= 3);
  CHECK(backend->peak >= 1);
}

TEST_CASE("oversized prompts are rejected before any call") {
  auto backend = std::make_shared<FlakyGenerator>(0);
  auto cfg = config_of(BackendKind::generation);
  cfg.prompt_char_cap = 5;
  GenerationClient client(cfg, backend);
  CHECK(client.generate({.prompt = "地震地震地"}) == "ok:地震地震地");
  CHECK_THROWS_AS(client.generate({.prompt = "abcdef"}), PromptTooLarge);
  CHECK(backend->calls == 1);
}

TEST_CASE("request and config validation") {
  CHECK_THROWS_AS(GenerationClient(config_of(BackendKind::embedding),
                                   std::make_shared<FlakyGenerator>(0)),
                  InvalidArgument);
  CHECK_THROWS_AS(GenerationClient(config_of(BackendKind::generation, 11),
                                   std::make_shared<FlakyGenerator>(0)),
                  InvalidArgument);
  GenerationClient client(config_of(BackendKind::generation), std::make_shared<FlakyGenerator>(0));
  CHECK_THROWS_AS(client.generate({.prompt = ""}), InvalidArgument);
  GenerationRequest bad{"x"};
  bad.temperature = -1;
  CHECK_THROWS_AS(client.generate(bad), InvalidArgument);
}

TEST_CASE("embedding client normalizes and validates") {
  auto backend = std::make_shared<FixedEmbedder>();
  EmbeddingClient client(config_of(BackendKind::embedding), backend);
  const std::vector<std::string> texts{"a", "b"};
  const auto v = client.embed(texts);
  REQUIRE(v.size() == 2);
  CHECK(v[0].values == std::vector<double>{0.6, 0.8});
  CHECK(v[0].backend_id == "fixed");

  CHECK_THROWS_AS(client.embed(std::vector<std::string>{}), EmptyInput);
  CHECK_THROWS_AS(client.embed(std::vector<std::string>{"a", ""}), EmptyInput);
  CHECK_THROWS_AS(client.embed(std::vector<std::string>{"wide"}), DimensionMismatch);
  CHECK_THROWS_AS(client.embed(std::vector<std::string>{"zero"}), Error);
}

TEST_CASE("embedding requests are batched") {
  auto backend = std::make_shared<FixedEmbedder>();
  EmbeddingClient client(config_of(BackendKind::embedding), backend);
  const std::vector<std::string> texts(130, "t");
  CHECK(client.embed(texts).size() == 130);
  CHECK(backend->calls == 3);
}

TEST_CASE("hashing embedder matches an independent oracle") {
  auto client = make_embedding_client(config_of(BackendKind::embedding));
  asee::testing::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    const std::size_t na = asee::testing::uniform(rng, 0, 8);
    const std::size_t nb = asee::testing::uniform(rng, 1, 8);
    for (std::size_t i = 0; i < na; ++i) a += asee::testing::pseudo_word(rng, 1) + " ";
    for (std::size_t i = 0; i < nb; ++i) b += asee::testing::pseudo_word(rng, 1) + " ";
    if (a.empty()) a = "?!";
    const std::vector<std::string> texts{a, b};
    const auto got = client.embed(texts);
    const auto oa = oracle_embedding(a);
    const auto ob = oracle_embedding(b);
    for (std::size_t i = 0; i < 64; ++i) REQUIRE(got[0].values[i] == doctest::Approx(oa[i]).epsilon(1e-12));
    double dot = 0.0;
    for (std::size_t i = 0; i < 64; ++i) dot += oa[i] * ob[i];
    CHECK(cosine_similarity(got[0], got[1]) == doctest::Approx(dot).epsilon(1e-12));
  }
}

TEST_CASE("cosine similarity edge cases") {
  const std::vector<double> x{1, 0}, y{0, 2}, z{0, 0}, w{1, 2, 3};
  CHECK(cosine_similarity(x, y) == 0.0);
  CHECK(cosine_similarity(x, x) == 1.0);
  CHECK(cosine_similarity(x, z) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(x, w), DimensionMismatch);
}

TEST_CASE("scripted generator: responder, table, fallback") {
  ScriptedGenerator gen({{"a", "A"}}, [](const std::string& p) -> std::optional<std::string> {
    if (p == "r") return "R";
    return std::nullopt;
  });
  CHECK(gen.complete({.prompt = "a"}) == "A");
  CHECK(gen.complete({.prompt = "r"}) == "R");
  CHECK(gen.complete({.prompt = "zzz"}) == ScriptedGenerator::kFallback);

  asee::testing::TempDir dir;
  asee::testing::spit(dir.file("script.json"), R"({"p1":"reply one"})");
  auto cfg = config_of(BackendKind::generation);
  cfg.mock_script = dir.file("script.json");
  auto client = make_generation_client(cfg);
  CHECK(client.generate({.prompt = "p1"}) == "reply one");
  CHECK(client.generate({.prompt = "p2"}) == "UNKNOWN");
}

TEST_CASE("overlap reranker counts shared distinct tokens") {
  OverlapReranker r;
  const std::vector<std::string> docs{"quake quake city", "flood", "city quake damage"};
  CHECK(r.score("quake in the city", docs) == std::vector<double>{2, 0, 2});
}

TEST_CASE("HTTP backends speak the JSON wire formats") {
  httplib::Server server;
  std::atomic<int> flaky_calls{0};
  server.Post("/gen", [](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer s3cret") {
      res.status = 401;
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply = {{"choices", {{{"text", "echo:" + body["prompt"].get<std::string>()}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/chat", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"message":{"content":"hi"}}]})", "application/json");
  });
  server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
    if (++flaky_calls <= 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"text":"recovered"}]})", "application/json");
  });
  server.Post("/deny", [](const httplib::Request&, httplib::Response& res) { res.status = 403; });
  server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "text/html");
  });
  server.Post("/emb", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json data = nlohmann::json::array();
    const auto n = body["input"].size();
    for (std::size_t i = n; i-- > 0;) {
      data.push_back({{"index", i}, {"embedding", {static_cast<double>(i + 1), 1.0}}});
    }
    res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
  });
  server.Post("/rerank", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json results = nlohmann::json::array();
    for (std::size_t i = 0; i < body["documents"].size(); ++i) {
      results.push_back({{"index", i}, {"relevance_score", 10.0 - static_cast<double>(i)}});
    }
    res.set_content(nlohmann::json{{"results", results}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::jthread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  ::setenv("ASEE_TEST_TOKEN", "s3cret", 1);
  SleepLog log;
  auto cfg = config_of(BackendKind::generation);
  cfg.endpoint = base + "/gen";
  cfg.auth_token_env = "ASEE_TEST_TOKEN";
  GenerationClient gen(cfg, std::make_shared<HttpGenerationBackend>(cfg), log.sleeper());
  CHECK(gen.generate({.prompt = "ping"}) == "echo:ping");

  auto chat = cfg;
  chat.endpoint = base + "/chat";
  CHECK(make_generation_client(chat).generate({.prompt = "x"}) == "hi");

  auto flaky = cfg;
  flaky.endpoint = base + "/flaky";
  GenerationClient flaky_client(flaky, std::make_shared<HttpGenerationBackend>(flaky), log.sleeper());
  CHECK(flaky_client.generate({.prompt = "x"}) == "recovered");
  CHECK(flaky_calls == 3);

  auto deny = cfg;
  deny.endpoint = base + "/deny";
  CHECK_THROWS_AS(GenerationClient(deny, std::make_shared<HttpGenerationBackend>(deny), log.sleeper())
                      .generate({.prompt = "x"}),
                  BackendRefused);

  auto garbage = cfg;
  garbage.endpoint = base + "/garbage";
  garbage.retry_limit = 0;
  CHECK_THROWS_AS(make_generation_client(garbage).generate({.prompt = "x"}), TransportError);

  auto no_token = cfg;
  no_token.auth_token_env = "ASEE_TEST_TOKEN_UNSET";
  CHECK_THROWS_AS(make_generation_client(no_token).generate({.prompt = "x"}), BackendRefused);

  auto emb = config_of(BackendKind::embedding);
  emb.endpoint = base + "/emb";
  const auto vectors = make_embedding_client(emb).embed(std::vector<std::string>{"a", "b"});
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0].values[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(vectors[1].values[0] == doctest::Approx(2.0 / std::sqrt(5.0)));

  auto rr = config_of(BackendKind::rerank);
  rr.endpoint = base + "/rerank";
  CHECK(make_rerank_client(rr).score("q", std::vector<std::string>{"d1", "d2"}) ==
        std::vector<double>{10.0, 9.0});

  auto closed = cfg;
  closed.endpoint = "http://127.0.0.1:1/gen";
  closed.retry_limit = 1;
  closed.timeout_ms = 500;
  CHECK_THROWS_AS(GenerationClient(closed, std::make_shared<HttpGenerationBackend>(closed), log.sleeper())
                      .generate({.prompt = "x"}),
                  TransportError);

  server.stop();
}
