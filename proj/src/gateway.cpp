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

#include "asee/gateway.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "asee/errors.hpp"
#include "asee/text.hpp"
#include "nlohmann/json.hpp"

namespace asee::gateway {

using nlohmann::json;

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::generation:
      return "generation";
    case BackendKind::embedding:
      return "embedding";
    case BackendKind::rerank:
      break;
  }
  return "rerank";
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "generation") return BackendKind::generation;
  if (name == "embedding") return BackendKind::embedding;
  if (name == "rerank") return BackendKind::rerank;
  throw InvalidArgument("unknown backend kind '" + std::string(name) + "'");
}

void BackendConfig::validate() const {
  if (endpoint.empty()) throw InvalidArgument("backend endpoint is empty");
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
  if (retry_limit < 0 || retry_limit > kMaxRetryLimit) {
    throw InvalidArgument("retry_limit must be in [0, 10]");
  }
  if (timeout_ms < 1) throw InvalidArgument("timeout_ms must be >= 1");
  if (prompt_char_cap < 1) throw InvalidArgument("prompt_char_cap must be >= 1");
}

void GenerationRequest::validate() const {
  if (prompt.empty()) throw InvalidArgument("generation prompt is empty");
  if (max_output_tokens < 1) throw InvalidArgument("max_output_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine of vectors with dimensions " +
                            std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(std::span<const double>(a.values),
                           std::span<const double>(b.values));
}

// ---------------------------------------------------------------------------
// Mocks.

ScriptedGenerator::ScriptedGenerator(std::map<std::string, std::string> table,
                                     Responder responder)
    : table_(std::move(table)), responder_(std::move(responder)) {}

std::shared_ptr<ScriptedGenerator> ScriptedGenerator::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock script '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("mock script '" + path + "': " + e.what(), 0);
  }
  if (!doc.is_object()) throw ParseError("mock script must be a JSON object", 0);
  std::map<std::string, std::string> table;
  for (const auto& [prompt, reply] : doc.items()) {
    if (!reply.is_string()) throw ParseError("mock reply for a prompt is not a string", 0);
    table.emplace(prompt, reply.get<std::string>());
  }
  return std::make_shared<ScriptedGenerator>(std::move(table));
}

std::string ScriptedGenerator::complete(const GenerationRequest& request) {
  if (responder_) {
    if (auto reply = responder_(request.prompt)) return *reply;
  }
  auto it = table_.find(request.prompt);
  return it == table_.end() ? std::string(kFallback) : it->second;
}

std::vector<double> HashingEmbedder::features(const std::string& text) {
  std::vector<double> v(kDimension, 0.0);
  auto add = [&v](std::string_view feature) {
    const std::uint64_t h = text::fnv1a64(feature);
    v[h % kDimension] += (h >> 63) ? -1.0 : 1.0;
  };
  for (const auto& token : text::tokenize(text)) add(token);
  const bool all_zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  if (all_zero) add(text);
  return v;
}

std::vector<std::vector<double>> HashingEmbedder::embed(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(features(t));
  return out;
}

std::vector<double> OverlapReranker::score(const std::string& query,
                                           std::span<const std::string> documents) {
  const auto query_tokens = text::tokenize(query);
  const std::set<std::string> q(query_tokens.begin(), query_tokens.end());
  std::vector<double> scores;
  scores.reserve(documents.size());
  for (const auto& doc : documents) {
    const auto doc_tokens = text::tokenize(doc);
    const std::set<std::string> d(doc_tokens.begin(), doc_tokens.end());
    double shared = 0.0;
    for (const auto& t : q) shared += d.count(t) ? 1.0 : 0.0;
    scores.push_back(shared);
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Retry, limiter.

std::chrono::milliseconds RetryPolicy::delay(int attempt, double unit_random) {
  const double base = static_cast<double>(kBase.count()) *
                      std::pow(kFactor, std::max(0, attempt - 1));
  const double jitter = 1.0 + kJitter * (2.0 * unit_random - 1.0);
  return std::chrono::milliseconds(static_cast<long long>(std::llround(base * jitter)));
}

struct InFlightLimiter::State {
  std::mutex mutex;
  std::condition_variable cv;
  int in_flight = 0;
};

InFlightLimiter::InFlightLimiter(int max_in_flight)
    : state_(std::make_shared<State>()), max_(max_in_flight) {
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(state_->mutex);
  state_->cv.wait(lock, [this] { return state_->in_flight < max_; });
  ++state_->in_flight;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(state_->mutex);
    --state_->in_flight;
  }
  state_->cv.notify_one();
}

namespace detail {

ClientCore::ClientCore(BackendConfig cfg, Sleeper sleep)
    : config(std::move(cfg)), limiter(config.max_in_flight), sleeper(std::move(sleep)) {
  config.validate();
  if (!sleeper) {
    sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

template <typename F>
auto ClientCore::with_retries(F&& call) -> decltype(call()) {
  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0;; ++attempt) {
    try {
      InFlightLimiter::Guard guard(limiter);
      return call();
    } catch (const TransportError& e) {
      if (attempt >= config.retry_limit) {
        throw TransportError(std::string(e.what()) + " (after " +
                             std::to_string(attempt + 1) + " attempts)");
      }
      const auto wait = RetryPolicy::delay(attempt + 1, unit(jitter_rng));
      spdlog::warn("{} backend transient failure, retry {}/{} in {} ms: {}",
                   to_string(config.kind), attempt + 1, config.retry_limit,
                   wait.count(), e.what());
      sleeper(wait);
    }
  }
}

}  // namespace detail

namespace {

void require_kind(const BackendConfig& config, BackendKind expected) {
  if (config.kind != expected) {
    throw InvalidArgument("backend configured as '" + std::string(to_string(config.kind)) +
                          "' used for " + std::string(to_string(expected)));
  }
}

}  // namespace

GenerationClient::GenerationClient(BackendConfig config,
                                   std::shared_ptr<GenerationBackend> backend,
                                   Sleeper sleeper)
    : core_(std::make_shared<detail::ClientCore>(std::move(config), std::move(sleeper))),
      backend_(std::move(backend)) {
  require_kind(core_->config, BackendKind::generation);
  if (!backend_) throw InvalidArgument("generation backend is null");
}

std::string GenerationClient::generate(const GenerationRequest& request) const {
  request.validate();
  const std::size_t length = text::code_point_length(request.prompt);
  if (length > core_->config.prompt_char_cap) {
    throw PromptTooLarge(length, core_->config.prompt_char_cap);
  }
  return core_->with_retries([&] { return backend_->complete(request); });
}

EmbeddingClient::EmbeddingClient(BackendConfig config,
                                 std::shared_ptr<EmbeddingBackend> backend,
                                 Sleeper sleeper)
    : core_(std::make_shared<detail::ClientCore>(std::move(config), std::move(sleeper))),
      backend_(std::move(backend)),
      dimension_(std::make_shared<std::size_t>(0)),
      dimension_mutex_(std::make_shared<std::mutex>()) {
  require_kind(core_->config, BackendKind::embedding);
  if (!backend_) throw InvalidArgument("embedding backend is null");
}

std::vector<EmbeddingVector> EmbeddingClient::embed(std::span<const std::string> texts) const {
  if (texts.empty()) throw EmptyInput("embed called with no texts");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw EmptyInput("text " + std::to_string(i) + " is empty");
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::string id = backend_->id();
  for (std::size_t start = 0; start < texts.size(); start += kBatchSize) {
    const auto batch = texts.subspan(start, std::min(kBatchSize, texts.size() - start));
    auto raw = core_->with_retries([&] { return backend_->embed(batch); });
    if (raw.size() != batch.size()) {
      throw TransportError("embedding backend returned " + std::to_string(raw.size()) +
                           " vectors for " + std::to_string(batch.size()) + " texts");
    }
    for (auto& values : raw) {
      {
        std::lock_guard lock(*dimension_mutex_);
        if (*dimension_ == 0) *dimension_ = values.size();
        if (values.empty() || values.size() != *dimension_) {
          throw DimensionMismatch("embedding backend changed dimension from " +
                                  std::to_string(*dimension_) + " to " +
                                  std::to_string(values.size()));
        }
      }
      double norm = 0.0;
      for (double x : values) norm += x * x;
      norm = std::sqrt(norm);
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error("embedding backend returned a zero or non-finite vector");
      }
      for (double& x : values) x /= norm;
      out.push_back(EmbeddingVector{std::move(values), id});
    }
  }
  return out;
}

RerankClient::RerankClient(BackendConfig config, std::shared_ptr<RerankBackend> backend,
                           Sleeper sleeper)
    : core_(std::make_shared<detail::ClientCore>(std::move(config), std::move(sleeper))),
      backend_(std::move(backend)) {
  require_kind(core_->config, BackendKind::rerank);
  if (!backend_) throw InvalidArgument("rerank backend is null");
}

std::vector<double> RerankClient::score(const std::string& query,
                                        std::span<const std::string> documents) const {
  if (documents.empty()) return {};
  auto scores = core_->with_retries([&] { return backend_->score(query, documents); });
  if (scores.size() != documents.size()) {
    throw TransportError("reranker returned " + std::to_string(scores.size()) +
                         " scores for " + std::to_string(documents.size()) + " documents");
  }
  return scores;
}

GenerationClient make_generation_client(const BackendConfig& config, Responder responder) {
  if (!config.is_mock()) {
    return GenerationClient(config, std::make_shared<HttpGenerationBackend>(config));
  }
  std::map<std::string, std::string> table;
  if (!config.mock_script.empty()) {
    auto scripted = ScriptedGenerator::from_file(config.mock_script);
    if (!responder) return GenerationClient(config, scripted);
    // Table lookups still apply when the responder declines.
    return GenerationClient(
        config, std::make_shared<ScriptedGenerator>(
                    std::map<std::string, std::string>{},
                    [scripted, responder](const std::string& prompt)
                        -> std::optional<std::string> {
                      if (auto r = responder(prompt)) return r;
                      return scripted->complete(GenerationRequest{prompt});
                    }));
  }
  return GenerationClient(config,
                          std::make_shared<ScriptedGenerator>(std::move(table), responder));
}

EmbeddingClient make_embedding_client(const BackendConfig& config) {
  if (config.is_mock()) return EmbeddingClient(config, std::make_shared<HashingEmbedder>());
  return EmbeddingClient(config, std::make_shared<HttpEmbeddingBackend>(config));
}

RerankClient make_rerank_client(const BackendConfig& config) {
  if (config.is_mock()) return RerankClient(config, std::make_shared<OverlapReranker>());
  return RerankClient(config, std::make_shared<HttpRerankBackend>(config));
}

}  // namespace asee::gateway
