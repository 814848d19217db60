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

// Uniform access to text-generation, embedding and reranking services.
//
// A backend does the raw I/O; a client wraps a backend with the contract
// every caller relies on:
//
//  * at most `max_in_flight` outstanding requests per backend,
//  * transient TransportErrors retried up to `retry_limit` times with
//    exponential backoff (250 ms base, x2, +-20% jitter),
//  * BackendRefused surfaced immediately,
//  * embeddings L2-normalized regardless of what the backend returned.
//
// Offline mocks (scripted generator, feature-hashing embedder, overlap
// reranker) are pure functions of their inputs.

#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asee::gateway {

enum class BackendKind { generation, embedding, rerank };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view name);

inline constexpr std::size_t kDefaultPromptCharCap = 16'000;
inline constexpr int kMaxRetryLimit = 10;

struct BackendConfig {
  BackendKind kind = BackendKind::generation;
  /// "mock" or an http(s) URL.
  std::string endpoint = "mock";
  std::string model;
  /// Name of the environment variable holding the bearer token. The value is
  /// read at request time and never logged.
  std::string auth_token_env;
  int max_in_flight = 4;
  int retry_limit = 3;
  int timeout_ms = 60'000;
  /// Prompt budget in Unicode scalar values; longer prompts are rejected.
  std::size_t prompt_char_cap = kDefaultPromptCharCap;
  /// Mock generation only: JSON object file mapping prompt -> reply.
  std::string mock_script;

  bool is_mock() const { return endpoint == "mock"; }
  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct GenerationRequest {
  std::string prompt;
  int max_output_tokens = 1024;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences = {};

  void validate() const;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string backend_id;

  std::size_t dimension() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// dot(a,b) / (|a| |b|). Throws DimensionMismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Raw backends.

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string id() const = 0;
  /// Throws TransportError for transient failures, BackendRefused otherwise.
  virtual std::string complete(const GenerationRequest& request) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::vector<double>> embed(
      std::span<const std::string> texts) = 0;
};

class RerankBackend {
 public:
  virtual ~RerankBackend() = default;
  virtual std::string id() const = 0;
  /// One relevance score per document, in input order.
  virtual std::vector<double> score(const std::string& query,
                                    std::span<const std::string> documents) = 0;
};

/// Programmatic mock reply. Returning nullopt falls through to the table.
using Responder = std::function<std::optional<std::string>(const std::string& prompt)>;

/// Replies from a prompt -> reply table; unscripted prompts get "UNKNOWN".
class ScriptedGenerator final : public GenerationBackend {
 public:
  static constexpr const char* kFallback = "UNKNOWN";

  explicit ScriptedGenerator(std::map<std::string, std::string> table = {},
                             Responder responder = nullptr);

  /// Loads a JSON object {"prompt": "reply", ...}.
  static std::shared_ptr<ScriptedGenerator> from_file(const std::string& path);

  std::string id() const override { return "mock-generator"; }
  std::string complete(const GenerationRequest& request) override;

 private:
  const std::map<std::string, std::string> table_;
  const Responder responder_;
};

/// Feature-hashing embedder: each token adds +-1 to one of 64 buckets.
class HashingEmbedder final : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDimension = 64;

  std::string id() const override { return "mock-hashing-64"; }
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

  /// Unnormalized bucket counts for one text.
  static std::vector<double> features(const std::string& text);
};

/// Scores a document by the number of distinct query tokens it contains.
class OverlapReranker final : public RerankBackend {
 public:
  std::string id() const override { return "mock-overlap-reranker"; }
  std::vector<double> score(const std::string& query,
                            std::span<const std::string> documents) override;
};

/// JSON-over-HTTP backends speaking the common completion / embedding /
/// rerank request shapes:
///   generation: {"model","prompt","max_tokens","temperature","stop"}
///               -> choices[0].text (or choices[0].message.content)
///   embedding:  {"model","input":[...]} -> data[i].embedding
///   rerank:     {"model","query","documents":[...]}
///               -> results[i].{index, relevance_score}
class HttpGenerationBackend final : public GenerationBackend {
 public:
  explicit HttpGenerationBackend(BackendConfig config);
  std::string id() const override;
  std::string complete(const GenerationRequest& request) override;

 private:
  BackendConfig config_;
};

class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(BackendConfig config);
  std::string id() const override;
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

 private:
  BackendConfig config_;
};

class HttpRerankBackend final : public RerankBackend {
 public:
  explicit HttpRerankBackend(BackendConfig config);
  std::string id() const override;
  std::vector<double> score(const std::string& query,
                            std::span<const std::string> documents) override;

 private:
  BackendConfig config_;
};

// ---------------------------------------------------------------------------
// Client-side policy.

class RetryPolicy {
 public:
  static constexpr std::chrono::milliseconds kBase{250};
  static constexpr double kFactor = 2.0;
  static constexpr double kJitter = 0.2;

  /// Delay before retry number `attempt` (1-based). `unit_random` in [0,1)
  /// selects the jitter; 0.5 gives the undithered value.
  static std::chrono::milliseconds delay(int attempt, double unit_random);
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Counting gate shared by every copy of a client.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int max_in_flight);

  void acquire();
  void release();
  int max_in_flight() const noexcept { return max_; }

  class Guard {
   public:
    explicit Guard(InFlightLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Guard() { limiter_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    InFlightLimiter& limiter_;
  };

 private:
  struct State;
  std::shared_ptr<State> state_;
  int max_;
};

namespace detail {
struct ClientCore {
  BackendConfig config;
  InFlightLimiter limiter;
  Sleeper sleeper;

  ClientCore(BackendConfig cfg, Sleeper sleep);

  /// Runs `call` under the limiter, retrying TransportError.
  template <typename F>
  auto with_retries(F&& call) -> decltype(call());
};
}  // namespace detail

class GenerationClient {
 public:
  GenerationClient(BackendConfig config, std::shared_ptr<GenerationBackend> backend,
                   Sleeper sleeper = nullptr);

  /// Throws PromptTooLarge, TransportError (after retries), BackendRefused.
  std::string generate(const GenerationRequest& request) const;

  const BackendConfig& config() const { return core_->config; }
  std::string backend_id() const { return backend_->id(); }

 private:
  std::shared_ptr<detail::ClientCore> core_;
  std::shared_ptr<GenerationBackend> backend_;
};

class EmbeddingClient {
 public:
  /// Texts are sent to the backend in batches of this many.
  static constexpr std::size_t kBatchSize = 64;

  EmbeddingClient(BackendConfig config, std::shared_ptr<EmbeddingBackend> backend,
                  Sleeper sleeper = nullptr);

  /// One unit-norm vector per input, order preserved. Throws EmptyInput when
  /// `texts` or any element is empty.
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const;

  const BackendConfig& config() const { return core_->config; }
  std::string backend_id() const { return backend_->id(); }

 private:
  std::shared_ptr<detail::ClientCore> core_;
  std::shared_ptr<EmbeddingBackend> backend_;
  std::shared_ptr<std::size_t> dimension_;
  std::shared_ptr<std::mutex> dimension_mutex_;
};

class RerankClient {
 public:
  RerankClient(BackendConfig config, std::shared_ptr<RerankBackend> backend,
               Sleeper sleeper = nullptr);

  std::vector<double> score(const std::string& query,
                            std::span<const std::string> documents) const;

  const BackendConfig& config() const { return core_->config; }
  std::string backend_id() const { return backend_->id(); }

 private:
  std::shared_ptr<detail::ClientCore> core_;
  std::shared_ptr<RerankBackend> backend_;
};

/// Builds a client from configuration: "mock" selects the offline backend.
/// For generation, `responder` (when given) overrides the mock script.
GenerationClient make_generation_client(const BackendConfig& config,
                                        Responder responder = nullptr);
EmbeddingClient make_embedding_client(const BackendConfig& config);
RerankClient make_rerank_client(const BackendConfig& config);

inline std::string generate(const GenerationRequest& request,
                            const GenerationClient& client) {
  return client.generate(request);
}

inline std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                          const EmbeddingClient& client) {
  return client.embed(texts);
}

}  // namespace asee::gateway
