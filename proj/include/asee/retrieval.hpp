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

// Schema retrieval: BM25 over schema documents, exact dense search over
// schema embeddings, and optional second-stage reranking.
//
// Ordinals index schemas in ascending schema_id order, and every ranking
// breaks score ties by ascending schema_id, so results never depend on the
// order schemas were inserted.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asee/gateway.hpp"
#include "asee/schema_pool.hpp"
#include "asee/text.hpp"
#include "asee/types.hpp"

namespace asee::retrieval {

inline constexpr double kDefaultK1 = 1.2;
inline constexpr double kDefaultB = 0.75;
inline constexpr std::size_t kMaxQueryTokens = 8192;
inline constexpr std::size_t kRerankPoolSize = 100;
inline constexpr std::string_view kIndexMagic = "ASEE-IDX1";

using schema_pool::DocumentMode;

/// Case-folded word tokens; CJK runs become character bigrams.
inline std::vector<std::string> tokenize(std::string_view text,
                                         Language language_hint = Language::other) {
  return text::tokenize(text, language_hint);
}

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

class RetrievalIndex {
 public:
  /// Indexes `schema_document_text(., mode)` for every schema in the pool.
  /// With an embedder, the same documents are embedded for dense search.
  static RetrievalIndex build(const SchemaPool& pool, DocumentMode mode,
                              const gateway::EmbeddingClient* embedder = nullptr);

  /// Indexes arbitrary (id, document) pairs; ids must be unique.
  static RetrievalIndex from_documents(std::string pool_ref, DocumentMode mode,
                                       std::vector<std::string> ids,
                                       std::vector<std::string> documents,
                                       const gateway::EmbeddingClient* embedder = nullptr);

  /// Reads a snapshot written by save(). Throws ParseError on a bad header.
  static RetrievalIndex load(const std::string& path);
  void save(const std::string& path) const;
  std::string serialize() const;

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::string& pool_ref() const noexcept { return pool_ref_; }
  DocumentMode mode() const noexcept { return mode_; }
  const std::string& schema_id(std::size_t ordinal) const;
  const std::string& document(std::size_t ordinal) const;
  std::optional<std::size_t> ordinal_of(std::string_view schema_id) const;

  std::uint32_t doc_length(std::size_t ordinal) const;
  double average_doc_length() const noexcept { return avgdl_; }
  std::size_t document_frequency(const std::string& term) const;
  /// Term frequency of `term` in `ordinal` (0 when absent).
  std::uint32_t term_frequency(const std::string& term, std::size_t ordinal) const;
  const std::map<std::string, std::vector<Posting>>& postings() const noexcept {
    return postings_;
  }

  bool has_dense() const noexcept { return !dense_.empty(); }
  const gateway::EmbeddingVector& dense_vector(std::size_t ordinal) const;

  /// IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1).
  double idf(const std::string& term) const;

  /// Sum over query tokens (each occurrence) present in the document of
  /// IDF(t) * tf / (tf + k1 * (1 - b + b * dl / avgdl)). Throws
  /// OrdinalOutOfRange.
  double bm25_score(std::span<const std::string> query_tokens, std::size_t ordinal,
                    double k1 = kDefaultK1, double b = kDefaultB) const;

  /// bm25_score for every document at once, driven by the postings.
  std::vector<double> bm25_scores(std::span<const std::string> query_tokens,
                                  double k1 = kDefaultK1, double b = kDefaultB) const;

 private:
  RetrievalIndex() = default;
  void finalize_statistics();

  std::string pool_ref_;
  DocumentMode mode_ = DocumentMode::raw;
  std::vector<std::string> ids_;
  std::vector<std::string> documents_;
  std::vector<std::uint32_t> doc_lengths_;
  double avgdl_ = 0.0;
  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<gateway::EmbeddingVector> dense_;
};

/// Free-function form of RetrievalIndex::build.
inline RetrievalIndex build_index(const SchemaPool& pool, DocumentMode mode,
                                  const gateway::EmbeddingClient* embedder = nullptr) {
  return RetrievalIndex::build(pool, mode, embedder);
}

double bm25_score(const RetrievalIndex& index, std::span<const std::string> query_tokens,
                  std::size_t ordinal, double k1 = kDefaultK1, double b = kDefaultB);

struct RankedEntry {
  std::string schema_id;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  std::vector<RankedEntry> entries;
  std::size_t k = 0;

  bool contains(std::string_view schema_id) const;
  std::vector<std::string> ids() const;
  bool operator==(const RankedList&) const = default;
};

enum class Strategy { bm25, dense, bm25_then_rerank, dense_then_rerank };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct SearchOptions {
  Strategy strategy = Strategy::bm25;
  std::size_t k = 10;
  double k1 = kDefaultK1;
  double b = kDefaultB;
  std::size_t rerank_pool_size = kRerankPoolSize;
  std::size_t max_query_tokens = kMaxQueryTokens;
  /// Required by dense strategies (query embedding).
  const gateway::EmbeddingClient* embedder = nullptr;
  /// Required by rerank strategies.
  const gateway::RerankClient* reranker = nullptr;
};

/// Top-k (score descending, schema_id ascending). Throws EmptyIndex,
/// InvalidArgument for a missing backend, TransportError from backends.
RankedList search(const RetrievalIndex& index, const std::string& query,
                  const SearchOptions& options);

/// Orders (id, score) pairs by score descending then id ascending and keeps k.
RankedList top_k(std::vector<RankedEntry> candidates, std::size_t k);

}  // namespace asee::retrieval
