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

#include "asee/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "asee/errors.hpp"
#include "asee/json_io.hpp"
#include "nlohmann/json.hpp"

namespace asee::retrieval {

using nlohmann::json;

RetrievalIndex RetrievalIndex::build(const SchemaPool& pool, DocumentMode mode,
                                     const gateway::EmbeddingClient* embedder) {
  std::vector<std::string> ids;
  std::vector<std::string> docs;
  for (const auto& [id, schema] : pool.schemas) {
    ids.push_back(id);
    docs.push_back(schema_pool::schema_document_text(pool, id, mode));
  }
  return from_documents(pool.pool_id, mode, std::move(ids), std::move(docs), embedder);
}

RetrievalIndex RetrievalIndex::from_documents(std::string pool_ref, DocumentMode mode,
                                              std::vector<std::string> ids,
                                              std::vector<std::string> documents,
                                              const gateway::EmbeddingClient* embedder) {
  if (ids.size() != documents.size()) {
    throw InvalidArgument("index: id and document counts differ");
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });

  RetrievalIndex index;
  index.pool_ref_ = std::move(pool_ref);
  index.mode_ = mode;
  for (std::size_t i : order) {
    if (!index.ids_.empty() && index.ids_.back() == ids[i]) {
      throw DuplicateId("index: duplicate schema_id '" + ids[i] + "'");
    }
    index.ids_.push_back(std::move(ids[i]));
    index.documents_.push_back(std::move(documents[i]));
  }

  for (std::size_t ordinal = 0; ordinal < index.documents_.size(); ++ordinal) {
    const auto tokens = tokenize(index.documents_[ordinal]);
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) {
      index.postings_[term].push_back({static_cast<std::uint32_t>(ordinal), count});
    }
  }
  index.finalize_statistics();

  if (embedder && !index.documents_.empty()) {
    std::vector<std::string> texts = index.documents_;
    // Embedding backends reject empty input; an empty schema document can
    // only arise from a nameless schema, which validation already forbids.
    index.dense_ = embedder->embed(texts);
  }
  return index;
}

void RetrievalIndex::finalize_statistics() {
  if (doc_lengths_.empty()) {
    avgdl_ = 0.0;
    return;
  }
  std::uint64_t total = 0;
  for (auto len : doc_lengths_) total += len;
  avgdl_ = static_cast<double>(total) / static_cast<double>(doc_lengths_.size());
}

const std::string& RetrievalIndex::schema_id(std::size_t ordinal) const {
  if (ordinal >= ids_.size()) throw OrdinalOutOfRange("ordinal " + std::to_string(ordinal));
  return ids_[ordinal];
}

const std::string& RetrievalIndex::document(std::size_t ordinal) const {
  if (ordinal >= ids_.size()) throw OrdinalOutOfRange("ordinal " + std::to_string(ordinal));
  return documents_[ordinal];
}

std::optional<std::size_t> RetrievalIndex::ordinal_of(std::string_view schema_id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), schema_id);
  if (it == ids_.end() || *it != schema_id) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

std::uint32_t RetrievalIndex::doc_length(std::size_t ordinal) const {
  if (ordinal >= ids_.size()) throw OrdinalOutOfRange("ordinal " + std::to_string(ordinal));
  return doc_lengths_[ordinal];
}

std::size_t RetrievalIndex::document_frequency(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

std::uint32_t RetrievalIndex::term_frequency(const std::string& term,
                                             std::size_t ordinal) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return 0;
  const auto& list = it->second;
  auto p = std::lower_bound(list.begin(), list.end(), ordinal,
                            [](const Posting& posting, std::size_t doc) { return posting.doc < doc; });
  return (p != list.end() && p->doc == ordinal) ? p->tf : 0;
}

const gateway::EmbeddingVector& RetrievalIndex::dense_vector(std::size_t ordinal) const {
  if (ordinal >= dense_.size()) throw OrdinalOutOfRange("no dense vector for ordinal " + std::to_string(ordinal));
  return dense_[ordinal];
}

double RetrievalIndex::idf(const std::string& term) const {
  const double n = static_cast<double>(ids_.size());
  const double df = static_cast<double>(document_frequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

namespace {

double term_weight(double idf, double tf, double dl, double avgdl, double k1, double b) {
  return idf * tf / (tf + k1 * (1.0 - b + b * dl / avgdl));
}

}  // namespace

double RetrievalIndex::bm25_score(std::span<const std::string> query_tokens,
                                  std::size_t ordinal, double k1, double b) const {
  const double dl = static_cast<double>(doc_length(ordinal));
  double score = 0.0;
  for (const auto& t : query_tokens) {
    const std::uint32_t tf = term_frequency(t, ordinal);
    if (tf == 0) continue;
    score += term_weight(idf(t), tf, dl, avgdl_, k1, b);
  }
  return score;
}

std::vector<double> RetrievalIndex::bm25_scores(std::span<const std::string> query_tokens,
                                                double k1, double b) const {
  std::vector<double> scores(ids_.size(), 0.0);
  for (const auto& t : query_tokens) {
    auto it = postings_.find(t);
    if (it == postings_.end()) continue;
    const double term_idf = idf(t);
    for (const auto& p : it->second) {
      scores[p.doc] += term_weight(term_idf, p.tf, doc_lengths_[p.doc], avgdl_, k1, b);
    }
  }
  return scores;
}

std::string RetrievalIndex::serialize() const {
  json body;
  body["pool_ref"] = pool_ref_;
  body["mode"] = std::string(schema_pool::to_string(mode_));
  body["ids"] = ids_;
  body["documents"] = documents_;
  body["doc_lengths"] = doc_lengths_;
  json postings = json::object();
  for (const auto& [term, list] : postings_) {
    json arr = json::array();
    for (const auto& p : list) arr.push_back({p.doc, p.tf});
    postings[term] = std::move(arr);
  }
  body["postings"] = std::move(postings);
  if (has_dense()) {
    json dense = json::array();
    for (const auto& v : dense_) dense.push_back(v.values);
    body["dense"] = std::move(dense);
    body["dense_backend"] = dense_.front().backend_id;
  } else {
    body["dense"] = nullptr;
  }
  return std::string(kIndexMagic) + "\n" + body.dump() + "\n";
}

void RetrievalIndex::save(const std::string& path) const { io::write_file(path, serialize()); }

RetrievalIndex RetrievalIndex::load(const std::string& path) {
  const std::string contents = io::read_file(path);
  const auto newline = contents.find('\n');
  if (newline == std::string::npos || contents.substr(0, newline) != kIndexMagic) {
    throw ParseError("'" + path + "' is not an " + std::string(kIndexMagic) + " snapshot", 1);
  }
  RetrievalIndex index;
  try {
    const json body = json::parse(contents.substr(newline + 1));
    index.pool_ref_ = body.at("pool_ref").get<std::string>();
    index.mode_ = schema_pool::document_mode_from_string(body.at("mode").get<std::string>());
    index.ids_ = body.at("ids").get<std::vector<std::string>>();
    index.documents_ = body.at("documents").get<std::vector<std::string>>();
    index.doc_lengths_ = body.at("doc_lengths").get<std::vector<std::uint32_t>>();
    for (const auto& [term, list] : body.at("postings").items()) {
      auto& dst = index.postings_[term];
      for (const auto& p : list) {
        dst.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
      }
    }
    if (!body.at("dense").is_null()) {
      const std::string backend = body.value("dense_backend", "");
      for (const auto& v : body.at("dense")) {
        index.dense_.push_back({v.get<std::vector<double>>(), backend});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError("'" + path + "': " + e.what(), 2);
  }
  if (index.ids_.size() != index.documents_.size() ||
      index.ids_.size() != index.doc_lengths_.size() ||
      (!index.dense_.empty() && index.dense_.size() != index.ids_.size())) {
    throw ParseError("'" + path + "': inconsistent snapshot sizes", 2);
  }
  index.finalize_statistics();
  return index;
}

double bm25_score(const RetrievalIndex& index, std::span<const std::string> query_tokens,
                  std::size_t ordinal, double k1, double b) {
  return index.bm25_score(query_tokens, ordinal, k1, b);
}

bool RankedList::contains(std::string_view schema_id) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const RankedEntry& e) { return e.schema_id == schema_id; });
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.schema_id);
  return out;
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::bm25:
      return "bm25";
    case Strategy::dense:
      return "dense";
    case Strategy::bm25_then_rerank:
      return "bm25_then_rerank";
    case Strategy::dense_then_rerank:
      break;
  }
  return "dense_then_rerank";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "bm25") return Strategy::bm25;
  if (name == "dense") return Strategy::dense;
  if (name == "bm25_then_rerank") return Strategy::bm25_then_rerank;
  if (name == "dense_then_rerank") return Strategy::dense_then_rerank;
  throw InvalidArgument("unknown retrieval strategy '" + std::string(name) + "'");
}

namespace {

// Scores are compared on a 2^-40 grid so that sums which are equal in exact
// arithmetic but differ in the last bits (summation order) still tie.
double ranking_key(double score) {
  constexpr double kGrid = 1099511627776.0;  // 2^40
  return std::nearbyint(score * kGrid);
}

}  // namespace

RankedList top_k(std::vector<RankedEntry> candidates, std::size_t k) {
  auto better = [](const RankedEntry& a, const RankedEntry& b) {
    const double ka = ranking_key(a.score);
    const double kb = ranking_key(b.score);
    if (ka != kb) return ka > kb;
    return a.schema_id < b.schema_id;
  };
  const std::size_t keep = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), better);
  candidates.resize(keep);
  return RankedList{std::move(candidates), k};
}

namespace {

std::vector<RankedEntry> first_stage_bm25(const RetrievalIndex& index, const std::string& query,
                                          const SearchOptions& options) {
  auto tokens = tokenize(query);
  if (tokens.size() > options.max_query_tokens) tokens.resize(options.max_query_tokens);
  const auto scores = index.bm25_scores(tokens, options.k1, options.b);
  std::vector<RankedEntry> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({index.schema_id(i), scores[i]});
  return out;
}

std::vector<RankedEntry> first_stage_dense(const RetrievalIndex& index, const std::string& query,
                                           const SearchOptions& options) {
  if (!options.embedder) throw InvalidArgument("dense search needs an embedding backend");
  if (!index.has_dense()) throw InvalidArgument("index was built without dense vectors");
  const std::vector<std::string> q{query};
  const auto query_vec = options.embedder->embed(q).front();
  std::vector<RankedEntry> out;
  out.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    out.push_back({index.schema_id(i), gateway::cosine_similarity(query_vec, index.dense_vector(i))});
  }
  return out;
}

}  // namespace

RankedList search(const RetrievalIndex& index, const std::string& query,
                  const SearchOptions& options) {
  if (index.empty()) throw EmptyIndex("search on an empty index");
  if (options.k == 0) throw InvalidArgument("search: k must be >= 1");

  const bool dense = options.strategy == Strategy::dense ||
                     options.strategy == Strategy::dense_then_rerank;
  auto candidates = dense ? first_stage_dense(index, query, options)
                          : first_stage_bm25(index, query, options);

  if (options.strategy == Strategy::bm25 || options.strategy == Strategy::dense) {
    return top_k(std::move(candidates), options.k);
  }

  if (!options.reranker) throw InvalidArgument("rerank strategy needs a rerank backend");
  if (options.rerank_pool_size == 0) throw InvalidArgument("rerank_pool_size must be >= 1");
  RankedList pool = top_k(std::move(candidates), options.rerank_pool_size);
  std::vector<std::string> docs;
  docs.reserve(pool.entries.size());
  for (const auto& e : pool.entries) docs.push_back(index.document(*index.ordinal_of(e.schema_id)));
  const auto scores = options.reranker->score(query, docs);
  std::vector<RankedEntry> reranked;
  reranked.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    reranked.push_back({pool.entries[i].schema_id, scores[i]});
  }
  return top_k(std::move(reranked), options.k);
}

}  // namespace asee::retrieval
