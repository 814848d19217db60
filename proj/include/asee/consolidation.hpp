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

// Deduplication and diversification of a merged schema pool, plus the
// corpus preparation steps that follow it.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asee/gateway.hpp"
#include "asee/types.hpp"

namespace asee::consolidation {

inline constexpr double kNameThreshold = 0.8;
inline constexpr double kCosineThreshold = 0.85;
inline constexpr std::size_t kMaxLabels = 15;

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);

/// 1 - lev(a,b) / max(|a|,|b|) over scalar values, after case folding and
/// whitespace collapsing. Two empty strings have similarity 1.
double name_similarity(std::string_view a, std::string_view b);

/// Mean over `a`'s arguments of the best name_similarity to any argument of `b`.
double argument_set_similarity(const Schema& a, const Schema& b);

struct MergeEntry {
  std::string merged;
  std::string into;
  double name_sim = 0.0;

  bool operator==(const MergeEntry&) const = default;
};

using MergeLog = std::vector<MergeEntry>;

/// merged id -> final surviving id, following chains.
std::map<std::string, std::string> resolve_redirects(const MergeLog& log);

MergeLog load_merge_log(const std::string& path);
void save_merge_log(const std::string& path, const MergeLog& log);

struct MergeResult {
  SchemaPool pool;
  MergeLog log;
};

/// Repeatedly unions the first pair (ascending schema_id) whose names and
/// argument sets both exceed `name_threshold`, until no pair qualifies. The
/// schema with more arguments survives (ties: smaller schema_id).
MergeResult heuristic_merge(const SchemaPool& pool, double name_threshold = kNameThreshold);

/// Argument name -> base name for every member of a numeric-variant family
/// ({base, base1, base2, ...} with at least two members). Only renamed
/// arguments appear.
std::map<std::string, std::string> numeric_variant_renames(const Schema& schema);

/// Collapses numeric-variant families into the bare base name, keeping
/// first-occurrence order. Idempotent.
Schema collapse_numeric_variants(const Schema& schema);

/// Rewrites gold event keys of `schema_id` with `renames`, concatenating the
/// value lists of collapsed arguments.
void rename_sample_arguments(std::vector<Sample>& samples, const std::string& schema_id,
                             const std::map<std::string, std::string>& renames);

struct SimilarityGraph {
  std::vector<std::string> nodes;
  std::map<std::string, std::set<std::string>> adjacency;
  double threshold = kCosineThreshold;

  const std::set<std::string>& neighbors(const std::string& node) const;
  std::size_t edge_count() const;
  /// Throws InvalidArgument unless symmetric, loop-free and closed over nodes.
  void validate() const;
};

/// Edge (i,j), i != j, iff cosine(vectors[i], vectors[j]) > threshold.
SimilarityGraph graph_from_vectors(const std::vector<std::string>& ids,
                                   const std::vector<gateway::EmbeddingVector>& vectors,
                                   double threshold);

/// Embeds every schema's document text (paraphrased when available).
SimilarityGraph build_similarity_graph(const SchemaPool& pool,
                                       const gateway::EmbeddingClient& backend,
                                       double threshold = kCosineThreshold);

/// Greedy minimum-degree independent set; argmin ties go to the smallest id.
std::set<std::string> greedy_max_independent_set(const SimilarityGraph& graph);

/// Redirects gold ids, drops entries outside `kept_ids`, then drops samples
/// left without gold. Order preserved.
std::vector<Sample> filter_corpus(std::span<const Sample> samples,
                                  const std::set<std::string>& kept_ids,
                                  const MergeLog& redirects = {});

enum class SplitBucket { train, dev, test };

/// Bucket of an unassigned sample: seeded hash mod 100, <80 train, <90 dev.
SplitBucket split_bucket(std::string_view sample_id, std::uint64_t seed);

/// Assigns 80/10/10 splits to unassigned samples; others pass through.
std::vector<Sample> split_corpus(std::span<const Sample> samples, std::uint64_t seed);

/// Drops samples with more than `max_labels` gold event instances.
std::vector<Sample> filter_label_count(std::span<const Sample> samples,
                                       std::size_t max_labels = kMaxLabels);

}  // namespace asee::consolidation
