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

// Independent reference implementations used to check the library. They
// favour the most literal formulation over speed and share no code with src/.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "asee/consolidation.hpp"

namespace asee::oracle {

/// Full-table Wagner-Fischer edit distance.
inline std::size_t edit_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

inline consolidation::SimilarityGraph graph_from_edges(
    const std::vector<std::string>& nodes,
    const std::vector<std::pair<std::string, std::string>>& edges) {
  consolidation::SimilarityGraph g;
  g.nodes = nodes;
  for (const auto& n : nodes) g.adjacency[n];
  for (const auto& [u, v] : edges) {
    g.adjacency[u].insert(v);
    g.adjacency[v].insert(u);
  }
  return g;
}

/// Erdos-Renyi graph with node ids "n00".."n<k>" inserted in shuffled order.
template <typename Rng>
consolidation::SimilarityGraph random_graph(Rng& rng, std::size_t n, double p) {
  std::vector<std::string> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    nodes.push_back((i < 10 ? "n0" : "n") + std::to_string(i));
  }
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::bernoulli_distribution edge(p);
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (edge(rng)) edges.emplace_back(nodes[i], nodes[j]);
    }
  }
  return graph_from_edges(nodes, edges);
}

inline bool is_independent(const consolidation::SimilarityGraph& g,
                           const std::set<std::string>& set) {
  for (const auto& u : set) {
    for (const auto& v : set) {
      if (g.adjacency.count(u) && g.adjacency.at(u).count(v)) return false;
    }
  }
  return true;
}

/// No node outside `set` can be added without breaking independence.
inline bool is_maximal(const consolidation::SimilarityGraph& g, const std::set<std::string>& set) {
  for (const auto& n : g.nodes) {
    if (set.count(n)) continue;
    auto extended = set;
    extended.insert(n);
    if (is_independent(g, extended)) return false;
  }
  return true;
}

/// Enumerates every subset; n must stay small.
inline std::size_t exact_mis_size(const consolidation::SimilarityGraph& g) {
  const std::size_t n = g.nodes.size();
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::set<std::string> subset;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) subset.insert(g.nodes[i]);
    }
    if (subset.size() > best && is_independent(g, subset)) best = subset.size();
  }
  return best;
}

/// Literal BM25 over pre-tokenized documents: every query token occurrence
/// contributes IDF * tf-part for every document containing it.
inline std::vector<double> bm25_scores(const std::vector<std::vector<std::string>>& docs,
                                       const std::vector<std::string>& query, double k1,
                                       double b) {
  const double n = static_cast<double>(docs.size());
  double total_len = 0.0;
  for (const auto& d : docs) total_len += static_cast<double>(d.size());
  const double avgdl = n > 0 ? total_len / n : 0.0;
  std::vector<double> scores(docs.size(), 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& term : query) {
      const double tf = static_cast<double>(std::count(docs[i].begin(), docs[i].end(), term));
      if (tf == 0.0) continue;
      double df = 0.0;
      for (const auto& d : docs) {
        if (std::find(d.begin(), d.end(), term) != d.end()) df += 1.0;
      }
      const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
      const double dl = static_cast<double>(docs[i].size());
      const double norm = avgdl > 0 ? dl / avgdl : 0.0;
      scores[i] += idf * tf / (tf + k1 * (1.0 - b + b * norm));
    }
  }
  return scores;
}

/// Largest number of (gold, pred) pairs with equal values, found by trying
/// every assignment of predictions to gold slots.
inline std::size_t max_value_matches(const std::vector<std::string>& gold,
                                     const std::vector<std::string>& pred) {
  std::vector<bool> used(gold.size(), false);
  std::function<std::size_t(std::size_t)> go = [&](std::size_t p) -> std::size_t {
    if (p == pred.size()) return 0;
    std::size_t best = go(p + 1);
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (used[g] || gold[g] != pred[p]) continue;
      used[g] = true;
      best = std::max(best, 1 + go(p + 1));
      used[g] = false;
    }
    return best;
  };
  return go(0);
}

inline double f1_from_matches(std::size_t matches, std::size_t n_gold, std::size_t n_pred) {
  if (matches == 0) return 0.0;
  const double p = static_cast<double>(matches) / static_cast<double>(n_pred);
  const double r = static_cast<double>(matches) / static_cast<double>(n_gold);
  return 2.0 * p * r / (p + r);
}

/// Ranks (id, score) pairs by score descending then id ascending, treating
/// scores within `tie_eps` as equal.
inline std::vector<std::pair<std::string, double>> rank(const std::vector<std::string>& ids,
                                                        const std::vector<double>& scores,
                                                        std::size_t k, double tie_eps = 1e-12) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace_back(ids[i], scores[i]);
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    if (std::abs(a.second - b.second) > tie_eps) return a.second > b.second;
    return a.first < b.first;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace asee::oracle
