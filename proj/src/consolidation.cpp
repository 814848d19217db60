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

#include "asee/consolidation.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "asee/errors.hpp"
#include "asee/json_io.hpp"
#include "asee/schema_pool.hpp"
#include "asee/text.hpp"

namespace asee::consolidation {

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({row[j - 1] + 1, above + 1, substitution});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double name_similarity(std::string_view a, std::string_view b) {
  const auto ca = text::to_code_points(text::collapse_whitespace(text::case_fold(a)));
  const auto cb = text::to_code_points(text::collapse_whitespace(text::case_fold(b)));
  const std::size_t longest = std::max(ca.size(), cb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(ca, cb)) /
                   static_cast<double>(longest);
}

double argument_set_similarity(const Schema& a, const Schema& b) {
  if (a.arguments.empty()) return b.arguments.empty() ? 1.0 : 0.0;
  double total = 0.0;
  for (const auto& x : a.arguments) {
    double best = 0.0;
    for (const auto& y : b.arguments) best = std::max(best, name_similarity(x.name, y.name));
    total += best;
  }
  return total / static_cast<double>(a.arguments.size());
}

std::map<std::string, std::string> resolve_redirects(const MergeLog& log) {
  std::map<std::string, std::string> direct;
  for (const auto& e : log) direct[e.merged] = e.into;
  std::map<std::string, std::string> out;
  for (const auto& [from, to] : direct) {
    std::string target = to;
    // Bounded walk guards against cyclic hand-written redirect files.
    for (std::size_t hops = 0; hops < direct.size(); ++hops) {
      auto it = direct.find(target);
      if (it == direct.end()) break;
      target = it->second;
    }
    out[from] = target;
  }
  return out;
}

MergeLog load_merge_log(const std::string& path) {
  MergeLog log;
  io::read_jsonl(path, [&](const io::Json& j, std::size_t line) {
    if (!j.is_object() || !j.contains("merged") || !j.contains("into") ||
        !j["merged"].is_string() || !j["into"].is_string()) {
      throw ParseError("merge record needs string 'merged' and 'into'", line);
    }
    MergeEntry e{j["merged"].get<std::string>(), j["into"].get<std::string>(), 0.0};
    if (auto s = j.find("name_sim"); s != j.end() && s->is_number()) e.name_sim = s->get<double>();
    log.push_back(std::move(e));
  });
  return log;
}

void save_merge_log(const std::string& path, const MergeLog& log) {
  std::vector<io::Json> records;
  for (const auto& e : log) {
    records.push_back(io::Json{{"merged", e.merged}, {"into", e.into}, {"name_sim", e.name_sim}});
  }
  io::write_jsonl(path, records);
}

MergeResult heuristic_merge(const SchemaPool& pool, double name_threshold) {
  MergeResult result{pool, {}};
  auto& schemas = result.pool.schemas;

  auto next_merge = [&]() -> std::optional<MergeEntry> {
    for (auto i = schemas.begin(); i != schemas.end(); ++i) {
      for (auto j = std::next(i); j != schemas.end(); ++j) {
        const Schema& a = i->second;
        const Schema& b = j->second;
        const double name_sim = name_similarity(a.name, b.name);
        if (name_sim <= name_threshold) continue;
        if (argument_set_similarity(a, b) <= name_threshold) continue;
        // `a` has the smaller id, so it wins ties.
        if (a.arguments.size() >= b.arguments.size()) {
          return MergeEntry{b.schema_id, a.schema_id, name_sim};
        }
        return MergeEntry{a.schema_id, b.schema_id, name_sim};
      }
    }
    return std::nullopt;
  };

  while (auto merge = next_merge()) {
    schemas.erase(merge->merged);
    result.pool.paraphrased.erase(merge->merged);
    result.log.push_back(std::move(*merge));
  }
  return result;
}

namespace {

struct VariantName {
  std::string base;
  bool has_digits = false;
};

VariantName split_digit_suffix(const std::string& name) {
  std::size_t end = name.size();
  while (end > 0 && name[end - 1] >= '0' && name[end - 1] <= '9') --end;
  return {name.substr(0, end), end < name.size()};
}

}  // namespace

std::map<std::string, std::string> numeric_variant_renames(const Schema& schema) {
  std::map<std::string, std::vector<std::string>> families;
  std::set<std::string> names;
  for (const auto& arg : schema.arguments) names.insert(arg.name);
  for (const auto& arg : schema.arguments) {
    const auto v = split_digit_suffix(arg.name);
    if (v.has_digits && !v.base.empty()) families[v.base].push_back(arg.name);
  }
  std::map<std::string, std::string> renames;
  for (const auto& [base, variants] : families) {
    const std::size_t members = variants.size() + (names.count(base) ? 1 : 0);
    if (members < 2) continue;
    for (const auto& v : variants) renames[v] = base;
  }
  return renames;
}

Schema collapse_numeric_variants(const Schema& schema) {
  const auto renames = numeric_variant_renames(schema);
  if (renames.empty()) return schema;
  Schema out = schema;
  out.arguments.clear();
  std::map<std::string, std::size_t> position;
  for (const auto& arg : schema.arguments) {
    auto it = renames.find(arg.name);
    const std::string& target = it == renames.end() ? arg.name : it->second;
    if (auto p = position.find(target); p != position.end()) {
      // Prefer the bare base's own description over a variant's.
      if (arg.name == target && !arg.description.empty()) {
        out.arguments[p->second].description = arg.description;
      }
      continue;
    }
    position[target] = out.arguments.size();
    out.arguments.push_back({target, arg.description});
  }
  return out;
}

void rename_sample_arguments(std::vector<Sample>& samples, const std::string& schema_id,
                             const std::map<std::string, std::string>& renames) {
  if (renames.empty()) return;
  for (auto& sample : samples) {
    for (auto& entry : sample.gold) {
      if (entry.schema_id != schema_id) continue;
      for (auto& event : entry.events) {
        ArgumentValueMap renamed;
        for (const auto& [name, values] : event) {
          auto it = renames.find(name);
          auto& dst = renamed[it == renames.end() ? name : it->second];
          dst.insert(dst.end(), values.begin(), values.end());
        }
        event = std::move(renamed);
      }
    }
  }
}

const std::set<std::string>& SimilarityGraph::neighbors(const std::string& node) const {
  static const std::set<std::string> kEmpty;
  auto it = adjacency.find(node);
  return it == adjacency.end() ? kEmpty : it->second;
}

std::size_t SimilarityGraph::edge_count() const {
  std::size_t degree_sum = 0;
  for (const auto& [n, adj] : adjacency) degree_sum += adj.size();
  return degree_sum / 2;
}

void SimilarityGraph::validate() const {
  const std::set<std::string> node_set(nodes.begin(), nodes.end());
  if (node_set.size() != nodes.size()) throw InvalidArgument("graph has duplicate nodes");
  for (const auto& [n, adj] : adjacency) {
    if (!node_set.count(n)) throw InvalidArgument("adjacency key '" + n + "' is not a node");
    for (const auto& m : adj) {
      if (m == n) throw InvalidArgument("self-loop on '" + n + "'");
      if (!node_set.count(m)) throw InvalidArgument("edge to unknown node '" + m + "'");
      if (!neighbors(m).count(n)) {
        throw InvalidArgument("edge " + n + "-" + m + " is not symmetric");
      }
    }
  }
}

SimilarityGraph graph_from_vectors(const std::vector<std::string>& ids,
                                   const std::vector<gateway::EmbeddingVector>& vectors,
                                   double threshold) {
  if (ids.size() != vectors.size()) {
    throw InvalidArgument("graph_from_vectors: id and vector counts differ");
  }
  SimilarityGraph g;
  g.nodes = ids;
  g.threshold = threshold;
  for (const auto& id : ids) g.adjacency[id];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (gateway::cosine_similarity(vectors[i], vectors[j]) > threshold) {
        g.adjacency[ids[i]].insert(ids[j]);
        g.adjacency[ids[j]].insert(ids[i]);
      }
    }
  }
  return g;
}

SimilarityGraph build_similarity_graph(const SchemaPool& pool,
                                       const gateway::EmbeddingClient& backend,
                                       double threshold) {
  std::vector<std::string> ids;
  std::vector<std::string> docs;
  for (const auto& [id, s] : pool.schemas) {
    ids.push_back(id);
    docs.push_back(
        schema_pool::schema_document_text(pool, id, schema_pool::DocumentMode::paraphrased));
  }
  if (ids.empty()) return SimilarityGraph{{}, {}, threshold};
  return graph_from_vectors(ids, backend.embed(docs), threshold);
}

std::set<std::string> greedy_max_independent_set(const SimilarityGraph& graph) {
  std::set<std::string> remaining(graph.nodes.begin(), graph.nodes.end());
  std::set<std::string> independent_set;
  std::map<std::string, long> degrees;
  for (const auto& node : remaining) {
    degrees[node] = static_cast<long>(graph.neighbors(node).size());
  }

  while (!remaining.empty()) {
    // Ascending iteration with strict < keeps the smallest id on ties.
    const std::string* node = nullptr;
    long best = std::numeric_limits<long>::max();
    for (const auto& candidate : remaining) {
      const long d = degrees[candidate];
      if (d < best) {
        best = d;
        node = &candidate;
      }
    }
    const std::string chosen = *node;
    const auto& adj = graph.neighbors(chosen);

    independent_set.insert(chosen);
    remaining.erase(chosen);
    for (const auto& n : adj) remaining.erase(n);

    for (const auto& n : adj) {
      degrees.erase(n);
      for (const auto& m : graph.neighbors(n)) {
        if (remaining.count(m)) --degrees[m];
      }
    }
    degrees.erase(chosen);
  }
  return independent_set;
}

std::vector<Sample> filter_corpus(std::span<const Sample> samples,
                                  const std::set<std::string>& kept_ids,
                                  const MergeLog& redirects) {
  const auto resolved = resolve_redirects(redirects);
  std::vector<Sample> out;
  for (const auto& sample : samples) {
    Sample s = sample;
    s.gold.clear();
    for (const auto& entry : sample.gold) {
      auto r = resolved.find(entry.schema_id);
      const std::string& final_id = r == resolved.end() ? entry.schema_id : r->second;
      if (!kept_ids.count(final_id)) continue;
      auto existing = std::find_if(s.gold.begin(), s.gold.end(),
                                   [&](const GoldEntry& g) { return g.schema_id == final_id; });
      if (existing != s.gold.end()) {
        existing->events.insert(existing->events.end(), entry.events.begin(),
                                entry.events.end());
      } else {
        s.gold.push_back({final_id, entry.events});
      }
    }
    if (!s.gold.empty()) out.push_back(std::move(s));
  }
  return out;
}

SplitBucket split_bucket(std::string_view sample_id, std::uint64_t seed) {
  const std::uint64_t bucket = text::seeded_hash(sample_id, seed) % 100;
  if (bucket < 80) return SplitBucket::train;
  if (bucket < 90) return SplitBucket::dev;
  return SplitBucket::test;
}

std::vector<Sample> split_corpus(std::span<const Sample> samples, std::uint64_t seed) {
  std::vector<Sample> out(samples.begin(), samples.end());
  for (auto& s : out) {
    if (s.split != Split::unassigned) continue;
    switch (split_bucket(s.sample_id, seed)) {
      case SplitBucket::train:
        s.split = Split::train;
        break;
      case SplitBucket::dev:
        s.split = Split::dev;
        break;
      case SplitBucket::test:
        s.split = Split::test;
        break;
    }
  }
  return out;
}

std::vector<Sample> filter_label_count(std::span<const Sample> samples,
                                       std::size_t max_labels) {
  if (max_labels < 1) throw InvalidArgument("max_labels must be >= 1");
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.event_count() <= max_labels) out.push_back(s);
  }
  return out;
}

}  // namespace asee::consolidation
