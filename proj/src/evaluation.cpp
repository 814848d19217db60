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

#include "asee/evaluation.hpp"

#include <algorithm>
#include <functional>
#include <tuple>

#include <fmt/format.h>

#include "asee/errors.hpp"
#include "asee/text.hpp"

namespace asee::evaluation {

using io::Json;

namespace {

std::string normalize_once(std::string_view value) {
  std::string s = text::nfc(text::case_fold(text::nfc(value)));
  s = text::collapse_whitespace(s);
  for (;;) {
    std::string stripped = text::collapse_whitespace(text::strip_punctuation(s));
    if (stripped == s) return s;
    s = std::move(stripped);
  }
}

}  // namespace

std::string normalize_value(std::string_view value) {
  // Case folding can un-compose a string; iterate to a fixpoint so the
  // function is idempotent. Real text settles after one or two rounds.
  std::string current = normalize_once(value);
  for (int round = 0; round < 8; ++round) {
    std::string next = normalize_once(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

std::optional<double> value_f1(std::span<const std::string> gold,
                               std::span<const std::string> pred) {
  if (gold.empty() && pred.empty()) return std::nullopt;
  if (gold.empty() || pred.empty()) return 0.0;
  std::map<std::string, std::size_t> gold_counts;
  for (const auto& g : gold) ++gold_counts[normalize_value(g)];
  std::size_t matched = 0;
  for (const auto& p : pred) {
    auto it = gold_counts.find(normalize_value(p));
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  if (matched == 0) return 0.0;
  const double precision = static_cast<double>(matched) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(matched) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

const std::vector<std::string> kNoValues;

const std::vector<std::string>& values_of(const ArgumentValueMap& event, const std::string& arg) {
  auto it = event.find(arg);
  return it == event.end() ? kNoValues : it->second;
}

// Declared arguments, then any extra keys either event carries.
std::vector<std::string> argument_names(const Schema& schema, const ArgumentValueMap& a,
                                        const ArgumentValueMap& b) {
  std::vector<std::string> names;
  for (const auto& arg : schema.arguments) names.push_back(arg.name);
  for (const auto* event : {&a, &b}) {
    for (const auto& [name, values] : *event) {
      if (!schema.declares(name) && std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(name);
      }
    }
  }
  return names;
}

// Per-argument F1 values of one aligned pair, empty-vs-empty excluded.
std::vector<double> pair_scores(const Schema& schema, const ArgumentValueMap& gold,
                                const ArgumentValueMap& pred) {
  std::vector<double> out;
  for (const auto& name : argument_names(schema, gold, pred)) {
    if (auto f1 = value_f1(values_of(gold, name), values_of(pred, name))) out.push_back(*f1);
  }
  return out;
}

double mean_or_one(const std::vector<double>& xs) {
  if (xs.empty()) return 1.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Order-independent identity of an event, used for alignment tie-breaks.
std::string event_key(const ArgumentValueMap& event) {
  Json j = Json::object();
  for (const auto& [name, values] : event) {
    std::vector<std::string> normalized;
    for (const auto& v : values) normalized.push_back(normalize_value(v));
    std::sort(normalized.begin(), normalized.end());
    j[name] = normalized;
  }
  return j.dump();
}

}  // namespace

double argument_f1(std::span<const ArgumentValueMap> gold_events,
                   std::span<const ArgumentValueMap> pred_events, const Schema& schema) {
  struct Candidate {
    double score;
    std::size_t gold;
    std::size_t pred;
  };
  std::vector<std::string> gold_keys;
  std::vector<std::string> pred_keys;
  for (const auto& e : gold_events) gold_keys.push_back(event_key(e));
  for (const auto& e : pred_events) pred_keys.push_back(event_key(e));

  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < gold_events.size(); ++g) {
    for (std::size_t p = 0; p < pred_events.size(); ++p) {
      candidates.push_back({mean_or_one(pair_scores(schema, gold_events[g], pred_events[p])), g, p});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(gold_keys[a.gold], pred_keys[a.pred], a.gold, a.pred) <
           std::tie(gold_keys[b.gold], pred_keys[b.pred], b.gold, b.pred);
  });

  std::vector<bool> gold_used(gold_events.size(), false);
  std::vector<bool> pred_used(pred_events.size(), false);
  std::vector<double> scores;
  for (const auto& c : candidates) {
    if (gold_used[c.gold] || pred_used[c.pred]) continue;
    gold_used[c.gold] = pred_used[c.pred] = true;
    const auto s = pair_scores(schema, gold_events[c.gold], pred_events[c.pred]);
    scores.insert(scores.end(), s.begin(), s.end());
  }
  const ArgumentValueMap empty;
  for (std::size_t g = 0; g < gold_events.size(); ++g) {
    if (gold_used[g]) continue;
    const auto s = pair_scores(schema, gold_events[g], empty);
    scores.insert(scores.end(), s.begin(), s.end());
  }
  for (std::size_t p = 0; p < pred_events.size(); ++p) {
    if (pred_used[p]) continue;
    const auto s = pair_scores(schema, empty, pred_events[p]);
    scores.insert(scores.end(), s.begin(), s.end());
  }
  return mean_or_one(scores);
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::recall_at_k:
      return "recall_at_k";
    case Metric::extraction_f1:
      return "extraction_f1";
    case Metric::e2e_f1:
      break;
  }
  return "e2e_f1";
}

Metric metric_from_string(std::string_view name) {
  if (name == "recall_at_k") return Metric::recall_at_k;
  if (name == "extraction_f1") return Metric::extraction_f1;
  if (name == "e2e_f1") return Metric::e2e_f1;
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

GoldSets gold_schema_sets(std::span<const Sample> samples) {
  GoldSets out;
  for (const auto& s : samples) {
    if (s.gold.empty()) continue;
    auto& set = out[s.sample_id];
    for (const auto& g : s.gold) set.insert(g.schema_id);
  }
  return out;
}

namespace {

EvalReport macro_report(Metric metric, std::map<std::string, double> per_query,
                        const std::vector<std::string>& order) {
  EvalReport r;
  r.metric = metric;
  double sum = 0.0;
  for (const auto& id : order) sum += per_query.at(id);
  r.value = order.empty() ? 0.0 : sum / static_cast<double>(order.size());
  r.per_query = std::move(per_query);
  return r;
}

}  // namespace

EvalReport recall_at_k(const GoldSets& gold, const Rankings& ranked, std::size_t k) {
  if (k == 0) throw InvalidArgument("recall_at_k: k must be >= 1");
  std::map<std::string, double> per_query;
  std::vector<std::string> order;
  for (const auto& [sample_id, gold_ids] : gold) {
    if (gold_ids.empty()) {
      throw InvalidArgument("recall_at_k: sample '" + sample_id + "' has no gold schemas");
    }
    auto it = ranked.find(sample_id);
    if (it == ranked.end()) {
      throw MissingRankings("no ranking for sample '" + sample_id + "'");
    }
    const auto& entries = it->second.entries;
    const std::size_t depth = std::min(k, entries.size());
    std::set<std::string> top;
    for (std::size_t i = 0; i < depth; ++i) top.insert(entries[i].schema_id);
    std::size_t hits = 0;
    for (const auto& g : gold_ids) hits += top.contains(g) ? 1 : 0;
    per_query[sample_id] = static_cast<double>(hits) / static_cast<double>(gold_ids.size());
    order.push_back(sample_id);
  }
  auto report = macro_report(Metric::recall_at_k, std::move(per_query), order);
  report.k = k;
  return report;
}

namespace {

std::map<std::string, const extraction::ExtractionResult*> pair_results(
    std::span<const Sample> samples, std::span<const extraction::ExtractionResult> results) {
  std::map<std::string, const extraction::ExtractionResult*> by_id;
  for (const auto& r : results) {
    if (!by_id.emplace(r.sample_id, &r).second) {
      throw SampleResultMismatch("duplicate result for sample '" + r.sample_id + "'");
    }
  }
  std::set<std::string> sample_ids;
  for (const auto& s : samples) {
    sample_ids.insert(s.sample_id);
    if (!by_id.contains(s.sample_id)) {
      throw SampleResultMismatch("no result for sample '" + s.sample_id + "'");
    }
  }
  for (const auto& [id, r] : by_id) {
    if (!sample_ids.contains(id)) {
      throw SampleResultMismatch("result for unknown sample '" + id + "'");
    }
  }
  return by_id;
}

// (1/|S_q|) * sum over gold schemas s of F1(s, q) * credited(s).
double query_credit(const Sample& sample, const extraction::ExtractionResult& result,
                    const SchemaPool& pool,
                    const std::function<bool(const std::string&)>& credited) {
  double sum = 0.0;
  for (const auto& gold : sample.gold) {
    if (!credited(gold.schema_id)) continue;
    const Schema* schema = pool.best(gold.schema_id);
    if (!schema) {
      throw UnresolvableSchema("sample '" + sample.sample_id + "' references unknown schema '" +
                               gold.schema_id + "'");
    }
    auto pred = result.per_schema.find(gold.schema_id);
    if (pred == result.per_schema.end()) continue;
    sum += argument_f1(gold.events, pred->second, *schema);
  }
  return sum / static_cast<double>(sample.gold.size());
}

EvalReport credit_report(Metric metric, std::span<const Sample> samples,
                         std::span<const extraction::ExtractionResult> results,
                         const SchemaPool& pool, const Rankings* ranked) {
  const auto by_id = pair_results(samples, results);
  std::map<std::string, double> per_query;
  std::vector<std::string> order;
  for (const auto& sample : samples) {
    if (sample.gold.empty()) continue;
    std::function<bool(const std::string&)> credited = [](const std::string&) { return true; };
    if (ranked) {
      auto it = ranked->find(sample.sample_id);
      if (it == ranked->end()) {
        throw MissingRankings("no ranking for sample '" + sample.sample_id + "'");
      }
      const retrieval::RankedList* list = &it->second;
      credited = [list](const std::string& id) { return list->contains(id); };
    }
    per_query[sample.sample_id] = query_credit(sample, *by_id.at(sample.sample_id), pool, credited);
    order.push_back(sample.sample_id);
  }
  return macro_report(metric, std::move(per_query), order);
}

}  // namespace

EvalReport extraction_f1(std::span<const Sample> samples,
                         std::span<const extraction::ExtractionResult> results,
                         const SchemaPool& pool) {
  return credit_report(Metric::extraction_f1, samples, results, pool, nullptr);
}

EvalReport e2e_f1(std::span<const Sample> samples, const Rankings& ranked,
                  std::span<const extraction::ExtractionResult> results, const SchemaPool& pool) {
  return credit_report(Metric::e2e_f1, samples, results, pool, &ranked);
}

Json to_json(const EvalReport& report) {
  Json j;
  j["metric"] = std::string(to_string(report.metric));
  j["k"] = report.k ? Json(*report.k) : Json(nullptr);
  j["value"] = report.value;
  if (report.per_query) {
    Json pq = Json::object();
    for (const auto& [id, v] : *report.per_query) pq[id] = v;
    j["per_query"] = std::move(pq);
  } else {
    j["per_query"] = nullptr;
  }
  j["config_fingerprint"] = report.config_fingerprint;
  if (report.row) j["row"] = *report.row;
  if (report.column) j["column"] = *report.column;
  return j;
}

EvalReport report_from_json(const Json& j) {
  EvalReport r;
  try {
    r.metric = metric_from_string(j.at("metric").get<std::string>());
    if (auto k = j.find("k"); k != j.end() && !k->is_null()) r.k = k->get<std::size_t>();
    r.value = j.at("value").get<double>();
    if (auto pq = j.find("per_query"); pq != j.end() && !pq->is_null()) {
      r.per_query.emplace();
      for (const auto& [id, v] : pq->items()) (*r.per_query)[id] = v.get<double>();
    }
    r.config_fingerprint = j.value("config_fingerprint", "");
    if (auto row = j.find("row"); row != j.end() && row->is_string()) r.row = row->get<std::string>();
    if (auto col = j.find("column"); col != j.end() && col->is_string()) {
      r.column = col->get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what(), 0);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 0);
  }
  return r;
}

std::string render_markdown(std::span<const EvalReport> reports) {
  auto row_of = [](const EvalReport& r) {
    return r.row ? *r.row : std::string(to_string(r.metric));
  };
  auto column_of = [](const EvalReport& r) {
    if (r.column) return *r.column;
    return r.k ? fmt::format("K={}", *r.k) : std::string(to_string(r.metric));
  };
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const auto& r : reports) {
    const std::string row = row_of(r);
    const std::string col = column_of(r);
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    cells[{row, col}] = r.value;
  }
  std::string out = "| Strategy |";
  for (const auto& c : columns) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& row : rows) {
    out += "| " + row + " |";
    for (const auto& c : columns) {
      auto it = cells.find({row, c});
      out += it == cells.end() ? " - |" : fmt::format(" {:.4f} |", it->second);
    }
    out += "\n";
  }
  return out;
}

void emit_report(std::span<const EvalReport> reports, const std::string& out_path,
                 ReportFormat format) {
  if (format == ReportFormat::markdown_table) {
    io::write_file(out_path, render_markdown(reports));
    return;
  }
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  io::write_file(out_path, arr.dump(2) + "\n");
}

std::vector<EvalReport> load_reports(const std::string& path) {
  Json arr;
  try {
    arr = Json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "': " + e.what(), 0);
  }
  if (!arr.is_array()) throw ParseError("'" + path + "': expected a JSON array of reports", 0);
  std::vector<EvalReport> out;
  for (const auto& j : arr) out.push_back(report_from_json(j));
  return out;
}

}  // namespace asee::evaluation
