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

// Retrieval and extraction metrics.
//
// Every aggregate is a macro average over queries: a query's score is the
// mean over its gold schemas, and the reported value is the mean of those
// per-query scores, summed in sample order. Extraction F1 and end-to-end F1
// share the per-pair computation, so under perfect retrieval they agree
// bit for bit.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asee/extraction.hpp"
#include "asee/json_io.hpp"
#include "asee/retrieval.hpp"
#include "asee/types.hpp"

namespace asee::evaluation {

/// NFC, case fold, whitespace collapse, then surrounding punctuation and
/// whitespace stripped until stable. Idempotent.
std::string normalize_value(std::string_view value);

/// F1 between two value lists compared as multisets of normalized values.
/// Returns nullopt when both are empty.
std::optional<double> value_f1(std::span<const std::string> gold,
                               std::span<const std::string> pred);

/// Events are aligned greedily by descending pairwise event F1 (the mean
/// per-argument F1); ties are broken by event content so the result does
/// not depend on list order. Unmatched events score 0 on each of their
/// non-empty arguments. Arguments empty on both sides are left out, and a
/// comparison with nothing left to score returns 1.
double argument_f1(std::span<const ArgumentValueMap> gold_events,
                   std::span<const ArgumentValueMap> pred_events, const Schema& schema);

enum class Metric { recall_at_k, extraction_f1, e2e_f1 };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

struct EvalReport {
  Metric metric = Metric::recall_at_k;
  std::optional<std::size_t> k;
  double value = 0.0;
  std::optional<std::map<std::string, double>> per_query;
  std::string config_fingerprint;
  /// Table placement: row label (retrieval strategy) and column label
  /// ("Raw", "Paraph.", "K=10", ...).
  std::optional<std::string> row;
  std::optional<std::string> column;

  bool operator==(const EvalReport&) const = default;
};

using GoldSets = std::map<std::string, std::set<std::string>>;
using Rankings = std::map<std::string, retrieval::RankedList>;

/// sample_id -> gold schema ids, for samples with at least one gold entry.
GoldSets gold_schema_sets(std::span<const Sample> samples);

/// Mean over queries of |gold ∩ top-k| / |gold|. Throws MissingRankings when
/// a gold query has no ranking and InvalidArgument for k = 0 or an empty
/// gold set.
EvalReport recall_at_k(const GoldSets& gold, const Rankings& ranked, std::size_t k);

/// Mean over queries of the mean argument_f1 over the query's gold schemas;
/// a schema with no prediction scores 0. Samples without gold are skipped.
/// Throws SampleResultMismatch unless results and samples pair up one to one.
EvalReport extraction_f1(std::span<const Sample> samples,
                         std::span<const extraction::ExtractionResult> results,
                         const SchemaPool& pool);

/// As extraction_f1, but a gold schema only earns its F1 when it appears in
/// the query's ranking; retrieved non-gold schemas are ignored.
EvalReport e2e_f1(std::span<const Sample> samples, const Rankings& ranked,
                  std::span<const extraction::ExtractionResult> results, const SchemaPool& pool);

enum class ReportFormat { json, markdown_table };

io::Json to_json(const EvalReport& report);
EvalReport report_from_json(const io::Json& j);

/// Rows are distinct `row` labels and columns distinct `column` labels, both
/// in first-appearance order. Missing labels fall back to the metric name
/// and "K=<k>" (or the metric name).
std::string render_markdown(std::span<const EvalReport> reports);

/// Writes a JSON array or a markdown table. Throws IoError.
void emit_report(std::span<const EvalReport> reports, const std::string& out_path,
                 ReportFormat format);

/// Reads a JSON report file written by emit_report.
std::vector<EvalReport> load_reports(const std::string& path);

}  // namespace asee::evaluation
