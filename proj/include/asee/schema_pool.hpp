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

// Schema pool construction: loading, few-shot paraphrasing, translation,
// persistence and the text each schema contributes to the retrieval corpus.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asee/gateway.hpp"
#include "asee/types.hpp"

namespace asee::schema_pool {

inline constexpr std::size_t kDefaultDemos = 3;
inline constexpr std::size_t kDemoExcerptChars = 500;

/// Reads schema JSONL. Also accepts a pool file: the optional metadata line
/// and records tagged "revision":"paraphrased" are attached to the pool.
/// Throws ParseError (line reported), DuplicateId, EmptyFile.
SchemaPool load_schemas(const std::string& path);

/// Pool file layout: a metadata line {"pool_id","created_at"}, every raw
/// schema record in schema_id order, then every paraphrased record (schema
/// fields plus "revision","paraphrase_of","demo_sample_ids"[,"warning"]).
std::string serialize_pool(const SchemaPool& pool);
void save_pool(const std::string& path, const SchemaPool& pool);

/// Up to `k` training samples annotated with `schema`, picked by a seeded
/// hash of sample_id and returned sorted by sample_id.
std::vector<Sample> select_demonstrations(const Schema& schema,
                                          std::span<const Sample> training_corpus,
                                          std::size_t k, std::uint64_t seed);

std::string default_paraphrase_template();

struct GenerationOptions {
  int max_output_tokens = 1024;
  double temperature = 0.0;
};

struct ParaphraseOptions {
  /// Must contain {{schema_json}}; {{demonstrations}} is optional.
  std::string prompt_template = default_paraphrase_template();
  GenerationOptions generation;
};

/// Renders the paraphrase prompt. Throws TemplateError.
std::string render_paraphrase_prompt(const Schema& schema, std::span<const Sample> demos,
                                     const std::string& prompt_template);

/// Paraphrases one schema. Malformed or argument-renaming replies trigger a
/// single repair retry, then fall back to the raw schema with `warning` set.
/// Throws GenerationFailed when the backend itself fails.
ParaphrasedSchema paraphrase_schema(const Schema& schema, std::span<const Sample> demos,
                                    const gateway::GenerationClient& backend,
                                    const ParaphraseOptions& options = {});

struct BuildReport {
  /// (schema_id, error) for every schema whose generation call failed.
  std::vector<std::pair<std::string, std::string>> failures;
  /// schema_ids that fell back to the raw schema on unusable output.
  std::vector<std::string> fallbacks;

  bool partial() const { return !failures.empty(); }
};

struct BuildResult {
  SchemaPool pool;
  BuildReport report;
};

/// Paraphrases every schema of `raw`, fanning out up to the backend's
/// max_in_flight. Failed schemas keep their raw form; see the report.
BuildResult build_pool(const SchemaPool& raw, std::span<const Sample> training_corpus,
                       const gateway::GenerationClient& backend,
                       std::size_t k_demos = kDefaultDemos, std::uint64_t seed = 0,
                       const ParaphraseOptions& options = {});

struct TranslationResult {
  Schema schema;
  /// The reply changed the argument count (or was unusable); source
  /// argument names were kept untranslated.
  bool invariant_breach = false;
  std::optional<std::string> warning;
};

/// Translates names and descriptions into `target`; the id gains "@<lang>".
/// Throws InvalidArgument when target equals the source language and
/// GenerationFailed on backend failure.
TranslationResult translate_schema(const Schema& schema, Language target,
                                   const gateway::GenerationClient& backend,
                                   const GenerationOptions& options = {});

enum class DocumentMode { raw, paraphrased };

std::string_view to_string(DocumentMode mode);
DocumentMode document_mode_from_string(std::string_view name);

/// raw: "name\narg1; arg2". paraphrased: name, description, then one
/// "arg: description" line per argument.
std::string schema_document_text(const Schema& schema, DocumentMode mode);
std::string schema_document_text(const ParaphrasedSchema& schema, DocumentMode mode);

/// Document for `schema_id`: the paraphrased form in paraphrased mode when
/// one exists, otherwise the raw schema.
std::string schema_document_text(const SchemaPool& pool, const std::string& schema_id,
                                 DocumentMode mode);

/// {name, description, arguments:[{name, description}]} as compact JSON.
std::string schema_prompt_json(const Schema& schema);

}  // namespace asee::schema_pool
