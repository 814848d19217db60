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

// Schema-aware extraction: prompt assembly, reply parsing and validation,
// and fine-tuning data export.
//
// Prompts address schemas by name, since names are what a model echoes back
// reliably; parse_extraction_output maps names back to schema_ids. Values are
// stored verbatim and only normalized at evaluation time.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asee/gateway.hpp"
#include "asee/json_io.hpp"
#include "asee/retrieval.hpp"
#include "asee/types.hpp"

namespace asee::extraction {

std::string default_extraction_template();

struct ExtractionPrompt {
  std::string sample_id;
  std::vector<std::string> schema_ids;
  std::string rendered;
  /// Hex hash of the template text.
  std::string template_id;
};

/// JSON array of {name, description, arguments:[{name, description}]}, one
/// schema per line.
std::string render_schema_block(std::span<const Schema> schemas);

/// Fills {{query}} and {{schemas}}. Throws TemplateError when either
/// placeholder is missing or `schemas` is empty, and PromptTooLarge when the
/// result exceeds `prompt_char_cap` scalar values.
ExtractionPrompt assemble_prompt(const std::string& query, std::span<const Schema> schemas,
                                 const std::string& prompt_template,
                                 std::size_t prompt_char_cap = gateway::kDefaultPromptCharCap,
                                 const std::string& sample_id = {});

enum class ParseStatus { clean, repaired, failed };

std::string_view to_string(ParseStatus status);
ParseStatus parse_status_from_string(std::string_view name);

struct Tallies {
  /// Top-level keys that named no prompted schema.
  std::size_t hallucinated_schemas = 0;
  /// Event keys that are not declared arguments of their schema.
  std::size_t dropped_args = 0;

  Tallies& operator+=(const Tallies& other) {
    hallucinated_schemas += other.hallucinated_schemas;
    dropped_args += other.dropped_args;
    return *this;
  }
  bool operator==(const Tallies&) const = default;
};

struct ExtractionResult {
  std::string sample_id;
  std::map<std::string, std::vector<ArgumentValueMap>> per_schema;
  std::string backend_id;
  ParseStatus parse_status = ParseStatus::failed;
  Tallies tallies;
  /// Generation error text when a call failed.
  std::optional<std::string> error;

  bool operator==(const ExtractionResult&) const = default;
};

/// Reads {"<schema name>": [{"<arg>": [values]}]} out of a model reply.
/// Never throws: a reply without usable JSON yields ParseStatus::failed.
/// Status is `repaired` when the JSON had to be cut from prose, had trailing
/// commas, or needed shape coercion (scalar values, a bare event object).
ExtractionResult parse_extraction_output(std::string_view raw_reply,
                                         std::span<const Schema> schemas);

struct ExtractOptions {
  std::string prompt_template = default_extraction_template();
  /// One schema per prompt instead of all retrieved schemas in one prompt.
  bool batch_per_schema = false;
  int max_output_tokens = 1024;
  double temperature = 0.0;
};

/// Prompts the backend with the sample and its retrieved schemas and returns
/// the validated result. Schemas that share a name are split across prompts
/// so every name in a prompt is unambiguous. Generation failures produce a
/// `failed` result instead of throwing. Throws InvalidArgument for an empty
/// ranking and UnresolvableSchema for an id missing from the pool.
ExtractionResult extract(const Sample& sample, const retrieval::RankedList& retrieved,
                         const SchemaPool& pool, const gateway::GenerationClient& backend,
                         const ExtractOptions& options = {});

/// Mock responder that answers an extraction prompt with the gold events of
/// the sample whose query it contains, restricted to the prompted schemas.
/// Prompts matching no sample fall through (nullopt).
gateway::Responder make_gold_echo_responder(std::vector<Sample> samples, SchemaPool pool);

/// {"<schema name>": canonical events} as compact JSON.
std::string canonical_output(const Schema& schema, const std::vector<ArgumentValueMap>& events);

/// One {"instruction","output"} record per (sample, gold schema) pair of
/// every train or unassigned sample. Throws UnresolvableSchema.
std::vector<io::Json> sft_records(std::span<const Sample> samples, const SchemaPool& pool,
                                  const std::string& prompt_template);

/// Writes sft_records as JSONL and returns the record count.
std::size_t export_sft(std::span<const Sample> samples, const SchemaPool& pool,
                       const std::string& prompt_template, const std::string& out_path);

io::Json to_json(const ExtractionResult& result);
ExtractionResult result_from_json(const io::Json& j, std::size_t line = 0);

/// Throws DuplicateId on a repeated sample_id.
std::vector<ExtractionResult> load_results(const std::string& path);

}  // namespace asee::extraction
