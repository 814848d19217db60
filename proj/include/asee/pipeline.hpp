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

// End-to-end orchestration behind the `asee` subcommands. Each command reads
// its inputs from files named in a PipelineConfig and writes its outputs
// under `paths.outputs`; no command rewrites a file it read.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asee/evaluation.hpp"
#include "asee/extraction.hpp"
#include "asee/gateway.hpp"
#include "asee/json_io.hpp"
#include "asee/retrieval.hpp"

namespace asee::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

/// How a mock generation backend answers.
enum class MockMode {
  /// Table from `mock_script`, "UNKNOWN" otherwise.
  script,
  /// Gold events of the sample found in an extraction prompt.
  gold_echo,
  /// Every call fails with TransportError.
  fail,
};

struct BackendSettings {
  gateway::BackendConfig config;
  MockMode mock_mode = MockMode::script;
};

/// Retrieval strategy for the retrieve command; `gold` ranks exactly the
/// sample's gold schemas and serves as the perfect-retrieval reference.
struct RunSelector {
  std::string strategy = "bm25";
  schema_pool::DocumentMode mode = schema_pool::DocumentMode::paraphrased;
};

struct PipelineConfig {
  struct Paths {
    std::string schemas;
    std::string samples;
    std::string pool;
    std::string index;
    /// Optional hand-written merge log ({"merged", "into"} JSONL) applied by
    /// consolidate after the heuristic merge.
    std::string redirects;
    std::string outputs = "out";
  } paths;

  BackendSettings generation;
  BackendSettings embedding;
  BackendSettings reranker;

  struct Retrieval {
    RunSelector run;
    std::size_t k = 10;
    double k1 = retrieval::kDefaultK1;
    double b = retrieval::kDefaultB;
    std::size_t rerank_pool_size = retrieval::kRerankPoolSize;
  } retrieval;

  struct Consolidation {
    double name_threshold = 0.8;
    double cosine_threshold = 0.85;
    std::size_t max_labels = 15;
    std::uint64_t split_seed = 0;
  } consolidation;

  struct Extraction {
    /// Template file; empty selects the built-in template.
    std::string template_path;
    bool batching = false;
    std::size_t k_demos = 3;
  } extraction;

  struct Evaluation {
    /// Recall cut-offs; empty means {retrieval.k}.
    std::vector<std::size_t> ks;
    /// Runs to report; empty means the run selected by `retrieval`.
    std::vector<RunSelector> runs;
  } evaluation;

  /// Restricts retrieve / extract / evaluate / export to one split ("" = all).
  std::string split;
  /// Demonstration-selection seed for build-pool.
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;

  /// Effective configuration as JSON (after interpolation and overrides).
  io::Json to_json() const;

  /// 16-hex-digit FNV-1a hash of to_json().dump().
  std::string fingerprint() const;
};

/// Replaces ${NAME} with the environment variable's value. Throws
/// InvalidArgument for an unset variable.
std::string interpolate_env(const std::string& text);

/// Parses a config document; relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const io::Json& j, const std::string& base_dir = {});

/// Reads, interpolates and parses a config file. Throws IoError, ParseError,
/// InvalidArgument.
PipelineConfig load_config(const std::string& path);

/// Output file names under paths.outputs.
std::string rankings_path(const PipelineConfig& config, const RunSelector& run);
std::string results_path(const PipelineConfig& config, const RunSelector& run);

/// Rankings JSONL: {"sample_id","strategy","mode","k","topk":[{"schema_id","score"}],
/// "config_fingerprint"}.
std::map<std::string, retrieval::RankedList> load_rankings(const std::string& path);

struct CommandContext {
  PipelineConfig config;
  bool dry_run = false;
  /// Progress and summary lines.
  std::ostream* out = nullptr;
};

int cmd_build_pool(const CommandContext& ctx);
int cmd_consolidate(const CommandContext& ctx);
int cmd_retrieve(const CommandContext& ctx);
int cmd_extract(const CommandContext& ctx);
int cmd_evaluate(const CommandContext& ctx);
int cmd_export_sft(const CommandContext& ctx);

}  // namespace asee::pipeline
