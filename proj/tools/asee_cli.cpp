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

// asee: schema pool construction, schema retrieval, schema-aware extraction
// and evaluation as one command-line tool.
//
//   asee --config run.json build-pool
//   asee --config run.json retrieve --strategy dense --mode raw --k 5
//
// Exit status: 0 success, 1 fatal error, 2 partial failure (outputs written).

#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "asee/errors.hpp"
#include "asee/pipeline.hpp"

namespace {

using asee::pipeline::CommandContext;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("asee");
  logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e %^%l%$ %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* levels = std::getenv("ASEE_LOG")) spdlog::cfg::helpers::load_levels(levels);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Schema retrieval augmented event extraction pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  app.add_option("--config", config_path, "Pipeline configuration (JSON)")->required();
  app.add_option("--seed", seed, "Overrides the demonstration and split seeds");
  app.add_flag("--dry-run", dry_run, "Validate inputs and print the plan without writing");

  std::optional<std::string> strategy;
  std::optional<std::string> mode;
  std::optional<std::size_t> k;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--strategy", strategy,
                    "bm25, dense, bm25_then_rerank, dense_then_rerank or gold");
    cmd->add_option("--mode", mode, "Schema document mode: raw or paraphrased");
    cmd->add_option("--k", k, "Number of schemas to retrieve");
  };

  std::function<int(const CommandContext&)> command;
  auto bind = [&](CLI::App* cmd, int (*fn)(const CommandContext&)) {
    cmd->callback([&command, fn] { command = fn; });
  };
  bind(app.add_subcommand("build-pool", "Paraphrase raw schemas into a schema pool"),
       asee::pipeline::cmd_build_pool);
  bind(app.add_subcommand("consolidate", "Merge, diversify and filter the pool and corpus"),
       asee::pipeline::cmd_consolidate);
  auto* retrieve = app.add_subcommand("retrieve", "Rank schemas for every sample");
  add_run_options(retrieve);
  bind(retrieve, asee::pipeline::cmd_retrieve);
  auto* extract = app.add_subcommand("extract", "Extract events with the retrieved schemas");
  add_run_options(extract);
  bind(extract, asee::pipeline::cmd_extract);
  auto* evaluate = app.add_subcommand("evaluate", "Compute Recall@K, extraction F1 and E2E F1");
  add_run_options(evaluate);
  bind(evaluate, asee::pipeline::cmd_evaluate);
  bind(app.add_subcommand("export-sft", "Write instruction/output pairs for fine-tuning"),
       asee::pipeline::cmd_export_sft);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : asee::pipeline::kExitFatal;
  }

  try {
    CommandContext ctx;
    ctx.config = asee::pipeline::load_config(config_path);
    if (seed) {
      ctx.config.seed = *seed;
      ctx.config.consolidation.split_seed = *seed;
    }
    if (strategy) ctx.config.retrieval.run.strategy = *strategy;
    if (mode) ctx.config.retrieval.run.mode = asee::schema_pool::document_mode_from_string(*mode);
    if (k) ctx.config.retrieval.k = *k;
    ctx.config.validate();
    ctx.dry_run = dry_run;
    ctx.out = &std::cout;
    return command(ctx);
  } catch (const asee::Error& e) {
    spdlog::error("{}", e.what());
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
  }
  return asee::pipeline::kExitFatal;
}
