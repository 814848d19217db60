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

#include "asee/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "asee/consolidation.hpp"
#include "asee/errors.hpp"
#include "asee/schema_pool.hpp"
#include "asee/text.hpp"

namespace asee::pipeline {

namespace fs = std::filesystem;
using io::Json;
using schema_pool::DocumentMode;

namespace {

std::string_view to_string(MockMode mode) {
  switch (mode) {
    case MockMode::script:
      return "script";
    case MockMode::gold_echo:
      return "gold-echo";
    case MockMode::fail:
      break;
  }
  return "fail";
}

MockMode mock_mode_from_string(std::string_view name) {
  if (name == "script") return MockMode::script;
  if (name == "gold-echo") return MockMode::gold_echo;
  if (name == "fail") return MockMode::fail;
  throw InvalidArgument("unknown mock_mode '" + std::string(name) + "'");
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

BackendSettings backend_from_json(const Json& j, gateway::BackendKind kind,
                                  const std::string& base_dir) {
  BackendSettings s;
  s.config.kind = kind;
  if (j.is_null()) return s;
  if (!j.is_object()) throw InvalidArgument("backend config must be an object");
  auto& c = s.config;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.auth_token_env = j.value("auth_token_env", c.auth_token_env);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.retry_limit = j.value("retry_limit", c.retry_limit);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.prompt_char_cap = j.value("prompt_char_cap", c.prompt_char_cap);
  c.mock_script = resolve(j.value("mock_script", c.mock_script), base_dir);
  s.mock_mode = mock_mode_from_string(j.value("mock_mode", std::string("script")));
  return s;
}

Json backend_to_json(const BackendSettings& s) {
  const auto& c = s.config;
  return Json{{"endpoint", c.endpoint},
              {"model", c.model},
              {"auth_token_env", c.auth_token_env},
              {"max_in_flight", c.max_in_flight},
              {"retry_limit", c.retry_limit},
              {"timeout_ms", c.timeout_ms},
              {"prompt_char_cap", c.prompt_char_cap},
              {"mock_script", c.mock_script},
              {"mock_mode", std::string(to_string(s.mock_mode))}};
}

RunSelector run_from_json(const Json& j) {
  RunSelector run;
  run.strategy = j.value("strategy", run.strategy);
  run.mode = schema_pool::document_mode_from_string(
      j.value("mode", std::string(schema_pool::to_string(run.mode))));
  return run;
}

Json run_to_json(const RunSelector& run) {
  return Json{{"strategy", run.strategy}, {"mode", std::string(schema_pool::to_string(run.mode))}};
}

void interpolate_strings(Json& j) {
  if (j.is_string()) {
    j = interpolate_env(j.get<std::string>());
  } else if (j.is_structured()) {
    for (auto& child : j) interpolate_strings(child);
  }
}

void validate_strategy(const std::string& strategy) {
  if (strategy != "gold") retrieval::strategy_from_string(strategy);
}

}  // namespace

void PipelineConfig::validate() const {
  if (retrieval.k < 1) throw InvalidArgument("retrieval.k must be >= 1");
  if (retrieval.rerank_pool_size < 1) throw InvalidArgument("retrieval.rerank_pool_size must be >= 1");
  if (!(retrieval.k1 >= 0.0)) throw InvalidArgument("retrieval.k1 must be >= 0");
  if (!(retrieval.b >= 0.0 && retrieval.b <= 1.0)) throw InvalidArgument("retrieval.b must be in [0,1]");
  validate_strategy(retrieval.run.strategy);
  for (const auto& run : evaluation.runs) validate_strategy(run.strategy);
  for (std::size_t k : evaluation.ks) {
    if (k < 1) throw InvalidArgument("evaluation.ks entries must be >= 1");
  }
  auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!in_unit(consolidation.name_threshold)) {
    throw InvalidArgument("consolidation.name_threshold must be in (0,1]");
  }
  if (!in_unit(consolidation.cosine_threshold)) {
    throw InvalidArgument("consolidation.cosine_threshold must be in (0,1]");
  }
  if (extraction.k_demos < 1) throw InvalidArgument("extraction.k_demos must be >= 1");
  if (consolidation.max_labels < 1) throw InvalidArgument("consolidation.max_labels must be >= 1");
  if (!split.empty()) split_from_string(split);
  generation.config.validate();
  embedding.config.validate();
  reranker.config.validate();
}

Json PipelineConfig::to_json() const {
  Json ks = Json::array();
  for (auto k : evaluation.ks) ks.push_back(k);
  Json runs = Json::array();
  for (const auto& r : evaluation.runs) runs.push_back(run_to_json(r));
  return Json{
      {"paths",
       {{"schemas", paths.schemas},
        {"samples", paths.samples},
        {"pool", paths.pool},
        {"index", paths.index},
        {"redirects", paths.redirects},
        {"outputs", paths.outputs}}},
      {"backends",
       {{"generation", backend_to_json(generation)},
        {"embedding", backend_to_json(embedding)},
        {"reranker", backend_to_json(reranker)}}},
      {"retrieval",
       {{"strategy", retrieval.run.strategy},
        {"mode", std::string(schema_pool::to_string(retrieval.run.mode))},
        {"k", retrieval.k},
        {"k1", retrieval.k1},
        {"b", retrieval.b},
        {"rerank_pool_size", retrieval.rerank_pool_size}}},
      {"consolidation",
       {{"name_threshold", consolidation.name_threshold},
        {"cosine_threshold", consolidation.cosine_threshold},
        {"max_labels", consolidation.max_labels},
        {"split_seed", consolidation.split_seed}}},
      {"extraction",
       {{"template", extraction.template_path},
        {"batching", extraction.batching},
        {"k_demos", extraction.k_demos}}},
      {"evaluation", {{"ks", std::move(ks)}, {"runs", std::move(runs)}}},
      {"split", split},
      {"seed", seed}};
}

std::string PipelineConfig::fingerprint() const {
  return text::to_hex(text::fnv1a64(to_json().dump()));
}

std::string interpolate_env(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("${", pos);
    if (open == std::string::npos) break;
    const std::size_t close = text.find('}', open + 2);
    if (close == std::string::npos) break;
    out.append(text, pos, open - pos);
    const std::string name = text.substr(open + 2, close - open - 2);
    const char* value = std::getenv(name.c_str());
    if (!value) throw InvalidArgument("config references unset environment variable '" + name + "'");
    out += value;
    pos = close + 1;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

PipelineConfig config_from_json(const Json& input, const std::string& base_dir) {
  if (!input.is_object()) throw InvalidArgument("config must be a JSON object");
  Json j = input;
  interpolate_strings(j);

  PipelineConfig c;
  try {
    if (auto p = j.find("paths"); p != j.end()) {
      c.paths.schemas = resolve(p->value("schemas", ""), base_dir);
      c.paths.samples = resolve(p->value("samples", ""), base_dir);
      c.paths.pool = resolve(p->value("pool", ""), base_dir);
      c.paths.index = resolve(p->value("index", ""), base_dir);
      c.paths.redirects = resolve(p->value("redirects", ""), base_dir);
      c.paths.outputs = resolve(p->value("outputs", c.paths.outputs), base_dir);
    } else {
      c.paths.outputs = resolve(c.paths.outputs, base_dir);
    }
    const Json backends = j.value("backends", Json::object());
    c.generation = backend_from_json(backends.value("generation", Json()),
                                     gateway::BackendKind::generation, base_dir);
    c.embedding = backend_from_json(backends.value("embedding", Json()),
                                    gateway::BackendKind::embedding, base_dir);
    c.reranker = backend_from_json(backends.value("reranker", Json()),
                                   gateway::BackendKind::rerank, base_dir);
    if (auto r = j.find("retrieval"); r != j.end()) {
      c.retrieval.run = run_from_json(*r);
      c.retrieval.k = r->value("k", c.retrieval.k);
      c.retrieval.k1 = r->value("k1", c.retrieval.k1);
      c.retrieval.b = r->value("b", c.retrieval.b);
      c.retrieval.rerank_pool_size = r->value("rerank_pool_size", c.retrieval.rerank_pool_size);
    }
    if (auto s = j.find("consolidation"); s != j.end()) {
      c.consolidation.name_threshold = s->value("name_threshold", c.consolidation.name_threshold);
      c.consolidation.cosine_threshold =
          s->value("cosine_threshold", c.consolidation.cosine_threshold);
      c.consolidation.max_labels = s->value("max_labels", c.consolidation.max_labels);
      c.consolidation.split_seed = s->value("split_seed", c.consolidation.split_seed);
    }
    if (auto e = j.find("extraction"); e != j.end()) {
      c.extraction.template_path = resolve(e->value("template", ""), base_dir);
      c.extraction.batching = e->value("batching", c.extraction.batching);
      c.extraction.k_demos = e->value("k_demos", c.extraction.k_demos);
    }
    if (auto v = j.find("evaluation"); v != j.end()) {
      c.evaluation.ks = v->value("ks", std::vector<std::size_t>{});
      for (const auto& r : v->value("runs", Json::array())) {
        c.evaluation.runs.push_back(run_from_json(r));
      }
    }
    c.split = j.value("split", "");
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "': " + e.what(), 0);
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

std::string rankings_path(const PipelineConfig& config, const RunSelector& run) {
  return (fs::path(config.paths.outputs) /
          fmt::format("rankings-{}-{}.jsonl", run.strategy, schema_pool::to_string(run.mode)))
      .string();
}

std::string results_path(const PipelineConfig& config, const RunSelector& run) {
  return (fs::path(config.paths.outputs) /
          fmt::format("results-{}-{}.jsonl", run.strategy, schema_pool::to_string(run.mode)))
      .string();
}

std::map<std::string, retrieval::RankedList> load_rankings(const std::string& path) {
  std::map<std::string, retrieval::RankedList> out;
  io::read_jsonl(path, [&](const Json& j, std::size_t line) {
    try {
      retrieval::RankedList list;
      list.k = j.at("k").get<std::size_t>();
      for (const auto& e : j.at("topk")) {
        list.entries.push_back({e.at("schema_id").get<std::string>(), e.at("score").get<double>()});
      }
      const std::string id = j.at("sample_id").get<std::string>();
      if (!out.emplace(id, std::move(list)).second) {
        throw DuplicateId("line " + std::to_string(line) + ": duplicate sample_id '" + id + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line);
    }
  });
  return out;
}

namespace {

std::ostream& out_of(const CommandContext& ctx) {
  return ctx.out ? *ctx.out : std::cout;
}

// Verifies inputs exist and outputs do not alias them. In dry-run mode prints
// the plan; returns true when the command should stop there.
bool plan(const CommandContext& ctx, std::string_view command,
          const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  for (const auto& in : inputs) {
    if (in.empty()) throw InvalidArgument(std::string(command) + ": a required input path is not configured");
    if (!fs::exists(in)) throw IoError(std::string(command) + ": input '" + in + "' does not exist");
    for (const auto& o : outputs) {
      if (fs::weakly_canonical(in) == fs::weakly_canonical(o)) {
        throw InvalidArgument(std::string(command) + ": output '" + o + "' would overwrite an input");
      }
    }
  }
  if (!ctx.dry_run) return false;
  auto& os = out_of(ctx);
  os << command << " (dry run, config " << ctx.config.fingerprint() << ")\n";
  for (const auto& in : inputs) os << "  read  " << in << "\n";
  for (const auto& o : outputs) os << "  write " << o << "\n";
  return true;
}

std::string output_path(const PipelineConfig& config, const std::string& name) {
  return (fs::path(config.paths.outputs) / name).string();
}

std::vector<Sample> select_split(std::vector<Sample> samples, const std::string& split) {
  if (split.empty()) return samples;
  const Split wanted = split_from_string(split);
  std::erase_if(samples, [&](const Sample& s) { return s.split != wanted; });
  return samples;
}

// Latest modification time of the inputs, so reruns stamp identical output.
std::string input_timestamp(const std::vector<std::string>& inputs) {
  std::chrono::system_clock::time_point latest{};
  for (const auto& in : inputs) {
    if (in.empty() || !fs::exists(in)) continue;
    const auto t = std::chrono::file_clock::to_sys(fs::last_write_time(in));
    latest = std::max(latest, std::chrono::time_point_cast<std::chrono::system_clock::duration>(t));
  }
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                     fmt::gmtime(std::chrono::system_clock::to_time_t(latest)));
}

gateway::GenerationClient generation_client(const BackendSettings& settings,
                                            gateway::Responder gold_echo) {
  switch (settings.mock_mode) {
    case MockMode::fail:
      if (settings.config.is_mock()) {
        auto failing = [](const std::string&) -> std::optional<std::string> {
          throw TransportError("mock backend configured to fail");
        };
        return gateway::GenerationClient(
            settings.config, std::make_shared<gateway::ScriptedGenerator>(
                                 std::map<std::string, std::string>{}, failing),
            [](std::chrono::milliseconds) {});
      }
      break;
    case MockMode::gold_echo:
      return gateway::make_generation_client(settings.config, std::move(gold_echo));
    case MockMode::script:
      break;
  }
  return gateway::make_generation_client(settings.config);
}

std::string load_template(const PipelineConfig& config) {
  if (config.extraction.template_path.empty()) return extraction::default_extraction_template();
  return io::read_file(config.extraction.template_path);
}

Json with_fingerprint(Json record, const std::string& fingerprint) {
  record["config_fingerprint"] = fingerprint;
  return record;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < count; ++t) threads.emplace_back(loop);
    loop();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

int cmd_build_pool(const CommandContext& ctx) {
  const auto& c = ctx.config;
  std::vector<std::string> inputs{c.paths.schemas};
  if (!c.paths.samples.empty()) inputs.push_back(c.paths.samples);
  if (c.paths.pool.empty()) throw InvalidArgument("build-pool: paths.pool is not configured");
  if (plan(ctx, "build-pool", inputs, {c.paths.pool})) return kExitOk;

  const SchemaPool raw = schema_pool::load_schemas(c.paths.schemas);
  std::vector<Sample> training;
  if (!c.paths.samples.empty()) {
    for (auto& s : io::load_samples(c.paths.samples)) {
      if (s.split == Split::train || s.split == Split::unassigned) training.push_back(std::move(s));
    }
  }
  const auto client = generation_client(c.generation, nullptr);
  auto [pool, report] = schema_pool::build_pool(raw, training, client, c.extraction.k_demos, c.seed);
  pool.pool_id = "pool-" + c.fingerprint();
  pool.created_at = input_timestamp(inputs);
  schema_pool::save_pool(c.paths.pool, pool);

  auto& os = out_of(ctx);
  os << fmt::format("paraphrased {} schemas: {} fell back to raw output, {} generation failures\n",
                    pool.size(), report.fallbacks.size(), report.failures.size());
  for (const auto& [id, err] : report.failures) os << "  failed " << id << ": " << err << "\n";
  os << "wrote " << c.paths.pool << "\n";
  return report.partial() ? kExitPartial : kExitOk;
}

int cmd_consolidate(const CommandContext& ctx) {
  const auto& c = ctx.config;
  const std::string pool_in = c.paths.pool.empty() ? c.paths.schemas : c.paths.pool;
  const std::string pool_out = output_path(c, "pool.consolidated.jsonl");
  const std::string log_out = output_path(c, "merge_log.jsonl");
  const std::string corpus_out = output_path(c, "corpus.consolidated.jsonl");
  std::vector<std::string> inputs{pool_in, c.paths.samples};
  if (!c.paths.redirects.empty()) inputs.push_back(c.paths.redirects);
  if (plan(ctx, "consolidate", inputs, {pool_out, log_out, corpus_out})) return kExitOk;

  const SchemaPool input = schema_pool::load_schemas(pool_in);
  std::vector<Sample> samples = io::load_samples(c.paths.samples);

  auto [pool, log] = consolidation::heuristic_merge(input, c.consolidation.name_threshold);
  if (!c.paths.redirects.empty()) {
    for (auto& e : consolidation::load_merge_log(c.paths.redirects)) {
      if (!pool.schemas.contains(e.merged)) continue;
      const auto resolved = consolidation::resolve_redirects(log);
      const auto target = resolved.find(e.into);
      if (!pool.schemas.contains(target == resolved.end() ? e.into : target->second)) {
        spdlog::warn("redirect {} -> {} targets a schema not in the pool; ignored", e.merged,
                     e.into);
        continue;
      }
      pool.schemas.erase(e.merged);
      pool.paraphrased.erase(e.merged);
      log.push_back(std::move(e));
    }
  }

  // Redirect merged ids first so variant renames reach every sample.
  std::set<std::string> all_ids;
  for (const auto& [id, s] : pool.schemas) all_ids.insert(id);
  samples = consolidation::filter_corpus(samples, all_ids, log);

  std::size_t collapsed = 0;
  for (auto& [id, schema] : pool.schemas) {
    const auto renames = consolidation::numeric_variant_renames(schema);
    if (renames.empty()) continue;
    ++collapsed;
    schema = consolidation::collapse_numeric_variants(schema);
    if (auto p = pool.paraphrased.find(id); p != pool.paraphrased.end()) {
      p->second.base = consolidation::collapse_numeric_variants(p->second.base);
    }
    consolidation::rename_sample_arguments(samples, id, renames);
  }

  const auto embedder = gateway::make_embedding_client(c.embedding.config);
  const auto graph =
      consolidation::build_similarity_graph(pool, embedder, c.consolidation.cosine_threshold);
  const auto kept = consolidation::greedy_max_independent_set(graph);
  const std::size_t before_mis = pool.size();
  std::erase_if(pool.schemas, [&](const auto& kv) { return !kept.contains(kv.first); });
  std::erase_if(pool.paraphrased, [&](const auto& kv) { return !kept.contains(kv.first); });

  const std::size_t samples_in = samples.size();
  auto corpus = consolidation::filter_corpus(samples, kept);
  const std::size_t no_gold = samples_in - corpus.size();
  corpus = consolidation::split_corpus(corpus, c.consolidation.split_seed);
  const std::size_t before_labels = corpus.size();
  corpus = consolidation::filter_label_count(corpus, c.consolidation.max_labels);
  const std::size_t over_labels = before_labels - corpus.size();

  const std::string fp = c.fingerprint();
  pool.pool_id = "pool-" + fp;
  pool.created_at = input_timestamp({pool_in, c.paths.samples});
  schema_pool::save_pool(pool_out, pool);
  std::vector<Json> log_records;
  for (const auto& e : log) {
    log_records.push_back(with_fingerprint(
        Json{{"merged", e.merged}, {"into", e.into}, {"name_sim", e.name_sim}}, fp));
  }
  io::write_jsonl(log_out, log_records);
  std::vector<Json> corpus_records;
  std::map<Split, std::size_t> per_split;
  for (const auto& s : corpus) {
    corpus_records.push_back(with_fingerprint(io::to_json(s), fp));
    ++per_split[s.split];
  }
  io::write_jsonl(corpus_out, corpus_records);

  auto& os = out_of(ctx);
  os << fmt::format("schemas: {} in, {} merged, {} variant families collapsed, {} kept, {} dropped "
                    "as similar ({} edges)\n",
                    input.size(), log.size(), collapsed, pool.size(), before_mis - pool.size(),
                    graph.edge_count());
  os << fmt::format("samples: {} in, {} dropped without gold, {} dropped with more than {} labels, "
                    "{} kept (train {}, dev {}, test {})\n",
                    samples_in, no_gold, over_labels, c.consolidation.max_labels, corpus.size(),
                    per_split[Split::train], per_split[Split::dev], per_split[Split::test]);
  os << "wrote " << pool_out << ", " << log_out << ", " << corpus_out << "\n";
  return kExitOk;
}

int cmd_retrieve(const CommandContext& ctx) {
  const auto& c = ctx.config;
  const auto& run = c.retrieval.run;
  const std::string out_path = rankings_path(c, run);
  if (plan(ctx, "retrieve", {c.paths.pool, c.paths.samples}, {out_path})) return kExitOk;

  const SchemaPool pool = schema_pool::load_schemas(c.paths.pool);
  const auto samples = select_split(io::load_samples(c.paths.samples), c.split);
  const std::string fp = c.fingerprint();

  std::vector<Json> records;
  auto emit = [&](const Sample& s, const retrieval::RankedList& list) {
    Json topk = Json::array();
    for (const auto& e : list.entries) topk.push_back(Json{{"schema_id", e.schema_id}, {"score", e.score}});
    records.push_back(Json{{"sample_id", s.sample_id},
                           {"strategy", run.strategy},
                           {"mode", std::string(schema_pool::to_string(run.mode))},
                           {"k", list.k},
                           {"topk", std::move(topk)},
                           {"config_fingerprint", fp}});
  };

  if (run.strategy == "gold") {
    for (const auto& s : samples) {
      retrieval::RankedList list;
      for (const auto& g : s.gold) {
        if (!list.contains(g.schema_id)) list.entries.push_back({g.schema_id, 1.0});
      }
      list.k = list.entries.size();
      emit(s, list);
    }
  } else {
    retrieval::SearchOptions options;
    options.strategy = retrieval::strategy_from_string(run.strategy);
    options.k = c.retrieval.k;
    options.k1 = c.retrieval.k1;
    options.b = c.retrieval.b;
    options.rerank_pool_size = c.retrieval.rerank_pool_size;
    const bool dense = options.strategy == retrieval::Strategy::dense ||
                       options.strategy == retrieval::Strategy::dense_then_rerank;
    const bool rerank = options.strategy == retrieval::Strategy::bm25_then_rerank ||
                        options.strategy == retrieval::Strategy::dense_then_rerank;
    std::optional<gateway::EmbeddingClient> embedder;
    std::optional<gateway::RerankClient> reranker;
    if (dense) {
      embedder.emplace(gateway::make_embedding_client(c.embedding.config));
      options.embedder = &*embedder;
    }
    if (rerank) {
      reranker.emplace(gateway::make_rerank_client(c.reranker.config));
      options.reranker = &*reranker;
    }

    std::optional<retrieval::RetrievalIndex> index;
    if (!c.paths.index.empty() && fs::exists(c.paths.index)) {
      auto loaded = retrieval::RetrievalIndex::load(c.paths.index);
      if (loaded.pool_ref() == pool.pool_id && loaded.mode() == run.mode &&
          (!dense || loaded.has_dense())) {
        index.emplace(std::move(loaded));
      } else {
        spdlog::warn("index '{}' does not match this pool and mode; rebuilding in memory",
                     c.paths.index);
      }
    }
    if (!index) {
      index.emplace(retrieval::RetrievalIndex::build(pool, run.mode, dense ? &*embedder : nullptr));
      if (!c.paths.index.empty() && !fs::exists(c.paths.index)) index->save(c.paths.index);
    }
    for (const auto& s : samples) emit(s, retrieval::search(*index, s.query, options));
  }

  io::write_jsonl(out_path, records);
  out_of(ctx) << fmt::format("ranked {} samples with {} over {} schemas ({} mode)\nwrote {}\n",
                             samples.size(), run.strategy, pool.size(),
                             schema_pool::to_string(run.mode), out_path);
  return kExitOk;
}

int cmd_extract(const CommandContext& ctx) {
  const auto& c = ctx.config;
  const auto& run = c.retrieval.run;
  const std::string in_rankings = rankings_path(c, run);
  const std::string out_path = results_path(c, run);
  std::vector<std::string> inputs{c.paths.pool, c.paths.samples, in_rankings};
  if (!c.extraction.template_path.empty()) inputs.push_back(c.extraction.template_path);
  if (plan(ctx, "extract", inputs, {out_path})) return kExitOk;

  const SchemaPool pool = schema_pool::load_schemas(c.paths.pool);
  const auto all_samples = io::load_samples(c.paths.samples);
  const auto rankings = load_rankings(in_rankings);
  if (rankings.empty()) {
    spdlog::error("rankings file '{}' is empty", in_rankings);
    return kExitFatal;
  }

  std::vector<Sample> samples;
  std::size_t unranked = 0;
  for (const auto& s : select_split(all_samples, c.split)) {
    if (rankings.contains(s.sample_id)) {
      samples.push_back(s);
    } else {
      ++unranked;
    }
  }
  if (unranked) spdlog::warn("{} samples have no ranking and were skipped", unranked);

  const auto client =
      generation_client(c.generation, extraction::make_gold_echo_responder(all_samples, pool));
  extraction::ExtractOptions options;
  options.prompt_template = load_template(c);
  options.batch_per_schema = c.extraction.batching;

  std::vector<extraction::ExtractionResult> results(samples.size());
  parallel_for(samples.size(), c.generation.config.max_in_flight, [&](std::size_t i) {
    const auto& list = rankings.at(samples[i].sample_id);
    if (list.entries.empty()) {
      results[i].sample_id = samples[i].sample_id;
      results[i].backend_id = client.backend_id();
      results[i].parse_status = extraction::ParseStatus::clean;
      return;
    }
    results[i] = extraction::extract(samples[i], list, pool, client, options);
  });

  const std::string fp = c.fingerprint();
  std::vector<Json> records;
  std::size_t failed = 0;
  extraction::Tallies tallies;
  for (const auto& r : results) {
    records.push_back(with_fingerprint(extraction::to_json(r), fp));
    failed += r.parse_status == extraction::ParseStatus::failed ? 1 : 0;
    tallies += r.tallies;
  }
  io::write_jsonl(out_path, records);
  out_of(ctx) << fmt::format(
      "extracted {} samples: {} failed, {} hallucinated schemas dropped, {} undeclared arguments "
      "dropped\nwrote {}\n",
      results.size(), failed, tallies.hallucinated_schemas, tallies.dropped_args, out_path);
  return failed ? kExitPartial : kExitOk;
}

int cmd_evaluate(const CommandContext& ctx) {
  const auto& c = ctx.config;
  const std::vector<RunSelector> runs =
      c.evaluation.runs.empty() ? std::vector<RunSelector>{c.retrieval.run} : c.evaluation.runs;
  const std::vector<std::size_t> ks =
      c.evaluation.ks.empty() ? std::vector<std::size_t>{c.retrieval.k} : c.evaluation.ks;
  const std::string json_out = output_path(c, "report.json");
  const std::string md_out = output_path(c, "report.md");
  std::vector<std::string> inputs{c.paths.pool, c.paths.samples};
  for (const auto& r : runs) inputs.push_back(rankings_path(c, r));
  if (plan(ctx, "evaluate", inputs, {json_out, md_out})) return kExitOk;

  const SchemaPool pool = schema_pool::load_schemas(c.paths.pool);
  const auto samples = select_split(io::load_samples(c.paths.samples), c.split);
  const auto gold = evaluation::gold_schema_sets(samples);
  const std::string fp = c.fingerprint();

  std::vector<evaluation::EvalReport> reports;
  auto add = [&](evaluation::EvalReport r, const RunSelector& run, std::string column) {
    r.config_fingerprint = fp;
    r.row = run.strategy;
    r.column = std::string(run.mode == DocumentMode::raw ? "Raw" : "Paraph.") + " " + column;
    reports.push_back(std::move(r));
  };
  for (const auto& run : runs) {
    const auto rankings = load_rankings(rankings_path(c, run));
    for (std::size_t k : ks) {
      add(evaluation::recall_at_k(gold, rankings, k), run, fmt::format("R@{}", k));
    }
    const std::string results_file = results_path(c, run);
    if (!fs::exists(results_file)) {
      spdlog::info("no results at '{}'; reporting recall only", results_file);
      continue;
    }
    const auto results = extraction::load_results(results_file);
    add(evaluation::extraction_f1(samples, results, pool), run, "F1");
    add(evaluation::e2e_f1(samples, rankings, results, pool), run, "E2E");
  }

  evaluation::emit_report(reports, json_out, evaluation::ReportFormat::json);
  evaluation::emit_report(reports, md_out, evaluation::ReportFormat::markdown_table);
  auto& os = out_of(ctx);
  for (const auto& r : reports) {
    os << fmt::format("{:<8} {:<16} {:<14} {:.6f}\n", *r.row, *r.column,
                      evaluation::to_string(r.metric), r.value);
  }
  os << "wrote " << json_out << ", " << md_out << "\n";
  return kExitOk;
}

int cmd_export_sft(const CommandContext& ctx) {
  const auto& c = ctx.config;
  const std::string out_path = output_path(c, "sft.jsonl");
  std::vector<std::string> inputs{c.paths.pool, c.paths.samples};
  if (!c.extraction.template_path.empty()) inputs.push_back(c.extraction.template_path);
  if (plan(ctx, "export-sft", inputs, {out_path})) return kExitOk;

  const SchemaPool pool = schema_pool::load_schemas(c.paths.pool);
  const auto samples = select_split(io::load_samples(c.paths.samples), c.split);
  const std::string fp = c.fingerprint();
  std::vector<Json> records;
  for (auto& r : extraction::sft_records(samples, pool, load_template(c))) {
    records.push_back(with_fingerprint(std::move(r), fp));
  }
  io::write_jsonl(out_path, records);
  out_of(ctx) << fmt::format("exported {} records\nwrote {}\n", records.size(), out_path);
  return kExitOk;
}

}  // namespace asee::pipeline
