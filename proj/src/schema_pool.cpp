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

#include "asee/schema_pool.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "asee/errors.hpp"
#include "asee/json_io.hpp"
#include "asee/json_reply.hpp"
#include "asee/text.hpp"

namespace asee::schema_pool {

using io::Json;

namespace {

constexpr const char* kRevisionParaphrased = "paraphrased";

constexpr const char* kReplyShape =
    R"({"name": "...", "description": "...", "arguments": [{"name": "...", "description": "..."}]})";

std::string language_name(Language lang) {
  switch (lang) {
    case Language::en:
      return "English";
    case Language::zh:
      return "Chinese";
    case Language::other:
      break;
  }
  return "the target language";
}

std::string render_demonstrations(const Schema& schema, std::span<const Sample> demos) {
  if (demos.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const Sample& s = demos[i];
    const GoldEntry* gold = s.find_gold(schema.schema_id);
    const Json events = gold ? io::canonical_events(schema, gold->events) : Json::array();
    if (i) out += "\n\n";
    out += "Text: " + text::truncate_code_points(s.query, kDemoExcerptChars) + "\n";
    out += "Annotation: " + events.dump();
  }
  return out;
}

struct ParsedSchemaReply {
  std::optional<std::string> description;
  std::vector<Argument> arguments;
};

/// Structural read of {name, description, arguments:[{name, description}]}.
std::optional<ParsedSchemaReply> read_schema_reply(const Json& v, std::string& why) {
  if (!v.is_object()) {
    why = "reply JSON is not an object";
    return std::nullopt;
  }
  ParsedSchemaReply out;
  if (auto d = v.find("description"); d != v.end() && d->is_string()) {
    out.description = d->get<std::string>();
  }
  auto args = v.find("arguments");
  if (args == v.end() || !args->is_array()) {
    why = "reply has no 'arguments' array";
    return std::nullopt;
  }
  for (const auto& a : *args) {
    if (!a.is_object() || !a.contains("name") || !a["name"].is_string()) {
      why = "an argument entry lacks a string 'name'";
      return std::nullopt;
    }
    Argument arg{a["name"].get<std::string>(), ""};
    if (auto d = a.find("description"); d != a.end() && d->is_string()) {
      arg.description = d->get<std::string>();
    }
    out.arguments.push_back(std::move(arg));
  }
  return out;
}

/// Applies a paraphrase reply; nullopt (with `why`) when the reply would add,
/// drop or rename an argument.
std::optional<Schema> apply_paraphrase(const Schema& source, std::string_view reply,
                                       std::string& why) {
  const auto located = reply::locate_json(reply);
  if (!located) {
    why = "reply contains no JSON object";
    return std::nullopt;
  }
  auto parsed = read_schema_reply(located->value, why);
  if (!parsed) return std::nullopt;

  std::map<std::string, std::string> descriptions;
  for (const auto& arg : parsed->arguments) {
    if (!descriptions.emplace(arg.name, arg.description).second) {
      why = "argument '" + arg.name + "' appears twice";
      return std::nullopt;
    }
  }
  if (descriptions.size() != source.arguments.size()) {
    why = "reply has " + std::to_string(descriptions.size()) + " arguments, expected " +
          std::to_string(source.arguments.size());
    return std::nullopt;
  }
  Schema out = source;
  for (auto& arg : out.arguments) {
    auto it = descriptions.find(arg.name);
    if (it == descriptions.end()) {
      why = "argument '" + arg.name + "' missing or renamed";
      return std::nullopt;
    }
    arg.description = it->second;
  }
  if (parsed->description) out.description = *parsed->description;
  return out;
}

std::string call_backend(const gateway::GenerationClient& backend, const std::string& prompt,
                         const GenerationOptions& options) {
  gateway::GenerationRequest request;
  request.prompt = prompt;
  request.max_output_tokens = options.max_output_tokens;
  request.temperature = options.temperature;
  try {
    return backend.generate(request);
  } catch (const TransportError& e) {
    throw GenerationFailed(e.what());
  } catch (const BackendRefused& e) {
    throw GenerationFailed(e.what());
  }
}

std::string repair_suffix(const std::string& why) {
  return "\n\nYour previous reply could not be used (" + why +
         "). Reply again with only the JSON object in a ```json fenced block, "
         "keeping every argument name exactly as given.";
}

std::string lang_suffix(Language lang) { return "@" + std::string(to_string(lang)); }

}  // namespace

SchemaPool load_schemas(const std::string& path) {
  SchemaPool pool;
  std::vector<std::pair<Json, std::size_t>> paraphrased_records;
  io::read_jsonl(path, [&](const Json& j, std::size_t line) {
    if (!j.is_object()) throw ParseError("record is not an object", line);
    if (!j.contains("schema_id") && j.contains("pool_id")) {
      pool.pool_id = j.value("pool_id", "");
      pool.created_at = j.value("created_at", "");
      return;
    }
    if (j.value("revision", "") == kRevisionParaphrased) {
      paraphrased_records.emplace_back(j, line);
      return;
    }
    Schema s = io::schema_from_json(j, line);
    const std::string id = s.schema_id;
    if (!pool.schemas.emplace(id, std::move(s)).second) {
      throw DuplicateId("line " + std::to_string(line) + ": duplicate schema_id '" + id + "'");
    }
  });
  if (pool.schemas.empty()) throw EmptyFile("no schema records in '" + path + "'");

  for (const auto& [j, line] : paraphrased_records) {
    ParaphrasedSchema p;
    p.base = io::schema_from_json(j, line);
    p.paraphrase_of = j.value("paraphrase_of", p.base.schema_id);
    if (auto demos = j.find("demo_sample_ids"); demos != j.end() && demos->is_array()) {
      for (const auto& d : *demos) {
        if (d.is_string()) p.demo_sample_ids.push_back(d.get<std::string>());
      }
    }
    if (auto w = j.find("warning"); w != j.end() && w->is_string()) {
      p.warning = w->get<std::string>();
    }
    const std::string id = p.base.schema_id;
    if (!pool.schemas.count(id)) {
      throw ParseError("paraphrased record for unknown schema_id '" + id + "'", line);
    }
    if (!pool.paraphrased.emplace(id, std::move(p)).second) {
      throw DuplicateId("line " + std::to_string(line) + ": duplicate paraphrase of '" + id +
                        "'");
    }
  }
  if (pool.pool_id.empty()) pool.pool_id = path;
  return pool;
}

std::string serialize_pool(const SchemaPool& pool) {
  std::string out;
  auto emit = [&out](const Json& j) {
    out += j.dump(-1, ' ', false, Json::error_handler_t::replace);
    out += '\n';
  };
  emit(Json{{"pool_id", pool.pool_id}, {"created_at", pool.created_at}});
  for (const auto& [id, schema] : pool.schemas) emit(io::to_json(schema));
  for (const auto& [id, p] : pool.paraphrased) {
    Json j = io::to_json(p.base);
    j["revision"] = kRevisionParaphrased;
    j["paraphrase_of"] = p.paraphrase_of;
    j["demo_sample_ids"] = p.demo_sample_ids;
    if (p.warning) j["warning"] = *p.warning;
    emit(j);
  }
  return out;
}

void save_pool(const std::string& path, const SchemaPool& pool) {
  io::write_file(path, serialize_pool(pool));
}

std::vector<Sample> select_demonstrations(const Schema& schema,
                                          std::span<const Sample> training_corpus,
                                          std::size_t k, std::uint64_t seed) {
  if (k == 0) throw InvalidArgument("select_demonstrations: k must be >= 1");
  std::vector<std::pair<std::uint64_t, const Sample*>> ranked;
  for (const auto& s : training_corpus) {
    if (s.find_gold(schema.schema_id)) {
      ranked.emplace_back(text::seeded_hash(s.sample_id, seed), &s);
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->sample_id < b.second->sample_id;
  });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<Sample> out;
  out.reserve(ranked.size());
  for (const auto& [h, s] : ranked) out.push_back(*s);
  std::sort(out.begin(), out.end(),
            [](const Sample& a, const Sample& b) { return a.sample_id < b.sample_id; });
  return out;
}

std::string default_paraphrase_template() {
  return "You are an expert in event extraction. Rewrite the event schema below so that it is "
         "easier to match against text describing this kind of event.\n"
         "Keep the schema name and every argument name exactly as given. Do not add, remove "
         "or rename arguments. Write a one-sentence description of the event type and a "
         "detailed description of each argument.\n\n"
         "Schema:\n{{schema_json}}\n\n"
         "Annotated examples:\n{{demonstrations}}\n\n"
         "Reply with a single JSON object inside a ```json fenced block, shaped as:\n" +
         std::string(kReplyShape) + "\n";
}

std::string schema_prompt_json(const Schema& schema) {
  Json args = Json::array();
  for (const auto& a : schema.arguments) args.push_back(io::to_json(a));
  return Json{{"name", schema.name},
              {"description", schema.description},
              {"arguments", std::move(args)}}
      .dump();
}

std::string render_paraphrase_prompt(const Schema& schema, std::span<const Sample> demos,
                                     const std::string& prompt_template) {
  if (prompt_template.find("{{schema_json}}") == std::string::npos) {
    throw TemplateError("paraphrase template lacks the {{schema_json}} placeholder");
  }
  return text::render_placeholders(
      prompt_template, {{"schema_json", schema_prompt_json(schema)},
                        {"demonstrations", render_demonstrations(schema, demos)}});
}

ParaphrasedSchema paraphrase_schema(const Schema& schema, std::span<const Sample> demos,
                                    const gateway::GenerationClient& backend,
                                    const ParaphraseOptions& options) {
  // Oversized prompts shed demonstrations until they fit (zero-shot last).
  std::size_t n_demos = demos.size();
  std::string prompt;
  for (;;) {
    prompt = render_paraphrase_prompt(schema, demos.first(n_demos), options.prompt_template);
    if (text::code_point_length(prompt) <= backend.config().prompt_char_cap) break;
    if (n_demos == 0) {
      throw GenerationFailed("paraphrase prompt for '" + schema.schema_id +
                             "' exceeds the backend prompt cap even without demonstrations");
    }
    n_demos /= 2;
  }

  ParaphrasedSchema out;
  out.paraphrase_of = schema.schema_id;
  for (const auto& d : demos.first(n_demos)) out.demo_sample_ids.push_back(d.sample_id);

  std::string why;
  const std::string first = call_backend(backend, prompt, options.generation);
  if (auto s = apply_paraphrase(schema, first, why)) {
    out.base = std::move(*s);
    return out;
  }
  std::string retry_prompt = prompt + repair_suffix(why);
  if (text::code_point_length(retry_prompt) > backend.config().prompt_char_cap) {
    retry_prompt = prompt;
  }
  const std::string second = call_backend(backend, retry_prompt, options.generation);
  if (auto s = apply_paraphrase(schema, second, why)) {
    out.base = std::move(*s);
    return out;
  }
  spdlog::warn("paraphrase of '{}' unusable after repair ({}); keeping raw schema",
               schema.schema_id, why);
  out.base = schema;
  out.warning = "paraphrase fallback: " + why;
  return out;
}

BuildResult build_pool(const SchemaPool& raw, std::span<const Sample> training_corpus,
                       const gateway::GenerationClient& backend, std::size_t k_demos,
                       std::uint64_t seed, const ParaphraseOptions& options) {
  if (k_demos == 0) throw InvalidArgument("build_pool: k_demos must be >= 1");
  std::vector<const Schema*> schemas;
  for (const auto& [id, s] : raw.schemas) schemas.push_back(&s);

  struct Slot {
    ParaphrasedSchema paraphrase;
    std::optional<std::string> failure;
  };
  std::vector<Slot> slots(schemas.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < schemas.size(); i = next++) {
      const Schema& schema = *schemas[i];
      try {
        const auto demos = select_demonstrations(schema, training_corpus, k_demos, seed);
        slots[i].paraphrase = paraphrase_schema(schema, demos, backend, options);
      } catch (const GenerationFailed& e) {
        slots[i].failure = e.what();
        slots[i].paraphrase = ParaphrasedSchema{schema, schema.schema_id, {},
                                                std::string("generation failed: ") + e.what()};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = schemas.size();
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(
      schemas.size(), static_cast<std::size_t>(backend.config().max_in_flight));
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < n_workers; ++t) threads.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);

  BuildResult result;
  result.pool = raw;
  result.pool.paraphrased.clear();
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    const std::string& id = schemas[i]->schema_id;
    if (slots[i].failure) {
      result.report.failures.emplace_back(id, *slots[i].failure);
    } else if (slots[i].paraphrase.warning) {
      result.report.fallbacks.push_back(id);
    }
    result.pool.paraphrased.emplace(id, std::move(slots[i].paraphrase));
  }
  return result;
}

TranslationResult translate_schema(const Schema& schema, Language target,
                                   const gateway::GenerationClient& backend,
                                   const GenerationOptions& options) {
  if (target == schema.language) {
    throw InvalidArgument("translate_schema: '" + schema.schema_id + "' is already in " +
                          std::string(to_string(target)));
  }
  const std::string prompt =
      "Translate the event schema below from " + language_name(schema.language) + " to " +
      language_name(target) +
      ". Translate the schema name, its description, and the name and description of every "
      "argument. Keep the number and order of arguments unchanged.\n\n"
      "Schema:\n" +
      schema_prompt_json(schema) +
      "\n\nReply with a single JSON object inside a ```json fenced block, shaped as:\n" +
      kReplyShape + "\n";

  TranslationResult result;
  result.schema = schema;
  result.schema.schema_id = schema.schema_id + lang_suffix(target);
  result.schema.language = target;

  std::string why;
  std::optional<ParsedSchemaReply> parsed;
  std::optional<std::string> name;
  for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
    const std::string reply =
        call_backend(backend, attempt == 0 ? prompt : prompt + repair_suffix(why), options);
    const auto located = reply::locate_json(reply);
    if (!located) {
      why = "reply contains no JSON object";
      continue;
    }
    parsed = read_schema_reply(located->value, why);
    if (parsed) {
      if (auto n = located->value.find("name"); n != located->value.end() && n->is_string() &&
                                                !n->get<std::string>().empty()) {
        name = n->get<std::string>();
      }
    }
  }
  if (!parsed) {
    result.invariant_breach = true;
    result.warning = "translation unusable: " + why;
    return result;
  }

  if (name) result.schema.name = *name;
  if (parsed->description) result.schema.description = *parsed->description;

  Schema candidate = result.schema;
  candidate.arguments = parsed->arguments;
  if (parsed->arguments.size() != schema.arguments.size()) {
    result.invariant_breach = true;
    result.warning = "translation changed the argument count from " +
                     std::to_string(schema.arguments.size()) + " to " +
                     std::to_string(parsed->arguments.size()) +
                     "; source argument names kept";
    return result;
  }
  try {
    validate_schema(candidate);
  } catch (const InvalidArgument& e) {
    result.invariant_breach = true;
    result.warning = std::string("translated arguments invalid (") + e.what() +
                     "); source argument names kept";
    return result;
  }
  result.schema = std::move(candidate);
  return result;
}

std::string_view to_string(DocumentMode mode) {
  return mode == DocumentMode::raw ? "raw" : "paraphrased";
}

DocumentMode document_mode_from_string(std::string_view name) {
  if (name == "raw") return DocumentMode::raw;
  if (name == "paraphrased") return DocumentMode::paraphrased;
  throw InvalidArgument("unknown document mode '" + std::string(name) + "'");
}

std::string schema_document_text(const Schema& schema, DocumentMode mode) {
  std::string out = schema.name;
  if (mode == DocumentMode::raw) {
    out += '\n';
    for (std::size_t i = 0; i < schema.arguments.size(); ++i) {
      if (i) out += "; ";
      out += schema.arguments[i].name;
    }
    return text::rstrip_lines(out);
  }
  if (!schema.description.empty()) out += "\n" + schema.description;
  for (const auto& arg : schema.arguments) {
    out += "\n" + arg.name;
    if (!arg.description.empty()) out += ": " + arg.description;
  }
  return text::rstrip_lines(out);
}

std::string schema_document_text(const ParaphrasedSchema& schema, DocumentMode mode) {
  return schema_document_text(schema.base, mode);
}

std::string schema_document_text(const SchemaPool& pool, const std::string& schema_id,
                                 DocumentMode mode) {
  const Schema* raw = pool.find(schema_id);
  if (!raw) throw UnresolvableSchema("unknown schema_id '" + schema_id + "'");
  if (mode == DocumentMode::paraphrased) {
    if (auto it = pool.paraphrased.find(schema_id); it != pool.paraphrased.end()) {
      return schema_document_text(it->second, mode);
    }
  }
  return schema_document_text(*raw, mode);
}

}  // namespace asee::schema_pool
