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

#include "asee/extraction.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

#include <spdlog/spdlog.h>

#include "asee/errors.hpp"
#include "asee/json_reply.hpp"
#include "asee/schema_pool.hpp"
#include "asee/text.hpp"

namespace asee::extraction {

using io::Json;

namespace {

std::string name_key(std::string_view name) {
  return text::collapse_whitespace(text::case_fold(name));
}

int severity(ParseStatus s) {
  switch (s) {
    case ParseStatus::clean:
      return 0;
    case ParseStatus::repaired:
      return 1;
    case ParseStatus::failed:
      break;
  }
  return 2;
}

}  // namespace

std::string default_extraction_template() {
  return "You are an information extraction system. Find every event in the text that matches "
         "one of the event schemas below and fill in its arguments.\n\n"
         "Event schemas:\n{{schemas}}\n\n"
         "Text:\n{{query}}\n\n"
         "Reply with a single JSON object inside a ```json fenced block. Each key is the name of "
         "a schema above; each value is a list of events, and each event maps argument names to "
         "lists of text spans copied verbatim from the text. Leave out schemas with no events "
         "and arguments with no value.\n";
}

std::string render_schema_block(std::span<const Schema> schemas) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    out += schema_pool::schema_prompt_json(schemas[i]);
    out += i + 1 < schemas.size() ? ",\n" : "\n";
  }
  out += "]";
  return out;
}

ExtractionPrompt assemble_prompt(const std::string& query, std::span<const Schema> schemas,
                                 const std::string& prompt_template,
                                 std::size_t prompt_char_cap, const std::string& sample_id) {
  if (schemas.empty()) throw TemplateError("extraction prompt needs at least one schema");
  for (const char* placeholder : {"{{query}}", "{{schemas}}"}) {
    if (prompt_template.find(placeholder) == std::string::npos) {
      throw TemplateError(std::string("extraction template lacks the ") + placeholder +
                          " placeholder");
    }
  }
  ExtractionPrompt prompt;
  prompt.sample_id = sample_id;
  for (const auto& s : schemas) prompt.schema_ids.push_back(s.schema_id);
  prompt.rendered = text::render_placeholders(
      prompt_template, {{"query", query}, {"schemas", render_schema_block(schemas)}});
  prompt.template_id = text::to_hex(text::fnv1a64(prompt_template));
  const std::size_t length = text::code_point_length(prompt.rendered);
  if (length > prompt_char_cap) throw PromptTooLarge(length, prompt_char_cap);
  return prompt;
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::clean:
      return "clean";
    case ParseStatus::repaired:
      return "repaired";
    case ParseStatus::failed:
      break;
  }
  return "failed";
}

ParseStatus parse_status_from_string(std::string_view name) {
  if (name == "clean") return ParseStatus::clean;
  if (name == "repaired") return ParseStatus::repaired;
  if (name == "failed") return ParseStatus::failed;
  throw InvalidArgument("unknown parse status '" + std::string(name) + "'");
}

namespace {

// Accumulates one reply's validated content.
class ReplyReader {
 public:
  explicit ReplyReader(std::span<const Schema> schemas) {
    for (const auto& s : schemas) by_key_.emplace(name_key(s.name), &s);
  }

  const Schema* resolve(const std::string& name) const {
    auto it = by_key_.find(name_key(name));
    return it == by_key_.end() ? nullptr : it->second;
  }

  // {"<name>": events, ...}
  void read_mapping(const Json& mapping) {
    for (const auto& [name, value] : mapping.items()) {
      const Schema* schema = resolve(name);
      if (!schema) {
        ++result.tallies.hallucinated_schemas;
        continue;
      }
      read_events(*schema, value);
    }
  }

  void read_events(const Schema& schema, const Json& value) {
    auto& events = result.per_schema[schema.schema_id];
    if (value.is_null()) return;
    if (value.is_object()) {
      coerced = true;
      events.push_back(read_event(schema, value));
      return;
    }
    if (!value.is_array()) {
      coerced = true;
      return;
    }
    for (const auto& e : value) {
      if (e.is_object()) {
        events.push_back(read_event(schema, e));
      } else {
        coerced = true;
      }
    }
  }

  ArgumentValueMap read_event(const Schema& schema, const Json& event) {
    ArgumentValueMap out;
    for (const auto& [key, value] : event.items()) {
      const Argument* arg = schema.find_argument(key);
      if (!arg) {
        const std::string folded = name_key(key);
        for (const auto& a : schema.arguments) {
          if (name_key(a.name) == folded) {
            arg = &a;
            coerced = true;
            break;
          }
        }
      }
      if (!arg) {
        ++result.tallies.dropped_args;
        continue;
      }
      std::vector<std::string> values;
      if (value.is_array()) {
        for (const auto& v : value) append_value(values, v);
      } else if (!value.is_null()) {
        coerced = true;
        append_value(values, value);
      }
      if (values.empty()) continue;
      auto& slot = out[arg->name];
      slot.insert(slot.end(), values.begin(), values.end());
    }
    return out;
  }

  void append_value(std::vector<std::string>& values, const Json& v) {
    if (v.is_string()) {
      values.push_back(v.get<std::string>());
    } else if (!v.is_null()) {
      coerced = true;
      values.push_back(v.dump());
    }
  }

  ExtractionResult result;
  bool coerced = false;

 private:
  std::map<std::string, const Schema*> by_key_;
};

bool is_schema_mapping(const Json& element, const ReplyReader& reader) {
  if (!element.is_object() || element.empty()) return false;
  for (const auto& [key, value] : element.items()) {
    if (!reader.resolve(key)) return false;
  }
  return true;
}

}  // namespace

ExtractionResult parse_extraction_output(std::string_view raw_reply,
                                         std::span<const Schema> schemas) {
  ReplyReader reader(schemas);
  reader.result.parse_status = ParseStatus::failed;
  const auto located = reply::locate_json(raw_reply);
  if (!located) return reader.result;

  const Json& value = located->value;
  if (value.is_object()) {
    reader.read_mapping(value);
  } else if (value.is_array()) {
    const bool all_mappings =
        !value.empty() && std::all_of(value.begin(), value.end(), [&](const Json& e) {
          return is_schema_mapping(e, reader);
        });
    if (all_mappings) {
      for (const auto& e : value) reader.read_mapping(e);
    } else if (schemas.size() == 1) {
      reader.read_events(schemas.front(), value);
    } else {
      return reader.result;
    }
    reader.coerced = true;
  } else {
    return reader.result;
  }
  reader.result.parse_status =
      (located->repaired() || reader.coerced) ? ParseStatus::repaired : ParseStatus::clean;
  return std::move(reader.result);
}

ExtractionResult extract(const Sample& sample, const retrieval::RankedList& retrieved,
                         const SchemaPool& pool, const gateway::GenerationClient& backend,
                         const ExtractOptions& options) {
  if (retrieved.entries.empty()) {
    throw InvalidArgument("extract: no retrieved schemas for sample '" + sample.sample_id + "'");
  }
  std::vector<Schema> schemas;
  for (const auto& entry : retrieved.entries) {
    const Schema* s = pool.best(entry.schema_id);
    if (!s) throw UnresolvableSchema("schema '" + entry.schema_id + "' is not in the pool");
    schemas.push_back(*s);
  }

  // Each group holds schemas with pairwise distinct names.
  std::vector<std::vector<Schema>> groups;
  std::vector<std::set<std::string>> group_keys;
  for (auto& s : schemas) {
    const std::string key = name_key(s.name);
    std::size_t g = 0;
    if (!options.batch_per_schema) {
      while (g < groups.size() && group_keys[g].contains(key)) ++g;
    } else {
      g = groups.size();
    }
    if (g == groups.size()) {
      groups.emplace_back();
      group_keys.emplace_back();
    }
    groups[g].push_back(std::move(s));
    group_keys[g].insert(key);
  }

  ExtractionResult result;
  result.sample_id = sample.sample_id;
  result.backend_id = backend.backend_id();
  result.parse_status = ParseStatus::clean;

  auto fail = [&](const std::string& why) {
    result.parse_status = ParseStatus::failed;
    result.error = result.error ? *result.error + "; " + why : why;
  };

  std::function<void(std::span<const Schema>)> run = [&](std::span<const Schema> group) {
    ExtractionPrompt prompt;
    try {
      prompt = assemble_prompt(sample.query, group, options.prompt_template,
                               backend.config().prompt_char_cap, sample.sample_id);
    } catch (const PromptTooLarge& e) {
      if (group.size() > 1) {
        spdlog::info("sample {}: prompt over cap, splitting {} schemas into single prompts",
                     sample.sample_id, group.size());
        for (std::size_t i = 0; i < group.size(); ++i) run(group.subspan(i, 1));
        return;
      }
      fail(e.what());
      return;
    }

    gateway::GenerationRequest request;
    request.prompt = prompt.rendered;
    request.max_output_tokens = options.max_output_tokens;
    request.temperature = options.temperature;
    std::string reply;
    try {
      reply = backend.generate(request);
    } catch (const TransportError& e) {
      fail(e.what());
      return;
    } catch (const BackendRefused& e) {
      fail(e.what());
      return;
    } catch (const PromptTooLarge& e) {
      fail(e.what());
      return;
    }

    ExtractionResult part = parse_extraction_output(reply, group);
    for (auto& [id, events] : part.per_schema) {
      auto& dst = result.per_schema[id];
      dst.insert(dst.end(), std::make_move_iterator(events.begin()),
                 std::make_move_iterator(events.end()));
    }
    result.tallies += part.tallies;
    if (part.parse_status == ParseStatus::failed) {
      fail("reply contains no usable JSON");
    } else if (severity(part.parse_status) > severity(result.parse_status)) {
      result.parse_status = part.parse_status;
    }
  };

  for (const auto& group : groups) run(group);
  if (result.tallies.hallucinated_schemas || result.tallies.dropped_args) {
    spdlog::debug("sample {}: dropped {} unknown schemas and {} undeclared arguments",
                  sample.sample_id, result.tallies.hallucinated_schemas,
                  result.tallies.dropped_args);
  }
  return result;
}

gateway::Responder make_gold_echo_responder(std::vector<Sample> samples, SchemaPool pool) {
  struct Data {
    std::vector<Sample> samples;
    SchemaPool pool;
  };
  auto data = std::make_shared<Data>(Data{std::move(samples), std::move(pool)});
  return [data](const std::string& prompt) -> std::optional<std::string> {
    const Sample* match = nullptr;
    for (const auto& s : data->samples) {
      if (s.query.empty() || prompt.find(s.query) == std::string::npos) continue;
      if (!match || s.query.size() > match->query.size()) match = &s;
    }
    if (!match) return std::nullopt;
    Json out = Json::object();
    for (const auto& entry : match->gold) {
      const Schema* schema = data->pool.best(entry.schema_id);
      if (!schema || prompt.find(schema_pool::schema_prompt_json(*schema)) == std::string::npos) {
        continue;
      }
      Json events = io::canonical_events(*schema, entry.events);
      if (auto it = out.find(schema->name); it != out.end()) {
        for (auto& e : events) it->push_back(std::move(e));
      } else {
        out[schema->name] = std::move(events);
      }
    }
    return "```json\n" + out.dump() + "\n```";
  };
}

std::string canonical_output(const Schema& schema, const std::vector<ArgumentValueMap>& events) {
  Json out = Json::object();
  out[schema.name] = io::canonical_events(schema, events);
  return out.dump();
}

std::vector<Json> sft_records(std::span<const Sample> samples, const SchemaPool& pool,
                              const std::string& prompt_template) {
  std::vector<Json> records;
  for (const auto& sample : samples) {
    if (sample.split != Split::train && sample.split != Split::unassigned) continue;
    for (const auto& entry : sample.gold) {
      const Schema* schema = pool.best(entry.schema_id);
      if (!schema) {
        throw UnresolvableSchema("sample '" + sample.sample_id + "' references unknown schema '" +
                                 entry.schema_id + "'");
      }
      const auto prompt =
          assemble_prompt(sample.query, std::span<const Schema>(schema, 1), prompt_template,
                          std::numeric_limits<std::size_t>::max(), sample.sample_id);
      records.push_back(
          Json{{"instruction", prompt.rendered}, {"output", canonical_output(*schema, entry.events)}});
    }
  }
  return records;
}

std::size_t export_sft(std::span<const Sample> samples, const SchemaPool& pool,
                       const std::string& prompt_template, const std::string& out_path) {
  const auto records = sft_records(samples, pool, prompt_template);
  io::write_jsonl(out_path, records);
  return records.size();
}

Json to_json(const ExtractionResult& result) {
  Json per_schema = Json::object();
  for (const auto& [id, events] : result.per_schema) {
    Json arr = Json::array();
    for (const auto& e : events) arr.push_back(io::to_json(e));
    per_schema[id] = std::move(arr);
  }
  Json j{{"sample_id", result.sample_id},
         {"parse_status", std::string(to_string(result.parse_status))},
         {"per_schema", std::move(per_schema)},
         {"tallies",
          {{"hallucinated_schemas", result.tallies.hallucinated_schemas},
           {"dropped_args", result.tallies.dropped_args}}},
         {"backend_id", result.backend_id}};
  if (result.error) j["error"] = *result.error;
  return j;
}

ExtractionResult result_from_json(const Json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("result record is not an object", line);
  ExtractionResult r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.parse_status = parse_status_from_string(j.at("parse_status").get<std::string>());
    for (const auto& [id, events] : j.at("per_schema").items()) {
      auto& dst = r.per_schema[id];
      for (const auto& e : events) dst.push_back(io::event_from_json(e, line));
    }
    if (auto t = j.find("tallies"); t != j.end()) {
      r.tallies.hallucinated_schemas = t->value("hallucinated_schemas", std::size_t{0});
      r.tallies.dropped_args = t->value("dropped_args", std::size_t{0});
    }
    r.backend_id = j.value("backend_id", "");
    if (auto e = j.find("error"); e != j.end() && e->is_string()) r.error = e->get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), line);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), line);
  }
  return r;
}

std::vector<ExtractionResult> load_results(const std::string& path) {
  std::vector<ExtractionResult> out;
  std::set<std::string> seen;
  io::read_jsonl(path, [&](const Json& j, std::size_t line) {
    auto r = result_from_json(j, line);
    if (!seen.insert(r.sample_id).second) {
      throw DuplicateId("line " + std::to_string(line) + ": duplicate sample_id '" + r.sample_id +
                        "'");
    }
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace asee::extraction
