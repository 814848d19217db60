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

#include "asee/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "asee/errors.hpp"

namespace asee::io {
namespace {

std::string string_field(const Json& j, const char* key, std::size_t line, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ParseError(std::string("missing field '") + key + "'", line);
    return {};
  }
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' is not a string", line);
  return it->get<std::string>();
}

std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

Json to_json(const Argument& arg) {
  return Json{{"name", arg.name}, {"description", arg.description}};
}

Json to_json(const Schema& schema) {
  Json args = Json::array();
  for (const auto& a : schema.arguments) args.push_back(to_json(a));
  return Json{{"schema_id", schema.schema_id},
              {"name", schema.name},
              {"description", schema.description},
              {"language", to_string(schema.language)},
              {"source_dataset", schema.source_dataset},
              {"arguments", std::move(args)}};
}

Json to_json(const ArgumentValueMap& event) {
  Json j = Json::object();
  for (const auto& [name, values] : event) j[name] = values;
  return j;
}

Json canonical_events(const Schema& schema, const std::vector<ArgumentValueMap>& events) {
  Json out = Json::array();
  for (const auto& event : events) {
    Json e = Json::object();
    for (const auto& arg : schema.arguments) {
      if (auto it = event.find(arg.name); it != event.end()) e[arg.name] = it->second;
    }
    for (const auto& [name, values] : event) {
      if (!schema.declares(name)) e[name] = values;
    }
    out.push_back(std::move(e));
  }
  return out;
}

Json to_json(const Sample& sample) {
  Json gold = Json::array();
  for (const auto& entry : sample.gold) {
    Json events = Json::array();
    for (const auto& e : entry.events) events.push_back(to_json(e));
    gold.push_back(Json{{"schema_id", entry.schema_id}, {"events", std::move(events)}});
  }
  return Json{{"sample_id", sample.sample_id},
              {"query", sample.query},
              {"language", to_string(sample.language)},
              {"source_dataset", sample.source_dataset},
              {"split", to_string(sample.split)},
              {"gold", std::move(gold)}};
}

Schema schema_from_json(const Json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("schema record is not an object", line);
  Schema s;
  s.schema_id = string_field(j, "schema_id", line, true);
  s.name = string_field(j, "name", line, true);
  s.description = string_field(j, "description", line, false);
  s.language = language_from_string(string_field(j, "language", line, false));
  s.source_dataset = string_field(j, "source_dataset", line, false);
  auto args = j.find("arguments");
  if (args == j.end() || !args->is_array()) {
    throw ParseError("missing 'arguments' array", line);
  }
  for (const auto& a : *args) {
    if (a.is_string()) {
      s.arguments.push_back({a.get<std::string>(), ""});
      continue;
    }
    if (!a.is_object()) throw ParseError("argument is neither object nor string", line);
    s.arguments.push_back(
        {string_field(a, "name", line, true), string_field(a, "description", line, false)});
  }
  try {
    validate_schema(s);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), line);
  }
  return s;
}

ArgumentValueMap event_from_json(const Json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("event is not an object", line);
  ArgumentValueMap event;
  for (const auto& [name, value] : j.items()) {
    std::vector<std::string> values;
    if (value.is_array()) {
      for (const auto& v : value) {
        if (!v.is_null()) values.push_back(scalar_text(v));
      }
    } else if (!value.is_null()) {
      values.push_back(scalar_text(value));
    }
    if (!values.empty()) event[name] = std::move(values);
  }
  return event;
}

Sample sample_from_json(const Json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("sample record is not an object", line);
  Sample s;
  s.sample_id = string_field(j, "sample_id", line, true);
  s.query = string_field(j, "query", line, true);
  s.language = language_from_string(string_field(j, "language", line, false));
  s.source_dataset = string_field(j, "source_dataset", line, false);
  try {
    s.split = split_from_string(string_field(j, "split", line, false));
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), line);
  }
  if (auto gold = j.find("gold"); gold != j.end() && !gold->is_null()) {
    if (!gold->is_array()) throw ParseError("'gold' is not an array", line);
    for (const auto& entry : *gold) {
      GoldEntry g;
      g.schema_id = string_field(entry, "schema_id", line, true);
      if (auto events = entry.find("events"); events != entry.end() && events->is_array()) {
        for (const auto& e : *events) g.events.push_back(event_from_json(e, line));
      }
      s.gold.push_back(std::move(g));
    }
  }
  return s;
}

void read_jsonl(const std::string& path,
                const std::function<void(const Json&, std::size_t)>& on_record) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), number);
    }
    on_record(record, number);
  }
}

void write_jsonl(const std::string& path, const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump(-1, ' ', false, Json::error_handler_t::replace);
    out += '\n';
  }
  write_file(path, out);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<Sample> load_samples(const std::string& path) {
  std::vector<Sample> samples;
  std::set<std::string> seen;
  read_jsonl(path, [&](const Json& j, std::size_t line) {
    Sample s = sample_from_json(j, line);
    if (!seen.insert(s.sample_id).second) {
      throw DuplicateId("line " + std::to_string(line) + ": duplicate sample_id '" +
                        s.sample_id + "'");
    }
    samples.push_back(std::move(s));
  });
  return samples;
}

void save_samples(const std::string& path, const std::vector<Sample>& samples) {
  std::vector<Json> records;
  records.reserve(samples.size());
  for (const auto& s : samples) records.push_back(to_json(s));
  write_jsonl(path, records);
}

}  // namespace asee::io
