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

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "asee/types.hpp"
#include "nlohmann/json.hpp"

namespace asee::io {

using Json = nlohmann::ordered_json;

Json to_json(const Argument& arg);
Json to_json(const Schema& schema);
Json to_json(const ArgumentValueMap& event);
Json to_json(const Sample& sample);

/// Events as a JSON array whose argument keys follow the schema's
/// declaration order; values keep their stored order.
Json canonical_events(const Schema& schema, const std::vector<ArgumentValueMap>& events);

/// Throws ParseError (with `line`) on a malformed record.
Schema schema_from_json(const Json& j, std::size_t line = 0);
ArgumentValueMap event_from_json(const Json& j, std::size_t line = 0);
Sample sample_from_json(const Json& j, std::size_t line = 0);

/// Calls `on_record` for every non-blank line. Throws IoError when the file
/// cannot be opened and ParseError with the 1-based line number otherwise.
void read_jsonl(const std::string& path,
                const std::function<void(const Json&, std::size_t line)>& on_record);

/// Writes one compact JSON document per line, LF terminated.
void write_jsonl(const std::string& path, const std::vector<Json>& records);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Throws DuplicateId on a repeated sample_id.
std::vector<Sample> load_samples(const std::string& path);
void save_samples(const std::string& path, const std::vector<Sample>& samples);

}  // namespace asee::io
