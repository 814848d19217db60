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

#include "asee/types.hpp"

#include <set>

#include "asee/errors.hpp"

namespace asee {

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::en:
      return "en";
    case Language::zh:
      return "zh";
    case Language::other:
      break;
  }
  return "other";
}

Language language_from_string(std::string_view code) {
  if (code == "en") return Language::en;
  if (code == "zh") return Language::zh;
  return Language::other;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::dev:
      return "dev";
    case Split::test:
      return "test";
    case Split::unassigned:
      break;
  }
  return "unassigned";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  if (name == "unassigned" || name.empty()) return Split::unassigned;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

const Argument* Schema::find_argument(std::string_view arg_name) const {
  for (const auto& arg : arguments) {
    if (arg.name == arg_name) return &arg;
  }
  return nullptr;
}

void validate_schema(const Schema& schema) {
  if (schema.schema_id.empty()) {
    throw InvalidArgument("schema has an empty schema_id");
  }
  if (schema.arguments.empty()) {
    throw InvalidArgument("schema '" + schema.schema_id + "' has no arguments");
  }
  std::set<std::string_view> seen;
  for (const auto& arg : schema.arguments) {
    if (arg.name.empty()) {
      throw InvalidArgument("schema '" + schema.schema_id +
                            "' has an argument with an empty name");
    }
    if (!seen.insert(arg.name).second) {
      throw InvalidArgument("schema '" + schema.schema_id +
                            "' declares argument '" + arg.name + "' twice");
    }
  }
}

const Schema* SchemaPool::find(std::string_view schema_id) const {
  auto it = schemas.find(std::string(schema_id));
  return it == schemas.end() ? nullptr : &it->second;
}

const Schema* SchemaPool::best(std::string_view schema_id) const {
  auto it = paraphrased.find(std::string(schema_id));
  if (it != paraphrased.end()) return &it->second.base;
  return find(schema_id);
}

const GoldEntry* Sample::find_gold(std::string_view schema_id) const {
  for (const auto& entry : gold) {
    if (entry.schema_id == schema_id) return &entry;
  }
  return nullptr;
}

std::size_t Sample::event_count() const {
  std::size_t n = 0;
  for (const auto& entry : gold) n += entry.events.size();
  return n;
}

}  // namespace asee
