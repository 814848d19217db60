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

// Domain types shared by every pipeline stage: schemas, pools, samples.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asee {

enum class Language { en, zh, other };

std::string_view to_string(Language lang);
/// Unknown codes map to Language::other.
Language language_from_string(std::string_view code);

struct Argument {
  std::string name;
  std::string description;

  bool operator==(const Argument&) const = default;
};

/// An event type together with its ordered argument slots.
struct Schema {
  std::string schema_id;
  std::string name;
  std::string description;
  std::vector<Argument> arguments;
  Language language = Language::en;
  std::string source_dataset;

  bool operator==(const Schema&) const = default;

  const Argument* find_argument(std::string_view arg_name) const;
  bool declares(std::string_view arg_name) const {
    return find_argument(arg_name) != nullptr;
  }
};

/// Throws InvalidArgument when the schema has no arguments, an argument has
/// an empty name, or two arguments share a name.
void validate_schema(const Schema& schema);

/// A schema rewritten with generated descriptions. Argument names always
/// equal those of the source schema, in the same order.
struct ParaphrasedSchema {
  Schema base;
  std::string paraphrase_of;
  std::vector<std::string> demo_sample_ids;
  /// Set when generation output was unusable and the raw schema was kept.
  std::optional<std::string> warning;

  bool operator==(const ParaphrasedSchema&) const = default;
};

/// Raw schemas plus their paraphrases, keyed by schema_id.
struct SchemaPool {
  std::string pool_id;
  std::map<std::string, Schema> schemas;
  std::map<std::string, ParaphrasedSchema> paraphrased;
  std::string created_at;

  bool operator==(const SchemaPool&) const = default;

  const Schema* find(std::string_view schema_id) const;
  /// Paraphrased form when present, else the raw schema.
  const Schema* best(std::string_view schema_id) const;
  std::size_t size() const noexcept { return schemas.size(); }
  bool empty() const noexcept { return schemas.empty(); }
};

/// Argument name -> extracted values for a single event instance.
using ArgumentValueMap = std::map<std::string, std::vector<std::string>>;

struct GoldEntry {
  std::string schema_id;
  std::vector<ArgumentValueMap> events;

  bool operator==(const GoldEntry&) const = default;
};

enum class Split { train, dev, test, unassigned };

std::string_view to_string(Split split);
/// Throws InvalidArgument on an unknown split name.
Split split_from_string(std::string_view name);

struct Sample {
  std::string sample_id;
  std::string query;
  Language language = Language::en;
  std::vector<GoldEntry> gold;
  std::string source_dataset;
  Split split = Split::unassigned;

  bool operator==(const Sample&) const = default;

  const GoldEntry* find_gold(std::string_view schema_id) const;
  /// Total number of event instances across all gold entries.
  std::size_t event_count() const;
};

}  // namespace asee
