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

// Locating a JSON value inside free-form model output.

#pragma once

#include <optional>
#include <string_view>

#include "nlohmann/json.hpp"

namespace asee::reply {

struct LocatedJson {
  nlohmann::ordered_json value;
  /// Found inside a ``` fenced block.
  bool fenced = false;
  /// Cut out of surrounding prose by balanced-bracket scanning.
  bool from_prose = false;
  /// Trailing commas had to be removed before parsing.
  bool commas_repaired = false;

  bool repaired() const { return from_prose || commas_repaired; }
};

/// Search order: fenced blocks, then the whole reply, then the first
/// balanced {...} or [...] that parses. Returns nullopt when none parse.
std::optional<LocatedJson> locate_json(std::string_view reply);

/// Drops commas that directly precede a closing bracket (outside strings).
std::string strip_trailing_commas(std::string_view json_text);

}  // namespace asee::reply
