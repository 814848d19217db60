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

#include "asee/json_reply.hpp"

#include <string>

namespace asee::reply {
namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

struct Parsed {
  Json value;
  bool commas_repaired = false;
};

std::optional<Parsed> try_parse(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  Json v = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!v.is_discarded()) return Parsed{std::move(v), false};
  const std::string fixed = strip_trailing_commas(text);
  if (fixed.size() == text.size()) return std::nullopt;
  v = Json::parse(fixed, nullptr, false);
  if (v.is_discarded()) return std::nullopt;
  return Parsed{std::move(v), true};
}

/// Index one past the bracket matching text[open], or npos.
std::size_t balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::string strip_trailing_commas(std::string_view json_text) {
  std::string out;
  out.reserve(json_text.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < json_text.size(); ++i) {
    const char c = json_text[i];
    if (in_string) {
      out.push_back(c);
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < json_text.size() && std::string_view(" \t\r\n").find(json_text[j]) !=
                                         std::string_view::npos) {
        ++j;
      }
      if (j < json_text.size() && (json_text[j] == '}' || json_text[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::optional<LocatedJson> locate_json(std::string_view reply) {
  // Fenced blocks: ``` or ```json, closed by the next ```.
  std::size_t pos = 0;
  while ((pos = reply.find("```", pos)) != std::string_view::npos) {
    std::size_t body = pos + 3;
    const std::size_t newline = reply.find('\n', body);
    const std::size_t close = reply.find("```", body);
    if (close == std::string_view::npos) break;
    if (newline != std::string_view::npos && newline < close) {
      // Skip an info string such as "json".
      const std::string_view info = trim(reply.substr(body, newline - body));
      if (info.find_first_of("{[") == std::string_view::npos) body = newline + 1;
    }
    if (auto parsed = try_parse(reply.substr(body, close - body))) {
      return LocatedJson{std::move(parsed->value), true, false, parsed->commas_repaired};
    }
    pos = close + 3;
  }

  if (auto parsed = try_parse(reply)) {
    if (parsed->value.is_object() || parsed->value.is_array()) {
      return LocatedJson{std::move(parsed->value), false, false, parsed->commas_repaired};
    }
  }

  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] != '{' && reply[i] != '[') continue;
    const std::size_t end = balanced_end(reply, i);
    if (end == std::string_view::npos) continue;
    if (auto parsed = try_parse(reply.substr(i, end - i))) {
      return LocatedJson{std::move(parsed->value), false, true, parsed->commas_repaired};
    }
  }
  return std::nullopt;
}

}  // namespace asee::reply
