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

// Shared helpers for the unit and acceptance tests: scratch directories,
// seeded generators and synthetic schema/sample fixtures.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "asee/json_io.hpp"
#include "asee/types.hpp"

namespace asee::testing {

class TempDir {
 public:
  TempDir() {
    std::string tpl = (std::filesystem::temp_directory_path() / "asee-test-XXXXXX").string();
    if (!::mkdtemp(tpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& contents) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

/// Pronounceable pseudo-word built from syllables; distinct seeds rarely
/// collide, and callers that need uniqueness check for it.
inline std::string pseudo_word(Rng& rng, std::size_t syllables = 3) {
  static const char* kOnset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* kVowel[] = {"a", "e", "i", "o", "u"};
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kOnset[uniform(rng, 0, 13)];
    w += kVowel[uniform(rng, 0, 4)];
  }
  return w;
}

/// `n` distinct pseudo-words.
inline std::vector<std::string> vocabulary(Rng& rng, std::size_t n, std::size_t syllables = 3) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < n) {
    auto w = pseudo_word(rng, syllables);
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

/// Random value list drawn from `words` (1..3 values, may repeat).
inline std::vector<std::string> random_values(Rng& rng, const std::vector<std::string>& words) {
  std::vector<std::string> values;
  const std::size_t n = uniform(rng, 1, 3);
  for (std::size_t i = 0; i < n; ++i) values.push_back(words[uniform(rng, 0, words.size() - 1)]);
  return values;
}

/// Random event over a subset of the schema's arguments.
inline ArgumentValueMap random_event(Rng& rng, const Schema& schema,
                                     const std::vector<std::string>& words) {
  ArgumentValueMap event;
  for (const auto& a : schema.arguments) {
    if (coin(rng, 0.6)) event[a.name] = random_values(rng, words);
  }
  return event;
}

/// A pool of `n` schemas with distinct names "Event<i>" (ids "s00".. ), 2-4
/// arguments each, and empty descriptions.
inline std::vector<Schema> synthetic_schemas(Rng& rng, std::size_t n) {
  std::vector<Schema> out;
  const auto roles = vocabulary(rng, 4 * n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    Schema s;
    char id[32];
    std::snprintf(id, sizeof id, "s%02zu", i);
    s.schema_id = id;
    s.name = "Event" + std::to_string(i);
    s.source_dataset = "synthetic";
    const std::size_t n_args = uniform(rng, 2, 4);
    for (std::size_t j = 0; j < n_args; ++j) s.arguments.push_back({roles[4 * i + j], ""});
    out.push_back(std::move(s));
  }
  return out;
}

/// Samples with unique queries and 1..3 gold schemas each.
inline std::vector<Sample> synthetic_samples(Rng& rng, const std::vector<Schema>& schemas,
                                             std::size_t n) {
  const auto words = vocabulary(rng, 60, 3);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    char id[32];
    std::snprintf(id, sizeof id, "q%03zu", i);
    s.sample_id = id;
    s.source_dataset = "synthetic";
    std::set<std::size_t> picked;
    const std::size_t n_gold = uniform(rng, 1, 3);
    while (picked.size() < n_gold) picked.insert(uniform(rng, 0, schemas.size() - 1));
    std::string query = "Report " + s.sample_id + ":";
    for (std::size_t idx : picked) {
      GoldEntry g{schemas[idx].schema_id, {}};
      const std::size_t n_events = uniform(rng, 1, 2);
      for (std::size_t e = 0; e < n_events; ++e) {
        auto event = random_event(rng, schemas[idx], words);
        for (const auto& [arg, values] : event) {
          for (const auto& v : values) query += " " + v;
        }
        g.events.push_back(std::move(event));
      }
      query += " " + schemas[idx].arguments.front().name;
      s.gold.push_back(std::move(g));
    }
    s.query = query + ".";
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_schemas(const std::string& path, const std::vector<Schema>& schemas) {
  std::vector<io::Json> records;
  for (const auto& s : schemas) records.push_back(io::to_json(s));
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  io::write_jsonl(path, records);
}

/// Runs the CLI binary with `--config config` followed by `args`, sending
/// stdout and stderr to `log`. Returns the exit status, or -1 on a signal.
inline int run_cli(const std::string& cli, const std::string& config, const std::string& args,
                   const std::string& log) {
  const std::string cmd =
      "'" + cli + "' --config '" + config + "' " + args + " > '" + log + "' 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace asee::testing
