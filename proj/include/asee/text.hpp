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

// Unicode-aware string helpers (backed by ICU) and stable hashing.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "asee/types.hpp"

namespace asee::text {

/// Decodes UTF-8 into scalar values. Ill-formed sequences become U+FFFD.
std::u32string to_code_points(std::string_view utf8);
std::string to_utf8(std::u32string_view code_points);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t code_point_length(std::string_view utf8);

/// Full Unicode case folding.
std::string case_fold(std::string_view utf8);

/// Canonical composition (NFC).
std::string nfc(std::string_view utf8);

/// Trims Unicode whitespace at both ends and replaces every internal
/// whitespace run with a single ASCII space.
std::string collapse_whitespace(std::string_view utf8);

/// Strips leading and trailing Unicode punctuation (general category P*).
std::string strip_punctuation(std::string_view utf8);

/// First `max_chars` scalar values of the input. Never splits a sequence.
std::string truncate_code_points(std::string_view utf8, std::size_t max_chars);

/// Removes trailing spaces/tabs/CR from every line and from the end.
std::string rstrip_lines(std::string_view text);

/// Replaces every {{name}} whose name is a key of `values`, in one pass, so
/// substituted text is never rescanned. Unknown placeholders are kept.
std::string render_placeholders(std::string_view tpl,
                                const std::map<std::string, std::string>& values);

/// Case-folds, then splits on word boundaries. Letters, digits, marks and
/// underscores form words; contiguous Han/Kana runs emit character bigrams
/// (a single character for a run of length one).
std::vector<std::string> tokenize(std::string_view utf8,
                                  Language language_hint = Language::other);

/// 64-bit FNV-1a over the raw bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// SplitMix64 finalizer; used to mix a seed into a hash.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable hash of `key` under `seed`.
inline std::uint64_t seeded_hash(std::string_view key,
                                 std::uint64_t seed) noexcept {
  return mix64(fnv1a64(key) ^ mix64(seed));
}

std::string to_hex(std::uint64_t value);

}  // namespace asee::text
