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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace asee {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend / gateway errors.

/// Network failure or timeout that persisted after all retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The backend rejected the request (auth, quota). Never retried.
class BackendRefused : public Error {
 public:
  using Error::Error;
};

class PromptTooLarge : public Error {
 public:
  PromptTooLarge(std::size_t size, std::size_t cap)
      : Error("prompt of " + std::to_string(size) +
              " characters exceeds cap of " + std::to_string(cap)),
        size_(size),
        cap_(cap) {}

  std::size_t size() const noexcept { return size_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t size_;
  std::size_t cap_;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Violated precondition on an argument (wrong backend kind, bad k, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Transport or refusal surfaced from a higher-level generation step.
class GenerationFailed : public Error {
 public:
  using Error::Error;
};

// File / data errors.

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class EmptyFile : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Pipeline-stage errors.

class OrdinalOutOfRange : public Error {
 public:
  using Error::Error;
};

class EmptyIndex : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class UnresolvableSchema : public Error {
 public:
  using Error::Error;
};

class MissingRankings : public Error {
 public:
  using Error::Error;
};

class SampleResultMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace asee
