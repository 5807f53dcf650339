// Copyright 2026 The skim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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
#include <vector>

namespace skim {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value would violate a declared invariant of a domain type.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Binary container failures. Each failure mode has its own type so callers
// can tell a wrong file from a damaged one.
class FormatError : public Error {
 public:
  using Error::Error;
};
class MalformedHeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};
class BadMagicError : public MalformedHeaderError {
 public:
  using MalformedHeaderError::MalformedHeaderError;
};
class TruncatedPayloadError : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// JSON document does not match its schema. `field()` names the offending
/// path, e.g. "users[3]".
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

/// Strict fixture replay found no recorded response for a request.
class FixtureMissError : public BackendError {
 public:
  explicit FixtureMissError(std::string digest)
      : BackendError("no recorded response for request digest " + digest),
        digest_(std::move(digest)) {}
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

/// Judge reply without a usable score. Keeps the raw reply for diagnosis.
class ScoreParseError : public Error {
 public:
  ScoreParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw_reply() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// Multi-query reply that lacks scores for some (1-based) query indices.
class MissingScoresError : public Error {
 public:
  MissingScoresError(std::vector<std::size_t> missing, std::string raw)
      : Error(describe(missing)), missing_(std::move(missing)), raw_(std::move(raw)) {}
  const std::vector<std::size_t>& missing() const noexcept { return missing_; }
  const std::string& raw_reply() const noexcept { return raw_; }

 private:
  static std::string describe(const std::vector<std::size_t>& missing) {
    std::string s = "reply is missing scores for queries [";
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(missing[i]);
    }
    return s + "]";
  }
  std::vector<std::size_t> missing_;
  std::string raw_;
};

/// A pipeline stage needs an artifact that an earlier stage has not written.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& artifact, const std::string& stage)
      : Error("missing artifact " + artifact + ": run " + stage + " first"),
        stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace skim
