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

// Record/replay of backend responses. A fixture file is JSON lines, one
// {"digest": ..., "response": ...} object per line, append-only.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "skim/backend.hpp"
#include "skim/error.hpp"

namespace skim {

class FixtureStore {
 public:
  FixtureStore() = default;

  /// Loads a fixture file. A missing file is an empty store. Malformed lines
  /// raise an error naming the 1-based line number.
  static FixtureStore load(const std::filesystem::path& path) {
    FixtureStore store;
    std::ifstream in(path);
    if (!in) return store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = json::parse(line);
        const auto digest = j.at("digest").get<std::string>();
        const auto response = j.at("response").get<std::string>();
        auto [it, inserted] = store.entries_.emplace(digest, response);
        if (!inserted && it->second != response) {
          throw Error("conflicting responses for digest " + digest);
        }
      } catch (const std::exception& e) {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": corrupted fixture line: " + e.what());
      }
    }
    return store;
  }

  std::optional<std::string> find(const std::string& digest) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  /// Adds an entry; returns false when the digest was already present.
  bool insert(const std::string& digest, const std::string& response) {
    std::lock_guard lock(mu_);
    return entries_.emplace(digest, response).second;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  static std::string to_line(const std::string& digest, const std::string& response) {
    json j;
    j["digest"] = digest;
    j["response"] = response;
    return j.dump() + "\n";
  }

  FixtureStore(FixtureStore&& o) noexcept : entries_(std::move(o.entries_)) {}
  FixtureStore& operator=(FixtureStore&& o) noexcept {
    entries_ = std::move(o.entries_);
    return *this;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> entries_;
};

/// Replays recorded responses. Never touches the network.
class FixtureBackend final : public ChatBackend {
 public:
  explicit FixtureBackend(FixtureStore store, bool strict = true, std::string lenient_reply = "SCORE: 50")
      : store_(std::move(store)), strict_(strict), lenient_reply_(std::move(lenient_reply)) {}

  std::string complete(const ChatRequest& req) override {
    const auto digest = request_digest(req);
    if (auto hit = store_.find(digest)) return *hit;
    if (strict_) throw FixtureMissError(digest);
    return lenient_reply_;
  }

  const FixtureStore& store() const noexcept { return store_; }

 private:
  FixtureStore store_;
  bool strict_;
  std::string lenient_reply_;
};

/// Wraps a live backend and appends every new response to a fixture file.
/// Requests already recorded are answered from the file, so re-running a
/// fully recorded pipeline appends nothing.
class RecordingBackend final : public ChatBackend {
 public:
  RecordingBackend(ChatBackend& live, std::filesystem::path fixture_path)
      : live_(&live), path_(std::move(fixture_path)), store_(FixtureStore::load(path_)) {}

  std::string complete(const ChatRequest& req) override {
    const auto digest = request_digest(req);
    if (auto hit = store_.find(digest)) return *hit;
    std::string response = live_->complete(req);
    std::lock_guard lock(file_mu_);
    if (store_.insert(digest, response)) {
      if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
      std::ofstream out(path_, std::ios::app | std::ios::binary);
      if (!out) throw BackendError("cannot append to fixture file " + path_.string());
      out << FixtureStore::to_line(digest, response);
      return response;
    }
    return *store_.find(digest);
  }

 private:
  ChatBackend* live_;
  std::filesystem::path path_;
  FixtureStore store_;
  std::mutex file_mu_;
};

}  // namespace skim
