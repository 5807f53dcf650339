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

#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "skim/backend.hpp"
#include "skim/io.hpp"

namespace skim {

/// Content-addressed response cache: one `<digest>.json` file per response
/// under a directory. Eviction is manual (delete files).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path_for(const std::string& digest) const { return dir_ / (digest + ".json"); }

  std::optional<std::string> get(const std::string& digest) const {
    const auto p = path_for(digest);
    std::error_code ec;
    if (!std::filesystem::exists(p, ec)) return std::nullopt;
    const auto j = read_json_file(p);
    if (!j.contains("response") || j.value("digest", "") != digest) return std::nullopt;
    return j["response"].get<std::string>();
  }

  void put(const std::string& digest, const std::string& model, const std::string& response) {
    json j;
    j["version"] = kJsonVersion;
    j["digest"] = digest;
    j["model"] = model;
    j["response"] = response;
    std::lock_guard lock(write_mu_);
    write_json_file(path_for(digest), j);
  }

 private:
  std::filesystem::path dir_;
  std::mutex write_mu_;
};

/// Consults the cache before the upstream backend. Concurrent identical
/// requests share a single upstream call.
class CachedBackend final : public ChatBackend {
 public:
  CachedBackend(ChatBackend& upstream, ResponseCache& cache) : upstream_(&upstream), cache_(&cache) {}

  std::string complete(const ChatRequest& req) override {
    const auto digest = request_digest(req);
    if (auto hit = cache_->get(digest)) return *hit;

    std::shared_future<std::string> fut;
    std::promise<std::string> mine;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      auto it = inflight_.find(digest);
      if (it != inflight_.end()) {
        fut = it->second;
      } else {
        fut = mine.get_future().share();
        inflight_.emplace(digest, fut);
        owner = true;
      }
    }
    if (!owner) return fut.get();

    try {
      std::string response = upstream_->complete(req);
      cache_->put(digest, req.model, response);
      mine.set_value(response);
    } catch (...) {
      mine.set_exception(std::current_exception());
    }
    {
      std::lock_guard lock(mu_);
      inflight_.erase(digest);
    }
    return fut.get();
  }

 private:
  ChatBackend* upstream_;
  ResponseCache* cache_;
  std::mutex mu_;
  std::map<std::string, std::shared_future<std::string>> inflight_;
};

}  // namespace skim
