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

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "skim/backend.hpp"
#include "skim/types.hpp"

namespace skim::test {

class FnBackend final : public ChatBackend {
 public:
  explicit FnBackend(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const ChatRequest& req) override {
    ++calls;
    return fn_(req);
  }
  std::atomic<int> calls{0};

 private:
  std::function<std::string(const ChatRequest&)> fn_;
};

// Text of the first message, or "" for multimodal content.
inline std::string prompt_of(const ChatRequest& req) {
  const auto& c = req.messages.at(0).at("content");
  return c.is_string() ? c.get<std::string>() : std::string();
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("skim_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// Frames of constant intensity, one entry per frame.
inline FrameStore flat_frames(const std::vector<std::uint8_t>& levels, std::uint16_t h = 2, std::uint16_t w = 2,
                              Fps fps = {1, 1}) {
  std::vector<std::uint8_t> px;
  for (auto l : levels) px.insert(px.end(), static_cast<std::size_t>(h) * w, l);
  return FrameStore(fps, levels.size(), h, w, std::move(px), std::nullopt);
}

inline FrameStore diff_frames(std::vector<double> diffs, Fps fps = {1, 1}) {
  const std::size_t n = diffs.size() + 1;
  return FrameStore(fps, n, 0, 0, std::nullopt, std::move(diffs));
}

inline SceneSet scenes_of(const std::vector<std::size_t>& lengths) {
  std::vector<Interval> v;
  std::size_t s = 0;
  for (auto l : lengths) {
    v.push_back({s, s + l});
    s += l;
  }
  return SceneSet(std::move(v));
}

}  // namespace skim::test
