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

// Scene and video descriptions: frame sampling, batching, and stitching of
// per-batch captions into one continuous text.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "skim/backend.hpp"
#include "skim/error.hpp"
#include "skim/io.hpp"
#include "skim/parallel.hpp"
#include "skim/types.hpp"

namespace skim {

inline constexpr const char* kCaptionPrompt = "Describe this video in detail";

struct DescriptionConfig {
  std::string prompt = kCaptionPrompt;
  double sample_rate_fps = 1.0;
  std::size_t batch_size = 80;
  /// Placed before every non-first batch text.
  std::string continuation_marker = "The video continues: ";
  std::string separator = " ";
};

/// One representative frame per sampled second of [range.start, range.end):
/// the middle frame of each second, counted from the start of the range and
/// clamped to the range. Ranges shorter than one sampling period give their
/// middle frame.
inline std::vector<std::size_t> sample_frames(Interval range, double fps, double rate_fps = 1.0) {
  if (range.end <= range.start) throw InvariantError("sample_frames: empty range");
  if (!(fps > 0) || !(rate_fps > 0)) throw InvariantError("sample_frames: fps and rate must be positive");
  const double period = fps / rate_fps;
  const auto len = static_cast<double>(range.length());
  if (len < period) return {range.start + range.length() / 2};

  const auto half = static_cast<std::size_t>(std::floor(period / 2));
  std::vector<std::size_t> out;
  for (std::size_t j = 0;; ++j) {
    const auto offset = static_cast<std::size_t>(std::floor(static_cast<double>(j) * period));
    if (offset >= range.length()) break;
    const std::size_t idx = std::min(range.start + offset + half, range.end - 1);
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

inline std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices, std::size_t batch_size = 80) {
  if (batch_size == 0) throw InvariantError("make_batches: batch_size must be >= 1");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < indices.size(); i += batch_size) {
    const std::size_t e = std::min(indices.size(), i + batch_size);
    out.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(i), indices.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Normalizes one batch caption for stitching. Non-first batches lose a
/// leading "The video/scene begins|starts|opens|continues [with|by]" opener;
/// non-final batches lose trailing "The video/scene ends|concludes ..."
/// sentences.
inline std::string rewrite_batch_caption(const std::string& caption, bool first, bool last) {
  static const std::regex opener(R"(^\s*(the|this)\s+(video|scene|clip)\s+(begins|starts|opens|continues)(\s+(with|by))?\s*[,:.]?\s*)",
                                 std::regex::icase);
  static const std::regex closer(R"((^|[.!?]\s+)((the|this)\s+(video|scene|clip)\s+(ends|concludes)[^.!?]*[.!?]?)\s*$)",
                                 std::regex::icase);
  std::string s = detail::trim(caption);
  if (!first) {
    s = std::regex_replace(s, opener, "", std::regex_constants::format_first_only);
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  }
  if (!last) {
    for (int guard = 0; guard < 4; ++guard) {
      std::smatch m;
      if (!std::regex_search(s, m, closer)) break;
      s = detail::trim(s.substr(0, static_cast<std::size_t>(m.position(0)) + m.length(1)));
    }
  }
  s = detail::trim(s);
  return s.empty() ? detail::trim(caption) : s;
}

enum class DescriptionRole { scene, video };

/// Captions each batch in order and stitches the results. A single batch is
/// passed through unmodified.
inline std::string describe_range(const std::vector<std::vector<std::size_t>>& batches, const LanguageClient& captioner,
                                  const FrameStore& frames, DescriptionRole role, const DescriptionConfig& cfg = {}) {
  const char* what = role == DescriptionRole::scene ? "scene" : "video";
  if (batches.empty()) throw InvariantError(std::string("describe_range: no batches for ") + what);
  std::string out;
  for (std::size_t k = 0; k < batches.size(); ++k) {
    std::string caption;
    try {
      caption = captioner.caption(batches[k], frames, cfg.prompt);
    } catch (const Error& e) {
      throw BackendError(std::string(what) + " caption batch " + std::to_string(k) + " failed: " + e.what());
    }
    if (detail::trim(caption).empty()) {
      throw BackendError(std::string(what) + " caption batch " + std::to_string(k) + " returned an empty caption");
    }
    if (batches.size() == 1) return caption;
    const std::string text = rewrite_batch_caption(caption, k == 0, k + 1 == batches.size());
    if (k == 0) {
      out = text;
    } else {
      out += cfg.separator + cfg.continuation_marker + text;
    }
  }
  return out;
}

struct DescriptionSet {
  std::vector<std::string> scene_texts;
  std::string video_text;
  double sample_rate_fps = 1.0;
  std::string sampling_policy = "middle-of-second";
  std::size_t batch_size = 80;

  friend bool operator==(const DescriptionSet&, const DescriptionSet&) = default;
};

inline std::string describe_interval(Interval range, const FrameStore& frames, const LanguageClient& captioner,
                                     DescriptionRole role, const DescriptionConfig& cfg) {
  const auto idx = sample_frames(range, frames.fps().value(), cfg.sample_rate_fps);
  return describe_range(make_batches(idx, cfg.batch_size), captioner, frames, role, cfg);
}

/// One description per scene plus one for the whole video. Scenes may be
/// described on several threads; results are ordered by scene index.
inline DescriptionSet describe_all(const SceneSet& scenes, const FrameStore& frames, const LanguageClient& captioner,
                                   const DescriptionConfig& cfg = {}, std::size_t jobs = 1) {
  if (scenes.frame_count() != frames.count()) {
    throw InvariantError("describe_all: scene set covers " + std::to_string(scenes.frame_count()) +
                         " frames, frame store has " + std::to_string(frames.count()));
  }
  DescriptionSet d;
  d.sample_rate_fps = cfg.sample_rate_fps;
  d.batch_size = cfg.batch_size;
  d.scene_texts.resize(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    try {
      d.scene_texts[i] = describe_interval(scenes[i], frames, captioner, DescriptionRole::scene, cfg);
    } catch (const Error& e) {
      throw BackendError("scene " + std::to_string(i) + ": " + e.what());
    }
  });
  d.video_text = describe_interval({0, frames.count()}, frames, captioner, DescriptionRole::video, cfg);
  return d;
}

inline json descriptions_to_json(const DescriptionSet& d) {
  json j;
  j["version"] = kJsonVersion;
  j["video_text"] = d.video_text;
  j["scene_texts"] = d.scene_texts;
  j["sampling"] = {{"rate_fps", d.sample_rate_fps}, {"policy", d.sampling_policy}};
  j["batch_size"] = d.batch_size;
  return j;
}

inline DescriptionSet descriptions_from_json(const json& j) {
  using detail::field;
  using detail::get_as;
  detail::check_version(j, "descriptions");
  DescriptionSet d;
  d.video_text = get_as<std::string>(field(j, "video_text"), "video_text");
  d.scene_texts = get_as<std::vector<std::string>>(field(j, "scene_texts"), "scene_texts");
  const auto& s = field(j, "sampling");
  d.sample_rate_fps = get_as<double>(field(s, "rate_fps", "sampling"), "sampling.rate_fps");
  d.sampling_policy = get_as<std::string>(field(s, "policy", "sampling"), "sampling.policy");
  d.batch_size = get_as<std::size_t>(field(j, "batch_size"), "batch_size");
  for (std::size_t i = 0; i < d.scene_texts.size(); ++i) {
    if (d.scene_texts[i].empty()) throw SchemaError("scene_texts[" + std::to_string(i) + "]", "empty description");
  }
  return d;
}

}  // namespace skim
