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

// Core value types shared by every stage. All of them validate on
// construction and are immutable afterwards, so they can be shared read-only
// between threads.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skim/error.hpp"

namespace skim {

/// Half-open frame interval [start, end).
struct Interval {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool contains(std::size_t t) const noexcept { return t >= start && t < end; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Frames per second as an exact rational (e.g. 30000/1001).
struct Fps {
  std::uint32_t num = 1;
  std::uint32_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Fps&, const Fps&) = default;

  /// Closest rational with a denominator of 1000 or 1001; exact for the
  /// usual broadcast rates.
  static Fps from_double(double fps) {
    if (!(fps > 0) || !std::isfinite(fps)) throw InvariantError("fps must be positive");
    for (std::uint32_t den : {1u, 1001u, 1000u}) {
      const double n = fps * den;
      if (std::abs(n - std::round(n)) < 1e-6 * den) {
        return {static_cast<std::uint32_t>(std::llround(n)), den};
      }
    }
    return {static_cast<std::uint32_t>(std::llround(fps * 1000.0)), 1000u};
  }
};

/// Frame index at time t seconds: floor(t * fps).
inline std::size_t frame_at(double seconds, double fps) {
  return static_cast<std::size_t>(std::floor(seconds * fps));
}

/// Grayscale frames and/or their precomputed mean-absolute-difference series.
class FrameStore {
 public:
  FrameStore(Fps fps, std::size_t count, std::uint16_t height, std::uint16_t width,
             std::optional<std::vector<std::uint8_t>> pixels,
             std::optional<std::vector<double>> diffs)
      : fps_(fps), count_(count), height_(height), width_(width),
        pixels_(std::move(pixels)), diffs_(std::move(diffs)) {
    if (fps_.num == 0 || fps_.den == 0) throw InvariantError("FrameStore: fps must be positive");
    if (!pixels_ && !diffs_) throw InvariantError("FrameStore: needs pixels or a diff series");
    if (pixels_ && pixels_->size() != count_ * height_ * width_) {
      throw InvariantError("FrameStore: pixel payload size != count*height*width");
    }
    if (diffs_) {
      const std::size_t expect = count_ == 0 ? 0 : count_ - 1;
      if (diffs_->size() != expect) {
        throw InvariantError("FrameStore: diff series length " + std::to_string(diffs_->size()) +
                             " != count-1 = " + std::to_string(expect));
      }
      for (double d : *diffs_) {
        if (!(d >= 0) || !std::isfinite(d)) throw InvariantError("FrameStore: diff values must be finite and >= 0");
      }
    }
  }

  Fps fps() const noexcept { return fps_; }
  std::size_t count() const noexcept { return count_; }
  std::uint16_t height() const noexcept { return height_; }
  std::uint16_t width() const noexcept { return width_; }
  bool has_pixels() const noexcept { return pixels_.has_value(); }
  bool has_diffs() const noexcept { return diffs_.has_value(); }
  double duration_seconds() const noexcept { return static_cast<double>(count_) / fps_.value(); }

  std::span<const std::uint8_t> pixels() const {
    if (!pixels_) throw InvariantError("FrameStore: pixels not present");
    return *pixels_;
  }
  std::span<const std::uint8_t> frame(std::size_t t) const {
    const std::size_t n = static_cast<std::size_t>(height_) * width_;
    return pixels().subspan(t * n, n);
  }
  std::span<const double> diffs() const {
    if (!diffs_) throw InvariantError("FrameStore: diff series not present");
    return *diffs_;
  }

  friend bool operator==(const FrameStore&, const FrameStore&) = default;

 private:
  Fps fps_;
  std::size_t count_;
  std::uint16_t height_;
  std::uint16_t width_;
  std::optional<std::vector<std::uint8_t>> pixels_;
  std::optional<std::vector<double>> diffs_;
};

/// Row-major per-frame embeddings.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t count, std::size_t dim, std::vector<float> data, std::string encoder_tag = {})
      : count_(count), dim_(dim), data_(std::move(data)), encoder_tag_(std::move(encoder_tag)) {
    if (data_.size() != count_ * dim_) throw InvariantError("EmbeddingMatrix: data size != count*dim");
    for (float v : data_) {
      if (!std::isfinite(v)) throw InvariantError("EmbeddingMatrix: NaN/Inf entry");
    }
  }

  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& encoder_tag() const noexcept { return encoder_tag_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const { return std::span<const float>(data_).subspan(i * dim_, dim_); }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t count_;
  std::size_t dim_;
  std::vector<float> data_;
  std::string encoder_tag_;
};

/// Ordered scenes partitioning [0, frame_count()).
class SceneSet {
 public:
  SceneSet() = default;
  explicit SceneSet(std::vector<Interval> boundaries) : scenes_(std::move(boundaries)) {
    if (scenes_.empty()) throw InvariantError("SceneSet: no scenes");
    std::size_t expect = 0;
    for (std::size_t i = 0; i < scenes_.size(); ++i) {
      const auto& s = scenes_[i];
      if (s.start != expect || s.end <= s.start) {
        throw InvariantError("SceneSet: scene " + std::to_string(i) +
                             " breaks the partition (must start at previous end and be non-empty)");
      }
      expect = s.end;
    }
  }

  std::size_t size() const noexcept { return scenes_.size(); }
  std::size_t frame_count() const noexcept { return scenes_.empty() ? 0 : scenes_.back().end; }
  const Interval& operator[](std::size_t i) const { return scenes_[i]; }
  const std::vector<Interval>& intervals() const noexcept { return scenes_; }
  auto begin() const noexcept { return scenes_.begin(); }
  auto end() const noexcept { return scenes_.end(); }

  /// Scene index owning frame t.
  std::size_t scene_of(std::size_t t) const {
    std::size_t lo = 0, hi = scenes_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (scenes_[mid].start <= t ? lo : hi) = mid;
    }
    return lo;
  }

  friend bool operator==(const SceneSet&, const SceneSet&) = default;

 private:
  std::vector<Interval> scenes_;
};

enum class ScoreStage { scene_raw, scene_norm, frame_smoothed, frame_weight, frame_final };

inline const char* to_string(ScoreStage s) {
  switch (s) {
    case ScoreStage::scene_raw: return "scene_raw";
    case ScoreStage::scene_norm: return "scene_norm";
    case ScoreStage::frame_smoothed: return "frame_smoothed";
    case ScoreStage::frame_weight: return "frame_weight";
    case ScoreStage::frame_final: return "frame_final";
  }
  return "?";
}

/// Importance values at one pipeline stage.
struct ScoreTrack {
  ScoreStage stage = ScoreStage::frame_final;
  std::vector<double> values;

  ScoreTrack() = default;
  ScoreTrack(ScoreStage s, std::vector<double> v) : stage(s), values(std::move(v)) {
    for (double x : values) {
      if (std::isnan(x)) throw InvariantError(std::string("ScoreTrack(") + to_string(stage) + "): NaN");
      if (stage == ScoreStage::scene_raw) {
        if (x != std::floor(x) || x < 1 || x > 100) {
          throw InvariantError("ScoreTrack(scene_raw): values must be integers in [1,100]");
        }
      } else if (stage == ScoreStage::scene_norm || stage == ScoreStage::frame_smoothed ||
                 stage == ScoreStage::frame_final) {
        if (x < 0 || x > 1) {
          throw InvariantError(std::string("ScoreTrack(") + to_string(stage) + "): values must lie in [0,1]");
        }
      }
    }
  }
  friend bool operator==(const ScoreTrack&, const ScoreTrack&) = default;
};

enum class AnnotationKind { keyshots, frame_scores };

struct Query {
  std::string text;
  std::string cls;
  friend bool operator==(const Query&, const Query&) = default;
};

/// Reference annotations for one evaluation item (a video, or a video-query
/// pair for query-driven datasets).
struct DatasetAnnotations {
  std::string video_id;
  double fps = 0;
  std::size_t n_frames = 0;
  AnnotationKind kind = AnnotationKind::keyshots;
  /// One interval list per user (kind == keyshots).
  std::vector<std::vector<Interval>> keyshots;
  /// One per-frame score vector per user (kind == frame_scores).
  std::vector<std::vector<double>> scores;
  double score_min = 1;
  double score_max = 5;
  std::optional<std::vector<Interval>> segments;
  std::optional<std::size_t> oracle_budget_frames;
  std::vector<Query> queries;

  std::size_t user_count() const noexcept {
    return kind == AnnotationKind::keyshots ? keyshots.size() : scores.size();
  }

  /// Throws SchemaError naming the offending field.
  void validate() const {
    if (video_id.empty()) throw SchemaError("video_id", "must be non-empty");
    if (!(fps > 0)) throw SchemaError("fps", "must be positive");
    if (n_frames == 0) throw SchemaError("n_frames", "must be positive");
    if (user_count() == 0) throw SchemaError("users", "at least one user annotation required");
    if (kind == AnnotationKind::keyshots) {
      for (std::size_t u = 0; u < keyshots.size(); ++u) {
        std::size_t prev_end = 0;
        for (const auto& iv : keyshots[u]) {
          if (iv.end <= iv.start || iv.end > n_frames || iv.start < prev_end) {
            throw SchemaError("users[" + std::to_string(u) + "]",
                              "keyshot intervals must be non-empty, sorted, disjoint and inside [0, n_frames)");
          }
          prev_end = iv.end;
        }
      }
    } else {
      if (!(score_min < score_max)) throw SchemaError("score_range", "min must be < max");
      for (std::size_t u = 0; u < scores.size(); ++u) {
        const std::string field = "users[" + std::to_string(u) + "]";
        if (scores[u].size() != n_frames) {
          throw SchemaError(field, "has " + std::to_string(scores[u].size()) + " scores, expected n_frames = " +
                                       std::to_string(n_frames));
        }
        for (double s : scores[u]) {
          if (!(s >= score_min && s <= score_max)) throw SchemaError(field, "score outside declared range");
        }
      }
    }
    if (segments) {
      std::size_t expect = 0;
      for (const auto& iv : *segments) {
        if (iv.start != expect || iv.end <= iv.start) {
          throw SchemaError("segments", "must partition [0, n_frames) into non-empty intervals");
        }
        expect = iv.end;
      }
      if (expect != n_frames) throw SchemaError("segments", "must cover exactly n_frames");
    }
    if (oracle_budget_frames && *oracle_budget_frames > n_frames) {
      throw SchemaError("oracle_budget_frames", "exceeds n_frames");
    }
  }

  friend bool operator==(const DatasetAnnotations&, const DatasetAnnotations&) = default;
};

enum class Protocol { keyshot15, qfvs_shots, uniform_frag };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::keyshot15: return "keyshot15";
    case Protocol::qfvs_shots: return "qfvs_shots";
    case Protocol::uniform_frag: return "uniform_frag";
  }
  return "?";
}

using FrameMask = std::vector<std::uint8_t>;

/// Per-frame selection under a frame budget, with the protocol units used to
/// build it.
struct SummaryMask {
  FrameMask selected;
  std::size_t budget_frames = 0;
  Protocol protocol = Protocol::keyshot15;

  std::size_t selected_count() const noexcept {
    std::size_t n = 0;
    for (auto b : selected) n += b ? 1 : 0;
    return n;
  }

  /// Maximal runs of selected frames.
  std::vector<Interval> intervals() const {
    std::vector<Interval> out;
    for (std::size_t t = 0; t < selected.size();) {
      if (!selected[t]) {
        ++t;
        continue;
      }
      std::size_t e = t;
      while (e < selected.size() && selected[e]) ++e;
      out.push_back({t, e});
      t = e;
    }
    return out;
  }

  friend bool operator==(const SummaryMask&, const SummaryMask&) = default;
};

inline FrameMask mask_from_intervals(const std::vector<Interval>& ivs, std::size_t n_frames) {
  FrameMask m(n_frames, 0);
  for (const auto& iv : ivs) {
    for (std::size_t t = iv.start; t < iv.end && t < n_frames; ++t) m[t] = 1;
  }
  return m;
}

}  // namespace skim
