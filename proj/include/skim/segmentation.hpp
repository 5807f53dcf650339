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

// Scene detection: hard cuts from mean absolute intensity differences with a
// threshold chosen from the scene-count curve, followed by an
// embedding-similarity merge of short scenes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "skim/error.hpp"
#include "skim/parallel.hpp"
#include "skim/types.hpp"

namespace skim {

/// Candidate thresholds tau_min, tau_min + step, ..., up to tau_max.
struct ThresholdGrid {
  double tau_min = 5;
  double tau_max = 95;
  double step = 2;

  void validate() const {
    if (!(tau_min < tau_max)) throw InvariantError("ThresholdGrid: tau_min must be < tau_max");
    if (!(step > 0)) throw InvariantError("ThresholdGrid: step must be > 0");
    if (candidates().size() < 3) throw InvariantError("ThresholdGrid: needs at least 3 candidates");
  }

  std::vector<double> candidates() const {
    std::vector<double> out;
    if (!(step > 0) || !(tau_min < tau_max)) return out;
    const auto n = static_cast<std::size_t>(std::floor((tau_max - tau_min) / step + 1e-9)) + 1;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(tau_min + static_cast<double>(i) * step);
    return out;
  }
};

/// D_t = mean |F_t - F_{t+1}| over all pixels, for t in [0, count-1).
inline std::vector<double> intensity_diff_series(const FrameStore& frames) {
  if (!frames.has_pixels()) throw InvariantError("intensity_diff_series: frame store has no pixels");
  const std::size_t n = frames.count();
  std::vector<double> out;
  if (n < 2) return out;
  out.reserve(n - 1);
  const double area = static_cast<double>(frames.height()) * frames.width();
  auto prev = frames.frame(0);
  for (std::size_t t = 1; t < n; ++t) {
    auto cur = frames.frame(t);
    // Integer accumulation keeps the sum exact; a single division rounds.
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      sum += static_cast<std::uint64_t>(std::abs(static_cast<int>(prev[i]) - static_cast<int>(cur[i])));
    }
    out.push_back(area > 0 ? static_cast<double>(sum) / area : 0.0);
    prev = cur;
  }
  return out;
}

/// Uses the stored diff series when present, otherwise computes it.
inline std::vector<double> diff_series(const FrameStore& frames) {
  if (frames.has_diffs()) return {frames.diffs().begin(), frames.diffs().end()};
  return intensity_diff_series(frames);
}

/// Cuts between t and t+1 wherever diffs[t] >= tau, then folds every scene
/// shorter than min_len_s seconds into its successor (the last scene folds
/// backward). `diffs` has count-1 entries.
inline SceneSet detect_scenes_at(std::span<const double> diffs, double tau, double fps, double min_len_s = 2.0) {
  if (!(tau >= 0)) throw InvariantError("detect_scenes_at: tau must be >= 0");
  if (!(fps > 0)) throw InvariantError("detect_scenes_at: fps must be > 0");
  const std::size_t count = diffs.size() + 1;

  std::vector<Interval> scenes;
  std::size_t start = 0;
  for (std::size_t t = 0; t < diffs.size(); ++t) {
    if (diffs[t] >= tau) {
      scenes.push_back({start, t + 1});
      start = t + 1;
    }
  }
  scenes.push_back({start, count});

  const double min_frames = min_len_s * fps;
  std::size_t i = 0;
  while (i < scenes.size() && scenes.size() > 1) {
    if (static_cast<double>(scenes[i].length()) >= min_frames) {
      ++i;
      continue;
    }
    if (i + 1 < scenes.size()) {
      scenes[i + 1].start = scenes[i].start;
      scenes.erase(scenes.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      scenes[i - 1].end = scenes[i].end;
      scenes.pop_back();
    }
  }
  return SceneSet(std::move(scenes));
}

struct ThresholdSelection {
  double tau_star = 0;
  std::size_t index = 0;
  /// N(tau) for every grid candidate.
  std::vector<std::size_t> scene_counts;
  /// Set when the curve has no post-peak drop; tau_star is then the middle
  /// grid candidate.
  bool degenerate = false;
};

/// Picks the candidate with the steepest drop of the scene-count curve,
/// searching only at or after the first global maximum. The drop at index i
/// is counts[i] - counts[i+1] (the grid step is constant, so dividing by it
/// does not change the argmax). Ties go to the earlier candidate.
inline ThresholdSelection select_from_counts(std::span<const std::size_t> counts, std::span<const double> taus) {
  if (counts.size() != taus.size() || counts.size() < 3) {
    throw InvariantError("select_from_counts: need matching curves with at least 3 candidates");
  }
  ThresholdSelection sel;
  sel.scene_counts.assign(counts.begin(), counts.end());
  const auto peak = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  long long best_drop = 0;
  bool found = false;
  for (std::size_t i = peak; i + 1 < counts.size(); ++i) {
    const long long drop = static_cast<long long>(counts[i]) - static_cast<long long>(counts[i + 1]);
    if (drop > best_drop) {
      best_drop = drop;
      sel.index = i;
      found = true;
    }
  }
  if (!found) {
    sel.degenerate = true;
    sel.index = (counts.size() - 1) / 2;
  }
  sel.tau_star = taus[sel.index];
  return sel;
}

/// Evaluates N(tau) over the grid (optionally on several threads) and
/// selects tau*.
inline ThresholdSelection select_threshold(std::span<const double> diffs, const ThresholdGrid& grid, double fps,
                                           double min_len_s = 2.0, std::size_t jobs = 1) {
  grid.validate();
  const auto taus = grid.candidates();
  std::vector<std::size_t> counts(taus.size());
  parallel_for(taus.size(), jobs, [&](std::size_t i) { counts[i] = detect_scenes_at(diffs, taus[i], fps, min_len_s).size(); });
  return select_from_counts(counts, taus);
}

namespace detail {

inline std::vector<double> mean_embedding(const EmbeddingMatrix& emb, const Interval& iv) {
  std::vector<double> m(emb.dim(), 0.0);
  for (std::size_t t = iv.start; t < iv.end; ++t) {
    auto r = emb.row(t);
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += r[d];
  }
  const double n = static_cast<double>(iv.length());
  for (double& v : m) v /= n;
  return m;
}

/// Cosine similarity; -1 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return -1.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

/// Merges every scene shorter than `min_frames` into the adjacent scene whose
/// mean embedding is most cosine-similar (ties merge backward), scanning left
/// to right and repeating until no short scene is left or one scene remains.
inline SceneSet refine_boundaries(const SceneSet& scenes, const EmbeddingMatrix& emb, std::size_t min_frames = 150) {
  if (emb.count() != scenes.frame_count()) {
    throw InvariantError("refine_boundaries: embedding count " + std::to_string(emb.count()) +
                         " != scene frame count " + std::to_string(scenes.frame_count()));
  }
  std::vector<Interval> cur = scenes.intervals();
  bool changed = true;
  while (changed && cur.size() > 1) {
    changed = false;
    std::size_t i = 0;
    while (i < cur.size() && cur.size() > 1) {
      if (cur[i].length() >= min_frames) {
        ++i;
        continue;
      }
      const auto self = detail::mean_embedding(emb, cur[i]);
      double sim_prev = -2, sim_next = -2;
      if (i > 0) sim_prev = detail::cosine(self, detail::mean_embedding(emb, cur[i - 1]));
      if (i + 1 < cur.size()) sim_next = detail::cosine(self, detail::mean_embedding(emb, cur[i + 1]));
      const bool to_prev = i > 0 && (i + 1 == cur.size() || sim_prev >= sim_next);
      if (to_prev) {
        cur[i - 1].end = cur[i].end;
        cur.erase(cur.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        cur[i].end = cur[i + 1].end;
        cur.erase(cur.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        ++i;
      }
      changed = true;
    }
  }
  return SceneSet(std::move(cur));
}

struct SegmentationConfig {
  ThresholdGrid grid;
  double min_scene_seconds = 2.0;
  std::size_t refine_min_frames = 150;
  bool refine = true;
};

struct SegmentationResult {
  SceneSet initial;
  SceneSet refined;
  ThresholdSelection selection;
};

/// Full detection stage: tau* selection, detection at tau*, refinement.
inline SegmentationResult segment_video(const FrameStore& frames, const EmbeddingMatrix* emb,
                                        const SegmentationConfig& cfg, std::size_t jobs = 1) {
  const auto diffs = diff_series(frames);
  const double fps = frames.fps().value();
  SegmentationResult r;
  r.selection = select_threshold(diffs, cfg.grid, fps, cfg.min_scene_seconds, jobs);
  r.initial = detect_scenes_at(diffs, r.selection.tau_star, fps, cfg.min_scene_seconds);
  r.refined = (cfg.refine && emb) ? refine_boundaries(r.initial, *emb, cfg.refine_min_frames) : r.initial;
  return r;
}

}  // namespace skim
