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

// Scene scores to frame scores: normalization, cosine smoothing across scene
// boundaries, cluster-based frame weights, and per-scene fusion.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skim/error.hpp"
#include "skim/kmeans.hpp"
#include "skim/parallel.hpp"
#include "skim/rng.hpp"
#include "skim/types.hpp"

namespace skim {

enum class NormKind { minmax, exponential, combined };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::minmax: return "minmax";
    case NormKind::exponential: return "exponential";
    case NormKind::combined: return "combined";
  }
  return "?";
}

inline NormKind norm_kind_from_string(const std::string& s) {
  if (s == "minmax") return NormKind::minmax;
  if (s == "exponential" || s == "exp") return NormKind::exponential;
  if (s == "combined" || s == "minmax+exp") return NormKind::combined;
  throw InvariantError("unknown normalization '" + s + "' (expected minmax, exponential or combined)");
}

struct NormSpec {
  NormKind kind = NormKind::minmax;
  double beta = 2.0;

  void validate() const {
    if (!(beta > 0)) throw InvariantError("NormSpec: beta must be > 0");
  }
};

/// Maps values into [0,1]. Constant input maps to 0.5 everywhere.
inline std::vector<double> normalize(std::span<const double> values, const NormSpec& spec = {}) {
  spec.validate();
  if (values.empty()) throw InvariantError("normalize: empty input");
  for (double v : values) {
    if (std::isnan(v)) throw InvariantError("normalize: NaN input");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(values.size());
  if (!(hi > lo)) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  if (spec.kind != NormKind::minmax) {
    const double denom = std::expm1(spec.beta);
    for (double& x : out) x = std::expm1(spec.beta * x) / denom;
  }
  return out;
}

/// Per-frame scores from per-scene scores. Between the midpoints of two
/// consecutive scenes the value moves from one score to the next along
/// w = (1 - cos(pi p)) / 2.
inline std::vector<double> smooth_scene_scores(std::span<const double> scene_scores, const SceneSet& scenes) {
  if (scene_scores.size() != scenes.size()) {
    throw InvariantError("smooth_scene_scores: " + std::to_string(scene_scores.size()) + " scores for " +
                         std::to_string(scenes.size()) + " scenes");
  }
  std::vector<double> f(scenes.frame_count());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    std::fill(f.begin() + static_cast<std::ptrdiff_t>(scenes[i].start),
              f.begin() + static_cast<std::ptrdiff_t>(scenes[i].end), scene_scores[i]);
  }
  auto mid = [&](std::size_t i) { return (scenes[i].start + scenes[i].end) / 2; };
  for (std::size_t i = 0; i + 1 < scenes.size(); ++i) {
    const std::size_t m0 = mid(i), m1 = mid(i + 1);
    const double a = scene_scores[i], b = scene_scores[i + 1];
    const double span = static_cast<double>(m1 - m0);
    for (std::size_t t = m0; t <= m1; ++t) {
      const double p = static_cast<double>(t - m0) / span;
      const double w = (1 - std::cos(std::numbers::pi * p)) / 2;
      f[t] = (1 - w) * a + w * b;
    }
    f[m0] = a;
    f[m1] = b;
  }
  return f;
}

struct WeightParams {
  double sigma = 0.3;
  double window_s = 3.0;
  double short_threshold_s = 108.0;

  void validate() const {
    if (!(sigma >= 0 && sigma <= 1)) throw InvariantError("WeightParams: sigma must be in [0,1]");
    if (!(window_s > 0)) throw InvariantError("WeightParams: W must be > 0");
  }
};

/// Duration-dependent (sigma, W): long videos favour uniqueness over 1 s
/// segments, intermediate ones consistency over 1 s, short ones a 0.3 mix
/// over 3 s.
inline WeightParams select_params(double duration_s, double short_threshold_s = 108.0) {
  if (!(duration_s > 0)) throw InvariantError("select_params: duration must be > 0");
  WeightParams p;
  p.short_threshold_s = short_threshold_s;
  if (duration_s > 5 * short_threshold_s) {
    p.sigma = 0.1;
    p.window_s = 1.0;
  } else if (duration_s > short_threshold_s) {
    p.sigma = 1.0;
    p.window_s = 1.0;
  } else {
    p.sigma = 0.3;
    p.window_s = 3.0;
  }
  return p;
}

/// Share of the segment taken by its most frequent label.
inline double consistency(std::span<const std::size_t> labels) {
  if (labels.empty()) throw InvariantError("consistency: empty segment");
  std::map<std::size_t, std::size_t> counts;
  std::size_t best = 0;
  for (auto l : labels) best = std::max(best, ++counts[l]);
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

/// Mean L2 distance of the rows to their mean.
inline double uniqueness(const Points& seg) {
  if (seg.n == 0) throw InvariantError("uniqueness: empty segment");
  std::vector<double> mean(seg.dim, 0.0);
  for (std::size_t i = 0; i < seg.n; ++i) {
    for (std::size_t a = 0; a < seg.dim; ++a) mean[a] += seg.row(i)[a];
  }
  for (double& m : mean) m /= static_cast<double>(seg.n);
  double total = 0;
  for (std::size_t i = 0; i < seg.n; ++i) total += std::sqrt(detail::sq_dist(seg.row(i), mean));
  return total / static_cast<double>(seg.n);
}

inline Points slice_points(const EmbeddingMatrix& emb, Interval iv) {
  Points p;
  p.n = iv.length();
  p.dim = emb.dim();
  p.data.reserve(p.n * p.dim);
  for (std::size_t t = iv.start; t < iv.end; ++t) {
    for (float v : emb.row(t)) p.data.push_back(v);
  }
  return p;
}

struct WeightOptions {
  ClusterSpec cluster;
  KMeansOptions kmeans;
  /// Minmax-rescale the consistency and uniqueness series within each scene
  /// before mixing them.
  bool rescale = true;
  std::uint64_t seed = 0;
};

struct FrameWeights {
  std::vector<double> weights;
  std::vector<std::size_t> k_star;
  /// Scenes whose WCSS curve had no elbow.
  std::vector<std::size_t> no_elbow_scenes;
};

inline std::size_t segment_frames(double window_s, double fps) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window_s * fps)));
}

/// Segment weights sigma * c + (1 - sigma) * u inside each scene, copied to
/// every frame of the segment. Clustering is seeded per scene index, so the
/// result does not depend on `jobs`.
inline FrameWeights frame_weights(const SceneSet& scenes, const EmbeddingMatrix& emb, double fps,
                                  const WeightParams& params, const WeightOptions& opt = {}, std::size_t jobs = 1) {
  params.validate();
  if (emb.count() != scenes.frame_count()) {
    throw InvariantError("frame_weights: embeddings cover " + std::to_string(emb.count()) + " frames, scenes " +
                         std::to_string(scenes.frame_count()));
  }
  const std::size_t seg_len = segment_frames(params.window_s, fps);
  FrameWeights out;
  out.weights.assign(scenes.frame_count(), 0.0);
  out.k_star.assign(scenes.size(), 1);
  std::vector<char> no_elbow(scenes.size(), 0);

  parallel_for(scenes.size(), jobs, [&](std::size_t si) {
    const Interval sc = scenes[si];
    const Points pts = slice_points(emb, sc);
    const auto choice = choose_k(pts, opt.cluster, derive_seed(opt.seed, {si}), opt.kmeans);
    out.k_star[si] = choice.k;
    no_elbow[si] = choice.no_elbow ? 1 : 0;
    std::vector<std::size_t> labels(pts.n, 0);
    if (choice.k > 1) labels = kmeans(pts, choice.k, derive_seed(opt.seed, {si, choice.k}), opt.kmeans).labels;

    std::vector<Interval> segs;
    for (std::size_t s = 0; s < pts.n; s += seg_len) segs.push_back({s, std::min(pts.n, s + seg_len)});
    std::vector<double> c(segs.size()), u(segs.size());
    for (std::size_t k = 0; k < segs.size(); ++k) {
      c[k] = consistency(std::span<const std::size_t>(labels).subspan(segs[k].start, segs[k].length()));
      Points seg;
      seg.n = segs[k].length();
      seg.dim = pts.dim;
      seg.data.assign(pts.data.begin() + static_cast<std::ptrdiff_t>(segs[k].start * pts.dim),
                      pts.data.begin() + static_cast<std::ptrdiff_t>(segs[k].end * pts.dim));
      u[k] = uniqueness(seg);
    }
    if (opt.rescale) {
      c = normalize(c);
      u = normalize(u);
    }
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const double w = params.sigma * c[k] + (1 - params.sigma) * u[k];
      for (std::size_t t = segs[k].start; t < segs[k].end; ++t) out.weights[sc.start + t] = w;
    }
  });
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    if (no_elbow[si]) out.no_elbow_scenes.push_back(si);
  }
  return out;
}

/// Product of smoothed score and weight, normalized inside each scene.
inline std::vector<double> fuse_frame_scores(std::span<const double> smoothed, std::span<const double> weights,
                                             const SceneSet& scenes, const NormSpec& norm = {}) {
  if (smoothed.size() != weights.size() || smoothed.size() != scenes.frame_count()) {
    throw InvariantError("fuse_frame_scores: length mismatch");
  }
  std::vector<double> prod(smoothed.size());
  for (std::size_t t = 0; t < prod.size(); ++t) prod[t] = smoothed[t] * weights[t];
  std::vector<double> out(prod.size());
  for (const auto& sc : scenes) {
    const auto part = normalize(std::span<const double>(prod).subspan(sc.start, sc.length()), norm);
    std::copy(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(sc.start));
  }
  return out;
}

struct ScoringConfig {
  NormSpec norm;
  /// When unset, sigma and W follow the duration rule.
  std::optional<double> sigma;
  std::optional<double> window_s;
  double short_threshold_s = 108.0;
  WeightOptions weights;
};

struct ScoringResult {
  std::vector<double> scene_norm;
  std::vector<double> smoothed;
  FrameWeights weights;
  WeightParams params;
  std::vector<double> final_scores;
};

inline WeightParams resolve_params(double duration_s, const ScoringConfig& cfg) {
  WeightParams p = select_params(duration_s, cfg.short_threshold_s);
  if (cfg.sigma) p.sigma = *cfg.sigma;
  if (cfg.window_s) p.window_s = *cfg.window_s;
  p.validate();
  return p;
}

/// Full scoring stage for one score column.
inline ScoringResult score_frames(std::span<const double> scene_scores, const SceneSet& scenes,
                                  const EmbeddingMatrix& emb, double fps, const ScoringConfig& cfg,
                                  std::size_t jobs = 1) {
  ScoringResult r;
  r.scene_norm = normalize(scene_scores, cfg.norm);
  r.smoothed = smooth_scene_scores(r.scene_norm, scenes);
  r.params = resolve_params(static_cast<double>(scenes.frame_count()) / fps, cfg);
  r.weights = frame_weights(scenes, emb, fps, r.params, cfg.weights, jobs);
  r.final_scores = fuse_frame_scores(r.smoothed, r.weights.weights, scenes, cfg.norm);
  return r;
}

}  // namespace skim
