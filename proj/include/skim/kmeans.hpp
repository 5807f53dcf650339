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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "skim/error.hpp"
#include "skim/rng.hpp"

namespace skim {

/// Row-major point set in double precision.
struct Points {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return std::span<const double>(data).subspan(i * dim, dim); }
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  std::vector<double> centroids;
  double wcss = 0;
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 100;
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// k-means++ seeding: first centre uniform, then proportional to squared
/// distance from the nearest chosen centre.
inline std::vector<double> seed_centroids(const Points& pts, std::size_t k, Rng& rng) {
  std::vector<double> c;
  c.reserve(k * pts.dim);
  const auto first = static_cast<std::size_t>(rng.below(pts.n));
  c.insert(c.end(), pts.row(first).begin(), pts.row(first).end());
  std::vector<double> d2(pts.n);
  for (std::size_t i = 0; i < pts.n; ++i) d2[i] = sq_dist(pts.row(i), pts.row(first));
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total <= 0) {
      pick = static_cast<std::size_t>(rng.below(pts.n));
    } else {
      double r = rng.uniform() * total;
      pick = pts.n - 1;
      for (std::size_t i = 0; i < pts.n; ++i) {
        r -= d2[i];
        if (r < 0) {
          pick = i;
          break;
        }
      }
    }
    const auto row = pts.row(pick);
    c.insert(c.end(), row.begin(), row.end());
    for (std::size_t i = 0; i < pts.n; ++i) d2[i] = std::min(d2[i], sq_dist(pts.row(i), row));
  }
  return c;
}

inline KMeansResult lloyd(const Points& pts, std::size_t k, std::vector<double> centroids, std::size_t max_iter) {
  const std::size_t d = pts.dim;
  KMeansResult r;
  r.labels.assign(pts.n, 0);
  std::vector<double> dist(pts.n);
  auto centre = [&](std::size_t j) { return std::span<const double>(centroids).subspan(j * d, d); };

  for (std::size_t iter = 0; iter <= max_iter; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < pts.n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double dd = sq_dist(pts.row(i), centre(j));
        if (dd < best_d) {
          best_d = dd;
          best = j;
        }
      }
      if (r.labels[i] != best) changed = true;
      r.labels[i] = best;
      dist[i] = best_d;
    }
    if (!changed || iter == max_iter) break;

    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < pts.n; ++i) {
      const auto row = pts.row(i);
      for (std::size_t a = 0; a < d; ++a) sums[r.labels[i] * d + a] += row[a];
      ++counts[r.labels[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) {
        // Re-seed an empty cluster at the point farthest from its centre.
        const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(pts.row(far).begin(), pts.row(far).end(), centroids.begin() + static_cast<std::ptrdiff_t>(j * d));
        dist[far] = 0;
        continue;
      }
      for (std::size_t a = 0; a < d; ++a) centroids[j * d + a] = sums[j * d + a] / static_cast<double>(counts[j]);
    }
  }
  r.wcss = 0;
  for (double v : dist) r.wcss += v;
  r.centroids = std::move(centroids);
  return r;
}

}  // namespace detail

/// Best of `restarts` seeded runs by WCSS; earlier restarts win ties.
inline KMeansResult kmeans(const Points& pts, std::size_t k, std::uint64_t seed, const KMeansOptions& opt = {}) {
  if (k == 0 || k > pts.n) throw InvariantError("kmeans: k must be in [1, n]");
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opt.restarts); ++r) {
    Rng rng(derive_seed(seed, {r}));
    auto res = detail::lloyd(pts, k, detail::seed_centroids(pts, k, rng), opt.max_iter);
    if (res.wcss < best.wcss) best = std::move(res);
  }
  return best;
}

struct ClusterSpec {
  std::size_t k_min = 2;
  std::size_t k_max = 10;
  std::size_t delta_k = 1;

  void validate() const {
    if (k_min < 1 || k_min >= k_max) throw InvariantError("ClusterSpec: need 1 <= k_min < k_max");
    if (delta_k < 1) throw InvariantError("ClusterSpec: delta_k must be >= 1");
  }
  std::vector<std::size_t> candidates() const {
    std::vector<std::size_t> ks;
    for (std::size_t k = k_min; k <= k_max; k += delta_k) ks.push_back(k);
    return ks;
  }
};

struct ElbowChoice {
  std::size_t k = 1;
  /// Set when the curve has no elbow and k_min was returned.
  bool no_elbow = false;
};

/// Elbow of a WCSS curve: the K with the largest second difference
/// w[i-1] - 2 w[i] + w[i+1]. Earliest K wins ties.
inline ElbowChoice elbow_from_wcss(std::span<const std::size_t> ks, std::span<const double> wcss) {
  if (ks.size() != wcss.size() || ks.empty()) throw InvariantError("elbow_from_wcss: bad curve");
  if (std::all_of(wcss.begin(), wcss.end(), [](double w) { return w <= 0; })) return {1, false};
  const double scale = std::max(1.0, std::abs(wcss.front()));
  if (ks.size() < 3) return {ks.front(), true};
  double best = -std::numeric_limits<double>::infinity();
  std::size_t at = 0;
  for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
    const double d2 = wcss[i - 1] - 2 * wcss[i] + wcss[i + 1];
    if (d2 > best) {
      best = d2;
      at = i;
    }
  }
  if (!(best > 1e-9 * scale)) return {ks.front(), true};
  return {ks[at], false};
}

struct KChoice {
  std::size_t k = 1;
  bool no_elbow = false;
  std::vector<std::size_t> ks;
  std::vector<double> wcss;
};

/// Clusters at every candidate K and picks K* at the elbow. Scenes with
/// fewer points than k_min, or with zero spread, get a single cluster.
inline KChoice choose_k(const Points& pts, const ClusterSpec& spec, std::uint64_t seed, const KMeansOptions& opt = {}) {
  spec.validate();
  KChoice out;
  if (pts.n < spec.k_min || pts.n == 0) return out;
  for (std::size_t k : spec.candidates()) {
    if (k > pts.n) break;
    out.ks.push_back(k);
    out.wcss.push_back(kmeans(pts, k, derive_seed(seed, {k}), opt).wcss);
  }
  double spread = 0;
  {
    std::vector<double> mean(pts.dim, 0.0);
    for (std::size_t i = 0; i < pts.n; ++i) {
      for (std::size_t a = 0; a < pts.dim; ++a) mean[a] += pts.row(i)[a];
    }
    for (double& m : mean) m /= static_cast<double>(pts.n);
    for (std::size_t i = 0; i < pts.n; ++i) spread += detail::sq_dist(pts.row(i), mean);
  }
  if (spread == 0) return out;
  const auto e = elbow_from_wcss(out.ks, out.wcss);
  out.k = e.k;
  out.no_elbow = e.no_elbow;
  return out;
}

}  // namespace skim
