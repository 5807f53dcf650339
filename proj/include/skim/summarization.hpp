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
#include <numeric>
#include <span>
#include <vector>

#include "skim/error.hpp"
#include "skim/types.hpp"

namespace skim {

/// Exact 0/1 knapsack over integer lengths. Among optimal sets the one that
/// includes the lowest index at the first point where two optima differ is
/// returned. Indices come back sorted.
inline std::vector<std::size_t> knapsack_select(std::span<const double> values, std::span<const std::size_t> lengths,
                                                std::size_t capacity) {
  if (values.size() != lengths.size()) throw InvariantError("knapsack_select: values/lengths size mismatch");
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (lengths[i] == 0) throw InvariantError("knapsack_select: lengths must be positive");
    if (!std::isfinite(values[i])) throw InvariantError("knapsack_select: non-finite value");
  }
  const std::size_t total = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  const std::size_t cap = std::min(capacity, total);
  const std::size_t w = cap + 1;

  // best[i][c]: optimum over items i..n-1 with capacity c.
  std::vector<double> best((n + 1) * w, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double* next = &best[(i + 1) * w];
    double* cur = &best[i * w];
    for (std::size_t c = 0; c <= cap; ++c) {
      double v = next[c];
      if (lengths[i] <= c) v = std::max(v, values[i] + next[c - lengths[i]]);
      cur[c] = v;
    }
  }
  std::vector<std::size_t> chosen;
  std::size_t c = cap;
  for (std::size_t i = 0; i < n; ++i) {
    if (lengths[i] <= c && values[i] + best[(i + 1) * w + c - lengths[i]] == best[i * w + c]) {
      chosen.push_back(i);
      c -= lengths[i];
    }
  }
  return chosen;
}

/// floor(fraction * n) with a small guard against representation error
/// (0.15 * 100 must give 15, not 14).
inline std::size_t budget_frames(double fraction, std::size_t n_frames) {
  if (!(fraction > 0 && fraction <= 1)) throw InvariantError("budget fraction must be in (0,1]");
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n_frames) + 1e-9));
}

enum class SegmentValue { mass, mean };

namespace detail {

inline double mean_over(std::span<const double> s, Interval iv) {
  double sum = 0;
  for (std::size_t t = iv.start; t < iv.end; ++t) sum += s[t];
  return sum / static_cast<double>(iv.length());
}

inline SummaryMask knapsack_over(std::span<const double> scores, const std::vector<Interval>& units,
                                 std::size_t capacity, SegmentValue mode, Protocol protocol) {
  std::vector<double> values;
  std::vector<std::size_t> lengths;
  for (const auto& u : units) {
    const double m = mean_over(scores, u);
    values.push_back(mode == SegmentValue::mass ? m * static_cast<double>(u.length()) : m);
    lengths.push_back(u.length());
  }
  SummaryMask mask;
  mask.protocol = protocol;
  mask.budget_frames = capacity;
  mask.selected.assign(scores.size(), 0);
  for (std::size_t k : knapsack_select(values, lengths, capacity)) {
    for (std::size_t t = units[k].start; t < units[k].end; ++t) mask.selected[t] = 1;
  }
  return mask;
}

inline void check_partition(const std::vector<Interval>& units, std::size_t n, const char* what) {
  std::size_t expect = 0;
  for (const auto& u : units) {
    if (u.start != expect || u.end <= u.start) throw InvariantError(std::string(what) + " must partition the video");
    expect = u.end;
  }
  if (expect != n) {
    throw InvariantError(std::string(what) + " cover " + std::to_string(expect) + " frames, scores " +
                         std::to_string(n));
  }
}

}  // namespace detail

/// Knapsack over evaluation segments at floor(budget_fraction * n) frames.
inline SummaryMask summarize_keyshot(std::span<const double> frame_scores, const std::vector<Interval>& segments,
                                     double budget_fraction = 0.15, SegmentValue mode = SegmentValue::mass) {
  detail::check_partition(segments, frame_scores.size(), "segments");
  return detail::knapsack_over(frame_scores, segments, budget_frames(budget_fraction, frame_scores.size()), mode,
                               Protocol::keyshot15);
}

/// Consecutive shots of round(shot_seconds * fps) frames (the last may be
/// shorter).
inline std::vector<Interval> make_shots(std::size_t n_frames, double fps, double shot_seconds = 5.0) {
  const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(shot_seconds * fps)));
  std::vector<Interval> shots;
  for (std::size_t s = 0; s < n_frames; s += len) shots.push_back({s, std::min(n_frames, s + len)});
  return shots;
}

/// Highest mean-score shots first (earlier shot on ties) until the next one
/// would overflow the oracle budget.
inline SummaryMask summarize_qfvs(std::span<const double> frame_scores, double fps, std::size_t oracle_budget_frames,
                                  double shot_seconds = 5.0) {
  const auto shots = make_shots(frame_scores.size(), fps, shot_seconds);
  std::vector<double> score(shots.size());
  for (std::size_t k = 0; k < shots.size(); ++k) score[k] = detail::mean_over(frame_scores, shots[k]);
  std::vector<std::size_t> order(shots.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  SummaryMask mask;
  mask.protocol = Protocol::qfvs_shots;
  mask.budget_frames = oracle_budget_frames;
  mask.selected.assign(frame_scores.size(), 0);
  std::size_t used = 0;
  for (std::size_t k : order) {
    if (used + shots[k].length() > oracle_budget_frames) break;
    used += shots[k].length();
    for (std::size_t t = shots[k].start; t < shots[k].end; ++t) mask.selected[t] = 1;
  }
  return mask;
}

/// ceil(1 / fragment_fraction) fragments with boundaries floor(j * n / m).
/// Empty fragments (n < m) are dropped.
inline std::vector<Interval> uniform_fragments(std::size_t n_frames, double fragment_fraction) {
  if (!(fragment_fraction > 0 && fragment_fraction <= 1)) throw InvariantError("fragment fraction must be in (0,1]");
  const auto m = static_cast<std::size_t>(std::ceil(1.0 / fragment_fraction - 1e-9));
  std::vector<Interval> out;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t s = j * n_frames / m, e = (j + 1) * n_frames / m;
    if (e > s) out.push_back({s, e});
  }
  return out;
}

inline SummaryMask summarize_uniform(std::span<const double> frame_scores, double fragment_fraction = 0.03,
                                     double budget_fraction = 0.36, SegmentValue mode = SegmentValue::mass) {
  if (frame_scores.empty()) throw InvariantError("summarize_uniform: no frames");
  const auto frags = uniform_fragments(frame_scores.size(), fragment_fraction);
  return detail::knapsack_over(frame_scores, frags, budget_frames(budget_fraction, frame_scores.size()), mode,
                               Protocol::uniform_frag);
}

}  // namespace skim
