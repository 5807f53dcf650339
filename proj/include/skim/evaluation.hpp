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

// Keyshot F1 evaluation, benchmark datasets, random baselines and
// precision-over-random heatmaps.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "skim/error.hpp"
#include "skim/io.hpp"
#include "skim/parallel.hpp"
#include "skim/rng.hpp"
#include "skim/summarization.hpp"
#include "skim/types.hpp"

namespace skim {

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  friend bool operator==(const PRF&, const PRF&) = default;
};

inline PRF prf1(const FrameMask& a, const FrameMask& b) {
  if (a.size() != b.size()) {
    throw InvariantError("prf1: masks cover " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                         " frames");
  }
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    na += a[t] ? 1 : 0;
    nb += b[t] ? 1 : 0;
    both += (a[t] && b[t]) ? 1 : 0;
  }
  PRF r;
  r.precision = na ? static_cast<double>(both) / static_cast<double>(na) : 0.0;
  r.recall = nb ? static_cast<double>(both) / static_cast<double>(nb) : 0.0;
  r.f1 = (r.precision + r.recall) > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

inline PRF prf1(const SummaryMask& a, const SummaryMask& b) { return prf1(a.selected, b.selected); }

/// Frame-level user scores to a keyshot summary: per-segment mean score
/// times length, knapsack at the budget.
inline FrameMask gt_to_keyshots(std::span<const double> user_scores, const std::vector<Interval>& segments,
                                double budget_fraction = 0.15) {
  return summarize_keyshot(user_scores, segments, budget_fraction, SegmentValue::mass).selected;
}

enum class Aggregation { max, mean };

inline const char* to_string(Aggregation a) { return a == Aggregation::max ? "max" : "mean"; }

inline Aggregation aggregation_from_string(const std::string& s) {
  if (s == "max") return Aggregation::max;
  if (s == "mean") return Aggregation::mean;
  throw InvariantError("unknown aggregation '" + s + "' (expected max or mean)");
}

/// Reference summaries, one per user. Frame-score annotations are converted
/// over the annotation's own segments, or `fallback_segments` when it has
/// none.
inline std::vector<FrameMask> reference_summaries(const DatasetAnnotations& a,
                                                  const std::vector<Interval>* fallback_segments = nullptr,
                                                  double budget_fraction = 0.15) {
  std::vector<FrameMask> refs;
  if (a.kind == AnnotationKind::keyshots) {
    for (const auto& u : a.keyshots) refs.push_back(mask_from_intervals(u, a.n_frames));
    return refs;
  }
  const std::vector<Interval>* segs = a.segments ? &*a.segments : fallback_segments;
  if (!segs) {
    throw InvariantError("video " + a.video_id + ": frame-score annotations need segments to build keyshots");
  }
  for (const auto& u : a.scores) refs.push_back(gt_to_keyshots(u, *segs, budget_fraction));
  return refs;
}

struct VideoEval {
  std::string id;
  PRF prf;
  std::vector<double> user_f1;
  friend bool operator==(const VideoEval&, const VideoEval&) = default;
};

/// Max rule: the closest user's (P, R, F1). Mean rule: each of P, R and F1
/// averaged over users.
inline VideoEval eval_against(const FrameMask& summary, const std::vector<FrameMask>& refs, Aggregation agg) {
  if (refs.empty()) throw InvariantError("eval: no reference summaries");
  VideoEval v;
  PRF best{-1, -1, -1};
  PRF sum;
  for (const auto& r : refs) {
    const PRF p = prf1(summary, r);
    v.user_f1.push_back(p.f1);
    if (p.f1 > best.f1) best = p;
    sum.precision += p.precision;
    sum.recall += p.recall;
    sum.f1 += p.f1;
  }
  if (agg == Aggregation::max) {
    v.prf = best;
  } else {
    const auto n = static_cast<double>(refs.size());
    v.prf = {sum.precision / n, sum.recall / n, sum.f1 / n};
  }
  return v;
}

inline VideoEval eval_video(const SummaryMask& summary, const DatasetAnnotations& a, Aggregation agg,
                            const std::vector<Interval>* fallback_segments = nullptr) {
  if (summary.selected.size() != a.n_frames) {
    throw InvariantError("video " + a.video_id + ": summary covers " + std::to_string(summary.selected.size()) +
                         " frames, annotations " + std::to_string(a.n_frames));
  }
  auto v = eval_against(summary.selected, reference_summaries(a, fallback_segments), agg);
  v.id = a.video_id;
  return v;
}

using Splits = std::vector<std::vector<std::string>>;

/// Mean within each split, then mean across splits.
inline double eval_splits(const std::map<std::string, double>& per_video, const Splits& splits) {
  if (splits.empty()) throw InvariantError("eval_splits: no splits");
  double total = 0;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    if (splits[s].empty()) throw InvariantError("eval_splits: split " + std::to_string(s) + " is empty");
    double sum = 0;
    for (const auto& id : splits[s]) {
      auto it = per_video.find(id);
      if (it == per_video.end()) {
        throw InvariantError("eval_splits: split " + std::to_string(s) + " names unknown video '" + id + "'");
      }
      sum += it->second;
    }
    total += sum / static_cast<double>(splits[s].size());
  }
  return total / static_cast<double>(splits.size());
}

/// `n` disjoint test splits covering every id: a seeded shuffle cut into n
/// near-equal parts.
inline Splits generate_splits(std::vector<std::string> ids, std::size_t n = 5, std::uint64_t seed = 0) {
  if (n == 0) throw InvariantError("generate_splits: n must be >= 1");
  std::sort(ids.begin(), ids.end());
  Rng rng(derive_seed(seed, {0x5b117u}));
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  n = std::min(n, std::max<std::size_t>(1, ids.size()));
  Splits out(n);
  for (std::size_t i = 0; i < ids.size(); ++i) out[i * n / ids.size()].push_back(ids[i]);
  return out;
}

inline Splits splits_from_json(const json& j) {
  Splits s;
  const json& arr = j.is_object() ? detail::field(j, "splits") : j;
  try {
    s = arr.get<Splits>();
  } catch (const json::exception& e) {
    throw SchemaError("splits", e.what());
  }
  return s;
}

// ---- Datasets -----------------------------------------------------------

struct SummaryProtocol {
  Protocol protocol = Protocol::keyshot15;
  double keyshot_budget = 0.15;
  double fragment_fraction = 0.03;
  double uniform_budget = 0.36;
  double shot_seconds = 5.0;
  SegmentValue segment_value = SegmentValue::mass;
};

/// A benchmark: annotation items plus how to score them.
struct Dataset {
  std::string name;
  Aggregation aggregation = Aggregation::mean;
  SummaryProtocol protocol;
  std::vector<DatasetAnnotations> items;
  Splits splits;

  std::vector<std::string> ids() const {
    std::vector<std::string> v;
    for (const auto& a : items) v.push_back(a.video_id);
    return v;
  }
};

inline Protocol protocol_from_string(const std::string& p) {
  if (p == "keyshot15") return Protocol::keyshot15;
  if (p == "qfvs_shots") return Protocol::qfvs_shots;
  if (p == "uniform_frag") return Protocol::uniform_frag;
  throw InvariantError("unknown protocol '" + p + "'");
}

/// Loads `<dir>/dataset.json`:
///   {"version": 1, "name": ..., "aggregation": "max"|"mean",
///    "protocol": "keyshot15"|"qfvs_shots"|"uniform_frag",
///    "items": ["annotations/a.json", ...], "splits": [[ids], ...]?}
/// Without splits, five seeded splits are generated.
inline Dataset load_dataset(const std::filesystem::path& dir, std::uint64_t split_seed = 0) {
  const auto manifest_path = std::filesystem::is_directory(dir) ? dir / "dataset.json" : dir;
  const auto base = manifest_path.parent_path();
  const json j = read_json_file(manifest_path);
  detail::check_version(j, "dataset");
  Dataset d;
  d.name = detail::get_as<std::string>(detail::field(j, "name"), "name");
  d.aggregation = aggregation_from_string(detail::get_as<std::string>(detail::field(j, "aggregation"), "aggregation"));
  if (j.contains("protocol")) d.protocol.protocol = protocol_from_string(j["protocol"].get<std::string>());
  for (const auto& p : detail::get_as<std::vector<std::string>>(detail::field(j, "items"), "items")) {
    d.items.push_back(load_annotations(base / p));
  }
  std::set<std::string> seen;
  for (const auto& a : d.items) {
    if (!seen.insert(a.video_id).second) throw SchemaError("items", "duplicate item id " + a.video_id);
  }
  d.splits = j.contains("splits") ? splits_from_json(j["splits"]) : generate_splits(d.ids(), 5, split_seed);
  return d;
}

inline SummaryMask summarize_with(std::span<const double> frame_scores, const DatasetAnnotations& a,
                                  const SummaryProtocol& p, const std::vector<Interval>* fallback_segments = nullptr) {
  switch (p.protocol) {
    case Protocol::keyshot15: {
      const std::vector<Interval>* segs = a.segments ? &*a.segments : fallback_segments;
      if (!segs) throw InvariantError("video " + a.video_id + ": keyshot protocol needs segments");
      return summarize_keyshot(frame_scores, *segs, p.keyshot_budget, p.segment_value);
    }
    case Protocol::qfvs_shots: {
      if (!a.oracle_budget_frames) throw InvariantError("video " + a.video_id + ": QFVS protocol needs an oracle budget");
      return summarize_qfvs(frame_scores, a.fps, *a.oracle_budget_frames, p.shot_seconds);
    }
    case Protocol::uniform_frag:
      return summarize_uniform(frame_scores, p.fragment_fraction, p.uniform_budget, p.segment_value);
  }
  throw InvariantError("unknown protocol");
}

// ---- Reports ------------------------------------------------------------

struct EvalReport {
  std::string dataset;
  Protocol protocol = Protocol::keyshot15;
  Aggregation aggregation = Aggregation::mean;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::vector<VideoEval> videos;
  std::vector<double> split_f1;
  PRF grand;
  std::map<std::string, double> class_f1;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// x * 100 rounded to two decimals.
inline double pct2(double x) { return std::round(x * 10000.0) / 100.0; }

inline json eval_report_to_json(const EvalReport& r) {
  json j;
  j["version"] = kJsonVersion;
  j["dataset"] = r.dataset;
  j["protocol"] = to_string(r.protocol);
  j["aggregation"] = to_string(r.aggregation);
  j["seed"] = r.seed;
  j["trials"] = r.trials;
  json vids = json::array();
  for (const auto& v : r.videos) {
    vids.push_back({{"id", v.id},
                    {"precision", pct2(v.prf.precision)},
                    {"recall", pct2(v.prf.recall)},
                    {"f1", pct2(v.prf.f1)}});
  }
  j["videos"] = vids;
  json splits = json::array();
  for (double s : r.split_f1) splits.push_back(pct2(s));
  j["splits"] = splits;
  j["grand"] = {{"precision", pct2(r.grand.precision)}, {"recall", pct2(r.grand.recall)}, {"f1", pct2(r.grand.f1)}};
  if (!r.class_f1.empty()) {
    json c = json::object();
    for (const auto& [k, v] : r.class_f1) c[k] = pct2(v);
    j["classes"] = c;
  }
  return j;
}

inline std::string item_class(const DatasetAnnotations& a) {
  return a.queries.empty() || a.queries[0].cls.empty() ? std::string() : a.queries[0].cls;
}

/// Builds a report from per-item results: split means, grand mean (over
/// splits) and per-class means.
inline EvalReport assemble_report(const Dataset& d, std::vector<VideoEval> videos) {
  EvalReport r;
  r.dataset = d.name;
  r.protocol = d.protocol.protocol;
  r.aggregation = d.aggregation;
  std::map<std::string, double> f1, p, rc;
  for (const auto& v : videos) {
    f1[v.id] = v.prf.f1;
    p[v.id] = v.prf.precision;
    rc[v.id] = v.prf.recall;
  }
  const Splits splits = d.splits.empty() ? Splits{d.ids()} : d.splits;
  for (const auto& s : splits) r.split_f1.push_back(eval_splits(f1, {s}));
  r.grand = {eval_splits(p, splits), eval_splits(rc, splits), eval_splits(f1, splits)};
  std::map<std::string, std::pair<double, std::size_t>> cls;
  for (std::size_t i = 0; i < d.items.size(); ++i) {
    const auto c = item_class(d.items[i]);
    if (c.empty()) continue;
    cls[c].first += f1.at(d.items[i].video_id);
    cls[c].second += 1;
  }
  for (const auto& [c, acc] : cls) r.class_f1[c] = acc.first / static_cast<double>(acc.second);
  r.videos = std::move(videos);
  return r;
}

// ---- Random baseline ----------------------------------------------------

enum class RandomUnit { fragment, frame };

/// i.i.d. uniform scores, either one per protocol unit (segment, shot or
/// fragment, spread over its frames) or one per frame.
inline std::vector<double> random_scores(const DatasetAnnotations& a, const SummaryProtocol& p, RandomUnit unit,
                                         Rng& rng) {
  std::vector<double> s(a.n_frames);
  if (unit == RandomUnit::frame) {
    for (double& x : s) x = rng.uniform();
    return s;
  }
  std::vector<Interval> units;
  switch (p.protocol) {
    case Protocol::keyshot15:
      if (!a.segments) throw InvariantError("video " + a.video_id + ": keyshot protocol needs segments");
      units = *a.segments;
      break;
    case Protocol::qfvs_shots: units = make_shots(a.n_frames, a.fps, p.shot_seconds); break;
    case Protocol::uniform_frag: units = uniform_fragments(a.n_frames, p.fragment_fraction); break;
  }
  for (const auto& u : units) {
    const double v = rng.uniform();
    std::fill(s.begin() + static_cast<std::ptrdiff_t>(u.start), s.begin() + static_cast<std::ptrdiff_t>(u.end), v);
  }
  return s;
}

struct BaselineOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  RandomUnit unit = RandomUnit::fragment;
  std::size_t jobs = 1;
};

/// Mean over trials of the dataset's evaluation under random scores. Each
/// (trial, item) pair draws from its own derived stream.
inline EvalReport random_baseline(const Dataset& d, const BaselineOptions& opt = {}) {
  if (opt.trials == 0) throw InvariantError("random_baseline: trials must be >= 1");
  if (d.items.empty()) throw InvariantError("random_baseline: empty dataset");
  std::vector<std::vector<VideoEval>> per_trial(opt.trials, std::vector<VideoEval>(d.items.size()));
  const std::size_t cells = opt.trials * d.items.size();
  parallel_for(cells, opt.jobs, [&](std::size_t c) {
    const std::size_t t = c / d.items.size(), v = c % d.items.size();
    const auto& a = d.items[v];
    Rng rng(derive_seed(opt.seed, {t, v}));
    const auto scores = random_scores(a, d.protocol, opt.unit, rng);
    per_trial[t][v] = eval_video(summarize_with(scores, a, d.protocol), a, d.aggregation);
  });

  std::vector<VideoEval> mean(d.items.size());
  for (std::size_t v = 0; v < d.items.size(); ++v) {
    mean[v].id = d.items[v].video_id;
    for (std::size_t t = 0; t < opt.trials; ++t) {
      mean[v].prf.precision += per_trial[t][v].prf.precision;
      mean[v].prf.recall += per_trial[t][v].prf.recall;
      mean[v].prf.f1 += per_trial[t][v].prf.f1;
    }
    const auto n = static_cast<double>(opt.trials);
    mean[v].prf = {mean[v].prf.precision / n, mean[v].prf.recall / n, mean[v].prf.f1 / n};
  }
  auto r = assemble_report(d, std::move(mean));
  r.seed = opt.seed;
  r.trials = opt.trials;
  return r;
}

// ---- Precision over random ----------------------------------------------

/// PoR[b][f]: the model's mean precision divided by the mean precision of
/// random summaries at budget b and fragment size f (uniform-fragment
/// protocol).
struct PorHeatmap {
  std::vector<double> fragment_fractions;
  std::vector<double> budget_fractions;
  std::vector<std::vector<double>> por;
};

inline PorHeatmap por_heatmap(const Dataset& d, const std::map<std::string, std::vector<double>>& model_scores,
                              const std::vector<double>& fragment_fractions,
                              const std::vector<double>& budget_fractions, std::size_t trials = 100,
                              std::uint64_t seed = 0, std::size_t jobs = 1) {
  if (fragment_fractions.empty() || budget_fractions.empty()) throw InvariantError("por_heatmap: empty grid");
  if (trials == 0) throw InvariantError("por_heatmap: trials must be >= 1");
  for (const auto& a : d.items) {
    auto it = model_scores.find(a.video_id);
    if (it == model_scores.end()) throw InvariantError("por_heatmap: no model scores for " + a.video_id);
    if (it->second.size() != a.n_frames) throw InvariantError("por_heatmap: score length mismatch for " + a.video_id);
  }
  PorHeatmap h{fragment_fractions, budget_fractions, {}};
  h.por.assign(budget_fractions.size(), std::vector<double>(fragment_fractions.size(), 0.0));
  const std::size_t nf = fragment_fractions.size();
  parallel_for(budget_fractions.size() * nf, jobs, [&](std::size_t cell) {
    const std::size_t b = cell / nf, f = cell % nf;
    SummaryProtocol p;
    p.protocol = Protocol::uniform_frag;
    p.fragment_fraction = fragment_fractions[f];
    p.uniform_budget = budget_fractions[b];
    double model = 0, random = 0;
    for (std::size_t v = 0; v < d.items.size(); ++v) {
      const auto& a = d.items[v];
      model += eval_video(summarize_with(model_scores.at(a.video_id), a, p), a, d.aggregation).prf.precision;
      for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, {b, f, t, v}));
        random += eval_video(summarize_with(random_scores(a, p, RandomUnit::fragment, rng), a, p), a, d.aggregation)
                      .prf.precision;
      }
    }
    model /= static_cast<double>(d.items.size());
    random /= static_cast<double>(d.items.size() * trials);
    h.por[b][f] = random > 0 ? model / random : 0.0;
  });
  return h;
}

inline std::string fmt_num(double x, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

inline std::string por_to_csv(const PorHeatmap& h) {
  std::string s = "budget\\fragment";
  for (double f : h.fragment_fractions) s += "," + fmt_num(f);
  s += "\n";
  for (std::size_t b = 0; b < h.budget_fractions.size(); ++b) {
    s += fmt_num(h.budget_fractions[b]);
    for (double v : h.por[b]) s += "," + fmt_num(v);
    s += "\n";
  }
  return s;
}

}  // namespace skim
