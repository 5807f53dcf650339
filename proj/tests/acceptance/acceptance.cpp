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

// Acceptance checks. Prints one line per criterion:
//
//   PASS <name>: <detail>
//   FAIL <name>: <detail>
//   SKIP <name>: <detail>
//
//   acceptance [--criterion NAME] [--toy DIR] [--data DIR] [--cli PATH]
//
// Exit status is 1 when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "skim/pipeline.hpp"
#include "unit/oracles.hpp"

namespace {

namespace fs = std::filesystem;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

struct Paths {
  fs::path toy;
  fs::path data;
  fs::path cli;
};

Outcome pass(std::string d) { return {Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::skip, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Collects failed checks so a criterion can report the first few.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(12);
    s << what << " = " << got << ", want " << want;
    expect(std::fabs(got - want) <= tol, s.str());
  }
  Outcome outcome(const std::string& ok_detail) const {
    if (failures_.empty()) return pass(ok_detail);
    std::string d = std::to_string(failures_.size()) + "/" + std::to_string(total_) + " checks failed; first: " +
                    failures_.front();
    return fail(d);
  }

 private:
  std::size_t total_ = 0;
  std::vector<std::string> failures_;
};

// ---- random_baseline ----------------------------------------------------

struct BaselineTarget {
  const char* name;
  double f1;
  double tol;
  bool required;
};

Outcome random_baseline(const Paths& p) {
  const std::vector<BaselineTarget> targets{
      {"summe", 44.89, 2.0, true}, {"tvsum", 56.43, 1.5, true}, {"vidsum_reason", 34.56, 2.5, false}};
  std::vector<std::string> parts;
  bool ok = true;
  for (const auto& t : targets) {
    const fs::path dir = p.data / t.name;
    if (!fs::exists(dir / "dataset.json")) {
      if (t.required) {
        ok = false;
        parts.push_back(std::string(t.name) + " annotations missing at " + dir.string());
      }
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto d = skim::load_dataset(dir, 0);
    skim::BaselineOptions opt;
    opt.trials = 100;
    opt.seed = 0;
    const auto r = skim::random_baseline(d, opt);
    const double secs = seconds_since(t0);
    const double f1 = skim::pct2(r.grand.f1);
    const bool hit = std::fabs(f1 - t.f1) <= t.tol && secs < 120;
    ok &= hit;
    parts.push_back(std::string(t.name) + " F1=" + skim::fmt_num(f1, 2) + " (want " + skim::fmt_num(t.f1, 2) +
                    "+-" + skim::fmt_num(t.tol, 1) + ", " + skim::fmt_num(secs, 1) + " s)");
  }
  std::string detail;
  for (std::size_t i = 0; i < parts.size(); ++i) detail += (i ? "; " : "") + parts[i];
  return ok ? pass(detail) : fail(detail);
}

// ---- knapsack_oracle ----------------------------------------------------

Outcome knapsack_oracle(const Paths&) {
  const auto t0 = std::chrono::steady_clock::now();
  skim::Rng rng(4242);
  std::size_t mismatches = 0;
  std::string first;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 1 + rng.below(15);
    std::vector<double> values(n);
    std::vector<std::size_t> lengths(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      // Small integer values make exact ties between subsets common.
      values[i] = inst % 2 ? static_cast<double>(rng.below(6)) : rng.uniform() * 10;
      lengths[i] = 1 + rng.below(20);
      total += lengths[i];
    }
    const std::size_t cap = rng.below(total + 1);
    const auto got = skim::knapsack_select(values, lengths, cap);
    const auto want = skim::test::brute_knapsack(values, lengths, cap);
    if (got != want && mismatches++ == 0) first = "instance " + std::to_string(inst);
  }
  const double secs = seconds_since(t0);
  if (mismatches) return fail(std::to_string(mismatches) + " of 1000 instances differ; first " + first);
  if (secs >= 5) return fail("1000 instances matched but took " + skim::fmt_num(secs, 2) + " s");
  return pass("1000/1000 instances match exhaustive search in " + skim::fmt_num(secs, 2) + " s");
}

// ---- threshold_oracle ---------------------------------------------------

Outcome threshold_oracle(const Paths&) {
  skim::Rng rng(777);
  const skim::ThresholdGrid grid;
  const auto taus = grid.candidates();
  std::size_t mismatches = 0, degenerate = 0, rising_steeper = 0;
  for (int c = 0; c < 100; ++c) {
    // Rise to a peak, then fall with random steps; some curves get a steep
    // drop before the peak, which must be ignored.
    std::vector<std::size_t> counts(taus.size());
    const std::size_t peak_at = rng.below(taus.size());
    std::size_t level = 1 + rng.below(5);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (i < peak_at) {
        level += rng.below(4);
        if (c % 3 == 0 && i == peak_at / 2 && level > 3) level -= 3;
      } else if (i > peak_at) {
        const std::size_t down = rng.below(c % 5 == 0 ? 2 : 6);
        level = level > down ? level - down : 0;
      }
      counts[i] = level;
    }
    const auto sel = skim::select_from_counts(counts, taus);
    const long want = skim::test::brute_threshold_index(counts, grid.step);
    if (want < 0) {
      ++degenerate;
      if (!sel.degenerate || sel.index != (counts.size() - 1) / 2) ++mismatches;
    } else if (sel.degenerate || static_cast<long>(sel.index) != want || sel.tau_star != taus[want]) {
      ++mismatches;
    }
    for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
      if (i < sel.index && counts[i] > counts[i + 1] && want >= 0 &&
          counts[i] - counts[i + 1] > counts[want] - counts[want + 1]) {
        ++rising_steeper;
        break;
      }
    }
  }
  const std::string detail = std::to_string(100 - mismatches) + "/100 curves match the grid scan (" +
                             std::to_string(degenerate) + " without a post-peak drop, " +
                             std::to_string(rising_steeper) + " with a steeper pre-peak drop)";
  return mismatches ? fail(detail) : pass(detail);
}

// ---- equation_suite -----------------------------------------------------

Outcome equation_suite(const Paths&) {
  Checks c;
  constexpr double tol = 1e-9;

  {
    std::vector<std::uint8_t> px(4, 0);
    px.insert(px.end(), 4, 10);
    const skim::FrameStore f(skim::Fps{1, 1}, 2, 2, 2, std::move(px), std::nullopt);
    const auto d = skim::intensity_diff_series(f);
    c.expect(d.size() == 1, "diff series of 2 frames has length 1");
    if (!d.empty()) c.near(d[0], 10, tol, "D for 2x2 frames 0 then 10");
    const skim::FrameStore g(skim::Fps{1, 1}, 2, 1, 1, std::vector<std::uint8_t>{0, 255}, std::nullopt);
    c.near(skim::intensity_diff_series(g).at(0), 255, tol, "D for 1x1 frames 0 then 255");
    const skim::FrameStore h(skim::Fps{1, 1}, 2, 1, 2, std::vector<std::uint8_t>{7, 9, 7, 9}, std::nullopt);
    c.near(skim::intensity_diff_series(h).at(0), 0, tol, "D for identical frames");
  }

  {
    const std::vector<std::size_t> a{0, 0, 0, 0}, b{0, 0, 1, 0}, d{0, 1};
    c.near(skim::consistency(a), 1.0, tol, "consistency [a,a,a,a]");
    c.near(skim::consistency(b), 0.75, tol, "consistency [a,a,b,a]");
    c.near(skim::consistency(d), 0.5, tol, "consistency [a,b]");
  }

  {
    c.near(skim::uniqueness(skim::Points{2, 2, {0, 0, 2, 0}}), 1.0, tol, "uniqueness (0,0),(2,0)");
    c.near(skim::uniqueness(skim::Points{3, 2, {1, 1, 1, 1, 1, 1}}), 0.0, tol, "uniqueness identical rows");
    c.near(skim::uniqueness(skim::Points{2, 2, {0, 0, -6, 0}}), 3.0, tol, "uniqueness scaled by -3");
  }

  {
    // Two 2-frame segments whose rescaled (c,u) are (1,0) and (0,1).
    const skim::SceneSet scenes({{0, 4}});
    const skim::EmbeddingMatrix emb(4, 2, {0, 0, 0, 0.001f, 5, 0, -5, 0}, "t");
    for (const auto& [sigma, want] : std::vector<std::pair<double, std::vector<double>>>{
             {0.5, {0.5, 0.5, 0.5, 0.5}}, {1.0, {1, 1, 0, 0}}, {0.0, {0, 0, 1, 1}}}) {
      skim::WeightParams wp;
      wp.sigma = sigma;
      wp.window_s = 2;
      const auto w = skim::frame_weights(scenes, emb, 1.0, wp);
      for (std::size_t t = 0; t < 4; ++t) {
        c.near(w.weights.at(t), want[t], tol, "weight sigma=" + skim::fmt_num(sigma, 1) + " frame " + std::to_string(t));
      }
    }
  }

  for (const auto& [t, sigma, window] :
       std::vector<std::tuple<double, double, double>>{{60, 0.3, 3}, {200, 1.0, 1}, {700, 0.1, 1}}) {
    const auto p = skim::select_params(t);
    c.expect(p.sigma == sigma && p.window_s == window,
             "select_params(" + skim::fmt_num(t, 0) + ") = (" + skim::fmt_num(p.sigma, 2) + ", " +
                 skim::fmt_num(p.window_s, 2) + ")");
  }

  {
    auto mask = [](std::size_t n, std::size_t a, std::size_t b) {
      skim::FrameMask m(n, 0);
      for (std::size_t t = a; t < b; ++t) m[t] = 1;
      return m;
    };
    const auto r = skim::prf1(mask(20, 0, 10), mask(20, 5, 15));
    c.near(r.precision, 0.5, tol, "P([0,10),[5,15))");
    c.near(r.recall, 0.5, tol, "R([0,10),[5,15))");
    c.near(r.f1, 0.5, tol, "F1([0,10),[5,15))");
    const auto u = skim::prf1(mask(20, 0, 4), mask(20, 0, 12));
    c.near(u.precision, 1.0, tol, "P([0,4),[0,12))");
    c.near(u.recall, 1.0 / 3.0, tol, "R([0,4),[0,12))");
    c.near(u.f1, 0.5, tol, "F1([0,4),[0,12))");
  }

  return c.outcome("frame difference, consistency, uniqueness, weight mix, precision/recall/F1 cases within 1e-9; "
                   "duration branches exact at T = 60, 200, 700 s");
}

// ---- smoothing_invariants -------------------------------------------------

Outcome smoothing_invariants(const Paths&) {
  Checks c;
  skim::Rng rng(99);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n_scenes = 1 + rng.below(8);
    std::vector<skim::Interval> iv;
    std::size_t start = 0;
    for (std::size_t i = 0; i < n_scenes; ++i) {
      const std::size_t len = 1 + rng.below(40);
      iv.push_back({start, start + len});
      start += len;
    }
    const skim::SceneSet scenes(iv);
    std::vector<double> s(n_scenes);
    for (double& x : s) x = rng.uniform();
    const auto f = skim::smooth_scene_scores(s, scenes);
    const std::string tag = "config " + std::to_string(k);
    c.expect(f.size() == start, tag + ": length");
    for (std::size_t i = 0; i < n_scenes; ++i) {
      const std::size_t mid = (iv[i].start + iv[i].end) / 2;
      c.expect(f[mid] == s[i], tag + ": midpoint of scene " + std::to_string(i) + " equals its score");
    }
    for (std::size_t i = 0; i + 1 < n_scenes; ++i) {
      const std::size_t m0 = (iv[i].start + iv[i].end) / 2, m1 = (iv[i + 1].start + iv[i + 1].end) / 2;
      const double lo = std::min(s[i], s[i + 1]), hi = std::max(s[i], s[i + 1]);
      for (std::size_t t = m0; t <= m1; ++t) {
        c.expect(f[t] >= lo - 1e-12 && f[t] <= hi + 1e-12, tag + ": frame " + std::to_string(t) + " bounded");
      }
    }
    if (n_scenes == 1) {
      for (double x : f) c.expect(x == s[0], tag + ": single scene is constant");
    }
  }
  {
    // Midpoints 2 and 6; frame 4 sits at p = 0.5.
    const skim::SceneSet scenes({{0, 4}, {4, 8}});
    const std::vector<double> s{0, 1};
    const auto f = skim::smooth_scene_scores(s, scenes);
    c.near(f[4], 0.5, 1e-12, "cosine midpoint");
  }
  return c.outcome("200 random scene configurations: midpoint equality and bounded interpolation hold; p=0.5 gives 0.5");
}

// ---- e2e_determinism ----------------------------------------------------

std::string read_bytes(const fs::path& p) { return skim::read_file(p); }

fs::path toy_copy(const fs::path& toy, const fs::path& dst) {
  fs::create_directories(dst);
  for (const auto& e : fs::directory_iterator(toy)) {
    if (e.is_regular_file()) fs::copy_file(e.path(), dst / e.path().filename(), fs::copy_options::overwrite_existing);
  }
  return dst / "config.json";
}

Outcome e2e_determinism(const Paths& p) {
  if (!fs::exists(p.toy / "config.json")) return fail("toy data missing at " + p.toy.string());
  const fs::path root = fs::temp_directory_path() / ("skim_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);

  struct Run {
    std::string name;
    std::size_t jobs;
  };
  const std::vector<Run> runs{{"a", 1}, {"b", 1}, {"c", 4}};
  std::map<std::string, fs::path> out_dirs;
  for (const auto& r : runs) {
    const auto cfg = toy_copy(p.toy, root / r.name);
    if (!p.cli.empty()) {
      const std::string cmd = "\"" + p.cli.string() + "\" --config \"" + cfg.string() + "\" --jobs " +
                              std::to_string(r.jobs) + " run-all > \"" + (root / (r.name + ".log")).string() + "\" 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        const std::string log = read_bytes(root / (r.name + ".log"));
        fs::remove_all(root);
        return fail("skim run-all (--jobs " + std::to_string(r.jobs) + ") failed: " + log.substr(0, 300));
      }
    } else {
      skim::Pipeline pl(skim::load_config(cfg));
      pl.run_all(r.jobs);
    }
    out_dirs[r.name] = root / r.name / "out";
  }

  const std::vector<std::string> files{"toy/frame_final.psem", "toy/summary.json", "report.json"};
  std::vector<std::string> diffs;
  for (const auto& f : files) {
    const fs::path a = out_dirs["a"] / f;
    if (!fs::exists(a)) {
      diffs.push_back(f + " not written");
      continue;
    }
    const std::string ref = read_bytes(a);
    if (read_bytes(out_dirs["b"] / f) != ref) diffs.push_back(f + " differs between two --jobs 1 runs");
    if (read_bytes(out_dirs["c"] / f) != ref) diffs.push_back(f + " differs between --jobs 1 and --jobs 4");
  }
  fs::remove_all(root);
  if (!diffs.empty()) return fail(diffs.front());
  return pass(std::string(p.cli.empty() ? "library" : "CLI") +
              " runs of the toy video: frame_final, summary and report identical across runs and --jobs 1/4");
}

// ---- f1_properties --------------------------------------------------------

Outcome f1_properties(const Paths&) {
  Checks c;
  skim::Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + rng.below(60);
    skim::FrameMask a(n), b(n);
    for (std::size_t t = 0; t < n; ++t) {
      a[t] = rng.uniform() < 0.4;
      b[t] = rng.uniform() < 0.4;
    }
    const auto ab = skim::prf1(a, b), ba = skim::prf1(b, a);
    c.expect(ab.f1 == ba.f1 && ab.precision == ba.recall && ab.recall == ba.precision,
             "symmetry on random pair " + std::to_string(k));
    const bool any = std::find(a.begin(), a.end(), 1) != a.end();
    const auto aa = skim::prf1(a, a);
    c.expect(any ? aa == skim::PRF{1, 1, 1} : aa == skim::PRF{0, 0, 0}, "identity on random mask " + std::to_string(k));
    skim::FrameMask na(n);
    for (std::size_t t = 0; t < n; ++t) na[t] = !a[t];
    c.expect(skim::prf1(a, na) == skim::PRF{0, 0, 0}, "disjoint complement " + std::to_string(k));
  }
  skim::FrameMask a(15, 0), b(15, 0);
  for (std::size_t t = 0; t < 10; ++t) a[t] = 1;
  for (std::size_t t = 5; t < 15; ++t) b[t] = 1;
  c.expect(skim::prf1(a, b) == skim::PRF{0.5, 0.5, 0.5}, "A=[0,10), B=[5,15) gives exactly (0.5, 0.5, 0.5)");
  return c.outcome("symmetry, identity and disjointness on 200 random masks; [0,10)/[5,15) gives 0.5 exactly");
}

// ---- live_f1 ------------------------------------------------------------

// Needs live caption and judge endpoints; never part of the test suite.
Outcome live_f1(const Paths&) {
  const char* cfg = std::getenv("SKIM_LIVE_CONFIG");
  if (!cfg) return skip("set SKIM_LIVE_CONFIG to a SumMe config with http backends");
  skim::Pipeline pl(skim::load_config(cfg));
  const auto r = pl.run_all(4);
  const double f1 = skim::pct2(r.grand.f1);
  const std::string detail = "SumMe grand F1=" + skim::fmt_num(f1, 2) + " (want 56.73+-3.0)";
  return std::fabs(f1 - 56.73) <= 3.0 ? pass(detail) : fail(detail);
}

const std::vector<std::pair<std::string, std::function<Outcome(const Paths&)>>> kCriteria{
    {"random_baseline", random_baseline}, {"knapsack_oracle", knapsack_oracle},
    {"threshold_oracle", threshold_oracle}, {"equation_suite", equation_suite},
    {"smoothing_invariants", smoothing_invariants}, {"e2e_determinism", e2e_determinism},
    {"f1_properties", f1_properties}, {"live_f1", live_f1},
};

}  // namespace

int main(int argc, char** argv) {
  Paths paths{"data/toy", "data/datasets", {}};
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (i + 1 >= argc) {
      std::cerr << "usage: acceptance [--criterion NAME] [--toy DIR] [--data DIR] [--cli PATH]\n";
      return 2;
    }
    const std::string v = argv[++i];
    if (a == "--criterion") {
      only = v;
    } else if (a == "--toy") {
      paths.toy = v;
    } else if (a == "--data") {
      paths.data = v;
    } else if (a == "--cli") {
      paths.cli = v;
    } else {
      std::cerr << "unknown option " << a << "\n";
      return 2;
    }
  }
  if (const char* d = std::getenv("SKIM_DATASETS")) paths.data = d;

  bool any = false, failed = false;
  for (const auto& [name, fn] : kCriteria) {
    if (!only.empty() && name != only) continue;
    any = true;
    Outcome o;
    try {
      o = fn(paths);
    } catch (const std::exception& e) {
      o = fail(std::string("error: ") + e.what());
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::cout << tag << " " << name << ": " << o.detail << std::endl;
    failed |= o.status == Status::fail;
  }
  if (!any) {
    std::cerr << "unknown criterion " << only << "\n";
    return 2;
  }
  return failed ? 1 : 0;
}
