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

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skim/config.hpp"
#include "skim/evaluation.hpp"
#include "skim/pipeline.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitTolerance = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::vector<std::string> queries;
  std::string fixtures;
  bool strict_fixtures = false;
  bool lenient_fixtures = false;
  bool record = false;
  std::string cache_dir;
  std::string format = "text";
  std::string out;
  std::vector<std::string> videos;
  std::optional<double> expect_f1;
  double tolerance = 0;

  // baseline / por
  std::string dataset;
  std::size_t trials = 100;
  bool per_frame = false;
  std::vector<double> fragments{0.02, 0.03};
  std::vector<double> budgets{0.36};

  // ablate
  std::vector<double> sigmas{0.0, 0.1, 0.3, 0.5, 0.7, 1.0};
  std::vector<double> windows{1, 3};
  std::vector<std::string> norms{"minmax", "exponential", "combined"};
  std::vector<std::string> embeddings;
};

skim::PipelineConfig load(const Options& o) {
  if (o.config.empty()) throw skim::InvariantError("this command needs --config");
  auto cfg = skim::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.queries.empty()) cfg.queries = o.queries;
  if (!o.fixtures.empty()) {
    cfg.fixtures = std::filesystem::absolute(o.fixtures);
    if (!o.record) {
      cfg.caption.kind = skim::BackendKind::fixture;
      cfg.judge.kind = skim::BackendKind::fixture;
    }
  }
  if (o.strict_fixtures) cfg.strict_fixtures = true;
  if (o.lenient_fixtures) cfg.strict_fixtures = false;
  if (o.record) cfg.record = true;
  if (!o.cache_dir.empty()) cfg.cache_dir = std::filesystem::absolute(o.cache_dir);
  return cfg;
}

std::vector<std::string> selected_ids(const skim::Pipeline& p, const Options& o) {
  if (o.videos.empty()) return p.video_ids();
  for (const auto& id : o.videos) p.config().video(id);
  return o.videos;
}

void emit(const Options& o, const std::string& text, const skim::json& j) {
  const std::string body = o.format == "json" ? j.dump(2) + "\n" : text;
  if (!o.out.empty()) {
    skim::write_file_atomic(o.out, o.format == "json" ? body : text);
  }
  std::cout << body;
}

std::string report_text(const skim::EvalReport& r) {
  std::string s;
  for (const auto& v : r.videos) {
    s += v.id + "  P=" + skim::fmt_num(skim::pct2(v.prf.precision), 2) + "  R=" +
         skim::fmt_num(skim::pct2(v.prf.recall), 2) + "  F1=" + skim::fmt_num(skim::pct2(v.prf.f1), 2) + "\n";
  }
  for (const auto& [c, f] : r.class_f1) s += "class " + c + "  F1=" + skim::fmt_num(skim::pct2(f), 2) + "\n";
  s += r.dataset + " [" + skim::to_string(r.protocol) + ", " + skim::to_string(r.aggregation) + "]  grand F1=" +
       skim::fmt_num(skim::pct2(r.grand.f1), 2) + "  P=" + skim::fmt_num(skim::pct2(r.grand.precision), 2) +
       "  R=" + skim::fmt_num(skim::pct2(r.grand.recall), 2) + "\n";
  return s;
}

int check_tolerance(const Options& o, const skim::EvalReport& r) {
  if (!o.expect_f1) return 0;
  const double got = skim::pct2(r.grand.f1);
  if (std::abs(got - *o.expect_f1) > o.tolerance) {
    std::cerr << "tolerance check failed: grand F1 " << skim::fmt_num(got, 2) << " vs expected "
              << skim::fmt_num(*o.expect_f1, 2) << " +/- " << skim::fmt_num(o.tolerance, 2) << "\n";
    return kExitTolerance;
  }
  return 0;
}

template <typename Fn>
void for_videos(skim::Pipeline& p, const Options& o, Fn&& fn) {
  const auto ids = selected_ids(p, o);
  const std::size_t outer = ids.size() > 1 ? o.jobs : 1;
  const std::size_t inner = ids.size() > 1 ? 1 : o.jobs;
  skim::parallel_for(ids.size(), outer, [&](std::size_t i) { fn(ids[i], inner); });
}

skim::json report_json(const skim::EvalReport& r) { return skim::eval_report_to_json(r); }

int run(const std::string& cmd, const Options& o) {
  if (cmd == "baseline") {
    skim::Dataset d;
    if (!o.dataset.empty()) {
      d = skim::load_dataset(o.dataset, o.seed.value_or(0));
    } else {
      d = skim::Pipeline(load(o)).dataset();
    }
    skim::BaselineOptions bo;
    bo.trials = o.trials;
    bo.seed = o.seed.value_or(0);
    bo.unit = o.per_frame ? skim::RandomUnit::frame : skim::RandomUnit::fragment;
    bo.jobs = o.jobs;
    const auto r = skim::random_baseline(d, bo);
    emit(o, report_text(r), report_json(r));
    return check_tolerance(o, r);
  }

  skim::Pipeline p(load(o));

  if (cmd == "detect") {
    for_videos(p, o, [&](const std::string& id, std::size_t jobs) {
      const auto r = p.detect(id, jobs);
      std::printf("%s: tau*=%g, %zu scenes (%zu before refinement)%s\n", id.c_str(), r.selection.tau_star,
                  r.refined.size(), r.initial.size(), r.selection.degenerate ? " [flat threshold curve]" : "");
    });
    return 0;
  }
  if (cmd == "describe") {
    for_videos(p, o, [&](const std::string& id, std::size_t jobs) {
      const auto d = p.describe(id, jobs);
      std::printf("%s: %zu scene descriptions\n", id.c_str(), d.scene_texts.size());
    });
    return 0;
  }
  if (cmd == "judge") {
    for_videos(p, o, [&](const std::string& id, std::size_t jobs) {
      const auto s = p.judge(id, jobs);
      std::printf("%s: %zu scenes x %zu columns\n", id.c_str(), s.scene_count(), s.column_count());
    });
    return 0;
  }
  if (cmd == "score") {
    for_videos(p, o, [&](const std::string& id, std::size_t jobs) {
      const auto rs = p.score(id, jobs);
      for (const auto& r : rs) {
        std::printf("%s: sigma=%g W=%gs, %zu frames", id.c_str(), r.params.sigma, r.params.window_s,
                    r.final_scores.size());
        if (!r.weights.no_elbow_scenes.empty()) {
          std::printf(" (no WCSS elbow in %zu scenes, used k_min)", r.weights.no_elbow_scenes.size());
        }
        std::printf("\n");
      }
    });
    return 0;
  }
  if (cmd == "summarize") {
    for_videos(p, o, [&](const std::string& id, std::size_t) {
      for (const auto& m : p.summarize(id)) {
        std::printf("%s: %zu/%zu frames selected (budget %zu)\n", id.c_str(), m.selected_count(), m.selected.size(),
                    m.budget_frames);
      }
    });
    return 0;
  }
  if (cmd == "evaluate") {
    const auto r = p.report(selected_ids(p, o), o.jobs);
    emit(o, report_text(r), report_json(r));
    return check_tolerance(o, r);
  }
  if (cmd == "run-all") {
    const auto r = p.run_all(o.jobs);
    if (r.videos.empty()) {
      std::printf("run-all: artifacts written to %s (no annotations, nothing evaluated)\n",
                  p.config().resolve(p.config().out_dir).string().c_str());
      return 0;
    }
    emit(o, report_text(r), report_json(r));
    return check_tolerance(o, r);
  }
  if (cmd == "ablate") {
    std::vector<skim::NormKind> norms;
    for (const auto& n : o.norms) norms.push_back(skim::norm_kind_from_string(n));
    std::vector<skim::EmbeddingSource> sources;
    for (const auto& e : o.embeddings) sources.push_back({e});
    const auto cells = skim::ablation_grid(p, o.sigmas, o.windows, norms, sources, o.jobs);
    skim::json j = skim::json::array();
    for (const auto& c : cells) {
      j.push_back({{"sigma", c.sigma},
                   {"W", c.window_s},
                   {"norm", skim::to_string(c.norm)},
                   {"encoder_tag", c.encoder_tag},
                   {"f1", skim::pct2(c.f1)}});
    }
    emit(o, skim::ablation_to_csv(cells), j);
    return 0;
  }
  if (cmd == "por") {
    const auto d = p.dataset();
    std::map<std::string, std::vector<double>> model;
    for (const auto& id : p.video_ids()) {
      const auto queries = p.load_scene_scores(id).queries;
      for (const auto& a : p.annotations_for(id)) {
        std::size_t col = 0;
        if (!a.queries.empty()) {
          for (std::size_t k = 0; k < queries.size(); ++k) {
            if (queries[k] == a.queries[0].text) col = k;
          }
        }
        model[a.video_id] = p.load_final_scores(id, col);
      }
    }
    const auto h = skim::por_heatmap(d, model, o.fragments, o.budgets, o.trials, p.config().seed, o.jobs);
    skim::json j;
    j["fragment_fractions"] = h.fragment_fractions;
    j["budget_fractions"] = h.budget_fractions;
    j["por"] = h.por;
    emit(o, skim::por_to_csv(h), j);
    return 0;
  }
  throw skim::InvariantError("unknown command " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot, text-queryable video summarization"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  app.add_option("-c,--config", o.config, "Pipeline config (JSON)");
  app.add_option("--seed", o.seed, "Seed for clustering, splits and random trials");
  app.add_option("-j,--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--query", o.queries, "User query (repeat for several); overrides config and annotations");
  app.add_option("--fixtures", o.fixtures, "Fixture file; replays recorded backend responses");
  app.add_flag("--strict-fixtures", o.strict_fixtures, "Fail on requests missing from the fixture file");
  app.add_flag("--lenient-fixtures", o.lenient_fixtures, "Answer fixture misses with a neutral canned reply");
  app.add_flag("--record", o.record, "Append live HTTP responses to the fixture file");
  app.add_option("--cache-dir", o.cache_dir, "Response cache directory");
  app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("-o,--out", o.out, "Also write the report/CSV to this file");
  app.add_option("--video", o.videos, "Restrict to these video ids");
  app.add_option("--expect-f1", o.expect_f1, "Expected grand F1 (x100); exit 3 when outside --tolerance");
  app.add_option("--tolerance", o.tolerance, "Absolute tolerance for --expect-f1");

  const std::vector<std::pair<const char*, const char*>> stages{
      {"detect", "Detect scenes (threshold selection, detection, refinement)"},
      {"describe", "Caption every scene and the whole video"},
      {"judge", "Score scenes with the language-model judge"},
      {"score", "Propagate scene scores to frame scores"},
      {"summarize", "Build budgeted summaries from frame scores"},
      {"evaluate", "Evaluate summaries against annotations"},
      {"run-all", "Run every stage in order"}};
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);

  auto* baseline = app.add_subcommand("baseline", "Random-score baseline over a dataset");
  baseline->add_option("--dataset", o.dataset, "Dataset directory containing dataset.json");
  baseline->add_option("--trials", o.trials, "Random trials")->check(CLI::PositiveNumber);
  baseline->add_flag("--per-frame", o.per_frame, "Draw one random score per frame instead of per fragment");

  auto* por = app.add_subcommand("por", "Precision-over-random heatmap (CSV)");
  por->add_option("--fragments", o.fragments, "Fragment sizes as fractions of the video")->delimiter(',');
  por->add_option("--budgets", o.budgets, "Summary budgets as fractions of the video")->delimiter(',');
  por->add_option("--trials", o.trials, "Random trials per cell")->check(CLI::PositiveNumber);

  auto* ablate = app.add_subcommand("ablate", "Rerun scoring over a sigma/W/normalization grid (CSV)");
  ablate->add_option("--sigmas", o.sigmas, "Consistency weights")->delimiter(',');
  ablate->add_option("--windows", o.windows, "Segment durations in seconds")->delimiter(',');
  ablate->add_option("--norms", o.norms, "Normalizations")->delimiter(',');
  ablate->add_option("--embeddings", o.embeddings, "Embedding path templates with {id}")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return run(cmd, o);
  } catch (const skim::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
