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

// Stage orchestration. Each stage reads the artifacts of earlier stages from
// <out_dir>/<video id>/ and writes its own:
//
//   detect     -> scenes.json
//   describe   -> descriptions.json
//   judge      -> scene_scores.json
//   score      -> frame_scores.json, frame_final.psem
//   summarize  -> summary.json
//   evaluate   -> eval.json (and <out_dir>/report.json across videos)
//
// With several score columns (one per user query), column k > 0 writes
// frame_scores.q<k>.json, frame_final.q<k>.psem and summary.q<k>.json.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "skim/backend.hpp"
#include "skim/cache.hpp"
#include "skim/config.hpp"
#include "skim/description.hpp"
#include "skim/evaluation.hpp"
#include "skim/fixture.hpp"
#include "skim/http_backend.hpp"
#include "skim/io.hpp"
#include "skim/judging.hpp"
#include "skim/parallel.hpp"
#include "skim/scoring.hpp"
#include "skim/segmentation.hpp"
#include "skim/summarization.hpp"

namespace skim {

namespace artifact {
inline constexpr const char* kScenes = "scenes.json";
inline constexpr const char* kDescriptions = "descriptions.json";
inline constexpr const char* kSceneScores = "scene_scores.json";
inline constexpr const char* kFrameScores = "frame_scores.json";
inline constexpr const char* kFrameFinal = "frame_final.psem";
inline constexpr const char* kSummary = "summary.json";
inline constexpr const char* kEval = "eval.json";
inline constexpr const char* kReport = "report.json";

inline std::string for_column(const std::string& name, std::size_t column) {
  if (column == 0) return name;
  const auto dot = name.rfind('.');
  return name.substr(0, dot) + ".q" + std::to_string(column) + name.substr(dot);
}
}  // namespace artifact

/// Backend chain for one role: fixture or HTTP at the bottom, optionally
/// recording, optionally behind the response cache.
class BackendStack {
 public:
  BackendStack(const BackendConfig& cfg, const PipelineConfig& pc) {
    if (cfg.kind == BackendKind::fixture) {
      if (!pc.fixtures) throw InvariantError("fixture backend needs a fixture file (config \"fixtures\" or --fixtures)");
      base_ = std::make_unique<FixtureBackend>(FixtureStore::load(pc.resolve(*pc.fixtures)), pc.strict_fixtures);
    } else {
      base_ = std::make_unique<HttpBackend>(cfg);
      if (pc.record) {
        if (!pc.fixtures) throw InvariantError("recording needs a fixture file (config \"fixtures\" or --fixtures)");
        recorder_ = std::make_unique<RecordingBackend>(*base_, pc.resolve(*pc.fixtures));
      }
    }
    ChatBackend* top = recorder_ ? static_cast<ChatBackend*>(recorder_.get()) : base_.get();
    if (pc.cache_dir) {
      cache_ = std::make_unique<ResponseCache>(pc.resolve(*pc.cache_dir));
      cached_ = std::make_unique<CachedBackend>(*top, *cache_);
      top = cached_.get();
    }
    top_ = top;
  }

  ChatBackend& top() { return *top_; }

 private:
  std::unique_ptr<ChatBackend> base_;
  std::unique_ptr<RecordingBackend> recorder_;
  std::unique_ptr<ResponseCache> cache_;
  std::unique_ptr<CachedBackend> cached_;
  ChatBackend* top_ = nullptr;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {}

  const PipelineConfig& config() const noexcept { return cfg_; }

  /// Lets callers (tests, the recorder tool) substitute backends.
  void set_backends(ChatBackend* caption, ChatBackend* judge) {
    caption_override_ = caption;
    judge_override_ = judge;
  }

  // ---- stages -----------------------------------------------------------

  SegmentationResult detect(const std::string& id, std::size_t jobs = 1) const {
    const auto& v = cfg_.video(id);
    const auto frames = load_frame_store(cfg_.resolve(v.frames));
    std::optional<EmbeddingMatrix> emb;
    if (cfg_.segmentation.refine) emb = load_embeddings(cfg_.resolve(v.embeddings));
    auto r = segment_video(frames, emb ? &*emb : nullptr, cfg_.segmentation, jobs);
    json j = scenes_to_json(r.refined, id, r.selection.tau_star);
    j["initial"] = detail::intervals_to_json(r.initial.intervals());
    j["scene_counts"] = r.selection.scene_counts;
    j["degenerate_threshold"] = r.selection.degenerate;
    write_json_file(out(id, artifact::kScenes), j);
    return r;
  }

  DescriptionSet describe(const std::string& id, std::size_t jobs = 1) {
    const auto scenes = load_scenes(id);
    const auto frames = load_frame_store(cfg_.resolve(cfg_.video(id).frames));
    LanguageClient captioner(caption_backend(), cfg_.caption.model, cfg_.caption.temperature);
    auto d = describe_all(scenes, frames, captioner, cfg_.description, jobs);
    write_json_file(out(id, artifact::kDescriptions), descriptions_to_json(d));
    return d;
  }

  SceneScores judge(const std::string& id, std::size_t jobs = 1) {
    const auto descs = descriptions_from_json(read_json_file(require(id, artifact::kDescriptions, "describe")));
    LanguageClient judge(judge_backend(), cfg_.judge.model, cfg_.judge.temperature);
    const auto queries = queries_for(id);
    SceneScores s;
    if (queries.empty()) {
      s = score_scenes(descs, std::nullopt, judge, jobs);
    } else {
      s = score_scenes_multi_query(descs, queries, judge, jobs);
    }
    write_json_file(out(id, artifact::kSceneScores), scene_scores_to_json(s));
    return s;
  }

  /// Returns one result per score column.
  std::vector<ScoringResult> score(const std::string& id, std::size_t jobs = 1) const {
    const auto& v = cfg_.video(id);
    const auto scenes = load_scenes(id);
    const auto ss = load_scene_scores(id);
    if (ss.scene_count() != scenes.size()) {
      throw InvariantError(std::string(artifact::kSceneScores) + " has " + std::to_string(ss.scene_count()) +
                           " scenes but " + artifact::kScenes + " has " + std::to_string(scenes.size()) +
                           ": rerun judge");
    }
    const auto emb = load_embeddings(cfg_.resolve(v.embeddings));
    const double fps = video_fps(id);
    ScoringConfig sc = cfg_.scoring;
    sc.weights.seed = cfg_.seed;
    std::vector<ScoringResult> results;
    for (std::size_t col = 0; col < ss.column_count(); ++col) {
      const auto raw = ss.column(col);
      auto r = score_frames(raw, scenes, emb, fps, sc, jobs);
      std::vector<ScoreTrack> tracks{{ScoreStage::scene_raw, raw},
                                     {ScoreStage::scene_norm, r.scene_norm},
                                     {ScoreStage::frame_smoothed, r.smoothed},
                                     {ScoreStage::frame_weight, r.weights.weights},
                                     {ScoreStage::frame_final, r.final_scores}};
      json j = score_tracks_to_json(tracks);
      j["query"] = ss.queries.empty() ? json(nullptr) : json(ss.queries[col]);
      j["sigma"] = r.params.sigma;
      j["window_s"] = r.params.window_s;
      j["k_star"] = r.weights.k_star;
      j["no_elbow_scenes"] = r.weights.no_elbow_scenes;
      write_json_file(out(id, artifact::for_column(artifact::kFrameScores, col)), j);
      save_frame_scores_binary(out(id, artifact::for_column(artifact::kFrameFinal, col)), r.final_scores);
      results.push_back(std::move(r));
    }
    return results;
  }

  std::vector<SummaryMask> summarize(const std::string& id) const {
    const auto scenes = load_scenes(id);
    const auto items = annotations_for(id);
    const std::size_t columns = load_scene_scores(id).column_count();
    std::vector<SummaryMask> masks;
    for (std::size_t col = 0; col < columns; ++col) {
      const auto scores = load_final_scores(id, col);
      const DatasetAnnotations ref = reference_for_column(id, items, col, scores.size());
      auto m = summarize_with(scores, ref, cfg_.summary, &scenes.intervals());
      write_json_file(out(id, artifact::for_column(artifact::kSummary, col)), summary_to_json(m));
      masks.push_back(std::move(m));
    }
    return masks;
  }

  /// Per-item evaluation of one video's summaries.
  std::vector<VideoEval> evaluate(const std::string& id) const {
    const auto items = annotations_for(id);
    if (items.empty()) throw InvariantError("video " + id + " has no annotations to evaluate against");
    const auto scenes = load_scenes(id);
    const auto queries = load_scene_scores(id).queries;
    std::vector<VideoEval> evals;
    for (const auto& a : items) {
      const std::size_t col = column_for(a, queries);
      const auto m = summary_from_json(
          read_json_file(require(id, artifact::for_column(artifact::kSummary, col), "summarize")));
      evals.push_back(eval_video(m, a, cfg_.aggregation, &scenes.intervals()));
    }
    Dataset d;
    d.name = id;
    d.aggregation = cfg_.aggregation;
    d.protocol = cfg_.summary;
    d.items = items;
    write_json_file(out(id, artifact::kEval), eval_report_to_json(assemble_report(d, evals)));
    return evals;
  }

  // ---- whole-config operations ----------------------------------------------

  /// Dataset view of every annotation item in the config.
  Dataset dataset() const {
    Dataset d;
    d.name = cfg_.dataset_name;
    d.aggregation = cfg_.aggregation;
    d.protocol = cfg_.summary;
    for (const auto& v : cfg_.videos) {
      for (auto& a : annotations_for(v.id)) d.items.push_back(std::move(a));
    }
    d.splits = cfg_.splits ? *cfg_.splits : generate_splits(d.ids(), 5, cfg_.seed);
    return d;
  }

  /// Evaluates every video from existing summaries and writes report.json.
  EvalReport report(const std::vector<std::string>& ids, std::size_t jobs = 1) const {
    std::vector<std::vector<VideoEval>> per(ids.size());
    parallel_for(ids.size(), jobs, [&](std::size_t i) { per[i] = evaluate(ids[i]); });
    std::vector<VideoEval> all;
    for (auto& v : per) all.insert(all.end(), v.begin(), v.end());
    Dataset d = dataset_for(ids);
    auto r = assemble_report(d, std::move(all));
    r.seed = cfg_.seed;
    write_json_file(cfg_.resolve(cfg_.out_dir) / artifact::kReport, eval_report_to_json(r));
    return r;
  }

  /// Every stage in order for each video, then the cross-video report.
  /// Videos are processed concurrently; a single video uses `jobs` inside
  /// its stages instead.
  EvalReport run_all(std::size_t jobs = 1) {
    const auto ids = video_ids();
    const std::size_t outer = ids.size() > 1 ? jobs : 1;
    const std::size_t inner = ids.size() > 1 ? 1 : jobs;
    parallel_for(ids.size(), outer, [&](std::size_t i) {
      detect(ids[i], inner);
      describe(ids[i], inner);
      judge(ids[i], inner);
      score(ids[i], inner);
      summarize(ids[i]);
    });
    bool any_annotations = false;
    for (const auto& v : cfg_.videos) any_annotations |= !v.annotations.empty();
    if (!any_annotations) return {};
    return report(ids, outer);
  }

  std::vector<std::string> video_ids() const {
    std::vector<std::string> ids;
    for (const auto& v : cfg_.videos) ids.push_back(v.id);
    return ids;
  }

  // ---- artifact access --------------------------------------------------------

  std::filesystem::path out(const std::string& id, const std::string& name) const {
    return cfg_.video_dir(id) / name;
  }

  std::filesystem::path require(const std::string& id, const std::string& name, const std::string& stage) const {
    auto p = out(id, name);
    if (!std::filesystem::exists(p)) throw MissingArtifactError(p.string(), stage);
    return p;
  }

  SceneSet load_scenes(const std::string& id) const {
    return scenes_from_json(read_json_file(require(id, artifact::kScenes, "detect")));
  }

  SceneScores load_scene_scores(const std::string& id) const {
    return scene_scores_from_json(read_json_file(require(id, artifact::kSceneScores, "judge")));
  }

  std::vector<double> load_final_scores(const std::string& id, std::size_t column) const {
    const auto tracks =
        score_tracks_from_json(read_json_file(require(id, artifact::for_column(artifact::kFrameScores, column), "score")));
    for (const auto& t : tracks) {
      if (t.stage == ScoreStage::frame_final) return t.values;
    }
    throw SchemaError("tracks", "no frame_final track for video " + id);
  }

  std::vector<DatasetAnnotations> annotations_for(const std::string& id) const {
    std::vector<DatasetAnnotations> out;
    for (const auto& p : cfg_.video(id).annotations) out.push_back(load_annotations(cfg_.resolve(p)));
    return out;
  }

  /// Configured queries, or else the distinct queries of the video's
  /// annotation items in order of appearance.
  std::vector<std::string> queries_for(const std::string& id) const {
    if (!cfg_.queries.empty()) return cfg_.queries;
    std::vector<std::string> q;
    for (const auto& a : annotations_for(id)) {
      for (const auto& x : a.queries) {
        if (std::find(q.begin(), q.end(), x.text) == q.end()) q.push_back(x.text);
      }
    }
    return q;
  }

 private:
  ChatBackend& caption_backend() {
    if (caption_override_) return *caption_override_;
    std::lock_guard lock(stack_mu_);
    if (!caption_stack_) caption_stack_ = std::make_unique<BackendStack>(cfg_.caption, cfg_);
    return caption_stack_->top();
  }
  ChatBackend& judge_backend() {
    if (judge_override_) return *judge_override_;
    std::lock_guard lock(stack_mu_);
    if (!judge_stack_) judge_stack_ = std::make_unique<BackendStack>(cfg_.judge, cfg_);
    return judge_stack_->top();
  }

  double video_fps(const std::string& id) const {
    return load_frame_store(cfg_.resolve(cfg_.video(id).frames)).fps().value();
  }

  static std::size_t column_for(const DatasetAnnotations& a, const std::vector<std::string>& queries) {
    if (queries.empty() || a.queries.empty()) return 0;
    for (std::size_t k = 0; k < queries.size(); ++k) {
      if (queries[k] == a.queries[0].text) return k;
    }
    return 0;
  }

  DatasetAnnotations reference_for_column(const std::string& id, const std::vector<DatasetAnnotations>& items,
                                          std::size_t col, std::size_t n_frames) const {
    const auto queries = load_scene_scores(id).queries;
    for (const auto& a : items) {
      if (column_for(a, queries) == col) return a;
    }
    DatasetAnnotations bare;
    bare.video_id = id;
    bare.fps = video_fps(id);
    bare.n_frames = n_frames;
    return bare;
  }

  Dataset dataset_for(const std::vector<std::string>& ids) const {
    Dataset full = dataset();
    if (ids.size() == cfg_.videos.size()) return full;
    Dataset d = full;
    d.items.clear();
    for (const auto& id : ids) {
      for (auto& a : annotations_for(id)) d.items.push_back(std::move(a));
    }
    d.splits = {d.ids()};
    return d;
  }

  PipelineConfig cfg_;
  ChatBackend* caption_override_ = nullptr;
  ChatBackend* judge_override_ = nullptr;
  std::unique_ptr<BackendStack> caption_stack_;
  std::unique_ptr<BackendStack> judge_stack_;
  std::mutex stack_mu_;
};

// ---- Ablation ---------------------------------------------------------------

struct AblationCell {
  double sigma = 0;
  double window_s = 0;
  NormKind norm = NormKind::minmax;
  std::string encoder_tag;
  double f1 = 0;
};

/// An alternative embedding source: a path template in which "{id}" is
/// replaced by the video id. Empty means the configured embeddings.
struct EmbeddingSource {
  std::string path_template;
};

/// Reruns scoring, summarization and evaluation (not description or
/// judging) for every (sigma, W, norm, embeddings) combination.
inline std::vector<AblationCell> ablation_grid(const Pipeline& p, const std::vector<double>& sigmas,
                                               const std::vector<double>& windows, const std::vector<NormKind>& norms,
                                               const std::vector<EmbeddingSource>& sources, std::size_t jobs = 1) {
  const auto& cfg = p.config();
  const auto ids = p.video_ids();
  const Dataset d = p.dataset();
  const std::vector<EmbeddingSource> srcs = sources.empty() ? std::vector<EmbeddingSource>{{}} : sources;

  struct VideoInputs {
    SceneSet scenes;
    std::vector<double> raw;
    double fps = 0;
    std::vector<DatasetAnnotations> items;
    std::vector<EmbeddingMatrix> emb;
  };
  std::vector<VideoInputs> in(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    in[i].scenes = p.load_scenes(ids[i]);
    in[i].raw = p.load_scene_scores(ids[i]).column(0);
    in[i].fps = load_frame_store(cfg.resolve(cfg.video(ids[i]).frames)).fps().value();
    in[i].items = p.annotations_for(ids[i]);
    for (const auto& s : srcs) {
      std::filesystem::path path = cfg.video(ids[i]).embeddings;
      if (!s.path_template.empty()) {
        std::string t = s.path_template;
        for (auto at = t.find("{id}"); at != std::string::npos; at = t.find("{id}")) t.replace(at, 4, ids[i]);
        path = t;
      }
      in[i].emb.push_back(load_embeddings(cfg.resolve(path)));
    }
  }

  std::vector<AblationCell> cells;
  for (std::size_t e = 0; e < srcs.size(); ++e) {
    for (NormKind nk : norms) {
      for (double w : windows) {
        for (double s : sigmas) {
          AblationCell c{s, w, nk, in.empty() ? std::string() : in[0].emb[e].encoder_tag(), 0};
          if (c.encoder_tag.empty()) c.encoder_tag = srcs[e].path_template.empty() ? "default" : srcs[e].path_template;
          cells.push_back(c);
        }
      }
    }
  }

  parallel_for(cells.size(), jobs, [&](std::size_t ci) {
    auto& cell = cells[ci];
    const std::size_t e = ci / (norms.size() * windows.size() * sigmas.size());
    ScoringConfig sc = cfg.scoring;
    sc.sigma = cell.sigma;
    sc.window_s = cell.window_s;
    sc.norm.kind = cell.norm;
    sc.weights.seed = cfg.seed;
    std::vector<VideoEval> evals;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto r = score_frames(in[i].raw, in[i].scenes, in[i].emb[e], in[i].fps, sc, 1);
      for (const auto& a : in[i].items) {
        const auto m = summarize_with(r.final_scores, a, cfg.summary, &in[i].scenes.intervals());
        evals.push_back(eval_video(m, a, cfg.aggregation, &in[i].scenes.intervals()));
      }
    }
    cell.f1 = assemble_report(d, std::move(evals)).grand.f1;
  });
  return cells;
}

inline std::string ablation_to_csv(const std::vector<AblationCell>& cells) {
  std::string s = "sigma,W,norm,encoder_tag,f1\n";
  for (const auto& c : cells) {
    s += fmt_num(c.sigma, 2) + "," + fmt_num(c.window_s, 2) + "," + to_string(c.norm) + "," + c.encoder_tag + "," +
         fmt_num(pct2(c.f1), 2) + "\n";
  }
  return s;
}

}  // namespace skim
