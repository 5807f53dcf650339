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

// Pipeline configuration file. Every tunable constant has a default here;
// relative paths resolve against the config file's directory.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skim/backend.hpp"
#include "skim/description.hpp"
#include "skim/error.hpp"
#include "skim/evaluation.hpp"
#include "skim/io.hpp"
#include "skim/scoring.hpp"
#include "skim/segmentation.hpp"

namespace skim {

struct VideoEntry {
  std::string id;
  std::filesystem::path frames;
  std::filesystem::path embeddings;
  std::vector<std::filesystem::path> annotations;
};

struct PipelineConfig {
  std::filesystem::path base_dir;
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> fixtures;
  bool strict_fixtures = true;
  /// Append live responses to `fixtures` (http backends only).
  bool record = false;
  std::uint64_t seed = 0;
  std::vector<std::string> queries;
  std::vector<VideoEntry> videos;

  std::string dataset_name = "videos";
  Aggregation aggregation = Aggregation::mean;
  std::optional<Splits> splits;

  BackendConfig caption;
  BackendConfig judge;
  SegmentationConfig segmentation;
  DescriptionConfig description;
  ScoringConfig scoring;
  SummaryProtocol summary;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
  std::filesystem::path video_dir(const std::string& id) const { return resolve(out_dir) / id; }

  const VideoEntry& video(const std::string& id) const {
    for (const auto& v : videos) {
      if (v.id == id) return v;
    }
    throw InvariantError("config has no video '" + id + "'");
  }
};

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& path) {
  if (j.contains(key) && !j[key].is_null()) out = get_as<T>(j[key], path.empty() ? key : path + "." + key);
}

inline BackendKind backend_kind_from_string(const std::string& s, const std::string& path) {
  if (s == "http") return BackendKind::http;
  if (s == "fixture") return BackendKind::fixture;
  throw SchemaError(path + ".kind", "expected \"http\" or \"fixture\"");
}

inline BackendConfig backend_from_json(const json& j, const std::string& path) {
  BackendConfig b;
  if (!j.is_object()) throw SchemaError(path, "must be an object");
  if (j.contains("kind")) b.kind = backend_kind_from_string(get_as<std::string>(j["kind"], path + ".kind"), path);
  read_opt(j, "base_url", b.base_url, path);
  read_opt(j, "model", b.model, path);
  read_opt(j, "api_key_env", b.api_key_env, path);
  read_opt(j, "timeout_s", b.timeout_s, path);
  read_opt(j, "max_retries", b.max_retries, path);
  read_opt(j, "backoff_initial_s", b.backoff_initial_s, path);
  read_opt(j, "temperature", b.temperature, path);
  try {
    b.validate();
  } catch (const InvariantError& e) {
    throw SchemaError(path, e.what());
  }
  return b;
}

inline SegmentValue segment_value_from_string(const std::string& s) {
  if (s == "mass") return SegmentValue::mass;
  if (s == "mean") return SegmentValue::mean;
  throw SchemaError("summary.segment_value", "expected \"mass\" or \"mean\"");
}

}  // namespace detail

inline PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  using detail::get_as;
  using detail::read_opt;
  detail::check_version(j, "config");
  PipelineConfig c;
  c.base_dir = base_dir;
  if (j.contains("out_dir")) c.out_dir = get_as<std::string>(j["out_dir"], "out_dir");
  if (j.contains("cache_dir") && !j["cache_dir"].is_null()) c.cache_dir = get_as<std::string>(j["cache_dir"], "cache_dir");
  if (j.contains("fixtures") && !j["fixtures"].is_null()) c.fixtures = get_as<std::string>(j["fixtures"], "fixtures");
  read_opt(j, "strict_fixtures", c.strict_fixtures, "");
  read_opt(j, "seed", c.seed, "");
  read_opt(j, "queries", c.queries, "");

  if (j.contains("videos")) {
    const auto& vs = j["videos"];
    if (!vs.is_array()) throw SchemaError("videos", "must be an array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string p = "videos[" + std::to_string(i) + "]";
      VideoEntry v;
      v.id = get_as<std::string>(detail::field(vs[i], "id", p), p + ".id");
      v.frames = get_as<std::string>(detail::field(vs[i], "frames", p), p + ".frames");
      v.embeddings = get_as<std::string>(detail::field(vs[i], "embeddings", p), p + ".embeddings");
      if (vs[i].contains("annotations")) {
        const auto& a = vs[i]["annotations"];
        if (a.is_string()) {
          v.annotations.push_back(a.get<std::string>());
        } else {
          for (const auto& s : get_as<std::vector<std::string>>(a, p + ".annotations")) v.annotations.push_back(s);
        }
      }
      for (const auto& prev : c.videos) {
        if (prev.id == v.id) throw SchemaError(p + ".id", "duplicate video id " + v.id);
      }
      c.videos.push_back(std::move(v));
    }
  }

  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    read_opt(d, "name", c.dataset_name, "dataset");
    if (d.contains("aggregation")) {
      c.aggregation = aggregation_from_string(get_as<std::string>(d["aggregation"], "dataset.aggregation"));
    }
    if (d.contains("splits") && !d["splits"].is_null()) c.splits = splits_from_json(d["splits"]);
  }

  if (j.contains("caption")) c.caption = detail::backend_from_json(j["caption"], "caption");
  if (j.contains("judge")) c.judge = detail::backend_from_json(j["judge"], "judge");

  if (j.contains("segmentation")) {
    const auto& s = j["segmentation"];
    read_opt(s, "tau_min", c.segmentation.grid.tau_min, "segmentation");
    read_opt(s, "tau_max", c.segmentation.grid.tau_max, "segmentation");
    read_opt(s, "tau_step", c.segmentation.grid.step, "segmentation");
    read_opt(s, "min_scene_seconds", c.segmentation.min_scene_seconds, "segmentation");
    read_opt(s, "refine_min_frames", c.segmentation.refine_min_frames, "segmentation");
    read_opt(s, "refine", c.segmentation.refine, "segmentation");
  }
  if (j.contains("description")) {
    const auto& s = j["description"];
    read_opt(s, "prompt", c.description.prompt, "description");
    read_opt(s, "sample_rate_fps", c.description.sample_rate_fps, "description");
    read_opt(s, "batch_size", c.description.batch_size, "description");
  }
  if (j.contains("scoring")) {
    const auto& s = j["scoring"];
    if (s.contains("norm")) c.scoring.norm.kind = norm_kind_from_string(get_as<std::string>(s["norm"], "scoring.norm"));
    read_opt(s, "beta", c.scoring.norm.beta, "scoring");
    if (s.contains("sigma") && !s["sigma"].is_null()) c.scoring.sigma = get_as<double>(s["sigma"], "scoring.sigma");
    if (s.contains("window_s") && !s["window_s"].is_null()) {
      c.scoring.window_s = get_as<double>(s["window_s"], "scoring.window_s");
    }
    read_opt(s, "short_threshold_s", c.scoring.short_threshold_s, "scoring");
    read_opt(s, "k_min", c.scoring.weights.cluster.k_min, "scoring");
    read_opt(s, "k_max", c.scoring.weights.cluster.k_max, "scoring");
    read_opt(s, "delta_k", c.scoring.weights.cluster.delta_k, "scoring");
    read_opt(s, "restarts", c.scoring.weights.kmeans.restarts, "scoring");
    read_opt(s, "max_iter", c.scoring.weights.kmeans.max_iter, "scoring");
    read_opt(s, "rescale", c.scoring.weights.rescale, "scoring");
  }
  if (j.contains("summary")) {
    const auto& s = j["summary"];
    if (s.contains("protocol")) {
      c.summary.protocol = protocol_from_string(get_as<std::string>(s["protocol"], "summary.protocol"));
    }
    read_opt(s, "keyshot_budget", c.summary.keyshot_budget, "summary");
    read_opt(s, "fragment_fraction", c.summary.fragment_fraction, "summary");
    read_opt(s, "uniform_budget", c.summary.uniform_budget, "summary");
    read_opt(s, "shot_seconds", c.summary.shot_seconds, "summary");
    if (s.contains("segment_value")) {
      c.summary.segment_value = detail::segment_value_from_string(get_as<std::string>(s["segment_value"], "summary"));
    }
  }

  try {
    c.segmentation.grid.validate();
    c.scoring.norm.validate();
    c.scoring.weights.cluster.validate();
    if (c.description.batch_size == 0) throw InvariantError("description.batch_size must be >= 1");
  } catch (const InvariantError& e) {
    throw SchemaError("config", e.what());
  }
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path), std::filesystem::absolute(path).parent_path());
}

}  // namespace skim
