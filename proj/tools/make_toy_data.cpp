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

// Writes the bundled toy video: synthetic grayscale frames with hard cuts,
// clustered embeddings, three users' keyshots, a config, and a fixture file
// recorded by running the pipeline against a scripted captioner and judge.
//
//   make_toy_data <dir>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "skim/pipeline.hpp"

namespace {

constexpr double kFps = 10;
constexpr std::uint16_t kWidth = 16;
constexpr std::uint16_t kHeight = 12;
constexpr std::size_t kDim = 16;

struct ToyScene {
  std::size_t frames;
  int level;
  const char* activity;
  int relevance;
};

const std::vector<ToyScene> kScenes{
    {180, 30, "a man unpacking camping gear next to a lake", 35},
    {120, 105, "the man pitching a tent while the wind pulls at the fabric", 82},
    {200, 180, "a close-up of a campfire being lit with a flint", 90},
    {150, 245, "a wide shot of the empty shoreline at dusk", 18},
    {250, 120, "the man cooking fish over the fire and eating it", 64},
};

std::size_t total_frames() {
  std::size_t n = 0;
  for (const auto& s : kScenes) n += s.frames;
  return n;
}

double gaussian(skim::Rng& rng) {
  const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

skim::FrameStore make_frames(skim::Rng& rng) {
  std::vector<std::uint8_t> px;
  px.reserve(total_frames() * kWidth * kHeight);
  for (const auto& s : kScenes) {
    for (std::size_t t = 0; t < s.frames; ++t) {
      const double drift = 6.0 * std::sin(static_cast<double>(t) / 15.0);
      for (std::size_t y = 0; y < kHeight; ++y) {
        for (std::size_t x = 0; x < kWidth; ++x) {
          const double v = s.level + drift + static_cast<double>(x) - 8.0 + 2.0 * gaussian(rng);
          px.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
        }
      }
    }
  }
  return skim::FrameStore(skim::Fps::from_double(kFps), total_frames(), kHeight, kWidth, std::move(px), std::nullopt);
}

// Each scene has three sub-activities with their own embedding centres.
skim::EmbeddingMatrix make_embeddings(skim::Rng& rng) {
  std::vector<float> data;
  for (std::size_t s = 0; s < kScenes.size(); ++s) {
    std::vector<std::vector<double>> centres(3, std::vector<double>(kDim));
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t d = 0; d < kDim; ++d) {
        centres[c][d] = (d % kScenes.size() == s ? 3.0 : 0.0) + 0.8 * gaussian(rng);
      }
    }
    const std::size_t n = kScenes[s].frames;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t c = t < n / 2 ? 0 : (t < 5 * n / 6 ? 1 : 2);
      for (std::size_t d = 0; d < kDim; ++d) data.push_back(static_cast<float>(centres[c][d] + 0.15 * gaussian(rng)));
    }
  }
  return skim::EmbeddingMatrix(total_frames(), kDim, std::move(data), "toy-encoder");
}

skim::DatasetAnnotations make_annotations(skim::Rng& rng) {
  skim::DatasetAnnotations a;
  a.video_id = "toy";
  a.fps = kFps;
  a.n_frames = total_frames();
  a.kind = skim::AnnotationKind::keyshots;
  std::vector<skim::Interval> segs;
  for (std::size_t s = 0; s < a.n_frames; s += 30) segs.push_back({s, std::min(a.n_frames, s + 30)});
  a.segments = segs;
  // Users favour the fire scenes, each with a little disagreement.
  for (int u = 0; u < 3; ++u) {
    std::vector<skim::Interval> shots;
    std::size_t start = 0;
    for (const auto& s : kScenes) {
      if (s.relevance >= 60) {
        const std::size_t len = 30 + rng.below(20);
        const std::size_t off = rng.below(s.frames - len);
        shots.push_back({start + off, start + off + len});
      }
      start += s.frames;
    }
    a.keyshots.push_back(shots);
  }
  return a;
}

// Answers caption requests by recognising the frames in the request, and
// judge requests by recognising the scene description.
class ScriptedBackend final : public skim::ChatBackend {
 public:
  explicit ScriptedBackend(const skim::FrameStore& frames) {
    std::size_t t = 0;
    for (std::size_t s = 0; s < kScenes.size(); ++s) {
      for (std::size_t k = 0; k < kScenes[s].frames; ++k, ++t) {
        const auto png = skim::encode_png_gray(frames.frame(t), frames.width(), frames.height());
        scene_of_url_["data:image/png;base64," + skim::base64_encode(png)] = s;
      }
    }
  }

  std::string complete(const skim::ChatRequest& req) override {
    const auto& content = req.messages.at(0).at("content");
    if (content.is_array()) return caption(content);
    return judge(content.get<std::string>());
  }

 private:
  std::string caption(const skim::json& parts) const {
    std::vector<std::size_t> seen;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const std::size_t s = scene_of_url_.at(parts[i].at("image_url").at("url").get<std::string>());
      if (seen.empty() || seen.back() != s) seen.push_back(s);
    }
    std::string out = "The video shows " + std::string(kScenes[seen[0]].activity);
    for (std::size_t i = 1; i < seen.size(); ++i) out += ", then " + std::string(kScenes[seen[i]].activity);
    return out + ".";
  }

  static std::string judge(const std::string& prompt) {
    const auto at = prompt.find("Scene Description: ");
    const auto line = prompt.substr(at, prompt.find('\n', at) - at);
    for (const auto& s : kScenes) {
      if (line.find(s.activity) != std::string::npos) {
        return "The scene is " + std::string(s.relevance >= 60 ? "central" : "peripheral") +
               " to the story.\nSCORE: " + std::to_string(s.relevance);
      }
    }
    return "SCORE: 50";
  }

  std::map<std::string, std::size_t> scene_of_url_;
};

skim::json make_config() {
  return {
      {"version", skim::kJsonVersion},
      {"out_dir", "out"},
      {"fixtures", "fixtures.jsonl"},
      {"strict_fixtures", true},
      {"seed", 0},
      {"videos",
       {{{"id", "toy"}, {"frames", "frames.psfr"}, {"embeddings", "embeddings.psem"}, {"annotations", "annotations.json"}}}},
      {"dataset", {{"name", "toy"}, {"aggregation", "max"}}},
      {"caption", {{"kind", "fixture"}, {"model", "toy-captioner"}, {"temperature", 0.5}}},
      {"judge", {{"kind", "fixture"}, {"model", "toy-judge"}, {"temperature", 0.5}}},
      {"segmentation", {{"refine_min_frames", 60}}},
      {"summary", {{"protocol", "keyshot15"}}},
  };
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_toy_data <dir>\n";
    return 2;
  }
  try {
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    skim::Rng rng(20260101);
    const auto frames = make_frames(rng);
    skim::save_frame_store(dir / "frames.psfr", frames);
    skim::save_embeddings(dir / "embeddings.psem", make_embeddings(rng));
    skim::save_annotations(dir / "annotations.json", make_annotations(rng));
    skim::write_json_file(dir / "config.json", make_config());

    std::filesystem::remove(dir / "fixtures.jsonl");
    const auto cfg = skim::load_config(dir / "config.json");
    ScriptedBackend scripted(frames);
    skim::RecordingBackend recorder(scripted, cfg.resolve(*cfg.fixtures));
    skim::Pipeline p(cfg);
    p.set_backends(&recorder, &recorder);
    const auto r = p.run_all(1);
    std::filesystem::remove_all(cfg.resolve(cfg.out_dir));
    std::cout << "toy data written to " << dir.string() << " (grand F1 " << skim::fmt_num(skim::pct2(r.grand.f1), 2)
              << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
