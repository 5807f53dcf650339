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

// On-disk formats.
//
// PSFR (frames), all integers and floats little-endian:
//   "PSFR" u32 version=1 u32 count u16 height u16 width u8 flags
//   u32 fps_num u32 fps_den
//   [pixels: count*height*width u8]      if flags bit0
//   [diffs:  (count-1) f64]              if flags bit1
//
// PSEM (embeddings, also used for per-frame score tracks with dim=1):
//   "PSEM" u32 version=1 u32 count u32 dim  count*dim f32
//   [u32 tag_len, tag_len bytes of UTF-8 encoder tag]   optional trailer
//
// Everything else is versioned UTF-8 JSON.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skim/error.hpp"
#include "skim/types.hpp"

namespace skim {

using json = nlohmann::json;

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kJsonVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  void raw(std::string_view s) { buf_.append(s); }
  template <typename T>
  void le(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    buf_.append(b.data(), b.size());
  }
  std::string& str() { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  std::string_view raw(std::size_t n, bool header) {
    need(n, header);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T le(bool header) {
    auto s = raw(sizeof(T), header);
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), s.data(), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
  }

 private:
  void need(std::size_t n, bool header) const {
    if (remaining() < n) {
      if (header) throw MalformedHeaderError(what_ + ": header ends early at byte " + std::to_string(pos_));
      throw TruncatedPayloadError(what_ + ": payload truncated at byte " + std::to_string(pos_) + " (needed " +
                                  std::to_string(n) + " more bytes, have " + std::to_string(remaining()) + ")");
    }
  }
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline void check_magic_version(ByteReader& r, std::string_view magic, const std::string& what) {
  auto m = r.raw(4, true);
  if (m != magic) throw BadMagicError(what + ": bad magic (expected " + std::string(magic) + ")");
  const auto version = r.le<std::uint32_t>(true);
  if (version != kFormatVersion) {
    throw VersionMismatchError(what + ": unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kFormatVersion) + ")");
  }
}

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

/// Writes to a sibling temp file, then renames over the target, so readers
/// never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::atomic<std::uint64_t> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1)) + "." + std::to_string(std::hash<std::string>{}(path.string()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---- FrameStore ---------------------------------------------------------

inline std::string encode_frame_store(const FrameStore& fs) {
  detail::ByteWriter w;
  w.raw("PSFR");
  w.le<std::uint32_t>(kFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(fs.count()));
  w.le<std::uint16_t>(fs.height());
  w.le<std::uint16_t>(fs.width());
  w.le<std::uint8_t>(static_cast<std::uint8_t>((fs.has_pixels() ? 1 : 0) | (fs.has_diffs() ? 2 : 0)));
  w.le<std::uint32_t>(fs.fps().num);
  w.le<std::uint32_t>(fs.fps().den);
  if (fs.has_pixels()) {
    auto px = fs.pixels();
    w.raw(std::string_view(reinterpret_cast<const char*>(px.data()), px.size()));
  }
  if (fs.has_diffs()) {
    for (double d : fs.diffs()) w.le<double>(d);
  }
  return std::move(w.str());
}

inline FrameStore decode_frame_store(std::string_view bytes, const std::string& what = "PSFR") {
  detail::ByteReader r(bytes, what);
  detail::check_magic_version(r, "PSFR", what);
  const auto count = r.le<std::uint32_t>(true);
  const auto h = r.le<std::uint16_t>(true);
  const auto w = r.le<std::uint16_t>(true);
  const auto flags = r.le<std::uint8_t>(true);
  const auto fps_num = r.le<std::uint32_t>(true);
  const auto fps_den = r.le<std::uint32_t>(true);
  if (flags & ~0x3u) throw MalformedHeaderError(what + ": unknown flag bits");
  if (!(flags & 0x3u)) throw MalformedHeaderError(what + ": neither pixels nor diffs present");
  if (fps_num == 0 || fps_den == 0) throw MalformedHeaderError(what + ": fps must be positive");

  std::optional<std::vector<std::uint8_t>> pixels;
  std::optional<std::vector<double>> diffs;
  if (flags & 1u) {
    const std::size_t n = static_cast<std::size_t>(count) * h * w;
    auto s = r.raw(n, false);
    pixels.emplace(s.begin(), s.end());
  }
  if (flags & 2u) {
    const std::size_t n = count == 0 ? 0 : count - 1;
    diffs.emplace();
    diffs->reserve(n);
    for (std::size_t i = 0; i < n; ++i) diffs->push_back(r.le<double>(false));
  }
  if (r.remaining() != 0) {
    throw InvariantError(what + ": " + std::to_string(r.remaining()) +
                         " trailing bytes (diff series longer than count-1?)");
  }
  return FrameStore(Fps{fps_num, fps_den}, count, h, w, std::move(pixels), std::move(diffs));
}

inline FrameStore load_frame_store(const std::filesystem::path& path) {
  return decode_frame_store(read_file(path), path.string());
}
inline void save_frame_store(const std::filesystem::path& path, const FrameStore& fs) {
  write_file_atomic(path, encode_frame_store(fs));
}

// ---- EmbeddingMatrix ----------------------------------------------------

inline std::string encode_embeddings(const EmbeddingMatrix& m) {
  detail::ByteWriter w;
  w.raw("PSEM");
  w.le<std::uint32_t>(kFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(m.count()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(m.dim()));
  for (float v : m.data()) w.le<float>(v);
  if (!m.encoder_tag().empty()) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(m.encoder_tag().size()));
    w.raw(m.encoder_tag());
  }
  return std::move(w.str());
}

inline EmbeddingMatrix decode_embeddings(std::string_view bytes, const std::string& what = "PSEM") {
  detail::ByteReader r(bytes, what);
  detail::check_magic_version(r, "PSEM", what);
  const auto count = r.le<std::uint32_t>(true);
  const auto dim = r.le<std::uint32_t>(true);
  std::vector<float> data;
  const std::size_t n = static_cast<std::size_t>(count) * dim;
  if (r.remaining() < n * sizeof(float)) {
    throw TruncatedPayloadError(what + ": payload truncated (need " + std::to_string(n * sizeof(float)) +
                                " bytes, have " + std::to_string(r.remaining()) + ")");
  }
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) data.push_back(r.le<float>(false));
  std::string tag;
  if (r.remaining() > 0) {
    const auto len = r.le<std::uint32_t>(false);
    auto s = r.raw(len, false);
    tag.assign(s);
    if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after encoder tag");
  }
  return EmbeddingMatrix(count, dim, std::move(data), std::move(tag));
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file(path), path.string());
}
inline void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  write_file_atomic(path, encode_embeddings(m));
}

/// Per-frame score vector stored as a dim=1 PSEM.
inline void save_frame_scores_binary(const std::filesystem::path& path, const std::vector<double>& v,
                                     std::string tag = "frame_final") {
  std::vector<float> f(v.begin(), v.end());
  save_embeddings(path, EmbeddingMatrix(v.size(), 1, std::move(f), std::move(tag)));
}
inline std::vector<double> load_frame_scores_binary(const std::filesystem::path& path) {
  auto m = load_embeddings(path);
  if (m.dim() != 1) throw FormatError(path.string() + ": expected dim=1 score track");
  return {m.data().begin(), m.data().end()};
}

// ---- JSON helpers -------------------------------------------------------

inline json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& path = {}) {
  const std::string name = path.empty() ? key : path + "." + key;
  if (!j.is_object() || !j.contains(key)) throw SchemaError(name, "required field missing");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& name) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(name, std::string("wrong type: ") + e.what());
  }
}

inline void check_version(const json& j, const std::string& what) {
  const auto v = get_as<std::uint32_t>(field(j, "version"), "version");
  if (v != kJsonVersion) {
    throw SchemaError("version", what + " version " + std::to_string(v) + " not supported");
  }
}

inline json intervals_to_json(const std::vector<Interval>& ivs) {
  json a = json::array();
  for (const auto& iv : ivs) a.push_back({iv.start, iv.end});
  return a;
}

inline std::vector<Interval> intervals_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw SchemaError(name, "expected an array of [start,end) pairs");
  std::vector<Interval> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& p = j[i];
    const std::string n = name + "[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() != 2) throw SchemaError(n, "expected [start, end]");
    out.push_back({get_as<std::size_t>(p[0], n), get_as<std::size_t>(p[1], n)});
  }
  return out;
}

}  // namespace detail

// ---- DatasetAnnotations -------------------------------------------------

inline json annotations_to_json(const DatasetAnnotations& a) {
  json j;
  j["version"] = kJsonVersion;
  j["video_id"] = a.video_id;
  j["fps"] = a.fps;
  j["n_frames"] = a.n_frames;
  j["kind"] = a.kind == AnnotationKind::keyshots ? "keyshots" : "frame_scores";
  json users = json::array();
  if (a.kind == AnnotationKind::keyshots) {
    for (const auto& u : a.keyshots) users.push_back(detail::intervals_to_json(u));
  } else {
    j["score_range"] = {a.score_min, a.score_max};
    for (const auto& u : a.scores) users.push_back(u);
  }
  j["users"] = std::move(users);
  if (a.segments) j["segments"] = detail::intervals_to_json(*a.segments);
  if (a.oracle_budget_frames) j["oracle_budget_frames"] = *a.oracle_budget_frames;
  if (!a.queries.empty()) {
    json q = json::array();
    for (const auto& x : a.queries) q.push_back({{"text", x.text}, {"class", x.cls}});
    j["queries"] = std::move(q);
  }
  return j;
}

inline DatasetAnnotations annotations_from_json(const json& j) {
  using detail::field;
  using detail::get_as;
  detail::check_version(j, "annotations");
  DatasetAnnotations a;
  a.video_id = get_as<std::string>(field(j, "video_id"), "video_id");
  a.fps = get_as<double>(field(j, "fps"), "fps");
  a.n_frames = get_as<std::size_t>(field(j, "n_frames"), "n_frames");
  const auto kind = get_as<std::string>(field(j, "kind"), "kind");
  if (kind == "keyshots") {
    a.kind = AnnotationKind::keyshots;
  } else if (kind == "frame_scores") {
    a.kind = AnnotationKind::frame_scores;
  } else {
    throw SchemaError("kind", "must be \"keyshots\" or \"frame_scores\"");
  }
  const auto& users = field(j, "users");
  if (!users.is_array()) throw SchemaError("users", "expected an array");
  for (std::size_t u = 0; u < users.size(); ++u) {
    const std::string name = "users[" + std::to_string(u) + "]";
    if (a.kind == AnnotationKind::keyshots) {
      a.keyshots.push_back(detail::intervals_from_json(users[u], name));
    } else {
      a.scores.push_back(get_as<std::vector<double>>(users[u], name));
    }
  }
  if (j.contains("score_range")) {
    auto r = get_as<std::vector<double>>(j["score_range"], "score_range");
    if (r.size() != 2) throw SchemaError("score_range", "expected [min, max]");
    a.score_min = r[0];
    a.score_max = r[1];
  }
  if (j.contains("segments")) a.segments = detail::intervals_from_json(j["segments"], "segments");
  if (j.contains("oracle_budget_frames")) {
    a.oracle_budget_frames = get_as<std::size_t>(j["oracle_budget_frames"], "oracle_budget_frames");
  }
  if (j.contains("queries")) {
    const auto& qs = j["queries"];
    if (!qs.is_array()) throw SchemaError("queries", "expected an array");
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const std::string name = "queries[" + std::to_string(i) + "]";
      Query q;
      q.text = get_as<std::string>(field(qs[i], "text", name), name + ".text");
      if (qs[i].contains("class")) q.cls = get_as<std::string>(qs[i]["class"], name + ".class");
      a.queries.push_back(std::move(q));
    }
  }
  a.validate();
  return a;
}

inline DatasetAnnotations load_annotations(const std::filesystem::path& path) {
  return annotations_from_json(read_json_file(path));
}
inline void save_annotations(const std::filesystem::path& path, const DatasetAnnotations& a) {
  a.validate();
  write_json_file(path, annotations_to_json(a));
}

// ---- SceneSet -----------------------------------------------------------

inline json scenes_to_json(const SceneSet& s, const std::string& video_id, std::optional<double> tau_star) {
  json j;
  j["version"] = kJsonVersion;
  j["video_id"] = video_id;
  j["boundaries"] = detail::intervals_to_json(s.intervals());
  j["tau_star"] = tau_star ? json(*tau_star) : json(nullptr);
  return j;
}

inline SceneSet scenes_from_json(const json& j) {
  detail::check_version(j, "scene set");
  auto ivs = detail::intervals_from_json(detail::field(j, "boundaries"), "boundaries");
  try {
    return SceneSet(std::move(ivs));
  } catch (const InvariantError& e) {
    throw SchemaError("boundaries", e.what());
  }
}

// ---- ScoreTrack ---------------------------------------------------------

inline json score_tracks_to_json(const std::vector<ScoreTrack>& tracks) {
  json j;
  j["version"] = kJsonVersion;
  json arr = json::array();
  for (const auto& t : tracks) arr.push_back({{"stage", to_string(t.stage)}, {"values", t.values}});
  j["tracks"] = std::move(arr);
  return j;
}

inline std::vector<ScoreTrack> score_tracks_from_json(const json& j) {
  detail::check_version(j, "score tracks");
  std::vector<ScoreTrack> out;
  const auto& arr = detail::field(j, "tracks");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string name = "tracks[" + std::to_string(i) + "]";
    const auto stage = detail::get_as<std::string>(detail::field(arr[i], "stage", name), name + ".stage");
    ScoreStage st;
    if (stage == "scene_raw") st = ScoreStage::scene_raw;
    else if (stage == "scene_norm") st = ScoreStage::scene_norm;
    else if (stage == "frame_smoothed") st = ScoreStage::frame_smoothed;
    else if (stage == "frame_weight") st = ScoreStage::frame_weight;
    else if (stage == "frame_final") st = ScoreStage::frame_final;
    else throw SchemaError(name + ".stage", "unknown stage " + stage);
    try {
      out.emplace_back(st, detail::get_as<std::vector<double>>(detail::field(arr[i], "values", name), name));
    } catch (const InvariantError& e) {
      throw SchemaError(name, e.what());
    }
  }
  return out;
}

// ---- SummaryMask --------------------------------------------------------

inline json summary_to_json(const SummaryMask& m) {
  json j;
  j["version"] = kJsonVersion;
  j["protocol"] = to_string(m.protocol);
  j["budget_frames"] = m.budget_frames;
  j["n_frames"] = m.selected.size();
  j["intervals"] = detail::intervals_to_json(m.intervals());
  return j;
}

inline SummaryMask summary_from_json(const json& j) {
  using detail::field;
  using detail::get_as;
  detail::check_version(j, "summary");
  SummaryMask m;
  const auto p = get_as<std::string>(field(j, "protocol"), "protocol");
  if (p == "keyshot15") m.protocol = Protocol::keyshot15;
  else if (p == "qfvs_shots") m.protocol = Protocol::qfvs_shots;
  else if (p == "uniform_frag") m.protocol = Protocol::uniform_frag;
  else throw SchemaError("protocol", "unknown protocol " + p);
  m.budget_frames = get_as<std::size_t>(field(j, "budget_frames"), "budget_frames");
  const auto n = get_as<std::size_t>(field(j, "n_frames"), "n_frames");
  const auto ivs = detail::intervals_from_json(field(j, "intervals"), "intervals");
  for (const auto& iv : ivs) {
    if (iv.end > n || iv.end <= iv.start) throw SchemaError("intervals", "interval outside [0, n_frames)");
  }
  m.selected = mask_from_intervals(ivs, n);
  if (m.selected_count() > m.budget_frames) throw SchemaError("intervals", "selection exceeds budget_frames");
  return m;
}

}  // namespace skim
