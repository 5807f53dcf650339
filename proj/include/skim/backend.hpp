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

// Chat-completion requests, their digests, and the client facade used by
// the description and judging stages. Concrete transports live in
// fixture.hpp, cache.hpp and http_backend.hpp.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <zlib.h>
#include <json.hpp>

#include "skim/error.hpp"
#include "skim/types.hpp"

namespace skim {

using json = nlohmann::json;

enum class BackendKind { http, fixture };

struct BackendConfig {
  BackendKind kind = BackendKind::fixture;
  std::string base_url;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 120;
  /// Retries after the first attempt (2 => 3 attempts in total).
  int max_retries = 2;
  double backoff_initial_s = 1.0;
  double temperature = 0.5;

  void validate() const {
    if (kind == BackendKind::http && (base_url.empty() || model.empty())) {
      throw InvariantError("BackendConfig: http backends need base_url and model");
    }
    if (!(temperature >= 0 && temperature <= 1)) throw InvariantError("BackendConfig: temperature must be in [0,1]");
    if (max_retries < 0) throw InvariantError("BackendConfig: max_retries must be >= 0");
  }
};

struct ChatMessage {
  std::string role;
  /// Plain string or an array of content parts.
  json content;
};

struct ChatRequest {
  std::string model;
  json messages = json::array();
  double temperature = 0.5;

  /// Sorted keys, no whitespace. Shared by digests and HTTP bodies.
  std::string canonical() const {
    json j;
    j["model"] = model;
    j["messages"] = messages;
    j["temperature"] = temperature;
    return j.dump();
  }
};

inline std::string hex(std::span<const unsigned char> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  return hex(std::span<const unsigned char>(md.data(), len));
}

/// Pure function of (model, messages, temperature); keys both the response
/// cache and the fixture store.
inline std::string request_digest(const ChatRequest& req) { return sha256_hex(req.canonical()); }

/// Anything that turns a chat request into assistant text.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
};

// ---- Frame encoding -----------------------------------------------------

inline std::string base64_encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

namespace detail {

inline void png_chunk(std::string& out, const char* type, std::string_view payload) {
  auto be32 = [&](std::uint32_t v) {
    out.push_back(static_cast<char>(v >> 24));
    out.push_back(static_cast<char>(v >> 16));
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v));
  };
  be32(static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_from = out.size();
  out.append(type, 4);
  out.append(payload);
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data() + crc_from),
                         static_cast<uInt>(out.size() - crc_from));
  be32(static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// 8-bit grayscale PNG, no filtering, zlib level 6.
inline std::string encode_png_gray(std::span<const std::uint8_t> pixels, std::uint32_t width, std::uint32_t height) {
  if (pixels.size() != static_cast<std::size_t>(width) * height || width == 0 || height == 0) {
    throw BackendError("unencodable frame: bad dimensions");
  }
  std::string raw;
  raw.reserve((width + 1) * height);
  for (std::uint32_t y = 0; y < height; ++y) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(pixels.data()) + static_cast<std::size_t>(y) * width, width);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw BackendError("unencodable frame: deflate failed");
  }
  z.resize(zlen);

  std::string ihdr;
  for (std::uint32_t v : {width, height}) {
    for (int s = 24; s >= 0; s -= 8) ihdr.push_back(static_cast<char>(v >> s));
  }
  ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // depth 8, grayscale, deflate, no filter, no interlace

  std::string png("\x89PNG\r\n\x1a\n", 8);
  detail::png_chunk(png, "IHDR", ihdr);
  detail::png_chunk(png, "IDAT", z);
  detail::png_chunk(png, "IEND", {});
  return png;
}

/// Content parts for a caption request: the prompt followed by one image per
/// frame. Frame stores without pixels yield `frame_ref` parts, which replay
/// backends can key on but HTTP backends reject.
inline json caption_content(std::span<const std::size_t> frames, const FrameStore& source, const std::string& prompt) {
  if (frames.empty()) throw BackendError("caption: empty frame list");
  json parts = json::array();
  parts.push_back({{"type", "text"}, {"text", prompt}});
  for (std::size_t t : frames) {
    if (t >= source.count()) throw BackendError("caption: frame index " + std::to_string(t) + " out of range");
    if (source.has_pixels()) {
      const auto png = encode_png_gray(source.frame(t), source.width(), source.height());
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
    } else {
      parts.push_back({{"type", "frame_ref"}, {"frame", t}});
    }
  }
  return parts;
}

/// Role-level facade over a backend: fills in the model tag and default
/// temperature and shapes caption requests.
class LanguageClient {
 public:
  LanguageClient(ChatBackend& backend, std::string model, double temperature = 0.5)
      : backend_(&backend), model_(std::move(model)), temperature_(temperature) {
    if (!(temperature_ >= 0 && temperature_ <= 1)) throw InvariantError("temperature must be in [0,1]");
  }

  const std::string& model() const noexcept { return model_; }
  double temperature() const noexcept { return temperature_; }

  std::string chat(const std::vector<ChatMessage>& messages, std::optional<double> temperature = {}) const {
    ChatRequest req;
    req.model = model_;
    req.temperature = temperature.value_or(temperature_);
    for (const auto& m : messages) req.messages.push_back({{"role", m.role}, {"content", m.content}});
    return complete(req);
  }

  std::string caption(std::span<const std::size_t> frames, const FrameStore& source, const std::string& prompt) const {
    ChatRequest req;
    req.model = model_;
    req.temperature = temperature_;
    req.messages.push_back({{"role", "user"}, {"content", caption_content(frames, source, prompt)}});
    return complete(req);
  }

 private:
  std::string complete(const ChatRequest& req) const {
    std::string out = backend_->complete(req);
    if (out.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw BackendError("empty response for request " + request_digest(req));
    }
    return out;
  }

  ChatBackend* backend_;
  std::string model_;
  double temperature_;
};

}  // namespace skim
