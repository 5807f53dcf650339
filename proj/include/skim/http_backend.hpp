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

// OpenAI-compatible chat-completions client:
//   POST <base_url>/chat/completions   {"model", "messages", "temperature"}
// Images travel as base64 data-URL content parts.

#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "skim/backend.hpp"
#include "skim/error.hpp"

namespace skim {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Network seam. Tests substitute scripted transports; the default one is
/// cpp-httplib.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws on connection-level failure.
  virtual HttpResponse post(const std::string& base_url, const std::string& path,
                            const std::map<std::string, std::string>& headers, const std::string& body,
                            std::chrono::milliseconds timeout) = 0;
};

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& base_url, const std::string& path,
                    const std::map<std::string, std::string>& headers, const std::string& body,
                    std::chrono::milliseconds timeout) override {
    httplib::Client cli(base_url);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = cli.Post(path, h, body, "application/json");
    if (!res) throw BackendError("HTTP transport error: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }
};

/// Splits "https://host:port/v1" into ("https://host:port", "/v1").
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_at == std::string::npos) return {url, ""};
  std::string path = url.substr(path_at);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_at), path};
}

inline bool is_transient_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

class HttpBackend final : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(BackendConfig cfg, std::shared_ptr<HttpTransport> transport = std::make_shared<HttplibTransport>(),
                       Sleeper sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
      : cfg_(std::move(cfg)), transport_(std::move(transport)), sleep_(std::move(sleeper)) {
    cfg_.kind = BackendKind::http;
    cfg_.validate();
  }

  std::string complete(const ChatRequest& req) override {
    for (const auto& m : req.messages) {
      const auto& c = m.at("content");
      if (!c.is_array()) continue;
      for (const auto& part : c) {
        if (part.value("type", "") == "frame_ref") {
          throw BackendError("unencodable frame: frame store has no pixels (frame " + part.at("frame").dump() + ")");
        }
      }
    }

    auto [host, base_path] = split_base_url(cfg_.base_url);
    const std::string path = (base_path.empty() ? std::string("/v1") : base_path) + "/chat/completions";
    std::map<std::string, std::string> headers{{"Accept", "application/json"}};
    if (!cfg_.api_key_env.empty()) {
      if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
        headers["Authorization"] = std::string("Bearer ") + key;
      }
    }
    const std::string body = req.canonical();
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(cfg_.timeout_s * 1000));

    std::string last_error;
    auto delay = std::chrono::milliseconds(static_cast<long long>(cfg_.backoff_initial_s * 1000));
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        sleep_(delay);
        delay *= 2;
      }
      HttpResponse res;
      try {
        res = transport_->post(host, path, headers, body, timeout);
      } catch (const std::exception& e) {
        last_error = e.what();
        continue;
      }
      if (res.status >= 200 && res.status < 300) return extract_content(res.body);
      last_error = "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200);
      if (!is_transient_status(res.status)) break;
    }
    throw BackendError("chat completion failed after retries: " + last_error);
  }

  static std::string extract_content(const std::string& body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      throw BackendError(std::string("malformed completion response: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      throw BackendError("completion response has no choices");
    }
    const auto& msg = j["choices"][0].value("message", json::object());
    const auto& content = msg.contains("content") ? msg["content"] : json();
    std::string text;
    if (content.is_string()) {
      text = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& p : content) {
        if (p.value("type", "") == "text") text += p.value("text", "");
      }
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw BackendError("empty completion response");
    return text;
  }

 private:
  BackendConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleep_;
};

}  // namespace skim
