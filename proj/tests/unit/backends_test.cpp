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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include "skim/cache.hpp"
#include "skim/fixture.hpp"
#include "skim/http_backend.hpp"
#include "skim/parallel.hpp"
#include "unit/helpers.hpp"

namespace skim {
namespace {

using test::FnBackend;
using test::TempDir;

ChatRequest request(const std::string& text, double temperature = 0.5) {
  ChatRequest r;
  r.model = "m";
  r.temperature = temperature;
  r.messages.push_back({{"role", "user"}, {"content", text}});
  return r;
}

TEST(RequestDigest, CanonicalAndSensitive) {
  EXPECT_EQ(request_digest(request("a")), request_digest(request("a")));
  EXPECT_NE(request_digest(request("a")), request_digest(request("b")));
  EXPECT_NE(request_digest(request("a", 0.5)), request_digest(request("a", 0.0)));
  EXPECT_EQ(request_digest(request("a")).size(), 64u);
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Fixture, HitReturnsRecordedTextVerbatim) {
  TempDir dir;
  std::ofstream(dir / "f.jsonl") << FixtureStore::to_line(request_digest(request("q")), "  SCORE: 42\n");
  FixtureBackend b(FixtureStore::load(dir / "f.jsonl"));
  EXPECT_EQ(b.complete(request("q")), "  SCORE: 42\n");
}

TEST(Fixture, StrictMissCarriesDigest) {
  FixtureBackend b(FixtureStore{}, true);
  try {
    b.complete(request("q"));
    FAIL();
  } catch (const FixtureMissError& e) {
    EXPECT_EQ(e.digest(), request_digest(request("q")));
  }
  FixtureBackend lenient(FixtureStore{}, false);
  EXPECT_EQ(lenient.complete(request("q")), "SCORE: 50");
}

TEST(Fixture, CorruptedLineReportsLineNumber) {
  TempDir dir;
  std::ofstream(dir / "f.jsonl") << FixtureStore::to_line("aa", "x") << "\n" << "{not json\n";
  try {
    FixtureStore::load(dir / "f.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("f.jsonl:3"), std::string::npos) << e.what();
  }
}

TEST(Fixture, ConflictingDuplicateIsAnError) {
  TempDir dir;
  std::ofstream(dir / "f.jsonl") << FixtureStore::to_line("aa", "x") << FixtureStore::to_line("aa", "y");
  EXPECT_THROW(FixtureStore::load(dir / "f.jsonl"), Error);
}

TEST(Fixture, MissingFileIsEmptyStore) {
  TempDir dir;
  EXPECT_EQ(FixtureStore::load(dir / "none.jsonl").size(), 0u);
}

TEST(Recording, ReplayIsIdentical) {
  TempDir dir;
  FnBackend live([](const ChatRequest& r) { return "reply to " + test::prompt_of(r); });
  {
    RecordingBackend rec(live, dir / "f.jsonl");
    EXPECT_EQ(rec.complete(request("one")), "reply to one");
    EXPECT_EQ(rec.complete(request("two")), "reply to two");
    EXPECT_EQ(rec.complete(request("one")), "reply to one");
  }
  EXPECT_EQ(live.calls, 2);
  FixtureBackend replay(FixtureStore::load(dir / "f.jsonl"));
  EXPECT_EQ(replay.complete(request("one")), "reply to one");
  EXPECT_EQ(replay.complete(request("two")), "reply to two");

  // A second recording session over the same requests appends nothing.
  const auto before = read_file(dir / "f.jsonl");
  RecordingBackend again(live, dir / "f.jsonl");
  again.complete(request("two"));
  EXPECT_EQ(read_file(dir / "f.jsonl"), before);
}

TEST(Cache, TwoIdenticalRequestsOneUpstreamCall) {
  TempDir dir;
  FnBackend up([](const ChatRequest&) { return "r"; });
  ResponseCache cache(dir.path());
  CachedBackend b(up, cache);
  EXPECT_EQ(b.complete(request("x")), "r");
  EXPECT_EQ(b.complete(request("x")), "r");
  EXPECT_EQ(up.calls, 1);
  EXPECT_TRUE(std::filesystem::exists(cache.path_for(request_digest(request("x")))));
}

TEST(Cache, ConcurrentIdenticalRequestsCoalesce) {
  TempDir dir;
  FnBackend up([](const ChatRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    return "slow";
  });
  ResponseCache cache(dir.path());
  CachedBackend b(up, cache);
  std::vector<std::string> out(8);
  parallel_for(8, 8, [&](std::size_t i) { out[i] = b.complete(request("same")); });
  EXPECT_EQ(up.calls, 1);
  for (const auto& s : out) EXPECT_EQ(s, "slow");
}

TEST(Cache, UpstreamErrorsAreNotCached) {
  TempDir dir;
  int n = 0;
  FnBackend up([&](const ChatRequest&) -> std::string {
    if (n++ == 0) throw BackendError("transient");
    return "ok";
  });
  ResponseCache cache(dir.path());
  CachedBackend b(up, cache);
  EXPECT_THROW(b.complete(request("x")), BackendError);
  EXPECT_EQ(b.complete(request("x")), "ok");
}

class ScriptedTransport final : public HttpTransport {
 public:
  std::vector<HttpResponse> replies;
  std::vector<std::map<std::string, std::string>> headers;
  std::vector<std::string> paths;
  std::vector<std::string> bodies;

  HttpResponse post(const std::string& base, const std::string& path, const std::map<std::string, std::string>& h,
                    const std::string& body, std::chrono::milliseconds) override {
    paths.push_back(base + path);
    headers.push_back(h);
    bodies.push_back(body);
    if (replies.empty()) throw BackendError("connection refused");
    auto r = replies.front();
    replies.erase(replies.begin());
    return r;
  }
};

std::string completion(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

BackendConfig http_config() {
  BackendConfig c;
  c.kind = BackendKind::http;
  c.base_url = "http://127.0.0.1:1/v1";
  c.model = "m";
  c.api_key_env = "SKIM_TEST_KEY";
  c.max_retries = 2;
  c.backoff_initial_s = 0.5;
  return c;
}

TEST(Http, RetriesTransientFailuresWithDoublingBackoff) {
  auto t = std::make_shared<ScriptedTransport>();
  t->replies = {{503, "busy"}, {429, "slow down"}, {200, completion("SCORE: 9")}};
  std::vector<long long> sleeps;
  HttpBackend b(http_config(), t, [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  EXPECT_EQ(b.complete(request("x")), "SCORE: 9");
  EXPECT_EQ(sleeps, (std::vector<long long>{500, 1000}));
  EXPECT_EQ(t->paths.front(), "http://127.0.0.1:1/v1/chat/completions");
  EXPECT_EQ(t->bodies.front(), request("x").canonical());
}

TEST(Http, GivesUpAfterRetriesAndOnClientErrors) {
  auto t = std::make_shared<ScriptedTransport>();
  t->replies = {{500, ""}, {500, ""}, {500, ""}, {200, completion("late")}};
  HttpBackend b(http_config(), t, [](auto) {});
  EXPECT_THROW(b.complete(request("x")), BackendError);
  EXPECT_EQ(t->paths.size(), 3u);

  auto u = std::make_shared<ScriptedTransport>();
  u->replies = {{400, "bad request"}, {200, completion("never")}};
  HttpBackend c(http_config(), u, [](auto) {});
  try {
    c.complete(request("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("HTTP 400"), std::string::npos);
  }
  EXPECT_EQ(u->paths.size(), 1u);
}

TEST(Http, ConnectionErrorsAreRetried) {
  auto t = std::make_shared<ScriptedTransport>();
  HttpBackend b(http_config(), t, [](auto) {});
  EXPECT_THROW(b.complete(request("x")), BackendError);
  EXPECT_EQ(t->paths.size(), 3u);
}

TEST(Http, BearerTokenFromEnvironment) {
  ::setenv("SKIM_TEST_KEY", "sekret", 1);
  auto t = std::make_shared<ScriptedTransport>();
  t->replies = {{200, completion("ok")}};
  HttpBackend b(http_config(), t, [](auto) {});
  b.complete(request("x"));
  EXPECT_EQ(t->headers.front().at("Authorization"), "Bearer sekret");
  ::unsetenv("SKIM_TEST_KEY");
}

TEST(Http, ResponseExtraction) {
  EXPECT_EQ(HttpBackend::extract_content(completion("hi")), "hi");
  const auto parts = json{{"choices", {{{"message", {{"content", {{{"type", "text"}, {"text", "a"}},
                                                                    {{"type", "text"}, {"text", "b"}}}}}}}}}};
  EXPECT_EQ(HttpBackend::extract_content(parts.dump()), "ab");
  EXPECT_THROW(HttpBackend::extract_content("{"), BackendError);
  EXPECT_THROW(HttpBackend::extract_content(R"({"choices": []})"), BackendError);
  EXPECT_THROW(HttpBackend::extract_content(completion("   ")), BackendError);
}

TEST(Http, RejectsFrameRefsAndBadConfig) {
  auto t = std::make_shared<ScriptedTransport>();
  HttpBackend b(http_config(), t, [](auto) {});
  ChatRequest r = request("x");
  r.messages[0]["content"] = json::array({{{"type", "text"}, {"text", "p"}}, {{"type", "frame_ref"}, {"frame", 3}}});
  EXPECT_THROW(b.complete(r), BackendError);
  EXPECT_TRUE(t->paths.empty());
  auto c = http_config();
  c.model.clear();
  EXPECT_THROW(HttpBackend(c, t), InvariantError);
}

TEST(Http, SplitBaseUrl) {
  EXPECT_EQ(split_base_url("https://api.example.com/v1/"), (std::pair<std::string, std::string>{"https://api.example.com", "/v1"}));
  EXPECT_EQ(split_base_url("http://localhost:8000"), (std::pair<std::string, std::string>{"http://localhost:8000", ""}));
}

TEST(Http, RealLoopbackServer) {
  httplib::Server srv;
  std::atomic<int> hits{0};
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    const auto body = json::parse(req.body);
    res.set_content(completion("echo " + body["messages"][0]["content"].get<std::string>()), "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  if (port <= 0) GTEST_SKIP() << "loopback bind unavailable";
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  auto cfg = http_config();
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.timeout_s = 5;
  HttpBackend b(cfg);
  EXPECT_EQ(b.complete(request("ping")), "echo ping");
  srv.stop();
  th.join();
  EXPECT_EQ(hits, 1);
}

TEST(Png, HeaderAndLengths) {
  const std::vector<std::uint8_t> px{0, 128, 255, 64};
  const auto png = encode_png_gray(px, 2, 2);
  EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  EXPECT_NE(png.find("IHDR"), std::string::npos);
  EXPECT_NE(png.find("IDAT"), std::string::npos);
  EXPECT_EQ(png.substr(png.size() - 8, 4), "IEND");
  EXPECT_EQ(base64_encode("foob"), "Zm9vYg==");
}

TEST(ParallelFor, LowestFailingIndexWins) {
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i % 10 == 7) throw InvariantError("at " + std::to_string(i));
    });
    FAIL();
  } catch (const InvariantError& e) {
    EXPECT_STREQ(e.what(), "at 7");
  }
}

}  // namespace
}  // namespace skim
