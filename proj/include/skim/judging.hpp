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

#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "skim/backend.hpp"
#include "skim/description.hpp"
#include "skim/error.hpp"
#include "skim/io.hpp"
#include "skim/parallel.hpp"

namespace skim {

struct JudgeRequest {
  std::string video_text;
  std::string scene_text;
  std::vector<std::string> queries;
  double temperature = 0.5;

  void validate() const {
    if (video_text.empty()) throw InvariantError("JudgeRequest: empty video description");
    if (scene_text.empty()) throw InvariantError("JudgeRequest: empty scene description");
    if (!(temperature >= 0 && temperature <= 1)) throw InvariantError("JudgeRequest: temperature must be in [0,1]");
  }
};

namespace prompt {

inline constexpr const char* kIntro =
    "You are tasked with evaluating the importance of a specific scene within a larger video, considering its role "
    "in the overall narrative and message of the video. I've provided two descriptions below: one for the entire "
    "video and one for the specific scene (part) within that video. Your goal is to assess how critical this "
    "particular segment is to the understanding or development of the video's main themes, messages, or emotional "
    "impact.";

inline constexpr const char* kQueryLead =
    "The user has provided the following content preference to guide the summarization:";

inline constexpr const char* kQueryGuidance =
    "When assigning a score, consider how well the scene aligns with this preference. Scenes that closely match or "
    "contradict the user's intent should be scored accordingly, reflecting their relevance or irrelevance to the "
    "desired summary focus. If the scene is not clearly related to this preference, assign a score based on the "
    "default scale and criteria below.";

inline constexpr const char* kRubric =
    "Assign an importance score on a scale of 1 to 100, based on how crucial it is to the overall video. The scale "
    "is defined as follows:\n"
    "* 1-20: Minimally important (contributes very little to the overall theme or message)\n"
    "* 21-40: Somewhat important (offers limited context or details that support the main theme)\n"
    "* 41-60: Moderately important (provides useful context or details that support the main theme)\n"
    "* 61-80: Quite important (adds significant context or detail that enhances understanding of the main theme)\n"
    "* 81-100: Highly important (crucial to understanding or conveying the main message of the video)";

inline constexpr const char* kGuidance =
    "When evaluating, focus on the core narrative or emotional impact of the video. Only assign high scores (80+) "
    "to the segments that directly drive the main theme or message forward. Be critical and biased towards giving "
    "low scores to segments that do not add significant value to the overall narrative or theme. The distribution "
    "of high scores should be low and reserved for only the most crucial moments in the video. The video should be "
    "summarized briefly, so please evaluate whether the scene is critical to include in the summary of the video, "
    "based on its contribution to the core message. Prioritize scenes that are essential for a concise summary and "
    "omit secondary or supporting moments unless they provide meaningful context.";

inline constexpr const char* kSingleFormat = "Answer with the single line 'SCORE: <integer 1-100>' and nothing else.";

inline std::string multi_format(std::size_t n) {
  return "Score the scene separately for each user query. Answer with exactly " + std::to_string(n) +
         " lines, one 'Qk: <integer 1-100>' line per query k = 1.." + std::to_string(n) + ", and nothing else.";
}

}  // namespace prompt

inline std::string build_prompt(const JudgeRequest& req) {
  req.validate();
  std::string p = prompt::kIntro;
  p += "\n\n";
  if (!req.queries.empty()) {
    p += prompt::kQueryLead;
    p += "\n\n";
    if (req.queries.size() == 1) {
      p += "User Query: " + req.queries[0] + "\n";
    } else {
      for (std::size_t k = 0; k < req.queries.size(); ++k) {
        p += "User Query " + std::to_string(k + 1) + ": " + req.queries[k] + "\n";
      }
    }
    p += prompt::kQueryGuidance;
    p += " ";
  }
  p += prompt::kRubric;
  p += "\n\n";
  p += prompt::kGuidance;
  p += "\n\nVideo Description: " + req.video_text;
  p += "\nScene Description: " + req.scene_text;
  p += "\n\n";
  p += req.queries.size() > 1 ? prompt::multi_format(req.queries.size()) : std::string(prompt::kSingleFormat);
  return p;
}

namespace detail {

inline bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Integers standing on their own: not glued to letters, signs or decimals.
inline std::vector<long long> standalone_integers(const std::string& s) {
  std::vector<long long> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    const bool left_ok = i == 0 || !(is_word(s[i - 1]) || s[i - 1] == '.' || s[i - 1] == '-');
    const bool decimal = j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]));
    const bool right_ok = j == s.size() || !(is_word(s[j]) || decimal);
    if (left_ok && right_ok && j - i <= 9) out.push_back(std::stoll(s.substr(i, j - i)));
    i = j;
  }
  return out;
}

}  // namespace detail

/// Score from a judge reply. The last "SCORE:" marker wins; without one, the
/// last standalone integer in [1,100] is used.
inline int parse_score(const std::string& reply) {
  static const std::regex marker(R"(SCORE\s*[:=]\s*(-?\d+))", std::regex::icase);
  std::optional<long long> marked;
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), marker); it != std::sregex_iterator(); ++it) {
    const auto digits = (*it)[1].str();
    marked = digits.size() > 12 ? 1000 : std::stoll(digits);
  }
  if (marked) {
    if (*marked < 1 || *marked > 100) {
      throw ScoreParseError("score " + std::to_string(*marked) + " outside [1,100]", reply);
    }
    return static_cast<int>(*marked);
  }
  const auto ints = detail::standalone_integers(reply);
  for (auto it = ints.rbegin(); it != ints.rend(); ++it) {
    if (*it >= 1 && *it <= 100) return static_cast<int>(*it);
  }
  throw ScoreParseError("no score in [1,100] found in judge reply", reply);
}

/// Scores from a multi-query reply, one per query in query order. Accepts
/// "Q3: 40" and "3: 40" lines.
inline std::vector<int> parse_multi_scores(const std::string& reply, std::size_t n_queries) {
  static const std::regex line_re(R"(^\s*(?:\*\*)?(?:Q(?:uery)?\s*)?(\d+)(?:\*\*)?\s*[:=)\-]\s*(?:SCORE\s*:\s*)?(-?\d+))",
                                  std::regex::icase);
  std::vector<std::optional<int>> got(n_queries);
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    std::size_t end = reply.find('\n', pos);
    if (end == std::string::npos) end = reply.size();
    const std::string line = reply.substr(pos, end - pos);
    std::smatch m;
    if (std::regex_search(line, m, line_re)) {
      const auto k = std::stoull(m[1].str());
      const auto digits = m[2].str();
      const long long v = digits.size() > 12 ? 1000 : std::stoll(digits);
      if (k >= 1 && k <= n_queries) {
        if (v < 1 || v > 100) {
          throw ScoreParseError("score " + std::to_string(v) + " for query " + std::to_string(k) + " outside [1,100]",
                                reply);
        }
        got[k - 1] = static_cast<int>(v);
      }
    }
    pos = end + 1;
  }
  std::vector<std::size_t> missing;
  std::vector<int> out;
  for (std::size_t k = 0; k < n_queries; ++k) {
    if (!got[k]) {
      missing.push_back(k + 1);
    } else {
      out.push_back(*got[k]);
    }
  }
  if (!missing.empty()) throw MissingScoresError(std::move(missing), reply);
  return out;
}

/// scenes x max(1, |queries|) matrix of integer scores in [1,100].
struct SceneScores {
  std::vector<std::string> queries;
  std::vector<std::vector<int>> matrix;

  std::size_t scene_count() const noexcept { return matrix.size(); }
  std::size_t column_count() const noexcept { return queries.empty() ? 1 : queries.size(); }

  std::vector<double> column(std::size_t j) const {
    if (j >= column_count()) throw InvariantError("SceneScores: column out of range");
    std::vector<double> out;
    out.reserve(matrix.size());
    for (const auto& row : matrix) out.push_back(row[j]);
    return out;
  }

  void validate() const {
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      if (matrix[i].size() != column_count()) {
        throw InvariantError("SceneScores: row " + std::to_string(i) + " has " + std::to_string(matrix[i].size()) +
                             " columns, expected " + std::to_string(column_count()));
      }
      for (int v : matrix[i]) {
        if (v < 1 || v > 100) throw InvariantError("SceneScores: value " + std::to_string(v) + " outside [1,100]");
      }
    }
  }

  friend bool operator==(const SceneScores&, const SceneScores&) = default;
};

inline std::string judge_one(const LanguageClient& judge, const JudgeRequest& req) {
  return judge.chat({{"user", build_prompt(req)}}, req.temperature);
}

namespace detail {

template <class F>
auto with_scene_index(std::size_t i, F&& f) {
  try {
    return f();
  } catch (const MissingScoresError&) {
    throw;
  } catch (const ScoreParseError& e) {
    throw ScoreParseError("scene " + std::to_string(i) + ": " + e.what(), e.raw_reply());
  } catch (const FixtureMissError&) {
    throw;
  } catch (const BackendError& e) {
    throw BackendError("scene " + std::to_string(i) + ": " + e.what());
  }
}

}  // namespace detail

/// One judge call per scene, optionally under a single user query.
inline SceneScores score_scenes(const DescriptionSet& descs, const std::optional<std::string>& query,
                                const LanguageClient& judge, std::size_t jobs = 1) {
  SceneScores out;
  if (query) out.queries.push_back(*query);
  out.matrix.resize(descs.scene_texts.size());
  parallel_for(descs.scene_texts.size(), jobs, [&](std::size_t i) {
    JudgeRequest req{descs.video_text, descs.scene_texts[i], out.queries, judge.temperature()};
    out.matrix[i] = {detail::with_scene_index(i, [&] { return parse_score(judge_one(judge, req)); })};
  });
  return out;
}

/// All queries in one call per scene. A single query degenerates to
/// score_scenes with that query.
inline SceneScores score_scenes_multi_query(const DescriptionSet& descs, const std::vector<std::string>& queries,
                                            const LanguageClient& judge, std::size_t jobs = 1) {
  if (queries.empty()) throw InvariantError("score_scenes_multi_query: at least one query is required");
  if (queries.size() == 1) return score_scenes(descs, queries[0], judge, jobs);
  SceneScores out;
  out.queries = queries;
  out.matrix.resize(descs.scene_texts.size());
  parallel_for(descs.scene_texts.size(), jobs, [&](std::size_t i) {
    JudgeRequest req{descs.video_text, descs.scene_texts[i], queries, judge.temperature()};
    out.matrix[i] =
        detail::with_scene_index(i, [&] { return parse_multi_scores(judge_one(judge, req), queries.size()); });
  });
  return out;
}

inline json scene_scores_to_json(const SceneScores& s) {
  json j;
  j["version"] = kJsonVersion;
  j["queries"] = s.queries;
  j["matrix"] = s.matrix;
  return j;
}

inline SceneScores scene_scores_from_json(const json& j) {
  using detail::field;
  using detail::get_as;
  detail::check_version(j, "scene scores");
  SceneScores s;
  s.queries = get_as<std::vector<std::string>>(field(j, "queries"), "queries");
  s.matrix = get_as<std::vector<std::vector<int>>>(field(j, "matrix"), "matrix");
  try {
    s.validate();
  } catch (const InvariantError& e) {
    throw SchemaError("matrix", e.what());
  }
  return s;
}

}  // namespace skim
