// Copyright 2026 The semrank Authors.
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

// LLM judge plumbing: the two fixed rubric prompts, reply parsers, and the
// deterministic mock judges used in tests and by the stub server.

#pragma once

#include <cctype>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "semrank/common.hpp"
#include "semrank/rouge.hpp"

namespace semrank {

class JudgeTransportError : public Error {
 public:
  using Error::Error;
};

struct ChatRequest {
  std::string system;
  std::string user;
};

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  // Returns the raw reply text. Throws JudgeTransportError when the judge
  // cannot be reached.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

namespace rubric {

// Scoring rubric for the judge-reward variant. Reply is an integer 0..10.
inline constexpr std::string_view kScoreSystem =
    "You are a strict examiner grading explanations for multiple-choice "
    "questions from a university admission test. Compare the candidate "
    "explanation with the reference explanation. Judge logical soundness, "
    "clarity, completeness, and focus. Reply with a single integer from 0 "
    "(useless) to 10 (as good as the reference) and nothing else.";

inline constexpr std::string_view kCandidateOpen = "=== Candidate ===\n";
inline constexpr std::string_view kCandidateClose = "\n=== End candidate ===";
inline constexpr std::string_view kReferenceOpen = "=== Reference ===\n";
inline constexpr std::string_view kReferenceClose = "\n=== End reference ===";

// Pairwise rubric for the arena. Reply is "1", "2" or "TIE".
inline constexpr std::string_view kPairSystem =
    "You are an impartial examiner. Two anonymous explanations answer the "
    "same multiple-choice question from a university admission test. Judge "
    "logical soundness, clarity, completeness, and focus. Reply with exactly "
    "one of: 1, 2, TIE. Reply TIE when neither explanation is clearly better.";

inline constexpr std::string_view kQuestionOpen = "=== Question ===\n";
inline constexpr std::string_view kQuestionClose = "\n=== End question ===";
inline constexpr std::string_view kSlot1Open = "=== Explanation 1 ===\n";
inline constexpr std::string_view kSlot1Close = "\n=== End 1 ===";
inline constexpr std::string_view kSlot2Open = "=== Explanation 2 ===\n";
inline constexpr std::string_view kSlot2Close = "\n=== End 2 ===";

inline ChatRequest score_request(std::string_view candidate, std::string_view reference) {
  std::string user;
  user += kReferenceOpen;
  user += reference;
  user += kReferenceClose;
  user += "\n\n";
  user += kCandidateOpen;
  user += candidate;
  user += kCandidateClose;
  user += "\n\nScore:";
  return {std::string(kScoreSystem), std::move(user)};
}

inline ChatRequest pair_request(std::string_view question, std::string_view first,
                                std::string_view second) {
  std::string user;
  user += kQuestionOpen;
  user += question;
  user += kQuestionClose;
  user += "\n\n";
  user += kSlot1Open;
  user += first;
  user += kSlot1Close;
  user += "\n\n";
  user += kSlot2Open;
  user += second;
  user += kSlot2Close;
  user += "\n\nVerdict:";
  return {std::string(kPairSystem), std::move(user)};
}

inline std::optional<std::string> section(std::string_view text, std::string_view open,
                                          std::string_view close) {
  const auto b = text.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  if (e == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(start, e - start));
}

}  // namespace rubric

// Last integer in 0..10 in the reply. "N/10" counts as N.
inline std::optional<int> parse_judge_score(std::string_view reply) {
  std::optional<int> last;
  for (std::size_t i = 0; i < reply.size();) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    const bool denominator = i > 0 && reply[i - 1] == '/';
    if (!denominator && j - i <= 2) {
      const int v = std::stoi(std::string(reply.substr(i, j - i)));
      if (v <= 10) last = v;
    }
    i = j;
  }
  return last;
}

enum class Verdict { kFirst, kSecond, kTie };

// "1" / "2" (last standalone occurrence) or "TIE". Anything else is
// unparseable.
inline std::optional<Verdict> parse_pair_verdict(std::string_view reply) {
  std::string up;
  up.reserve(reply.size());
  for (unsigned char c : reply) up.push_back(static_cast<char>(std::toupper(c)));
  if (up.find("TIE") != std::string::npos || up.find("PAREGGIO") != std::string::npos) {
    return Verdict::kTie;
  }
  std::optional<Verdict> last;
  for (std::size_t i = 0; i < up.size(); ++i) {
    const char c = up[i];
    if (c != '1' && c != '2') continue;
    const bool left_ok = i == 0 || !std::isdigit(static_cast<unsigned char>(up[i - 1]));
    const bool right_ok =
        i + 1 == up.size() || !std::isdigit(static_cast<unsigned char>(up[i + 1]));
    if (left_ok && right_ok) last = c == '1' ? Verdict::kFirst : Verdict::kSecond;
  }
  return last;
}

enum class MockRule { kFixedScore, kPreferLonger, kPreferShorter, kPreferLexicalOverlap };

inline std::string to_string(MockRule r) {
  switch (r) {
    case MockRule::kFixedScore: return "fixed-score";
    case MockRule::kPreferLonger: return "prefer-longer";
    case MockRule::kPreferShorter: return "prefer-shorter";
    case MockRule::kPreferLexicalOverlap: return "prefer-lexical-overlap";
  }
  return "?";
}

// Deterministic rule-based judge. Replies are pure functions of the rule,
// the fixed score and the request text. Understands both rubric prompts.
//
//   fixed-score             score: the fixed value; pair: TIE
//   prefer-longer           score: round(10 * min(1, |cand| / |ref|));
//                           pair: slot of the longer explanation (bytes)
//   prefer-shorter          score: round(10 * min(1, |ref| / |cand|));
//                           pair: slot of the shorter explanation
//   prefer-lexical-overlap  score: round(10 * ROUGE-L F1(cand, ref));
//                           pair: slot with higher ROUGE-L F1 vs the question
// Equal pair statistics give TIE.
class MockJudge final : public JudgeClient {
 public:
  explicit MockJudge(MockRule rule, int fixed_score = 7, std::string id = "")
      : rule_(rule), fixed_score_(fixed_score), id_(std::move(id)) {
    if (id_.empty()) id_ = "mock:" + to_string(rule_);
  }

  std::string complete(const ChatRequest& req) override { return reply(req); }
  std::string id() const override { return id_; }
  MockRule rule() const { return rule_; }

  std::string reply(const ChatRequest& req) const {
    if (auto first = rubric::section(req.user, rubric::kSlot1Open, rubric::kSlot1Close)) {
      const auto second =
          rubric::section(req.user, rubric::kSlot2Open, rubric::kSlot2Close).value_or("");
      const auto question =
          rubric::section(req.user, rubric::kQuestionOpen, rubric::kQuestionClose)
              .value_or("");
      return pair_reply(question, *first, second);
    }
    const auto cand =
        rubric::section(req.user, rubric::kCandidateOpen, rubric::kCandidateClose);
    const auto ref =
        rubric::section(req.user, rubric::kReferenceOpen, rubric::kReferenceClose);
    if (!cand || !ref) return "I cannot grade this request.";
    return std::to_string(score(*cand, *ref));
  }

 private:
  int score(const std::string& cand, const std::string& ref) const {
    const double lc = static_cast<double>(cand.size());
    const double lr = static_cast<double>(ref.size());
    switch (rule_) {
      case MockRule::kFixedScore: return fixed_score_;
      case MockRule::kPreferLonger:
        if (lr == 0.0) return 10;
        return static_cast<int>(std::lround(10.0 * std::min(1.0, lc / lr)));
      case MockRule::kPreferShorter:
        if (lc == 0.0) return 0;
        return static_cast<int>(std::lround(10.0 * std::min(1.0, lr / lc)));
      case MockRule::kPreferLexicalOverlap:
        return static_cast<int>(std::lround(10.0 * rouge_l_f1(cand, ref)));
    }
    return 0;
  }

  std::string pair_reply(const std::string& question, const std::string& first,
                         const std::string& second) const {
    double s1 = 0.0;
    double s2 = 0.0;
    switch (rule_) {
      case MockRule::kFixedScore: return "TIE";
      case MockRule::kPreferLonger:
        s1 = static_cast<double>(first.size());
        s2 = static_cast<double>(second.size());
        break;
      case MockRule::kPreferShorter:
        s1 = -static_cast<double>(first.size());
        s2 = -static_cast<double>(second.size());
        break;
      case MockRule::kPreferLexicalOverlap:
        s1 = rouge_l_f1(first, question);
        s2 = rouge_l_f1(second, question);
        break;
    }
    if (s1 > s2) return "1";
    if (s2 > s1) return "2";
    return "TIE";
  }

  MockRule rule_;
  int fixed_score_;
  std::string id_;
};

// "mock:longer", "mock:shorter", "mock:overlap", "mock:fixed" or
// "mock:fixed=N".
inline std::optional<MockJudge> parse_mock_judge(std::string_view spec) {
  if (spec.rfind("mock:", 0) != 0) return std::nullopt;
  const std::string name(spec.substr(5));
  if (name == "longer" || name == "prefer-longer") {
    return MockJudge(MockRule::kPreferLonger, 7, std::string(spec));
  }
  if (name == "shorter" || name == "prefer-shorter") {
    return MockJudge(MockRule::kPreferShorter, 7, std::string(spec));
  }
  if (name == "overlap" || name == "prefer-lexical-overlap") {
    return MockJudge(MockRule::kPreferLexicalOverlap, 7, std::string(spec));
  }
  if (name == "fixed" || name == "fixed-score") {
    return MockJudge(MockRule::kFixedScore, 7, std::string(spec));
  }
  if (name.rfind("fixed=", 0) == 0) {
    return MockJudge(MockRule::kFixedScore, std::stoi(name.substr(6)), std::string(spec));
  }
  return std::nullopt;
}

}  // namespace semrank
