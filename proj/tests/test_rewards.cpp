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


#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "semrank/rewards.hpp"
#include "semrank/rouge.hpp"

namespace semrank {
namespace {

EmbeddingVector v2(double x, double y) { return EmbeddingVector({x, y}); }

RewardContext ctx_of(EmbeddingVector gt, EmbeddingVector ref, std::string ans = "B") {
  return RewardContext{std::move(gt), std::move(ref), std::move(ans), "spiegazione di riferimento"};
}

class ScriptedJudge : public JudgeClient {
 public:
  explicit ScriptedJudge(std::deque<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const ChatRequest& req) override {
    last_ = req;
    ++calls;
    auto r = replies_.front();
    if (replies_.size() > 1) replies_.pop_front();
    return r;
  }
  std::string id() const override { return "scripted"; }
  int calls = 0;
  ChatRequest last_;

 private:
  std::deque<std::string> replies_;
};

TEST(SemanticReward, Examples) {
  RewardConfig cfg;
  EXPECT_NEAR(semantic_reward(v2(1, 0), ctx_of(v2(1, 0), v2(0.8, 0.6)), cfg), 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(semantic_reward(v2(1, 2), ctx_of(v2(1, 2), v2(1, 2)), cfg), 0.0);
  const auto ctx = ctx_of(v2(0.7, std::sqrt(0.51)), v2(0.8, 0.6));
  EXPECT_NEAR(semantic_reward_raw(v2(1, 0), ctx, 4.0), -0.4, 1e-12);
  EXPECT_EQ(semantic_reward(v2(1, 0), ctx, cfg), 0.0);
  cfg.clamp_floor = false;
  EXPECT_NEAR(semantic_reward(v2(1, 0), ctx, cfg), -0.4, 1e-12);
}

TEST(SemanticReward, Errors) {
  RewardConfig cfg;
  EXPECT_THROW(semantic_reward(v2(1, 0), ctx_of(v2(1, 0), EmbeddingVector({1, 0, 0})), cfg),
               DimensionMismatchError);
  EXPECT_THROW(semantic_reward(EmbeddingVector({1, 0, 0}), ctx_of(v2(1, 0), v2(0, 1)), cfg),
               DimensionMismatchError);
  EXPECT_THROW(semantic_reward(v2(0, 0), ctx_of(v2(1, 0), v2(0, 1)), cfg), DegenerateVectorError);
}

TEST(SemanticReward, MatchesDotProductOracleOnToyTriples) {
  Rng rng(11);
  const std::vector<std::string> words = {"atomo", "legame", "energia", "onda", "campo", "carica"};
  auto text = [&] {
    std::string s;
    for (std::uint64_t i = 0, n = 1 + rng.below(6); i < n; ++i) s += words[rng.below(words.size())] + " ";
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    const auto g = embed_toy(text(), 256), t = embed_toy(text(), 256), r = embed_toy(text(), 256);
    const double expect = 4.0 * (oracle::cosine(g.values, t.values) - oracle::cosine(g.values, r.values));
    RewardConfig cfg;
    cfg.clamp_floor = false;
    EXPECT_NEAR(semantic_reward(g, ctx_of(t, r), cfg), expect, 1e-9);
    cfg.clamp_floor = true;
    EXPECT_NEAR(semantic_reward(g, ctx_of(t, r), cfg), std::max(0.0, expect), 1e-9);
  }
}

TEST(SemanticReward, ScaleInvariantAndMonotone) {
  Rng rng(12);
  RewardConfig cfg;
  cfg.clamp_floor = false;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> g(8), t(8), r(8);
    for (auto* v : {&g, &t, &r})
      for (auto& x : *v) x = rng.normal();
    const auto ctx = ctx_of(EmbeddingVector(t), EmbeddingVector(r));
    auto gs = g;
    const double s = 0.01 + 100 * rng.uniform();
    for (auto& x : gs) x *= s;
    EXPECT_NEAR(semantic_reward(EmbeddingVector(g), ctx, cfg),
                semantic_reward(EmbeddingVector(gs), ctx, cfg), 1e-9);
  }
  // Rotating v_gen toward v_gt with v_ref fixed raises the reward.
  const auto ctx = ctx_of(EmbeddingVector({1, 0, 0}), EmbeddingVector({0, 0, 1}));
  double prev = -1e9;
  for (int k = 0; k <= 20; ++k) {
    const double a = 1.5 - 1.5 * k / 20.0;
    const double r = semantic_reward(EmbeddingVector({std::cos(a), std::sin(a), 0.0}), ctx, cfg);
    EXPECT_GT(r, prev);
    prev = r;
  }
}

TEST(Rouge, Examples) {
  EXPECT_DOUBLE_EQ(rouge_l_f1("la cellula vive", "la cellula vive"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l_f1("x y", "a b"), 0.0);
  const auto s = rouge_l_tokens(rouge_tokenize("a b c d"), rouge_tokenize("a c d e"));
  EXPECT_EQ(s.lcs, 3u);
  EXPECT_DOUBLE_EQ(s.precision, 0.75);
  EXPECT_DOUBLE_EQ(s.recall, 0.75);
  EXPECT_DOUBLE_EQ(s.f1, 0.75);
  EXPECT_EQ(rouge_l_f1("", "a"), 0.0);
  EXPECT_EQ(rouge_l_f1("...", "a"), 0.0);
}

TEST(Rouge, TokenizerLowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(rouge_tokenize("Il Nucleo, della-cellula!"),
            (std::vector<std::string>{"il", "nucleo", "della", "cellula"}));
  EXPECT_EQ(rouge_tokenize("perché è così"), (std::vector<std::string>{"perché", "è", "così"}));
  EXPECT_DOUBLE_EQ(rouge_l_f1("A B", "a, b."), 1.0);
}

TEST(Rouge, BitParallelLcsMatchesDpOracle) {
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t alpha = 2 + rng.below(8);
    std::vector<int> a(rng.below(31)), b(rng.below(31));
    for (auto& x : a) x = static_cast<int>(rng.below(alpha));
    for (auto& x : b) x = static_cast<int>(rng.below(alpha));
    EXPECT_EQ(lcs_length(a, b), oracle::lcs_dp(a, b));
  }
  // Multi-word masks.
  for (int i = 0; i < 50; ++i) {
    std::vector<int> a(100 + rng.below(200)), b(64 + rng.below(300));
    for (auto& x : a) x = static_cast<int>(rng.below(4));
    for (auto& x : b) x = static_cast<int>(rng.below(4));
    EXPECT_EQ(lcs_length(a, b), oracle::lcs_dp(a, b));
  }
}

TEST(Rouge, SymmetricSelfOneRecallMonotone) {
  Rng rng(14);
  const std::vector<std::string> w = {"a", "b", "c", "d", "e"};
  auto text = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += w[rng.below(w.size())] + " ";
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    const auto a = text(rng.below(15)), b = text(rng.below(15));
    EXPECT_DOUBLE_EQ(rouge_l_f1(a, b), rouge_l_f1(b, a));
    const auto x = text(1 + rng.below(15));
    EXPECT_DOUBLE_EQ(rouge_l_f1(x, x), 1.0);
    const auto ref = rouge_tokenize(b);
    auto gen = rouge_tokenize(a);
    const double r0 = rouge_l_tokens(gen, ref).recall;
    gen.push_back(w[rng.below(w.size())]);
    EXPECT_GE(rouge_l_tokens(gen, ref).recall, r0);
  }
}

TEST(AnswerFormatThink, Examples) {
  const auto ctx = ctx_of(v2(1, 0), v2(0, 1), "B");
  TaggedOutput out;
  out.risposta = "B";
  EXPECT_EQ(answer_reward(out, ctx), 1.0);
  out.risposta = "C";
  EXPECT_EQ(answer_reward(out, ctx), 0.0);
  out.risposta = " b ";
  EXPECT_EQ(answer_reward(out, ctx), 1.0);
  out.risposta.reset();
  EXPECT_EQ(answer_reward(out, ctx), 0.0);

  EXPECT_EQ(format_reward(parse_tagged("<spiegazione>x</spiegazione><risposta>A</risposta>")), 1.0);
  EXPECT_EQ(format_reward(parse_tagged("<spiegazione>x</spiegazione>")), 0.0);
  EXPECT_EQ(format_reward(parse_tagged(
                "<spiegazione>x</spiegazione><spiegazione>y</spiegazione><risposta>A</risposta>")),
            0.0);

  EXPECT_EQ(think_reward(parse_tagged("<think>passo 1...</think>")), 1.0);
  EXPECT_EQ(think_reward(parse_tagged("<spiegazione>x</spiegazione>")), 0.0);
  EXPECT_EQ(think_reward(parse_tagged("<think>   </think>")), 0.0);
}

TEST(JudgeReward, ScaleAndParse) {
  const auto ctx = ctx_of(v2(1, 0), v2(0, 1));
  for (auto [reply, want] : std::vector<std::pair<std::string, double>>{
           {"10", 1.0}, {"0", 0.0}, {"score: 7", 0.7}, {"7/10", 0.7}}) {
    ScriptedJudge j({reply});
    EXPECT_DOUBLE_EQ(judge_reward("gen", ctx, j), want) << reply;
    EXPECT_EQ(j.calls, 1);
  }
}

TEST(JudgeReward, UnparseableRetriedOnceThenZero) {
  const auto ctx = ctx_of(v2(1, 0), v2(0, 1));
  ScriptedJudge bad({"non saprei"});
  EXPECT_EQ(judge_reward("gen", ctx, bad), 0.0);
  EXPECT_EQ(bad.calls, 2);
  ScriptedJudge second({"boh", "8"});
  EXPECT_DOUBLE_EQ(judge_reward("gen", ctx, second), 0.8);
  EXPECT_EQ(second.calls, 2);
}

TEST(JudgeReward, RubricCarriesBothTexts) {
  ScriptedJudge j({"5"});
  judge_reward("generata", ctx_of(v2(1, 0), v2(0, 1)), j);
  EXPECT_NE(j.last_.user.find("generata"), std::string::npos);
  EXPECT_NE(j.last_.user.find("spiegazione di riferimento"), std::string::npos);
  EXPECT_FALSE(j.last_.system.empty());
}

TEST(MockJudge, ScoreRules) {
  MockJudge longer(MockRule::kPreferLonger);
  EXPECT_EQ(longer.complete(rubric::score_request("abcd", "abcdefgh")), "5");
  MockJudge fixed(MockRule::kFixedScore, 3);
  EXPECT_EQ(fixed.complete(rubric::score_request("a", "b")), "3");
  EXPECT_EQ(fixed.complete(rubric::pair_request("q", "a", "b")), "TIE");
  EXPECT_EQ(longer.complete(rubric::pair_request("q", "a", "bb")), "2");
  MockJudge shorter(MockRule::kPreferShorter);
  EXPECT_EQ(shorter.complete(rubric::pair_request("q", "a", "bb")), "1");
  ASSERT_TRUE(parse_mock_judge("mock:fixed=9"));
  EXPECT_EQ(parse_mock_judge("mock:fixed=9")->complete(rubric::score_request("a", "b")), "9");
  EXPECT_FALSE(parse_mock_judge("mock:nope"));
  EXPECT_FALSE(parse_mock_judge("http"));
}

TEST(ParseVerdict, Cases) {
  EXPECT_EQ(parse_pair_verdict("1"), Verdict::kFirst);
  EXPECT_EQ(parse_pair_verdict("La migliore è la 2"), Verdict::kSecond);
  EXPECT_EQ(parse_pair_verdict("tie"), Verdict::kTie);
  EXPECT_FALSE(parse_pair_verdict("nessuna"));
  EXPECT_FALSE(parse_pair_verdict("12"));
  EXPECT_EQ(parse_judge_score("punteggio 11 poi 4"), 4);
  EXPECT_FALSE(parse_judge_score("niente"));
}

TEST(TotalReward, Examples) {
  RewardConfig cfg;
  ToyEmbedder emb(64);
  const auto ctx = ctx_of(v2(1, 0), v2(0.8, 0.6), "A");
  const auto out = parse_tagged("<think>t</think><spiegazione>x</spiegazione><risposta>A</risposta>");
  const auto b = total_reward(out, "ignored", v2(1, 0), ctx, cfg);
  EXPECT_NEAR(*b.semantic, 0.8, 1e-12);
  EXPECT_EQ(*b.answer, 1.0);
  EXPECT_EQ(*b.format, 1.0);
  EXPECT_EQ(*b.think, 1.0);
  EXPECT_NEAR(b.total, 3.8, 1e-12);
  EXPECT_FALSE(b.rouge);
  EXPECT_FALSE(b.judge);

  const auto zero = total_reward(parse_tagged("niente"), "niente", v2(0, 1), ctx, cfg);
  EXPECT_EQ(zero.total, 0.0);
}

TEST(TotalReward, DisabledComponentsAbsentAndJudgeRequired) {
  RewardConfig cfg;
  cfg.enabled = {Component::kRouge};
  const auto ctx = ctx_of(v2(1, 0), v2(0, 1));
  const auto b = total_reward(parse_tagged("spiegazione di riferimento"), "spiegazione di riferimento",
                              EmbeddingVector(), ctx, cfg);
  EXPECT_DOUBLE_EQ(*b.rouge, 1.0);
  EXPECT_FALSE(b.semantic);
  EXPECT_FALSE(b.answer);
  cfg.enabled = {Component::kJudge};
  EXPECT_THROW(total_reward(parse_tagged("x"), "x", EmbeddingVector(), ctx, cfg), ValidationError);
  cfg.enabled = {};
  EXPECT_THROW(total_reward(parse_tagged("x"), "x", EmbeddingVector(), ctx, cfg), ValidationError);
  cfg.enabled = {Component::kFormat};
  cfg.c = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(TotalReward, ExactSumOfPresentComponents) {
  Rng rng(15);
  for (int i = 0; i < 1000; ++i) {
    RewardBreakdown b;
    double s = 0.0;
    for (auto c : kAllComponents) {
      if (!rng.coin()) continue;
      const double v = rng.uniform() * 3;
      s += v;
      switch (c) {
        case Component::kSemantic: b.semantic = v; break;
        case Component::kRouge: b.rouge = v; break;
        case Component::kJudge: b.judge = v; break;
        case Component::kAnswer: b.answer = v; break;
        case Component::kFormat: b.format = v; break;
        case Component::kThink: b.think = v; break;
      }
    }
    EXPECT_EQ(b.sum_present(), s);
  }
}

TEST(RewardScorer, EmbedsSpiegazioneOnlyWhenValid) {
  ToyEmbedder emb(128);
  RewardConfig cfg;
  cfg.clamp_floor = false;
  const auto ref = emb.embed_one("centro del corpus");
  const auto ctx = make_reward_context("la forza è massa per accelerazione", "A", ref, emb);
  RewardScorer scorer(cfg, emb);
  const std::string valid =
      "<spiegazione>la forza è massa per accelerazione</spiegazione><risposta>A</risposta>";
  const std::string raw = "la forza è massa per accelerazione <risposta>";
  const auto out = scorer.score({valid, raw}, ctx);
  EXPECT_NEAR(*out[0].semantic, 4.0 * (1.0 - cosine(ctx.v_gt, ref)), 1e-12);
  EXPECT_NEAR(*out[1].semantic, semantic_reward_raw(emb.embed_one(raw), ctx, 4.0), 1e-12);
}

TEST(Components, RoundTripNames) {
  for (auto c : kAllComponents) EXPECT_EQ(component_from_string(to_string(c)), c);
  EXPECT_THROW(component_from_string("bogus"), std::exception);
}

}  // namespace
}  // namespace semrank
