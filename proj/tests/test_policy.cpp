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
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "semrank/policy.hpp"

namespace semrank {
namespace {

PolicyShape small_shape() { return PolicyShape{7, 3, 4, 5}; }

PolicyParams randomized(const PolicyShape& s, std::uint64_t seed, double scale = 0.5) {
  auto p = init_params(s, seed);
  Rng rng(seed + 99);
  for (auto& t : all_tensors(p)) *t.value = random_normal(t.value->rows(), t.value->cols(), rng, scale);
  return p;
}

std::vector<TokenId> random_tokens(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> out(n);
  for (auto& t : out) t = static_cast<TokenId>(rng.below(vocab));
  return out;
}

// Direct evaluation of the documented forward map.
std::vector<double> oracle_logits(const PolicyParams& p, const std::vector<TokenId>& ctx) {
  const auto& s = p.shape;
  std::vector<double> x;
  for (auto t : ctx)
    for (std::size_t k = 0; k < s.embed; ++k) x.push_back(p.E(static_cast<std::size_t>(t), k));
  std::vector<double> h(s.hidden);
  for (std::size_t j = 0; j < s.hidden; ++j) {
    long double a = p.b1(0, j);
    for (std::size_t i = 0; i < x.size(); ++i) a += x[i] * p.W1(i, j);
    h[j] = std::tanh(static_cast<double>(a));
  }
  std::vector<double> z(s.vocab);
  for (std::size_t v = 0; v < s.vocab; ++v) {
    long double a = p.b2(0, v);
    for (std::size_t j = 0; j < s.hidden; ++j) a += h[j] * p.W2(j, v);
    z[v] = static_cast<double>(a);
  }
  return z;
}

TEST(ForwardLogits, ZeroParamsGiveZeroLogits) {
  auto p = init_params(small_shape(), 1);
  for (auto& t : all_tensors(p)) t.value->fill(0.0);
  for (double z : forward_logits(p, std::vector<TokenId>{1, 2, 3})) EXPECT_EQ(z, 0.0);
}

TEST(ForwardLogits, ZeroAdapterIsIdentityAndDeterministic) {
  auto p = randomized(small_shape(), 2);
  const std::vector<TokenId> ctx = {4, 0, 6};
  const auto base = forward_logits(p, ctx);
  auto q = p;
  attach_lora(q, LoraConfig{2, 4.0}, 3);
  EXPECT_EQ(forward_logits(q, ctx), base);
  EXPECT_EQ(forward_logits(p, ctx), base);
  EXPECT_EQ(forward_logits(randomized(small_shape(), 2), ctx), base);
}

TEST(ForwardLogits, MatchesOracle) {
  auto p = randomized(PolicyShape{5, 2, 3, 4}, 4);
  for (TokenId a = 0; a < 5; ++a)
    for (TokenId b = 0; b < 5; ++b) {
      const std::vector<TokenId> ctx = {a, b};
      const auto got = forward_logits(p, ctx);
      const auto want = oracle_logits(p, ctx);
      for (std::size_t v = 0; v < 5; ++v) EXPECT_NEAR(got[v], want[v], 1e-12);
    }
}

TEST(ForwardLogits, OutOfRangeTokenThrows) {
  auto p = init_params(small_shape(), 1);
  EXPECT_THROW(forward_logits(p, std::vector<TokenId>{1, 2, 7}), Error);
  EXPECT_THROW(logprob_sequence(p, std::vector<TokenId>{1}, std::vector<TokenId>{9}), Error);
}

TEST(LogprobSequence, UniformLogits) {
  auto p = init_params(small_shape(), 1);
  for (auto& t : all_tensors(p)) t.value->fill(0.0);
  for (double lp : logprob_sequence(p, std::vector<TokenId>{1}, std::vector<TokenId>{2, 3, 4}))
    EXPECT_NEAR(lp, -std::log(7.0), 1e-15);
}

TEST(LogprobSequence, NormalizedOverLengthOneCompletions) {
  auto p = randomized(small_shape(), 5, 2.0);
  const std::vector<TokenId> prompt = {3, 1};
  for (double temp : {0.7, 1.0, 2.5}) {
    long double z = 0.0L;
    for (TokenId v = 0; v < 7; ++v) z += std::exp(logprob_sequence(p, prompt, std::vector<TokenId>{v}, temp)[0]);
    EXPECT_NEAR(static_cast<double>(z), 1.0, 1e-9);
  }
}

TEST(LogprobSequence, MatchesBruteForceSoftmax) {
  auto p = randomized(PolicyShape{5, 2, 3, 4}, 6, 1.0);
  const std::vector<TokenId> prompt = {2}, completion = {4, 1, 3};
  const auto got = logprob_sequence(p, prompt, completion, 0.7);
  // Contexts are left-padded with id 0.
  const std::vector<std::vector<TokenId>> ctxs = {{0, 2}, {2, 4}, {4, 1}};
  for (std::size_t t = 0; t < 3; ++t) {
    const auto sm = oracle::softmax(oracle_logits(p, ctxs[t]), 0.7);
    EXPECT_NEAR(got[t], std::log(sm[static_cast<std::size_t>(completion[t])]), 1e-12);
  }
  EXPECT_THROW(logprob_sequence(p, prompt, std::vector<TokenId>{}), Error);
}

TEST(Softmax, SumsToOne) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + rng.below(64));
    for (auto& x : v) x = rng.normal(0.0, 20.0);
    softmax_inplace(v, 0.1 + rng.uniform() * 3);
    EXPECT_NEAR(std::accumulate(v.begin(), v.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(SampleSequence, GreedyAndDeterministic) {
  auto p = randomized(small_shape(), 8, 1.0);
  const std::vector<TokenId> prompt = {2, 3};
  const auto g1 = sample_sequence(p, prompt, 1e-9, 10, -1, 1);
  const auto g2 = sample_sequence(p, prompt, 1e-9, 10, -1, 2);
  EXPECT_EQ(g1.tokens, g2.tokens);
  // Greedy picks the argmax at every step.
  auto full = prompt;
  for (auto tok : g1.tokens) {
    const auto z = forward_logits(p, context_window(full, full.size(), 3));
    EXPECT_EQ(static_cast<std::size_t>(tok), static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()));
    full.push_back(tok);
  }
  const auto a = sample_sequence(p, prompt, 0.7, 20, -1, 42);
  const auto b = sample_sequence(p, prompt, 0.7, 20, -1, 42);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.logprobs, b.logprobs);
  EXPECT_EQ(a.prompt_len, 2u);
  EXPECT_EQ(a.tokens.size(), a.logprobs.size());
  for (double lp : a.logprobs) EXPECT_LE(lp, 0.0);
  EXPECT_THROW(sample_sequence(p, prompt, 0.0, 5, -1, 1), Error);
  EXPECT_THROW(sample_sequence(p, prompt, 1.0, 0, -1, 1), Error);
}

TEST(SampleSequence, RecordedLogprobsAreTempered) {
  auto p = randomized(small_shape(), 9, 1.0);
  const std::vector<TokenId> prompt = {5};
  const auto s = sample_sequence(p, prompt, 0.7, 8, -1, 3);
  const auto lp = logprob_sequence(p, prompt, s.tokens, 0.7);
  for (std::size_t t = 0; t < lp.size(); ++t) EXPECT_NEAR(s.logprobs[t], lp[t], 1e-12);
}

TEST(SampleSequence, StopsAtStopToken) {
  auto p = randomized(small_shape(), 10, 0.3);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = sample_sequence(p, std::vector<TokenId>{1}, 1.0, 30, 2, seed);
    const auto it = std::find(s.tokens.begin(), s.tokens.end(), 2);
    if (it != s.tokens.end()) EXPECT_EQ(it + 1, s.tokens.end());
    else EXPECT_EQ(s.tokens.size(), 30u);
  }
}

TEST(SampleSequence, FrequenciesMatchSoftmax) {
  auto p = randomized(PolicyShape{5, 2, 3, 4}, 11, 1.0);
  const std::vector<TokenId> prompt = {3, 4};
  const double temp = 0.7;
  const auto probs = oracle::softmax(oracle_logits(p, prompt), temp);
  const int n = 100000;
  std::vector<int> counts(5, 0);
  Forward fwd(p);
  for (int i = 0; i < n; ++i) {
    ++counts[static_cast<std::size_t>(sample_sequence(fwd, prompt, temp, 1, -1, static_cast<std::uint64_t>(i)).tokens[0])];
  }
  for (std::size_t v = 0; v < 5; ++v) {
    const double sigma = std::sqrt(n * probs[v] * (1 - probs[v]));
    EXPECT_LE(std::abs(counts[v] - n * probs[v]), 3 * sigma + 1) << "token " << v;
  }
}

TEST(Backward, ZeroWeightsGiveZeroGradient) {
  auto p = randomized(small_shape(), 12);
  const auto g = backward(p, std::vector<TokenId>{1, 2}, std::vector<TokenId>{3, 4}, std::vector<double>{0, 0});
  auto gg = g;
  for (auto& t : all_tensors(gg))
    for (std::size_t i = 0; i < t.value->size(); ++i) EXPECT_EQ((*t.value)[i], 0.0);
}

TEST(Backward, MatchesFiniteDifferencesBaseMode) {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const auto p = randomized(small_shape(), 100 + trial);
    const auto prompt = random_tokens(rng, 1 + rng.below(4), 7);
    const auto completion = random_tokens(rng, 1 + rng.below(5), 7);
    std::vector<double> g(completion.size());
    for (auto& x : g) x = rng.normal();
    const auto r = oracle::finite_difference_check(p, prompt, completion, g, 0.5 + rng.uniform());
    EXPECT_LE(r.max_rel_error, 1e-4) << "trial " << trial;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(Backward, MatchesFiniteDifferencesLoraMode) {
  Rng rng(14);
  for (int trial = 0; trial < 25; ++trial) {
    auto p = randomized(small_shape(), 200 + trial);
    LoraConfig lc{1 + rng.below(3), 1.0 + rng.uniform() * 4};
    lc.target_w1 = trial % 3 != 1;
    lc.target_w2 = trial % 3 != 2;
    attach_lora(p, lc, trial);
    // A zero B would make every A gradient vanish; randomize both factors.
    for (auto* f : {p.lora_w1 ? &*p.lora_w1 : nullptr, p.lora_w2 ? &*p.lora_w2 : nullptr}) {
      if (f == nullptr) continue;
      f->B = random_normal(f->B.rows(), f->B.cols(), rng, 0.5);
    }
    const auto prompt = random_tokens(rng, 1 + rng.below(4), 7);
    const auto completion = random_tokens(rng, 1 + rng.below(5), 7);
    std::vector<double> g(completion.size());
    for (auto& x : g) x = rng.normal();
    const auto r = oracle::finite_difference_check(p, prompt, completion, g, 0.7);
    EXPECT_LE(r.max_rel_error, 1e-4) << "trial " << trial;
  }
}

TEST(Backward, LoraModeFreezesBase) {
  auto p = randomized(small_shape(), 15);
  attach_lora(p, LoraConfig{2, 4.0}, 1);
  auto g = backward(p, std::vector<TokenId>{1}, std::vector<TokenId>{2, 3}, std::vector<double>{1.0, -0.5});
  for (auto* m : {&g.E, &g.W1, &g.b1, &g.W2, &g.b2})
    for (std::size_t i = 0; i < m->size(); ++i) EXPECT_EQ((*m)[i], 0.0);
  const auto names = trainable_tensors(p);
  for (const auto& t : names) EXPECT_NE(t.name.find("lora"), std::string::npos) << t.name;
}

TEST(Lora, MergePreservesLogits) {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = randomized(small_shape(), 300 + trial);
    attach_lora(p, LoraConfig{2, 3.0}, trial);
    p.lora_w1->B = random_normal(p.lora_w1->B.rows(), p.lora_w1->B.cols(), rng, 0.5);
    p.lora_w2->B = random_normal(p.lora_w2->B.rows(), p.lora_w2->B.cols(), rng, 0.5);
    const auto merged = merge_lora(p);
    EXPECT_FALSE(merged.lora_active());
    const auto ctx = random_tokens(rng, 3, 7);
    const auto a = forward_logits(p, ctx), b = forward_logits(merged, ctx);
    for (std::size_t v = 0; v < a.size(); ++v) EXPECT_NEAR(a[v], b[v], 1e-9);
    const auto d = detach_lora(p);
    EXPECT_FALSE(d.lora_active());
    EXPECT_EQ(d.W1, p.W1);
  }
}

TEST(Lora, ConfigValidation) {
  auto p = init_params(small_shape(), 1);
  EXPECT_THROW(attach_lora(p, LoraConfig{0, 1.0}, 1), ValidationError);
  EXPECT_THROW(attach_lora(p, LoraConfig{6, 1.0}, 1), ValidationError);
  EXPECT_THROW(attach_lora(p, LoraConfig{2, 0.0}, 1), ValidationError);
  attach_lora(p, LoraConfig{2, 1.0}, 1);
  EXPECT_THROW(attach_lora(p, LoraConfig{2, 1.0}, 1), Error);
  EXPECT_EQ(p.lora_w1->A.rows(), 2u);
  EXPECT_EQ(p.lora_w1->A.cols(), 12u);
  EXPECT_EQ(p.lora_w1->B.rows(), 5u);
  EXPECT_NO_THROW(validate_params(p));
}

}  // namespace
}  // namespace semrank
