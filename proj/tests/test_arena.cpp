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
#include <string>
#include <vector>

#include "oracles.hpp"
#include "semrank/arena.hpp"

namespace semrank {
namespace {

// Prefers whichever slot contains `marker`; otherwise replies `fallback`.
class MarkerJudge : public JudgeClient {
 public:
  MarkerJudge(std::string marker, std::string id, std::string fallback = "TIE")
      : marker_(std::move(marker)), id_(std::move(id)), fallback_(std::move(fallback)) {}
  std::string complete(const ChatRequest& req) override {
    ++calls;
    const auto s1 = rubric::section(req.user, rubric::kSlot1Open, rubric::kSlot1Close).value_or("");
    const auto s2 = rubric::section(req.user, rubric::kSlot2Open, rubric::kSlot2Close).value_or("");
    const bool in1 = s1.find(marker_) != std::string::npos;
    const bool in2 = s2.find(marker_) != std::string::npos;
    if (in1 && !in2) return "1";
    if (in2 && !in1) return "2";
    return fallback_;
  }
  std::string id() const override { return id_; }
  int calls = 0;

 private:
  std::string marker_, id_, fallback_;
};

std::vector<ModelOutputs> models_for(std::size_t n_items, const std::vector<std::string>& names) {
  std::vector<ModelOutputs> out;
  for (std::size_t m = 0; m < names.size(); ++m) {
    ModelOutputs mo;
    mo.name = names[m];
    for (std::size_t i = 0; i < n_items; ++i) {
      const auto id = "q" + std::to_string(i);
      mo.explanations[id] = names[m] + "-expl " + std::string(1 + (i * 7 + m * 3) % 11, 'x');
      mo.answers[id] = i % (m + 2) == 0 ? "A" : "B";
    }
    out.push_back(std::move(mo));
  }
  return out;
}

std::vector<ArenaItem> items_for(std::size_t n) {
  std::vector<ArenaItem> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"q" + std::to_string(i), "domanda " + std::to_string(i), "A"});
  return out;
}

TEST(EloUpdate, Examples) {
  EXPECT_EQ(elo_update(1500, 1500, Outcome::kTie, 32), std::make_pair(1500.0, 1500.0));
  EXPECT_EQ(elo_update(1500, 1500, Outcome::kA, 32), std::make_pair(1516.0, 1484.0));
  const auto [a, b] = elo_update(1600, 1400, Outcome::kA, 32);
  const double expect_a = 1.0 / (1.0 + std::pow(10.0, -0.5));
  EXPECT_NEAR(expect_a, 0.7597, 1e-4);
  EXPECT_NEAR(a - 1600, 32 * (1 - expect_a), 1e-6);
  EXPECT_NEAR(a - 1600, 7.69, 1e-2);
  EXPECT_LT(a - 1600, 16.0);
  EXPECT_EQ(a + b, 3000.0);
  EXPECT_THROW(elo_update(1500, 1500, Outcome::kA, 0), ValidationError);
}

TEST(EloUpdate, ZeroSumAndMirror) {
  Rng rng(41);
  for (int i = 0; i < 10000; ++i) {
    const double ra = 1500 + std::round(rng.normal(0, 200) * 1048576.0) / 1048576.0;
    const double rb = 1500 + std::round(rng.normal(0, 200) * 1048576.0) / 1048576.0;
    const auto o = static_cast<Outcome>(rng.below(3));
    const double k = 1 + 63 * rng.uniform();
    const auto [a, b] = elo_update(ra, rb, o, k);
    EXPECT_EQ(a + b, ra + rb);
    const auto [b2, a2] = elo_update(rb, ra, invert(o), k);
    EXPECT_EQ(a, a2);
    EXPECT_EQ(b, b2);
  }
}

TEST(EloTable, SumConservedOverLongSequence) {
  EloTable t;
  Rng rng(42);
  const std::vector<std::string> names = {"a", "b", "c", "d"};
  for (const auto& n : names) t.add_model(n);
  for (int i = 0; i < 20000; ++i) {
    const auto x = rng.below(4), y = (x + 1 + rng.below(3)) % 4;
    MatchRecord r;
    r.model_a = names[x];
    r.model_b = names[y];
    r.outcome = static_cast<Outcome>(rng.below(3));
    t.apply(r);
  }
  EXPECT_EQ(t.total(), 4 * 1500.0);
  EXPECT_EQ(t.update_count, 20000u);
}

TEST(Unshuffle, OrderMappingTable) {
  EXPECT_EQ(unshuffle(Verdict::kFirst, PresentedOrder::kAFirst), Outcome::kA);
  EXPECT_EQ(unshuffle(Verdict::kSecond, PresentedOrder::kAFirst), Outcome::kB);
  EXPECT_EQ(unshuffle(Verdict::kFirst, PresentedOrder::kBFirst), Outcome::kB);
  EXPECT_EQ(unshuffle(Verdict::kSecond, PresentedOrder::kBFirst), Outcome::kA);
  EXPECT_EQ(unshuffle(Verdict::kTie, PresentedOrder::kBFirst), Outcome::kTie);
}

TEST(JudgePair, LongerWinsInBothOrders) {
  MockJudge j(MockRule::kPreferLonger);
  for (auto order : {PresentedOrder::kAFirst, PresentedOrder::kBFirst}) {
    EXPECT_EQ(judge_pair_ordered("q", "d", "m1", "molto piu lunga", "m2", "corta", j, order).outcome, Outcome::kA);
    EXPECT_EQ(judge_pair_ordered("q", "d", "m1", "corta", "m2", "molto piu lunga", j, order).outcome, Outcome::kB);
    EXPECT_EQ(judge_pair_ordered("q", "d", "m1", "uguale", "m2", "uguale", j, order).outcome, Outcome::kTie);
  }
}

TEST(JudgePair, UnparseableRetriedThenTie) {
  MarkerJudge j("never", "garbage", "boh");
  const auto r = judge_pair_ordered("q", "d", "m1", "a", "m2", "b", j, PresentedOrder::kAFirst);
  EXPECT_EQ(r.outcome, Outcome::kTie);
  EXPECT_FALSE(r.parsed);
  EXPECT_EQ(j.calls, 2);
}

TEST(JudgePair, Validation) {
  MockJudge j(MockRule::kPreferLonger);
  EXPECT_THROW(judge_pair_ordered("q", "d", "m", "a", "m", "b", j, PresentedOrder::kAFirst), ValidationError);
  EXPECT_THROW(judge_pair_ordered("q", "d", "m1", "  ", "m2", "b", j, PresentedOrder::kAFirst), ValidationError);
}

TEST(JudgePair, PresentationOrderIsBalanced) {
  MockJudge j(MockRule::kFixedScore);
  Rng rng(43);
  int a_first = 0;
  for (int i = 0; i < 10000; ++i) {
    if (judge_pair("q", "d", "m1", "a", "m2", "b", j, rng).presented_order == PresentedOrder::kAFirst) ++a_first;
  }
  EXPECT_NEAR(a_first / 10000.0, 0.5, 0.02);
}

TEST(Tournament, DominanceRanksFirstForAnyItemCount) {
  for (std::size_t n : {1u, 2u, 5u, 20u}) {
    MarkerJudge j("X-expl", "dominance");
    const auto res = run_tournament(models_for(n, {"W", "X", "Y"}), items_for(n), {&j}, TournamentConfig{});
    const auto& t = res.tables[0].table;
    EXPECT_GT(t.rating("X"), t.rating("W")) << n;
    EXPECT_GT(t.rating("X"), t.rating("Y")) << n;
  }
}

TEST(Tournament, BlankExplanationForfeits) {
  auto models = models_for(4, {"m1", "m2", "m3"});
  models[1].explanations["q2"] = "  ";
  models[2].explanations["q2"] = "";
  MarkerJudge j("never", "neutral");
  const auto r = run_tournament(models, items_for(4), {&j}, TournamentConfig{});
  EXPECT_EQ(j.calls, 9);
  for (const auto& m : r.tables[0].matches) {
    if (m.item_id != "q2") continue;
    if (m.model_a == "m1") EXPECT_EQ(m.outcome, Outcome::kA);
    if (m.model_a == "m2" && m.model_b == "m3") EXPECT_EQ(m.outcome, Outcome::kTie);
  }
  EXPECT_GT(r.tables[0].table.rating("m1"), r.tables[0].table.rating("m2"));
}

TEST(Tournament, ConservationAndDeterminism) {
  MockJudge j1(MockRule::kPreferLonger), j2(MockRule::kPreferShorter), j3(MockRule::kPreferLexicalOverlap);
  const auto models = models_for(50, {"m1", "m2", "m3"});
  const auto items = items_for(50);
  TournamentConfig cfg;
  cfg.seed = 9;
  const auto r1 = run_tournament(models, items, {&j1, &j2, &j3}, cfg);
  ASSERT_EQ(r1.tables.size(), 3u);
  for (const auto& t : r1.tables) {
    EXPECT_NEAR(t.table.total(), 3 * 1500.0, 1e-6);
    EXPECT_EQ(t.matches.size(), 150u);
  }
  const auto r2 = run_tournament(models, items, {&j1, &j2, &j3}, cfg);
  EXPECT_EQ(ratings_csv(r1), ratings_csv(r2));
  EXPECT_EQ(matches_csv(r1), matches_csv(r2));
  cfg.parallelism = 4;
  EXPECT_EQ(ratings_csv(run_tournament(models, items, {&j1, &j2, &j3}, cfg)), ratings_csv(r1));
}

TEST(Tournament, AggregateWhiskersFromDisagreeingJudges) {
  MockJudge longer(MockRule::kPreferLonger), shorter(MockRule::kPreferShorter);
  auto models = models_for(30, {"m1", "m2"});
  for (auto& [id, e] : models[0].explanations) e += " con molti dettagli in piu";
  const auto res = run_tournament(models, items_for(30), {&longer, &shorter}, TournamentConfig{});
  ASSERT_EQ(res.aggregate.size(), 2u);
  for (const auto& row : res.aggregate) {
    double lo = 1e9, hi = -1e9, mean = 0;
    for (const auto& t : res.tables) {
      lo = std::min(lo, t.table.rating(row.model));
      hi = std::max(hi, t.table.rating(row.model));
      mean += t.table.rating(row.model) / 2;
    }
    EXPECT_EQ(row.min_elo, lo);
    EXPECT_EQ(row.max_elo, hi);
    EXPECT_DOUBLE_EQ(row.mean_elo, mean);
    EXPECT_LT(row.min_elo, 1500.0);
    EXPECT_GT(row.max_elo, 1500.0);
    EXPECT_LE(row.min_elo, row.mean_elo);
    EXPECT_LE(row.mean_elo, row.max_elo);
  }
  EXPECT_EQ(aggregate_csv(res).substr(0, aggregate_csv(res).find('\n')), "model,mean_elo,min_elo,max_elo,accuracy");
}

TEST(Tournament, RenamingOnlyChangesLabels) {
  MockJudge j(MockRule::kPreferLonger);
  const auto a = run_tournament(models_for(10, {"m1", "m2", "m3"}), items_for(10), {&j}, TournamentConfig{});
  auto renamed = models_for(10, {"m1", "m2", "m3"});
  const std::vector<std::string> alias = {"zeta", "alfa", "kappa"};
  for (std::size_t i = 0; i < 3; ++i) renamed[i].name = alias[i];
  const auto b = run_tournament(renamed, items_for(10), {&j}, TournamentConfig{});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.tables[0].table.rating("m" + std::to_string(i + 1)), b.tables[0].table.rating(alias[i]));
  }
}

TEST(Tournament, Validation) {
  MockJudge j(MockRule::kPreferLonger);
  auto models = models_for(3, {"m1", "m2"});
  EXPECT_THROW(run_tournament({models[0]}, items_for(3), {&j}, TournamentConfig{}), ValidationError);
  EXPECT_THROW(run_tournament(models, items_for(3), {}, TournamentConfig{}), ValidationError);
  models[1].explanations.erase("q2");
  EXPECT_THROW(run_tournament(models, items_for(3), {&j}, TournamentConfig{}), ValidationError);
}

TEST(Tournament, BothOrdersAndRepeats) {
  MockJudge j(MockRule::kPreferLonger);
  TournamentConfig cfg;
  cfg.both_orders = true;
  cfg.repeats = 2;
  const auto r = run_tournament(models_for(4, {"m1", "m2"}), items_for(4), {&j}, cfg);
  ASSERT_EQ(r.tables.size(), 2u);
  EXPECT_EQ(r.tables[0].matches.size(), 8u);
  EXPECT_NE(ratings_csv(r).find("#1"), std::string::npos);
}

TEST(Accuracy, Examples) {
  auto outs = [](std::size_t n, std::size_t correct) {
    std::vector<TaggedOutput> o(n);
    for (std::size_t i = 0; i < n; ++i) o[i].risposta = i < correct ? "A" : "B";
    return o;
  };
  const std::vector<std::string> gold(50, "A");
  EXPECT_EQ(evaluate_accuracy(outs(50, 50), gold), 1.0);
  EXPECT_EQ(evaluate_accuracy(outs(50, 0), gold), 0.0);
  EXPECT_DOUBLE_EQ(evaluate_accuracy(outs(50, 29), gold), 0.58);
  EXPECT_THROW(evaluate_accuracy(outs(3, 1), gold), ValidationError);
}

TEST(BradleyTerry, OrdersByStrength) {
  std::vector<MatchRecord> ms;
  for (int i = 0; i < 30; ++i) {
    ms.push_back({"q", "strong", "weak", "j", i % 5 == 0 ? Outcome::kB : Outcome::kA});
    ms.push_back({"q", "mid", "weak", "j", i % 2 == 0 ? Outcome::kA : Outcome::kTie});
  }
  const auto bt = bradley_terry_elo(ms);
  EXPECT_GT(bt.at("strong"), bt.at("weak"));
  EXPECT_GT(bt.at("mid"), bt.at("weak"));
  for (const auto& [m, r] : bt) EXPECT_TRUE(std::isfinite(r));
}

TEST(ModelOutputsIo, ReadsJsonlDirectory) {
  const auto dir = oracle::fresh_dir("arena_io");
  std::ofstream(dir / "beta.jsonl") << R"({"item_id":"q1","explanation":"e1","answer":"A"})" << "\n\n"
                                    << R"({"item_id":"q2","explanation":"e2","answer":null})" << "\n";
  std::ofstream(dir / "alfa.jsonl") << R"({"item_id":"q1","explanation":"x"})" << "\n";
  std::ofstream(dir / "ignored.txt") << "nope";
  const auto ms = read_model_dir(dir);
  ASSERT_EQ(ms.size(), 2u);
  EXPECT_EQ(ms[0].name, "alfa");
  EXPECT_EQ(ms[1].explanations.at("q2"), "e2");
  EXPECT_EQ(ms[1].answers.count("q2"), 0u);
  std::ofstream(dir / "broken.jsonl") << "{not json\n";
  EXPECT_THROW(read_model_dir(dir), ValidationError);
}

}  // namespace
}  // namespace semrank
