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

// Anonymized pairwise judging, sequential Elo, and answer accuracy.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "semrank/common.hpp"
#include "semrank/judge.hpp"
#include "semrank/text_protocol.hpp"

namespace semrank {

enum class Outcome { kA, kB, kTie };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kA: return "A";
    case Outcome::kB: return "B";
    case Outcome::kTie: return "TIE";
  }
  return "?";
}

inline Outcome invert(Outcome o) {
  if (o == Outcome::kA) return Outcome::kB;
  if (o == Outcome::kB) return Outcome::kA;
  return Outcome::kTie;
}

// Which explanation occupied slot 1 of the prompt.
enum class PresentedOrder { kAFirst, kBFirst };

struct MatchRecord {
  std::string item_id;
  std::string model_a;
  std::string model_b;
  std::string judge_id;
  Outcome outcome = Outcome::kTie;
  PresentedOrder presented_order = PresentedOrder::kAFirst;
  bool parsed = true;  // false when the TIE came from two unparseable replies
};

// Maps a slot verdict back to the A/B frame.
inline Outcome unshuffle(Verdict v, PresentedOrder order) {
  if (v == Verdict::kTie) return Outcome::kTie;
  const bool first = v == Verdict::kFirst;
  if (order == PresentedOrder::kAFirst) return first ? Outcome::kA : Outcome::kB;
  return first ? Outcome::kB : Outcome::kA;
}

// Judges one pair with the given presentation order.
inline MatchRecord judge_pair_ordered(const std::string& item_id, const std::string& question,
                                      const std::string& model_a, const std::string& explanation_a,
                                      const std::string& model_b, const std::string& explanation_b,
                                      JudgeClient& judge, PresentedOrder order) {
  if (model_a == model_b) throw ValidationError("a model cannot play itself: " + model_a);
  if (trim_view(explanation_a).empty() || trim_view(explanation_b).empty()) {
    throw ValidationError("empty explanation for item " + item_id);
  }
  MatchRecord rec{item_id, model_a, model_b, judge.id(), Outcome::kTie, order, true};
  const bool a_first = order == PresentedOrder::kAFirst;
  const auto req = rubric::pair_request(question, a_first ? explanation_a : explanation_b,
                                        a_first ? explanation_b : explanation_a);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (auto v = parse_pair_verdict(judge.complete(req))) {
      rec.outcome = unshuffle(*v, order);
      return rec;
    }
  }
  spdlog::warn("judge '{}' gave no verdict for item {} ({} vs {}); recording TIE", judge.id(),
               item_id, model_a, model_b);
  rec.parsed = false;
  return rec;
}

// Presentation order drawn from rng.
inline MatchRecord judge_pair(const std::string& item_id, const std::string& question,
                              const std::string& model_a, const std::string& explanation_a,
                              const std::string& model_b, const std::string& explanation_b,
                              JudgeClient& judge, Rng& rng) {
  const auto order = rng.coin() ? PresentedOrder::kBFirst : PresentedOrder::kAFirst;
  return judge_pair_ordered(item_id, question, model_a, explanation_a, model_b, explanation_b,
                            judge, order);
}

inline constexpr double kInitialElo = 1500.0;

inline double expected_score(double r_a, double r_b) {
  return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
}

// Rating deltas are rounded to multiples of 2^-20. Ratings then stay on that
// grid, where sums are exact, so updates conserve the total bit for bit.
inline constexpr double kEloQuantum = 0x1.0p-20;

inline std::pair<double, double> elo_update(double r_a, double r_b, Outcome outcome,
                                            double k = 32.0) {
  if (!(k > 0.0)) throw ValidationError("Elo k must be > 0");
  const double score_a = outcome == Outcome::kA ? 1.0 : outcome == Outcome::kB ? 0.0 : 0.5;
  const double delta = std::round(k * (score_a - expected_score(r_a, r_b)) / kEloQuantum) *
                       kEloQuantum;
  return {r_a + delta, r_b - delta};
}

struct EloTable {
  std::map<std::string, double> ratings;
  std::map<std::string, std::size_t> games;
  double k_factor = 32.0;
  double initial = kInitialElo;
  std::size_t update_count = 0;

  void add_model(const std::string& m) {
    ratings.try_emplace(m, initial);
    games.try_emplace(m, 0);
  }

  double rating(const std::string& m) const {
    const auto it = ratings.find(m);
    return it == ratings.end() ? initial : it->second;
  }

  void apply(const MatchRecord& rec) {
    add_model(rec.model_a);
    add_model(rec.model_b);
    auto [ra, rb] = elo_update(ratings[rec.model_a], ratings[rec.model_b], rec.outcome, k_factor);
    ratings[rec.model_a] = ra;
    ratings[rec.model_b] = rb;
    ++games[rec.model_a];
    ++games[rec.model_b];
    ++update_count;
  }

  double total() const {
    double s = 0.0;
    for (const auto& [m, r] : ratings) s += r;
    return s;
  }
};

// One model's outputs keyed by item id.
struct ModelOutputs {
  std::string name;
  std::map<std::string, std::string> explanations;
  std::map<std::string, std::string> answers;
};

struct ArenaItem {
  std::string id;
  std::string question;
  std::optional<std::string> gold_answer;
};

struct TournamentConfig {
  double k = 32.0;
  std::uint64_t seed = 0;
  // Judge every pair in both presentation orders instead of one random one.
  bool both_orders = false;
  // Independent seeded schedules per judge.
  std::size_t repeats = 1;
  // Concurrent judge calls; updates are still applied in schedule order.
  std::size_t parallelism = 1;
  bool bradley_terry = false;
};

struct JudgeTable {
  std::string judge_id;
  std::size_t repeat = 0;
  EloTable table;
  std::vector<MatchRecord> matches;
};

struct AggregateRow {
  std::string model;
  double mean_elo = 0.0;
  double min_elo = 0.0;
  double max_elo = 0.0;
  std::optional<double> accuracy;
  std::optional<double> bt_elo;
};

struct TournamentResult {
  std::vector<JudgeTable> tables;
  std::vector<AggregateRow> aggregate;
};

// Fraction of items whose parsed answer matches the gold answer.
inline double evaluate_accuracy(const std::vector<TaggedOutput>& outputs,
                                const std::vector<std::string>& gold) {
  if (outputs.size() != gold.size()) {
    throw ValidationError("evaluate_accuracy: outputs and gold answers differ in length");
  }
  if (outputs.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].risposta && normalize_answer(*outputs[i].risposta) == normalize_answer(gold[i])) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(outputs.size());
}

// Bradley-Terry strengths by minorization-maximization, a tie counting half a
// win for each side, reported on the Elo scale centred at 1500.
inline std::map<std::string, double> bradley_terry_elo(const std::vector<MatchRecord>& matches,
                                                       int iterations = 200) {
  std::vector<std::string> names;
  std::map<std::string, std::size_t> idx;
  for (const auto& m : matches) {
    for (const auto* n : {&m.model_a, &m.model_b}) {
      if (idx.try_emplace(*n, names.size()).second) names.push_back(*n);
    }
  }
  const std::size_t n = names.size();
  std::vector<double> wins(n, 0.0);
  std::vector<std::vector<double>> games(n, std::vector<double>(n, 0.0));
  for (const auto& m : matches) {
    const auto a = idx[m.model_a];
    const auto b = idx[m.model_b];
    games[a][b] += 1.0;
    games[b][a] += 1.0;
    const double sa = m.outcome == Outcome::kA ? 1.0 : m.outcome == Outcome::kB ? 0.0 : 0.5;
    wins[a] += sa;
    wins[b] += 1.0 - sa;
  }
  // A half-game pseudo-count against a virtual average opponent keeps
  // undefeated or winless models finite.
  std::vector<double> p(n, 1.0);
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 1.0 / (p[i] + 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && games[i][j] > 0.0) denom += games[i][j] / (p[i] + p[j]);
      }
      next[i] = (wins[i] + 0.5) / denom;
    }
    double log_mean = 0.0;
    for (double v : next) log_mean += std::log(v);
    log_mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = next[i] / std::exp(log_mean);
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < n; ++i) {
    out[names[i]] = kInitialElo + 400.0 * std::log10(p[i]);
  }
  return out;
}

namespace detail {

struct ScheduledMatch {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t item = 0;
  PresentedOrder order = PresentedOrder::kAFirst;
};

}  // namespace detail

// Every unordered model pair on every item, per judge and repeat, in a
// seeded shuffled order. Seeds depend on model positions, not names.
inline TournamentResult run_tournament(const std::vector<ModelOutputs>& models,
                                       const std::vector<ArenaItem>& items,
                                       const std::vector<JudgeClient*>& judges,
                                       const TournamentConfig& cfg) {
  if (models.size() < 2) throw ValidationError("a tournament needs at least two models");
  if (judges.empty()) throw ValidationError("a tournament needs at least one judge");
  if (cfg.repeats == 0) throw ValidationError("repeats must be >= 1");
  if (!(cfg.k > 0.0)) throw ValidationError("Elo k must be > 0");
  for (const auto& m : models) {
    for (const auto& it : items) {
      const auto e = m.explanations.find(it.id);
      if (e == m.explanations.end()) {
        throw ValidationError(fmt::format("model '{}' has no explanation for item '{}'", m.name, it.id));
      }
    }
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      if (models[i].name == models[j].name) throw ValidationError("duplicate model " + models[i].name);
    }
  }

  TournamentResult result;
  for (std::size_t jdx = 0; jdx < judges.size(); ++jdx) {
    JudgeClient& judge = *judges[jdx];
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      Rng rng(derive_seed(cfg.seed, fmt::format("tournament/{}/{}", jdx, rep)));
      std::vector<detail::ScheduledMatch> schedule;
      for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
          for (std::size_t it = 0; it < items.size(); ++it) {
            if (cfg.both_orders) {
              schedule.push_back({a, b, it, PresentedOrder::kAFirst});
              schedule.push_back({a, b, it, PresentedOrder::kBFirst});
            } else {
              schedule.push_back({a, b, it, PresentedOrder::kAFirst});
            }
          }
        }
      }
      rng.shuffle(schedule);
      if (!cfg.both_orders) {
        for (auto& s : schedule) s.order = rng.coin() ? PresentedOrder::kBFirst : PresentedOrder::kAFirst;
      }

      auto play = [&](const detail::ScheduledMatch& s) {
        const auto& item = items[s.item];
        const auto& ma = models[s.a];
        const auto& mb = models[s.b];
        // A blank explanation forfeits without asking the judge.
        const bool blank_a = trim_view(ma.explanations.at(item.id)).empty();
        const bool blank_b = trim_view(mb.explanations.at(item.id)).empty();
        if (blank_a || blank_b) {
          const auto o = blank_a && blank_b ? Outcome::kTie : (blank_a ? Outcome::kB : Outcome::kA);
          return MatchRecord{item.id, ma.name, mb.name, judge.id(), o, s.order, true};
        }
        return judge_pair_ordered(item.id, item.question, ma.name, ma.explanations.at(item.id),
                                  mb.name, mb.explanations.at(item.id), judge, s.order);
      };

      JudgeTable jt;
      jt.judge_id = judge.id();
      jt.repeat = rep;
      jt.table.k_factor = cfg.k;
      for (const auto& m : models) jt.table.add_model(m.name);
      jt.matches.reserve(schedule.size());
      const std::size_t wave = std::max<std::size_t>(1, cfg.parallelism);
      for (std::size_t start = 0; start < schedule.size(); start += wave) {
        const std::size_t end = std::min(schedule.size(), start + wave);
        if (wave == 1) {
          jt.matches.push_back(play(schedule[start]));
          continue;
        }
        std::vector<std::future<MatchRecord>> futs;
        for (std::size_t i = start; i < end; ++i) {
          futs.push_back(std::async(std::launch::async, play, std::cref(schedule[i])));
        }
        for (auto& f : futs) jt.matches.push_back(f.get());
      }
      for (const auto& rec : jt.matches) jt.table.apply(rec);
      result.tables.push_back(std::move(jt));
    }
  }

  std::map<std::string, double> bt;
  if (cfg.bradley_terry) {
    std::vector<MatchRecord> all;
    for (const auto& t : result.tables) all.insert(all.end(), t.matches.begin(), t.matches.end());
    bt = bradley_terry_elo(all);
  }
  const bool have_gold =
      !items.empty() && std::all_of(items.begin(), items.end(),
                                    [](const ArenaItem& it) { return it.gold_answer.has_value(); });
  for (const auto& m : models) {
    AggregateRow row;
    row.model = m.name;
    row.min_elo = std::numeric_limits<double>::infinity();
    row.max_elo = -std::numeric_limits<double>::infinity();
    for (const auto& t : result.tables) {
      const double r = t.table.rating(m.name);
      row.mean_elo += r;
      row.min_elo = std::min(row.min_elo, r);
      row.max_elo = std::max(row.max_elo, r);
    }
    row.mean_elo /= static_cast<double>(result.tables.size());
    if (have_gold) {
      std::vector<TaggedOutput> outs;
      std::vector<std::string> gold;
      for (const auto& it : items) {
        TaggedOutput o;
        if (auto a = m.answers.find(it.id); a != m.answers.end()) o.risposta = a->second;
        outs.push_back(std::move(o));
        gold.push_back(*it.gold_answer);
      }
      row.accuracy = evaluate_accuracy(outs, gold);
    }
    if (auto b = bt.find(m.name); b != bt.end()) row.bt_elo = b->second;
    result.aggregate.push_back(std::move(row));
  }
  return result;
}

inline std::string ratings_csv(const TournamentResult& r) {
  std::string out = "model,judge,elo,games\n";
  for (const auto& t : r.tables) {
    const std::string judge = t.repeat == 0 ? t.judge_id : fmt::format("{}#{}", t.judge_id, t.repeat);
    for (const auto& [model, elo] : t.table.ratings) {
      out += fmt::format("{},{},{:.6f},{}\n", model, judge, elo, t.table.games.at(model));
    }
  }
  return out;
}

inline std::string aggregate_csv(const TournamentResult& r) {
  std::string out = "model,mean_elo,min_elo,max_elo,accuracy\n";
  for (const auto& a : r.aggregate) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{}\n", a.model, a.mean_elo, a.min_elo, a.max_elo,
                       a.accuracy ? fmt::format("{:.6f}", *a.accuracy) : std::string());
  }
  return out;
}

inline std::string matches_csv(const TournamentResult& r) {
  std::string out = "judge,repeat,item_id,model_a,model_b,presented_first,outcome,parsed\n";
  for (const auto& t : r.tables) {
    for (const auto& m : t.matches) {
      out += fmt::format("{},{},{},{},{},{},{},{}\n", t.judge_id, t.repeat, m.item_id, m.model_a,
                         m.model_b,
                         m.presented_order == PresentedOrder::kAFirst ? m.model_a : m.model_b,
                         to_string(m.outcome), m.parsed ? 1 : 0);
    }
  }
  return out;
}

// One JSON-lines file per model, {"item_id", "explanation", "answer"} per
// line. The model name is the file stem.
inline ModelOutputs read_model_outputs(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read " + path.string());
  ModelOutputs m;
  m.name = path.stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim_view(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
    const auto id = j.at("item_id").get<std::string>();
    m.explanations[id] = j.value("explanation", std::string());
    if (j.contains("answer") && j["answer"].is_string()) m.answers[id] = j["answer"].get<std::string>();
  }
  return m;
}

inline std::vector<ModelOutputs> read_model_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ModelOutputs> out;
  for (const auto& p : files) out.push_back(read_model_outputs(p));
  return out;
}

}  // namespace semrank
