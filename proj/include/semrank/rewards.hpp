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

// Reward components for tagged generations and their unweighted sum.
//
//   semantic  c * (cos(v_gen, v_gt) - cos(v_gen, v_ref)), floored at 0 by
//             default, never clipped from above
//   rouge     word-level ROUGE-L F1 against the reference explanation
//   judge     LLM judge score / 10
//   answer    1 iff <risposta> matches the gold answer after normalization
//   format    1 iff <spiegazione> and <risposta> are well formed
//   think     1 iff <think> holds non-whitespace content

#pragma once

#include <array>
#include <optional>
#include <set>
#include <atomic>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "semrank/embedder.hpp"
#include "semrank/judge.hpp"
#include "semrank/rouge.hpp"
#include "semrank/text_protocol.hpp"

namespace semrank {

enum class Component { kSemantic, kRouge, kJudge, kAnswer, kFormat, kThink };

inline constexpr std::array<Component, 6> kAllComponents = {
    Component::kSemantic, Component::kRouge,  Component::kJudge,
    Component::kAnswer,   Component::kFormat, Component::kThink};

inline std::string to_string(Component c) {
  switch (c) {
    case Component::kSemantic: return "semantic";
    case Component::kRouge: return "rouge";
    case Component::kJudge: return "judge";
    case Component::kAnswer: return "answer";
    case Component::kFormat: return "format";
    case Component::kThink: return "think";
  }
  return "?";
}

inline Component component_from_string(std::string_view s) {
  for (auto c : kAllComponents) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError("unknown reward component '" + std::string(s) + "'");
}

struct RewardConfig {
  double c = 4.0;
  bool clamp_floor = true;
  std::set<Component> enabled = {Component::kSemantic, Component::kAnswer,
                                  Component::kFormat, Component::kThink};
  // Scaled semantic rewards above this are logged.
  double anomaly_threshold = 1.5;

  bool has(Component comp) const { return enabled.contains(comp); }

  void validate() const {
    if (!(c > 0.0)) throw ValidationError("reward coefficient c must be > 0");
    if (enabled.empty()) throw ValidationError("at least one reward component must be enabled");
  }
};

struct RewardContext {
  EmbeddingVector v_gt;
  EmbeddingVector v_ref;
  std::string gt_answer;
  std::string gt_explanation;
};

struct RewardBreakdown {
  std::optional<double> semantic;
  std::optional<double> rouge;
  std::optional<double> judge;
  std::optional<double> answer;
  std::optional<double> format;
  std::optional<double> think;
  double total = 0.0;

  std::optional<double> get(Component c) const {
    switch (c) {
      case Component::kSemantic: return semantic;
      case Component::kRouge: return rouge;
      case Component::kJudge: return judge;
      case Component::kAnswer: return answer;
      case Component::kFormat: return format;
      case Component::kThink: return think;
    }
    return std::nullopt;
  }

  // Plain sum of the present components, in declaration order.
  double sum_present() const {
    double s = 0.0;
    for (auto c : kAllComponents) {
      if (auto v = get(c)) s += *v;
    }
    return s;
  }
};

inline double semantic_reward_raw(const EmbeddingVector& v_gen, const RewardContext& ctx,
                                  double c) {
  if (ctx.v_gt.dim() != ctx.v_ref.dim()) {
    throw DimensionMismatchError(ctx.v_gt.dim(), ctx.v_ref.dim());
  }
  return c * (cosine(v_gen, ctx.v_gt) - cosine(v_gen, ctx.v_ref));
}

inline double semantic_reward(const EmbeddingVector& v_gen, const RewardContext& ctx,
                              const RewardConfig& cfg) {
  const double raw = semantic_reward_raw(v_gen, ctx, cfg.c);
  if (raw > cfg.anomaly_threshold) {
    // Logged on the 1st, 2nd, 4th, 8th... occurrence to keep long runs readable.
    static std::atomic<std::uint64_t> seen{0};
    const std::uint64_t n = ++seen;
    if ((n & (n - 1)) == 0) {
      spdlog::warn("semantic reward {:.4f} above anomaly threshold {:.2f} (occurrence {})", raw,
                   cfg.anomaly_threshold, n);
    }
  }
  if (cfg.clamp_floor && raw < 0.0) return 0.0;
  return raw;
}

inline double answer_reward(const TaggedOutput& out, const RewardContext& ctx) {
  if (!out.risposta) return 0.0;
  return normalize_answer(*out.risposta) == normalize_answer(ctx.gt_answer) ? 1.0 : 0.0;
}

inline double format_reward(const TaggedOutput& out) {
  return out.structurally_valid ? 1.0 : 0.0;
}

// Whitespace-only think blocks count as empty.
inline double think_reward(const TaggedOutput& out) {
  return out.think && !trim_view(*out.think).empty() ? 1.0 : 0.0;
}

// The text that stands for "the generated explanation": the <spiegazione>
// field of a well-formed output, the raw generation otherwise.
inline std::string explanation_text(const TaggedOutput& out, const std::string& generated) {
  if (out.structurally_valid && out.spiegazione) return *out.spiegazione;
  return generated;
}

// Score / 10 from the rubric judge. An unparseable reply is retried once and
// then scored 0.
inline double judge_reward(const std::string& generated, const RewardContext& ctx,
                           JudgeClient& judge) {
  const auto req = rubric::score_request(generated, ctx.gt_explanation);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (auto s = parse_judge_score(judge.complete(req))) return *s / 10.0;
  }
  spdlog::warn("judge '{}' returned no parseable score twice; scoring 0", judge.id());
  return 0.0;
}

inline RewardBreakdown total_reward(const TaggedOutput& out, const std::string& generated,
                                    const EmbeddingVector& v_gen, const RewardContext& ctx,
                                    const RewardConfig& cfg, JudgeClient* judge = nullptr) {
  cfg.validate();
  RewardBreakdown b;
  if (cfg.has(Component::kSemantic)) b.semantic = semantic_reward(v_gen, ctx, cfg);
  if (cfg.has(Component::kRouge)) {
    b.rouge = rouge_l_f1(explanation_text(out, generated), ctx.gt_explanation);
  }
  if (cfg.has(Component::kJudge)) {
    if (judge == nullptr) throw ValidationError("judge reward enabled without a judge client");
    b.judge = judge_reward(explanation_text(out, generated), ctx, *judge);
  }
  if (cfg.has(Component::kAnswer)) b.answer = answer_reward(out, ctx);
  if (cfg.has(Component::kFormat)) b.format = format_reward(out);
  if (cfg.has(Component::kThink)) b.think = think_reward(out);
  b.total = b.sum_present();
  return b;
}

inline RewardContext make_reward_context(const std::string& gt_explanation,
                                         const std::string& gt_answer,
                                         const EmbeddingVector& v_ref, Embedder& embedder) {
  return RewardContext{embedder.embed_one(gt_explanation), v_ref, gt_answer, gt_explanation};
}

// Scores generations against one context, embedding all explanations in a
// single provider call.
class RewardScorer {
 public:
  RewardScorer(RewardConfig cfg, Embedder& embedder, JudgeClient* judge = nullptr)
      : cfg_(std::move(cfg)), embedder_(&embedder), judge_(judge) {
    cfg_.validate();
  }

  const RewardConfig& config() const { return cfg_; }
  Embedder& embedder() { return *embedder_; }

  std::vector<RewardBreakdown> score(const std::vector<std::string>& generations,
                                     const RewardContext& ctx) {
    std::vector<TaggedOutput> parsed;
    std::vector<std::string> explanations;
    parsed.reserve(generations.size());
    for (const auto& g : generations) {
      parsed.push_back(parse_tagged(g));
      explanations.push_back(explanation_text(parsed.back(), g));
    }
    std::vector<EmbeddingVector> vecs;
    if (cfg_.has(Component::kSemantic) && !generations.empty()) {
      vecs = embedder_->embed(explanations);
    }
    std::vector<RewardBreakdown> out;
    out.reserve(generations.size());
    const EmbeddingVector none;
    for (std::size_t i = 0; i < generations.size(); ++i) {
      out.push_back(total_reward(parsed[i], generations[i], vecs.empty() ? none : vecs[i],
                                 ctx, cfg_, judge_));
    }
    return out;
  }

 private:
  RewardConfig cfg_;
  Embedder* embedder_;
  JudgeClient* judge_;
};

}  // namespace semrank
