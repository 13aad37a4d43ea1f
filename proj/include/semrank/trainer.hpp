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

// Training stages: causal-LM continued pre-training, prompt-masked SFT, and
// GRPO (group-relative advantages, clipped surrogate, k3 KL to a frozen
// reference).

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "semrank/checkpoint.hpp"
#include "semrank/optim.hpp"
#include "semrank/policy.hpp"
#include "semrank/rewards.hpp"
#include "semrank/vocab.hpp"

namespace semrank {

class NanLossError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Shared pieces

// -sum_t mask_t * log pi(tokens_t | preceding window), with the first token
// predicted from an all-PAD context.
inline double masked_nll(const Forward& fwd, std::span<const TokenId> tokens,
                         std::span<const double> mask) {
  if (tokens.size() != mask.size()) throw Error("one mask entry per token required");
  const auto lp = logprob_sequence(fwd, {}, tokens);
  double s = 0.0;
  for (std::size_t t = 0; t < lp.size(); ++t) s -= mask[t] * lp[t];
  return s;
}

struct EpochLoss {
  std::size_t epoch = 0;
  double mean_loss = 0.0;  // nats per supervised token
};

struct StageResult {
  std::vector<EpochLoss> epochs;
  std::vector<double> step_loss;
  std::size_t steps = 0;
};

struct MaskedSequence {
  std::vector<TokenId> tokens;
  std::vector<double> mask;  // 1 for supervised positions
};

// Minibatch teacher-forced training on masked sequences. Each optimizer step
// minimizes the mean NLL over the supervised tokens of its batch.
struct SupervisedConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  LrSchedule schedule;  // total_steps == 0 means "derive from data"
  std::uint64_t seed = 0;
  // Stop after this many optimizer steps (across epochs) when set.
  std::optional<std::size_t> max_steps;
};

inline std::size_t steps_per_epoch(std::size_t n, std::size_t batch) {
  return (n + batch - 1) / batch;
}

inline StageResult train_supervised(const std::vector<MaskedSequence>& data, PolicyParams& params,
                                    Optimizer& opt, SupervisedConfig cfg) {
  if (data.empty()) throw ValidationError("training data is empty");
  if (cfg.batch_size == 0) throw ValidationError("batch_size must be positive");
  const std::size_t per_epoch = steps_per_epoch(data.size(), cfg.batch_size);
  if (cfg.schedule.total_steps == 0) {
    cfg.schedule.total_steps = per_epoch * cfg.epochs;
    if (cfg.max_steps) cfg.schedule.total_steps = std::min(cfg.schedule.total_steps, *cfg.max_steps);
    cfg.schedule.warmup_steps = std::min(cfg.schedule.warmup_steps, cfg.schedule.total_steps);
  }
  cfg.schedule.validate();

  StageResult result;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(cfg.seed, "supervised-order"));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.max_steps && result.steps >= *cfg.max_steps) break;
    rng.shuffle(order);
    double epoch_loss = 0.0;
    double epoch_tokens = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      if (cfg.max_steps && result.steps >= *cfg.max_steps) break;
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(data.size(), lo + cfg.batch_size);
      double n_tok = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        for (double m : data[order[i]].mask) n_tok += m;
      }
      if (n_tok == 0.0) continue;

      PolicyParams grads = zeros_like(params);
      double batch_loss = 0.0;
      {
        Forward fwd(params);
        for (std::size_t i = lo; i < hi; ++i) {
          const auto& seq = data[order[i]];
          std::vector<double> g(seq.mask.size());
          for (std::size_t t = 0; t < g.size(); ++t) g[t] = -seq.mask[t] / n_tok;
          const auto lp = accumulate_backward(fwd, {}, seq.tokens, g, 1.0, grads);
          for (std::size_t t = 0; t < lp.size(); ++t) batch_loss -= seq.mask[t] * lp[t];
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw NanLossError(fmt::format("non-finite loss at step {}", result.steps));
      }
      finalize_gradients(params, grads);
      auto ps = trainable_tensors(params);
      const auto gs = trainable_tensors(grads);
      opt.step(ps, gs, lr_at(cfg.schedule, result.steps));
      ++result.steps;
      result.step_loss.push_back(batch_loss / n_tok);
      epoch_loss += batch_loss;
      epoch_tokens += n_tok;
    }
    if (epoch_tokens > 0.0) result.epochs.push_back({epoch, epoch_loss / epoch_tokens});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Stage I: causal LM

struct ClmConfig {
  std::size_t seq_len = 128;
  SupervisedConfig train;
};

// Splits each chunk into windows of seq_len tokens and supervises every
// position.
inline std::vector<MaskedSequence> clm_sequences(const std::vector<std::vector<TokenId>>& chunks,
                                                 std::size_t seq_len) {
  if (seq_len == 0) throw ValidationError("seq_len must be positive");
  std::vector<MaskedSequence> out;
  for (const auto& c : chunks) {
    for (std::size_t s = 0; s < c.size(); s += seq_len) {
      const std::size_t e = std::min(c.size(), s + seq_len);
      MaskedSequence m;
      m.tokens.assign(c.begin() + static_cast<std::ptrdiff_t>(s),
                      c.begin() + static_cast<std::ptrdiff_t>(e));
      m.mask.assign(m.tokens.size(), 1.0);
      out.push_back(std::move(m));
    }
  }
  return out;
}

inline StageResult train_clm(const std::vector<std::vector<TokenId>>& chunks, PolicyParams& params,
                             Optimizer& opt, const ClmConfig& cfg) {
  auto seqs = clm_sequences(chunks, cfg.seq_len);
  if (seqs.empty()) throw ValidationError("corpus is empty");
  return train_supervised(seqs, params, opt, cfg.train);
}

// Per-step loss CSV of a supervised stage.
inline std::string stage_metrics_csv(const StageResult& r) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < r.step_loss.size(); ++i) {
    out += fmt::format("{},{:.10g}\n", i, r.step_loss[i]);
  }
  return out;
}

// Runs the same CLM stage from the same initial weights once per optimizer.
struct AblationArm {
  std::string optimizer;
  PolicyParams params;
  StageResult result;
};

inline std::vector<AblationArm> cpt_ablation(const std::vector<std::vector<TokenId>>& chunks,
                                             const PolicyParams& init,
                                             const std::vector<std::string>& optimizers,
                                             const ClmConfig& cfg, double weight_decay = 0.0) {
  std::vector<AblationArm> arms;
  for (const auto& name : optimizers) {
    AblationArm arm{name, init, {}};
    auto opt = make_optimizer(name, weight_decay);
    arm.result = train_clm(chunks, arm.params, *opt, cfg);
    arms.push_back(std::move(arm));
  }
  return arms;
}

// step,{name}_loss,... ; arms that stopped early leave empty cells.
inline std::string ablation_csv(const std::vector<AblationArm>& arms) {
  std::string out = "step";
  std::size_t n = 0;
  for (const auto& a : arms) {
    out += "," + a.optimizer + "_loss";
    n = std::max(n, a.result.step_loss.size());
  }
  out += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(i);
    for (const auto& a : arms) {
      out += ',';
      if (i < a.result.step_loss.size()) out += fmt::format("{:.10g}", a.result.step_loss[i]);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage II: SFT

struct SftExample {
  std::vector<TokenId> prompt;
  std::vector<TokenId> completion;
};

// Prompt tokens are masked out of the loss unless mask_prompt is false.
inline MaskedSequence sft_sequence(const SftExample& ex, bool mask_prompt = true) {
  if (ex.completion.empty()) throw ValidationError("SFT item has an empty completion");
  MaskedSequence m;
  m.tokens = concat_tokens(ex.prompt, ex.completion);
  m.mask.assign(m.tokens.size(), 1.0);
  if (mask_prompt) std::fill(m.mask.begin(), m.mask.begin() + static_cast<std::ptrdiff_t>(ex.prompt.size()), 0.0);
  return m;
}

inline StageResult train_sft(const std::vector<SftExample>& items, PolicyParams& params,
                             Optimizer& opt, const SupervisedConfig& cfg, bool mask_prompt = true) {
  std::vector<MaskedSequence> seqs;
  seqs.reserve(items.size());
  for (const auto& it : items) seqs.push_back(sft_sequence(it, mask_prompt));
  return train_supervised(seqs, params, opt, cfg);
}

// ---------------------------------------------------------------------------
// Stage III: GRPO

struct GrpoConfig {
  std::size_t group_size = 6;
  double clip_eps = 0.2;
  double kl_coeff = 0.05;
  double temperature = 0.7;
  std::size_t steps = 1000;
  double adv_eps = 1e-4;
  std::size_t prompts_per_step = 4;
  std::size_t inner_epochs = 1;
  std::size_t max_new_tokens = 96;
  // Weight tokens equally across the batch instead of averaging per sequence
  // first.
  bool token_weighted = false;
  // total_steps == 0 means "steps" when driven by run_grpo.
  LrSchedule schedule{1e-3, 0, 0};
  std::uint64_t seed = 0;

  void validate() const {
    if (group_size < 2) throw ValidationError("GRPO group size must be >= 2");
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ValidationError("clip epsilon must be in (0, 1)");
    if (kl_coeff < 0.0) throw ValidationError("KL coefficient must be >= 0");
    if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
    if (prompts_per_step == 0) throw ValidationError("prompts_per_step must be >= 1");
    if (inner_epochs == 0) throw ValidationError("inner_epochs must be >= 1");
    if (max_new_tokens == 0) throw ValidationError("max_new_tokens must be >= 1");
  }
};

// A_i = (r_i - mean) / (std_pop + adv_eps); identically zero when std_pop <
// adv_eps.
inline std::vector<double> group_advantages(std::span<const double> rewards, double adv_eps = 1e-4) {
  if (rewards.size() < 2) throw Error("group_advantages needs at least two rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> a(rewards.size(), 0.0);
  if (sd < adv_eps) return a;
  for (std::size_t i = 0; i < rewards.size(); ++i) a[i] = (rewards[i] - mean) / (sd + adv_eps);
  return a;
}

// k3 estimator exp(d) - d - 1 with d = logp_ref - logp_new. Always >= 0.
inline double k3_kl(double logp_ref, double logp_new) {
  const double d = logp_ref - logp_new;
  return std::expm1(d) - d;
}

struct SurrogateTerm {
  double value = 0.0;       // min(rho A, clip(rho) A)
  bool unclipped = true;    // gradient flows through rho A
};

inline SurrogateTerm clipped_surrogate(double ratio, double advantage, double eps) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage;
  if (unclipped <= clipped) return {unclipped, true};
  return {clipped, false};
}

struct GrpoPrompt {
  std::string id;
  std::vector<TokenId> prompt;
  RewardContext ctx;
};

struct RolloutGroup {
  const GrpoPrompt* prompt = nullptr;
  std::vector<SampledSequence> samples;
  std::vector<std::string> texts;
  std::vector<RewardBreakdown> rewards;
  std::vector<double> advantages;
};

struct StepMetrics {
  std::size_t step = 0;
  double mean_total = 0.0;
  std::optional<double> mean_semantic;
  std::optional<double> mean_rouge;
  std::optional<double> mean_judge;
  std::optional<double> mean_answer;
  std::optional<double> mean_format;
  std::optional<double> mean_think;
  double mean_kl = 0.0;
  double loss = 0.0;
  double lr = 0.0;
  // max over tokens of |surrogate| / ((1 + eps) |A|); never above 1.
  double max_surrogate_bound_ratio = 0.0;
};

// Scores K decoded generations for one prompt.
using RewardFn =
    std::function<std::vector<RewardBreakdown>(const std::vector<std::string>&, const RewardContext&)>;

struct TrainState {
  PolicyParams policy;
  PolicyParams reference;  // frozen
  std::unique_ptr<Optimizer> optimizer;
  std::size_t step = 0;
  std::vector<StepMetrics> history;
};

inline std::string decode_completion(const Tokenizer& tok, const std::vector<TokenId>& ids) {
  return tok.decode(ids);
}

// One GRPO update over a batch of prompts.
inline StepMetrics grpo_step(TrainState& state, const std::vector<const GrpoPrompt*>& batch,
                             const RewardFn& reward_fn, const GrpoConfig& cfg, const Tokenizer& tok,
                             std::vector<RolloutGroup>* groups_out = nullptr) {
  cfg.validate();
  if (batch.empty()) throw Error("grpo_step needs at least one prompt");
  const std::size_t K = cfg.group_size;
  const double eps = cfg.clip_eps;

  std::vector<RolloutGroup> groups(batch.size());
  {
    const Forward fwd_old(state.policy);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto& g = groups[b];
      g.prompt = batch[b];
      for (std::size_t k = 0; k < K; ++k) {
        const auto seed = derive_seed(cfg.seed, fmt::format("rollout/{}/{}/{}", state.step, b, k));
        g.samples.push_back(sample_sequence(fwd_old, g.prompt->prompt, cfg.temperature,
                                            cfg.max_new_tokens, CharVocab::kEos, seed));
        g.texts.push_back(decode_completion(tok, g.samples.back().tokens));
      }
      g.rewards = reward_fn(g.texts, g.prompt->ctx);
      std::vector<double> totals;
      for (const auto& r : g.rewards) totals.push_back(r.total);
      g.advantages = group_advantages(totals, cfg.adv_eps);
    }
  }

  std::size_t total_tokens = 0;
  for (const auto& g : groups)
    for (const auto& s : g.samples) total_tokens += s.tokens.size();

  const Forward fwd_ref(state.reference);
  std::vector<std::vector<std::vector<double>>> ref_lp(groups.size());
  for (std::size_t b = 0; b < groups.size(); ++b) {
    for (const auto& s : groups[b].samples) {
      ref_lp[b].push_back(logprob_sequence(fwd_ref, s.prompt, s.tokens, cfg.temperature));
    }
  }

  StepMetrics m;
  m.step = state.step;
  m.lr = lr_at(cfg.schedule, state.step);
  for (std::size_t epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
    PolicyParams grads = zeros_like(state.policy);
    double loss = 0.0;
    double kl_sum = 0.0;
    double bound = 0.0;
    {
      const Forward fwd_new(state.policy);
      for (std::size_t b = 0; b < groups.size(); ++b) {
        const auto& g = groups[b];
        for (std::size_t k = 0; k < K; ++k) {
          const auto& s = g.samples[k];
          const double A = g.advantages[k];
          const std::size_t T = s.tokens.size();
          const auto new_lp = epoch == 0 ? s.logprobs
                                         : logprob_sequence(fwd_new, s.prompt, s.tokens, cfg.temperature);
          const double w = cfg.token_weighted
                               ? 1.0 / static_cast<double>(total_tokens)
                               : 1.0 / (static_cast<double>(T) * static_cast<double>(K) *
                                        static_cast<double>(groups.size()));
          std::vector<double> gt(T);
          double seq_kl = 0.0;
          for (std::size_t t = 0; t < T; ++t) {
            const double ratio = std::exp(new_lp[t] - s.logprobs[t]);
            const auto term = clipped_surrogate(ratio, A, eps);
            const double kl = k3_kl(ref_lp[b][k][t], new_lp[t]);
            loss += w * (-term.value + cfg.kl_coeff * kl);
            seq_kl += kl;
            if (A != 0.0) bound = std::max(bound, std::abs(term.value) / ((1.0 + eps) * std::abs(A)));
            const double d_surr = term.unclipped ? -ratio * A : 0.0;
            const double d_kl = cfg.kl_coeff * (1.0 - std::exp(ref_lp[b][k][t] - new_lp[t]));
            gt[t] = w * (d_surr + d_kl);
          }
          kl_sum += seq_kl / static_cast<double>(T);
          accumulate_backward(fwd_new, s.prompt, s.tokens, gt, cfg.temperature, grads);
        }
      }
    }
    if (!std::isfinite(loss)) {
      std::ostringstream diag;
      for (std::size_t b = 0; b < groups.size(); ++b) {
        diag << " prompt[" << b << "]=" << groups[b].prompt->id << " rewards=";
        for (const auto& r : groups[b].rewards) diag << r.total << ",";
      }
      throw NanLossError(fmt::format("non-finite GRPO loss at step {} epoch {}:{}", state.step,
                                     epoch, diag.str()));
    }
    finalize_gradients(state.policy, grads);
    auto ps = trainable_tensors(state.policy);
    const auto gs = trainable_tensors(grads);
    state.optimizer->step(ps, gs, m.lr);
    if (epoch == 0) {
      m.loss = loss;
      m.mean_kl = kl_sum / static_cast<double>(groups.size() * K);
    }
    m.max_surrogate_bound_ratio = std::max(m.max_surrogate_bound_ratio, bound);
  }

  double n = 0.0;
  std::array<double, kAllComponents.size()> sums{};
  std::array<bool, kAllComponents.size()> present{};
  for (const auto& g : groups) {
    for (const auto& r : g.rewards) {
      m.mean_total += r.total;
      for (std::size_t c = 0; c < kAllComponents.size(); ++c) {
        if (auto v = r.get(kAllComponents[c])) {
          sums[c] += *v;
          present[c] = true;
        }
      }
      n += 1.0;
    }
  }
  m.mean_total /= n;
  auto mean_of = [&](Component c) -> std::optional<double> {
    const auto i = static_cast<std::size_t>(c);
    if (!present[i]) return std::nullopt;
    return sums[i] / n;
  };
  m.mean_semantic = mean_of(Component::kSemantic);
  m.mean_rouge = mean_of(Component::kRouge);
  m.mean_judge = mean_of(Component::kJudge);
  m.mean_answer = mean_of(Component::kAnswer);
  m.mean_format = mean_of(Component::kFormat);
  m.mean_think = mean_of(Component::kThink);

  ++state.step;
  state.history.push_back(m);
  if (groups_out) *groups_out = std::move(groups);
  return m;
}

// Stable column order of the GRPO metrics CSV.
inline constexpr std::string_view kGrpoMetricsHeader =
    "step,mean_total,mean_semantic,mean_rouge,mean_judge,mean_answer,mean_format,mean_think,mean_kl,loss,lr";

inline std::string format_metric(std::optional<double> v) {
  return v ? fmt::format("{:.10g}", *v) : std::string();
}

inline std::string grpo_metrics_csv(const std::vector<StepMetrics>& history) {
  std::string out(kGrpoMetricsHeader);
  out += '\n';
  for (const auto& m : history) {
    out += fmt::format("{},{:.10g},{},{},{},{},{},{},{:.10g},{:.10g},{:.10g}\n", m.step,
                       m.mean_total, format_metric(m.mean_semantic), format_metric(m.mean_rouge),
                       format_metric(m.mean_judge),
                       format_metric(m.mean_answer), format_metric(m.mean_format),
                       format_metric(m.mean_think), m.mean_kl, m.loss, m.lr);
  }
  return out;
}

struct GrpoRunOptions {
  std::optional<std::filesystem::path> run_dir;  // checkpoints + metrics.csv
  std::size_t checkpoint_every = 0;              // 0 disables periodic checkpoints
  std::function<void(const StepMetrics&)> on_step;
};

// cfg.steps GRPO updates over a seeded, reshuffled-per-pass prompt stream.
// On failure the metrics so far are flushed before rethrowing; periodic
// checkpoints already written are left in place.
inline std::vector<StepMetrics> run_grpo(TrainState& state, const std::vector<GrpoPrompt>& dataset,
                                         const RewardFn& reward_fn, const GrpoConfig& cfg_in,
                                         const Tokenizer& tok, const GrpoRunOptions& opts = {}) {
  GrpoConfig cfg = cfg_in;
  if (cfg.schedule.total_steps == 0) {
    cfg.schedule.total_steps = state.step + cfg.steps;
    cfg.schedule.warmup_steps = std::min(cfg.schedule.warmup_steps, cfg.schedule.total_steps);
  }
  cfg.validate();
  cfg.schedule.validate();
  if (cfg.steps > 0 && dataset.empty()) throw ValidationError("GRPO prompt set is empty");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(cfg.seed, "grpo-prompt-order"));
  std::size_t cursor = order.size();

  auto flush = [&] {
    if (opts.run_dir) {
      write_file_bytes(*opts.run_dir / "metrics.csv", grpo_metrics_csv(state.history));
    }
  };

  std::vector<StepMetrics> run_history;
  try {
    for (std::size_t i = 0; i < cfg.steps; ++i) {
      std::vector<const GrpoPrompt*> batch;
      while (batch.size() < std::min(cfg.prompts_per_step, dataset.size())) {
        if (cursor == order.size()) {
          rng.shuffle(order);
          cursor = 0;
        }
        batch.push_back(&dataset[order[cursor++]]);
      }
      const auto m = grpo_step(state, batch, reward_fn, cfg, tok);
      run_history.push_back(m);
      if (opts.on_step) opts.on_step(m);
      if (opts.run_dir && opts.checkpoint_every > 0 && state.step % opts.checkpoint_every == 0) {
        save_checkpoint(*opts.run_dir / fmt::format("step{}.ckpt", state.step), state.policy);
      }
    }
  } catch (...) {
    flush();
    throw;
  }
  flush();
  return run_history;
}

// Greedy decode of each prompt; returns the decoded completions.
inline std::vector<std::string> greedy_decode(const PolicyParams& params,
                                              const std::vector<std::vector<TokenId>>& prompts,
                                              const Tokenizer& tok, std::size_t max_new_tokens) {
  const Forward fwd(params);
  std::vector<std::string> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) {
    const auto s = sample_sequence(fwd, p, kGreedyTemperature / 2, max_new_tokens, CharVocab::kEos, 0);
    out.push_back(tok.decode(s.tokens));
  }
  return out;
}

// Mean total reward of greedy decodes.
inline double mean_greedy_reward(const PolicyParams& params, const std::vector<GrpoPrompt>& prompts,
                                 const RewardFn& reward_fn, const Tokenizer& tok,
                                 std::size_t max_new_tokens) {
  if (prompts.empty()) throw Error("no evaluation prompts");
  std::vector<std::vector<TokenId>> ps;
  for (const auto& p : prompts) ps.push_back(p.prompt);
  const auto texts = greedy_decode(params, ps, tok, max_new_tokens);
  double s = 0.0;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    s += reward_fn({texts[i]}, prompts[i].ctx).at(0).total;
  }
  return s / static_cast<double>(prompts.size());
}

}  // namespace semrank
