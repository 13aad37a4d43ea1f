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

// Fixed-context concatenation MLP language model with optional LoRA
// adapters on its two dense layers.
//
//   x      = concat(E[ctx_0], ..., E[ctx_{C-1}])          (C * d_e)
//   a      = W1_eff^T x + b1                               (h)
//   z      = tanh(a)
//   logits = W2_eff^T z + b2                               (V)
//
// Host matrices are stored input-major (W1 is (C*d_e) x h, W2 is h x V). An
// adapter with A (r x in) and B (out x r) adds (alpha / r) * B A x to the
// layer output, i.e. W_eff = W + (alpha / r) * (B A)^T. When an adapter is
// attached the host tensors are frozen and only A, B receive gradients.

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "semrank/common.hpp"
#include "semrank/tensor.hpp"
#include "semrank/vocab.hpp"

namespace semrank {

struct PolicyShape {
  std::size_t vocab = 64;
  std::size_t context = 16;
  std::size_t embed = 32;
  std::size_t hidden = 64;

  std::size_t input() const { return context * embed; }
  bool operator==(const PolicyShape&) const = default;
};

struct LoraConfig {
  std::size_t rank = 32;
  double alpha = 64.0;
  bool target_w1 = true;
  bool target_w2 = true;

  double scale() const { return alpha / static_cast<double>(rank); }

  void validate(const PolicyShape& s) const {
    if (rank == 0) throw ValidationError("LoRA rank must be positive");
    if (!(alpha > 0.0)) throw ValidationError("LoRA alpha must be positive");
    if (!target_w1 && !target_w2) throw ValidationError("LoRA needs at least one target");
    if (target_w1 && rank > std::min(s.input(), s.hidden)) {
      throw ValidationError("LoRA rank exceeds W1 dimensions");
    }
    if (target_w2 && rank > std::min(s.hidden, s.vocab)) {
      throw ValidationError("LoRA rank exceeds W2 dimensions");
    }
  }
  bool operator==(const LoraConfig&) const = default;
};

struct LoraFactors {
  Matrix A;  // r x in
  Matrix B;  // out x r
  bool operator==(const LoraFactors&) const = default;
};

struct PolicyParams {
  PolicyShape shape;
  Matrix E;   // V x d_e
  Matrix W1;  // (C d_e) x h
  Matrix b1;  // 1 x h
  Matrix W2;  // h x V
  Matrix b2;  // 1 x V
  std::optional<LoraConfig> lora;
  std::optional<LoraFactors> lora_w1;
  std::optional<LoraFactors> lora_w2;
  std::uint64_t seed = 0;

  bool lora_active() const { return lora.has_value(); }
  bool operator==(const PolicyParams&) const = default;
};

enum class TensorKind { kEmbedding, kMatrix, kVector, kLoraFactor };

struct TensorRef {
  std::string name;
  Matrix* value;
  TensorKind kind;
};

// Every tensor, base first, then adapter factors.
inline std::vector<TensorRef> all_tensors(PolicyParams& p) {
  std::vector<TensorRef> out = {{"E", &p.E, TensorKind::kEmbedding},
                                {"W1", &p.W1, TensorKind::kMatrix},
                                {"b1", &p.b1, TensorKind::kVector},
                                {"W2", &p.W2, TensorKind::kMatrix},
                                {"b2", &p.b2, TensorKind::kVector}};
  if (p.lora_w1) {
    out.push_back({"W1.lora_A", &p.lora_w1->A, TensorKind::kLoraFactor});
    out.push_back({"W1.lora_B", &p.lora_w1->B, TensorKind::kLoraFactor});
  }
  if (p.lora_w2) {
    out.push_back({"W2.lora_A", &p.lora_w2->A, TensorKind::kLoraFactor});
    out.push_back({"W2.lora_B", &p.lora_w2->B, TensorKind::kLoraFactor});
  }
  return out;
}

// The tensors an optimizer should touch: adapter factors in LoRA mode, base
// tensors otherwise.
inline std::vector<TensorRef> trainable_tensors(PolicyParams& p) {
  auto all = all_tensors(p);
  if (!p.lora_active()) return all;
  std::vector<TensorRef> out;
  for (auto& t : all) {
    if (t.kind == TensorKind::kLoraFactor) out.push_back(t);
  }
  return out;
}

inline PolicyParams zeros_like(const PolicyParams& p) {
  PolicyParams z;
  z.shape = p.shape;
  z.E = Matrix(p.E.rows(), p.E.cols());
  z.W1 = Matrix(p.W1.rows(), p.W1.cols());
  z.b1 = Matrix(p.b1.rows(), p.b1.cols());
  z.W2 = Matrix(p.W2.rows(), p.W2.cols());
  z.b2 = Matrix(p.b2.rows(), p.b2.cols());
  z.lora = p.lora;
  if (p.lora_w1) z.lora_w1 = LoraFactors{Matrix(p.lora_w1->A.rows(), p.lora_w1->A.cols()),
                                         Matrix(p.lora_w1->B.rows(), p.lora_w1->B.cols())};
  if (p.lora_w2) z.lora_w2 = LoraFactors{Matrix(p.lora_w2->A.rows(), p.lora_w2->A.cols()),
                                         Matrix(p.lora_w2->B.rows(), p.lora_w2->B.cols())};
  z.seed = p.seed;
  return z;
}

inline void validate_params(const PolicyParams& p) {
  const auto& s = p.shape;
  auto check = [](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows() != r || m.cols() != c) {
      throw ValidationError(std::string("tensor ") + name + " has inconsistent shape");
    }
    if (!m.all_finite()) throw ValidationError(std::string("tensor ") + name + " is not finite");
  };
  check(p.E, s.vocab, s.embed, "E");
  check(p.W1, s.input(), s.hidden, "W1");
  check(p.b1, 1, s.hidden, "b1");
  check(p.W2, s.hidden, s.vocab, "W2");
  check(p.b2, 1, s.vocab, "b2");
  if (p.lora) {
    p.lora->validate(s);
    const std::size_t r = p.lora->rank;
    if (p.lora->target_w1 != p.lora_w1.has_value() || p.lora->target_w2 != p.lora_w2.has_value()) {
      throw ValidationError("LoRA factors do not match LoRA targets");
    }
    if (p.lora_w1) {
      check(p.lora_w1->A, r, s.input(), "W1.lora_A");
      check(p.lora_w1->B, s.hidden, r, "W1.lora_B");
    }
    if (p.lora_w2) {
      check(p.lora_w2->A, r, s.hidden, "W2.lora_A");
      check(p.lora_w2->B, s.vocab, r, "W2.lora_B");
    }
  } else if (p.lora_w1 || p.lora_w2) {
    throw ValidationError("LoRA factors present without a LoRA config");
  }
}

// Small random init: logits start near zero so the initial next-token loss
// is close to ln V.
inline PolicyParams init_params(const PolicyShape& shape, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "policy-init"));
  PolicyParams p;
  p.shape = shape;
  p.seed = seed;
  p.E = random_normal(shape.vocab, shape.embed, rng, 1.0);
  p.W1 = random_normal(shape.input(), shape.hidden, rng,
                       1.0 / std::sqrt(static_cast<double>(shape.input())));
  p.b1 = Matrix(1, shape.hidden);
  p.W2 = random_normal(shape.hidden, shape.vocab, rng, 0.01);
  p.b2 = Matrix(1, shape.vocab);
  return p;
}

// A ~ N(0, 1/r), B = 0, so the adapted model starts identical to the base.
inline void attach_lora(PolicyParams& p, const LoraConfig& cfg, std::uint64_t seed) {
  cfg.validate(p.shape);
  if (p.lora_active()) throw Error("LoRA adapter already attached");
  Rng rng(derive_seed(seed, "lora-init"));
  const double sd = 1.0 / std::sqrt(static_cast<double>(cfg.rank));
  p.lora = cfg;
  if (cfg.target_w1) {
    p.lora_w1 = LoraFactors{random_normal(cfg.rank, p.shape.input(), rng, sd),
                            Matrix(p.shape.hidden, cfg.rank)};
  }
  if (cfg.target_w2) {
    p.lora_w2 = LoraFactors{random_normal(cfg.rank, p.shape.hidden, rng, sd),
                            Matrix(p.shape.vocab, cfg.rank)};
  }
}

namespace detail {

// W + s (B A)^T
inline Matrix effective(const Matrix& w, const LoraFactors& f, double s) {
  Matrix ba = matmul(f.B, f.A);  // out x in
  Matrix out = w;
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) += s * ba(j, i);
  return out;
}

}  // namespace detail

// Base weights with the adapter folded in and removed.
inline PolicyParams merge_lora(const PolicyParams& p) {
  PolicyParams m = p;
  if (!p.lora) return m;
  const double s = p.lora->scale();
  if (p.lora_w1) m.W1 = detail::effective(p.W1, *p.lora_w1, s);
  if (p.lora_w2) m.W2 = detail::effective(p.W2, *p.lora_w2, s);
  m.lora.reset();
  m.lora_w1.reset();
  m.lora_w2.reset();
  return m;
}

// Base weights with the adapter dropped (not merged).
inline PolicyParams detach_lora(const PolicyParams& p) {
  PolicyParams m = p;
  m.lora.reset();
  m.lora_w1.reset();
  m.lora_w2.reset();
  return m;
}

// The C ids preceding position pos of seq, left-padded with PAD.
inline std::vector<TokenId> context_window(std::span<const TokenId> seq, std::size_t pos,
                                           std::size_t context) {
  std::vector<TokenId> ctx(context, CharVocab::kPad);
  for (std::size_t k = 0; k < context; ++k) {
    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(pos) -
                               static_cast<std::ptrdiff_t>(context) +
                               static_cast<std::ptrdiff_t>(k);
    if (src >= 0) ctx[k] = seq[static_cast<std::size_t>(src)];
  }
  return ctx;
}

inline void softmax_inplace(std::vector<double>& v, double temperature = 1.0) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp((x - mx) / temperature);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

inline double log_softmax_at(const std::vector<double>& logits, std::size_t idx,
                             double temperature = 1.0) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits) mx = std::max(mx, x / temperature);
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x / temperature - mx);
  return logits[idx] / temperature - mx - std::log(sum);
}

// Activations of one forward pass, kept for the backward pass.
struct Activations {
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> logits;
};

// Forward evaluator over a fixed parameter snapshot. Effective (adapter-
// merged) matrices are materialized once at construction; the object is
// read-only afterwards and may be shared across threads.
class Forward {
 public:
  explicit Forward(const PolicyParams& p) : p_(&p) {
    if (p.lora_w1) w1_eff_ = detail::effective(p.W1, *p.lora_w1, p.lora->scale());
    if (p.lora_w2) w2_eff_ = detail::effective(p.W2, *p.lora_w2, p.lora->scale());
  }

  const PolicyParams& params() const { return *p_; }
  const Matrix& w1() const { return w1_eff_ ? *w1_eff_ : p_->W1; }
  const Matrix& w2() const { return w2_eff_ ? *w2_eff_ : p_->W2; }

  void run(std::span<const TokenId> ctx, Activations& act) const {
    const auto& s = p_->shape;
    if (ctx.size() != s.context) throw Error("context window has the wrong length");
    act.x.resize(s.input());
    for (std::size_t k = 0; k < s.context; ++k) {
      const TokenId id = ctx[k];
      if (id < 0 || static_cast<std::size_t>(id) >= s.vocab) {
        throw Error("token id " + std::to_string(id) + " out of range");
      }
      const auto row = p_->E.row(static_cast<std::size_t>(id));
      std::copy(row.begin(), row.end(), act.x.begin() + static_cast<std::ptrdiff_t>(k * s.embed));
    }
    const Matrix& W1 = w1();
    act.z.assign(p_->b1.data().begin(), p_->b1.data().end());
    for (std::size_t i = 0; i < s.input(); ++i) {
      const double xi = act.x[i];
      if (xi == 0.0) continue;
      const auto row = W1.row(i);
      for (std::size_t j = 0; j < s.hidden; ++j) act.z[j] += xi * row[j];
    }
    for (double& v : act.z) v = std::tanh(v);
    const Matrix& W2 = w2();
    act.logits.assign(p_->b2.data().begin(), p_->b2.data().end());
    for (std::size_t j = 0; j < s.hidden; ++j) {
      const double zj = act.z[j];
      const auto row = W2.row(j);
      for (std::size_t v = 0; v < s.vocab; ++v) act.logits[v] += zj * row[v];
    }
  }

  std::vector<double> logits(std::span<const TokenId> ctx) const {
    Activations act;
    run(ctx, act);
    return act.logits;
  }

 private:
  const PolicyParams* p_;
  std::optional<Matrix> w1_eff_;
  std::optional<Matrix> w2_eff_;
};

inline std::vector<double> forward_logits(const PolicyParams& p, std::span<const TokenId> ctx) {
  return Forward(p).logits(ctx);
}

inline std::vector<TokenId> concat_tokens(std::span<const TokenId> a, std::span<const TokenId> b) {
  std::vector<TokenId> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Teacher-forced log-probabilities of each completion token under
// softmax(logits / temperature).
inline std::vector<double> logprob_sequence(const Forward& fwd, std::span<const TokenId> prompt,
                                            std::span<const TokenId> completion,
                                            double temperature = 1.0) {
  if (completion.empty()) throw Error("logprob_sequence needs a non-empty completion");
  const auto full = concat_tokens(prompt, completion);
  const auto C = fwd.params().shape.context;
  std::vector<double> out;
  out.reserve(completion.size());
  Activations act;
  for (std::size_t t = 0; t < completion.size(); ++t) {
    const auto ctx = context_window(full, prompt.size() + t, C);
    fwd.run(ctx, act);
    const auto tok = completion[t];
    if (tok < 0 || static_cast<std::size_t>(tok) >= fwd.params().shape.vocab) {
      throw Error("token id " + std::to_string(tok) + " out of range");
    }
    out.push_back(log_softmax_at(act.logits, static_cast<std::size_t>(tok), temperature));
  }
  return out;
}

inline std::vector<double> logprob_sequence(const PolicyParams& p, std::span<const TokenId> prompt,
                                            std::span<const TokenId> completion,
                                            double temperature = 1.0) {
  return logprob_sequence(Forward(p), prompt, completion, temperature);
}

struct SampledSequence {
  std::vector<TokenId> prompt;
  std::vector<TokenId> tokens;   // completion, including the stop token if emitted
  std::vector<double> logprobs;  // one per completion token
  std::size_t prompt_len = 0;
};

// Below this temperature sampling is greedy.
inline constexpr double kGreedyTemperature = 1e-6;

// Ancestral sampling from softmax(logits / temperature). Recorded logprobs
// are those of the tempered distribution that was sampled; in the greedy
// limit the chosen token has logprob 0.
inline SampledSequence sample_sequence(const Forward& fwd, std::span<const TokenId> prompt,
                                       double temperature, std::size_t max_len,
                                       TokenId stop_token, std::uint64_t seed) {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  if (max_len < 1) throw Error("max_len must be at least 1");
  Rng rng(seed);
  SampledSequence s;
  s.prompt.assign(prompt.begin(), prompt.end());
  s.prompt_len = prompt.size();
  std::vector<TokenId> full(prompt.begin(), prompt.end());
  const auto C = fwd.params().shape.context;
  Activations act;
  for (std::size_t step = 0; step < max_len; ++step) {
    const auto ctx = context_window(full, full.size(), C);
    fwd.run(ctx, act);
    std::size_t choice = 0;
    double lp = 0.0;
    if (temperature < kGreedyTemperature) {
      choice = static_cast<std::size_t>(
          std::max_element(act.logits.begin(), act.logits.end()) - act.logits.begin());
    } else {
      std::vector<double> probs = act.logits;
      softmax_inplace(probs, temperature);
      const double u = rng.uniform();
      double acc = 0.0;
      choice = probs.size() - 1;
      for (std::size_t v = 0; v < probs.size(); ++v) {
        acc += probs[v];
        if (u < acc) {
          choice = v;
          break;
        }
      }
      lp = log_softmax_at(act.logits, choice, temperature);
    }
    const auto tok = static_cast<TokenId>(choice);
    s.tokens.push_back(tok);
    s.logprobs.push_back(lp);
    full.push_back(tok);
    if (tok == stop_token) break;
  }
  return s;
}

inline SampledSequence sample_sequence(const PolicyParams& p, std::span<const TokenId> prompt,
                                       double temperature, std::size_t max_len,
                                       TokenId stop_token, std::uint64_t seed) {
  return sample_sequence(Forward(p), prompt, temperature, max_len, stop_token, seed);
}

// Accumulates into `grads` the gradient of sum_t g_t * log pi(o_t) with
// respect to the base tensors, using the effective matrices of `fwd`. Adapter
// gradients are produced later by finalize_gradients. Returns the
// log-probabilities evaluated on the way.
inline std::vector<double> accumulate_backward(const Forward& fwd, std::span<const TokenId> prompt,
                                               std::span<const TokenId> completion,
                                               std::span<const double> g, double temperature,
                                               PolicyParams& grads) {
  if (g.size() != completion.size()) throw Error("one loss weight per completion token required");
  const auto& p = fwd.params();
  const auto& s = p.shape;
  const auto full = concat_tokens(prompt, completion);
  const Matrix& W1 = fwd.w1();
  const Matrix& W2 = fwd.w2();
  std::vector<double> logprobs;
  logprobs.reserve(completion.size());
  Activations act;
  std::vector<double> probs(s.vocab);
  std::vector<double> dlogits(s.vocab);
  std::vector<double> da(s.hidden);
  std::vector<double> dx(s.input());
  for (std::size_t t = 0; t < completion.size(); ++t) {
    const auto ctx = context_window(full, prompt.size() + t, s.context);
    fwd.run(ctx, act);
    const auto tok = static_cast<std::size_t>(completion[t]);
    logprobs.push_back(log_softmax_at(act.logits, tok, temperature));
    if (g[t] == 0.0) continue;

    probs = act.logits;
    softmax_inplace(probs, temperature);
    for (std::size_t v = 0; v < s.vocab; ++v) {
      dlogits[v] = g[t] * ((v == tok ? 1.0 : 0.0) - probs[v]) / temperature;
    }
    for (std::size_t v = 0; v < s.vocab; ++v) grads.b2[v] += dlogits[v];
    for (std::size_t j = 0; j < s.hidden; ++j) {
      const double zj = act.z[j];
      auto grow = grads.W2.row(j);
      const auto wrow = W2.row(j);
      double dz = 0.0;
      for (std::size_t v = 0; v < s.vocab; ++v) {
        grow[v] += zj * dlogits[v];
        dz += wrow[v] * dlogits[v];
      }
      da[j] = dz * (1.0 - zj * zj);
    }
    for (std::size_t j = 0; j < s.hidden; ++j) grads.b1[j] += da[j];
    for (std::size_t i = 0; i < s.input(); ++i) {
      const double xi = act.x[i];
      auto grow = grads.W1.row(i);
      const auto wrow = W1.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < s.hidden; ++j) {
        grow[j] += xi * da[j];
        acc += wrow[j] * da[j];
      }
      dx[i] = acc;
    }
    for (std::size_t k = 0; k < s.context; ++k) {
      auto erow = grads.E.row(static_cast<std::size_t>(ctx[k]));
      for (std::size_t e = 0; e < s.embed; ++e) erow[e] += dx[k * s.embed + e];
    }
  }
  return logprobs;
}

// In LoRA mode, turns the accumulated dense gradients of W1 / W2 into
// adapter gradients (dA = s B^T G^T, dB = s G^T A^T for G = dL/dW_eff) and
// zeroes every base gradient. No-op otherwise.
inline void finalize_gradients(const PolicyParams& p, PolicyParams& grads) {
  if (!p.lora) return;
  const double s = p.lora->scale();
  auto project = [s](const Matrix& G, const LoraFactors& f, LoraFactors& out) {
    const Matrix Gt = G.transpose();          // out x in
    out.A = matmul(f.B.transpose(), Gt) * s;  // r x in
    out.B = matmul_nt(Gt, f.A) * s;           // out x r
  };
  if (p.lora_w1) project(grads.W1, *p.lora_w1, *grads.lora_w1);
  if (p.lora_w2) project(grads.W2, *p.lora_w2, *grads.lora_w2);
  grads.E.fill(0.0);
  grads.W1.fill(0.0);
  grads.b1.fill(0.0);
  grads.W2.fill(0.0);
  grads.b2.fill(0.0);
}

// Exact gradient of sum_t g_t * log pi(o_t | context) for one sequence.
inline PolicyParams backward(const PolicyParams& p, std::span<const TokenId> prompt,
                             std::span<const TokenId> completion, std::span<const double> g,
                             double temperature = 1.0) {
  PolicyParams grads = zeros_like(p);
  Forward fwd(p);
  accumulate_backward(fwd, prompt, completion, g, temperature, grads);
  finalize_gradients(p, grads);
  return grads;
}

}  // namespace semrank
