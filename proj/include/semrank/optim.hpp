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

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "semrank/common.hpp"
#include "semrank/policy.hpp"
#include "semrank/tensor.hpp"

namespace semrank {

// Warmup then cosine decay to zero at total_steps.
struct LrSchedule {
  double base_lr = 1e-3;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;

  void validate() const {
    if (warmup_steps > total_steps) {
      throw ValidationError("warmup_steps must not exceed total_steps");
    }
  }
};

inline double lr_at(const LrSchedule& s, std::size_t step) {
  if (step > s.total_steps) return 0.0;
  if (step < s.warmup_steps) {
    return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (s.total_steps == s.warmup_steps) return s.base_lr;
  const double progress = static_cast<double>(step - s.warmup_steps) /
                          static_cast<double>(s.total_steps - s.warmup_steps);
  return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

// Quintic Newton-Schulz iteration towards the orthogonal polar factor U V^T
// of G. Coefficients are the standard Muon ones; the iteration pushes
// singular values into roughly [0.7, 1.2] rather than exactly to 1.
struct NsCoefficients {
  double a = 3.4445;
  double b = -4.7750;
  double c = 2.0315;
};

inline Matrix newton_schulz(const Matrix& G, int steps = 5, NsCoefficients k = {}) {
  if (steps < 1) throw Error("newton_schulz needs at least one step");
  if (!G.all_finite()) throw Error("newton_schulz input is not finite");
  const bool tall = G.rows() > G.cols();
  Matrix X = tall ? G.transpose() : G;
  X *= 1.0 / (X.frobenius() + 1e-7);
  for (int i = 0; i < steps; ++i) {
    const Matrix A = matmul_nt(X, X);
    Matrix B = A * k.b;
    B += matmul(A, A) * k.c;
    Matrix next = X * k.a;
    next += matmul(B, X);
    X = std::move(next);
  }
  return tall ? X.transpose() : X;
}

// Moonlight learning-rate matching factor for a rows x cols update.
inline double muon_scale(std::size_t rows, std::size_t cols) {
  return 0.2 * std::sqrt(static_cast<double>(std::max(rows, cols)));
}

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // params and grads are aligned by position and must have equal shapes.
  virtual void step(std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
                    double lr) = 0;
  virtual std::string name() const = 0;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamWMoments {
  Matrix m;
  Matrix v;
  std::size_t t = 0;
};

// Bias-corrected Adam with decoupled weight decay:
//   P <- P - lr * (m_hat / (sqrt(v_hat) + eps) + wd * P)
inline void adamw_update(Matrix& p, const Matrix& g, AdamWMoments& s, const AdamWConfig& cfg,
                         double lr) {
  if (s.m.empty()) {
    s.m = Matrix(p.rows(), p.cols());
    s.v = Matrix(p.rows(), p.cols());
  }
  if (!p.same_shape(g) || !p.same_shape(s.m)) throw Error("AdamW shape mismatch");
  ++s.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < p.size(); ++i) {
    s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * g[i];
    s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = s.m[i] / bc1;
    const double vhat = s.v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * p[i]);
  }
}

class AdamW final : public Optimizer {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  void step(std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
            double lr) override {
    if (params.size() != grads.size()) throw Error("AdamW params/grads length mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      adamw_update(*params[i].value, *grads[i].value, state_[params[i].name], cfg_, lr);
    }
  }
  std::string name() const override { return "adamw"; }

  const AdamWConfig& config() const { return cfg_; }
  const std::map<std::string, AdamWMoments>& state() const { return state_; }

 private:
  AdamWConfig cfg_;
  std::map<std::string, AdamWMoments> state_;
};

struct MuonConfig {
  double momentum = 0.95;
  int ns_steps = 5;
  double weight_decay = 0.0;
  bool nesterov = false;
  // Route the token embedding through Muon instead of AdamW.
  bool orthogonalize_embedding = false;
  // Route LoRA factors through Muon instead of AdamW.
  bool orthogonalize_lora = false;
  AdamWConfig fallback;
};

// SGD-momentum whose matrix updates are replaced by their Newton-Schulz
// orthogonalization, scaled by 0.2 * sqrt(max(rows, cols)). Everything else
// goes through an embedded AdamW with the same learning rate.
class Muon final : public Optimizer {
 public:
  explicit Muon(MuonConfig cfg = {}) : cfg_(cfg) {}

  bool routes_to_muon(const TensorRef& t) const {
    if (t.value->rows() < 2 || t.value->cols() < 2) return false;
    switch (t.kind) {
      case TensorKind::kMatrix: return true;
      case TensorKind::kEmbedding: return cfg_.orthogonalize_embedding;
      case TensorKind::kLoraFactor: return cfg_.orthogonalize_lora;
      case TensorKind::kVector: return false;
    }
    return false;
  }

  void step(std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
            double lr) override {
    if (params.size() != grads.size()) throw Error("Muon params/grads length mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix& p = *params[i].value;
      const Matrix& g = *grads[i].value;
      if (!p.same_shape(g)) throw Error("Muon shape mismatch");
      if (!routes_to_muon(params[i])) {
        adamw_update(p, g, adamw_state_[params[i].name], cfg_.fallback, lr);
        continue;
      }
      Matrix& M = momentum_[params[i].name];
      if (M.empty()) M = Matrix(p.rows(), p.cols());
      for (std::size_t k = 0; k < M.size(); ++k) M[k] = cfg_.momentum * M[k] + g[k];
      Matrix update = M;
      if (cfg_.nesterov) {
        for (std::size_t k = 0; k < update.size(); ++k) update[k] = g[k] + cfg_.momentum * M[k];
      }
      const Matrix O = newton_schulz(update, cfg_.ns_steps);
      const double scale = muon_scale(p.rows(), p.cols());
      for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] -= lr * scale * O[k] + lr * cfg_.weight_decay * p[k];
      }
    }
  }
  std::string name() const override { return "muon"; }

  const std::map<std::string, Matrix>& momentum() const { return momentum_; }

 private:
  MuonConfig cfg_;
  std::map<std::string, Matrix> momentum_;
  std::map<std::string, AdamWMoments> adamw_state_;
};

inline std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double weight_decay = 0.0) {
  if (name == "adamw") {
    AdamWConfig c;
    c.weight_decay = weight_decay;
    return std::make_unique<AdamW>(c);
  }
  if (name == "muon") {
    MuonConfig c;
    c.weight_decay = weight_decay;
    c.fallback.weight_decay = weight_decay;
    return std::make_unique<Muon>(c);
  }
  throw ValidationError("unknown optimizer '" + name + "' (expected adamw or muon)");
}

}  // namespace semrank
