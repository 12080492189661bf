#pragma once

// Adam with standard bias correction, global-norm gradient clipping, and
// the L2 penalty on weight matrices. Defaults follow the selected
// hyperparameter column: lr 0.002, l2 0.002.

#include <cmath>
#include <cstddef>
#include <vector>

#include "probcast/autodiff.hpp"
#include "probcast/errors.hpp"

namespace probcast {

struct AdamState {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const std::vector<Parameter>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.tensor.numel(), 0.0);
      v.emplace_back(p.tensor.numel(), 0.0);
    }
  }
};

// One bias-corrected Adam update from the accumulated grads; grads are
// zeroed afterwards.
inline void adam_step(std::vector<Parameter>& params, AdamState& state) {
  if (state.m.size() != params.size()) state.init(params);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& t = params[pi].tensor;
    t.ensure_grad();
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double g = t.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      t.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    t.zero_grad();
  }
}

// Scales all gradients so their joint Euclidean norm is at most max_norm;
// returns the pre-clip norm.
inline double clip_global_norm(std::vector<Parameter>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    p.tensor.ensure_grad();
    for (double g : p.tensor.grad) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& p : params)
      for (double& g : p.tensor.grad) g *= scale;
  }
  return norm;
}

// lambda * sum(w^2) over weight matrices only; adds 2*lambda*w to their
// gradients and returns the loss addend.
inline double l2_penalty(std::vector<Parameter>& params, double lambda) {
  if (lambda == 0.0) return 0.0;
  double addend = 0.0;
  for (auto& p : params) {
    if (!p.is_weight) continue;
    p.tensor.ensure_grad();
    for (std::size_t i = 0; i < p.tensor.numel(); ++i) {
      const double w = p.tensor.data[i];
      addend += lambda * w * w;
      p.tensor.grad[i] += 2.0 * lambda * w;
    }
  }
  return addend;
}

}  // namespace probcast
