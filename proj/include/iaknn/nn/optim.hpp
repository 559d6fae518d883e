#pragma once

#include <cmath>

#include "iaknn/errors.hpp"
#include "iaknn/nn/params.hpp"

namespace iaknn::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

inline double global_grad_norm(const ParamStore& params) {
  double sq = 0.0;
  for (const auto& [name, p] : params)
    for (double g : p.grad.data()) sq += g * g;
  return std::sqrt(sq);
}

/// Rescales all gradients by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
inline double clip_global_norm(ParamStore& params, double max_norm = 5.0) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && std::isfinite(norm)) {
    const double s = max_norm / norm;
    for (auto& [name, p] : params)
      for (double& g : p.grad.data()) g *= s;
  }
  return norm;
}

/// One bias-corrected Adam update over every parameter, then zeroes gradients.
inline void adam_step(ParamStore& params, const AdamConfig& cfg) {
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) throw TrainingError("non-finite gradient for parameter '" + name + "'");
  }
  params.increment_step();
  const double t = static_cast<double>(params.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.m[i] = cfg.beta1 * p.m[i] + (1.0 - cfg.beta1) * g;
      p.v[i] = cfg.beta2 * p.v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p.m[i] / c1;
      const double vhat = p.v[i] / c2;
      p.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p.grad.fill(0.0);
  }
}

}  // namespace iaknn::nn
