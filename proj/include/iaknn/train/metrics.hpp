#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "iaknn/data/scene.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/model/filter.hpp"
#include "iaknn/model/motion.hpp"

namespace iaknn {

inline constexpr double kHitRadius = 0.5;

/// Running sums for the position metrics of one model at one horizon.
/// Predictions and truths are [L, N, 2]; only the first `horizon` steps count.
struct MetricAccumulator {
  double sum_sq = 0.0;
  double sum_nll = 0.0;
  std::size_t positions = 0;
  std::size_t nll_positions = 0;
  std::size_t hits = 0;

  double rmse() const { return positions == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(positions)); }
  double nll() const { return nll_positions == 0 ? 0.0 : sum_nll / static_cast<double>(nll_positions); }
  double hit_rate() const { return positions == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(positions); }
};

namespace detail {

inline void check_metric_shapes(const Tensor& pred, const Tensor& truth, std::size_t horizon) {
  if (pred.shape() != truth.shape() || pred.rank() != 3 || pred.dim(2) != 2) {
    throw DimensionError("metric inputs must share an [L, N, 2] shape, got " + nn::shape_string(pred.shape()) +
                         " and " + nn::shape_string(truth.shape()));
  }
  if (horizon == 0 || horizon > pred.dim(0)) {
    throw DimensionError("metric horizon " + std::to_string(horizon) + " is outside 1.." + std::to_string(pred.dim(0)));
  }
}

}  // namespace detail

/// -log N(err | 0, cov) for one 2-D position. Diagonal entries are floored at
/// sigma_min2 before the density is evaluated.
inline double position_nll(const Eigen::Vector2d& err, Eigen::Matrix2d cov, double sigma_min2 = kSigmaMin2) {
  cov(0, 0) = std::max(cov(0, 0), sigma_min2);
  cov(1, 1) = std::max(cov(1, 1), sigma_min2);
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!std::isfinite(det) || !(det > 0.0) || !err.allFinite()) {
    throw NumericError("position covariance is not positive definite after flooring (det = " + std::to_string(det) + ")");
  }
  const double quad = err.dot(cov.inverse() * err);
  return std::log(2.0 * std::numbers::pi) + 0.5 * std::log(det) + 0.5 * quad;
}

inline void accumulate_positions(MetricAccumulator& acc, const Tensor& pred, const Tensor& truth, std::size_t horizon) {
  detail::check_metric_shapes(pred, truth, horizon);
  const std::size_t N = pred.dim(1);
  for (std::size_t l = 0; l < horizon; ++l)
    for (std::size_t a = 0; a < N; ++a) {
      const double dx = pred[forecast_index(l, a, 0, N)] - truth[forecast_index(l, a, 0, N)];
      const double dy = pred[forecast_index(l, a, 1, N)] - truth[forecast_index(l, a, 1, N)];
      const double sq = dx * dx + dy * dy;
      acc.sum_sq += sq;
      acc.hits += sq <= kHitRadius * kHitRadius ? 1 : 0;
      ++acc.positions;
    }
}

/// `variance` is [L, N, 2]: independent x and y marginals.
inline void accumulate_nll(MetricAccumulator& acc, const Tensor& pred, const Tensor& variance, const Tensor& truth,
                           std::size_t horizon, double sigma_min2 = kSigmaMin2) {
  detail::check_metric_shapes(pred, truth, horizon);
  if (variance.shape() != pred.shape()) throw DimensionError("variance must match the prediction shape");
  const std::size_t N = pred.dim(1);
  for (std::size_t l = 0; l < horizon; ++l)
    for (std::size_t a = 0; a < N; ++a) {
      const std::size_t ix = forecast_index(l, a, 0, N), iy = forecast_index(l, a, 1, N);
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      cov(0, 0) = variance[ix];
      cov(1, 1) = variance[iy];
      acc.sum_nll += position_nll({truth[ix] - pred[ix], truth[iy] - pred[iy]}, cov, sigma_min2);
      ++acc.nll_positions;
    }
}

inline double rmse(const Tensor& pred, const Tensor& truth, std::size_t horizon) {
  MetricAccumulator acc;
  accumulate_positions(acc, pred, truth, horizon);
  return acc.rmse();
}

inline double nll(const Tensor& pred, const Tensor& variance, const Tensor& truth, std::size_t horizon,
                  double sigma_min2 = kSigmaMin2) {
  MetricAccumulator acc;
  accumulate_nll(acc, pred, variance, truth, horizon, sigma_min2);
  return acc.nll();
}

inline double hit_rate(const Tensor& pred, const Tensor& truth, std::size_t horizon) {
  MetricAccumulator acc;
  accumulate_positions(acc, pred, truth, horizon);
  return acc.hit_rate();
}

/// Future positions [future_len, N, 2] of a scene.
inline Tensor future_positions(const SceneWindow& s) {
  const std::size_t N = s.n_agents(), L = s.future_len;
  Tensor out({L, N, 2});
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t a = 0; a < N; ++a) {
      const Frame& f = s.frame(a, s.past_len + l);
      out[forecast_index(l, a, 0, N)] = f.position.x;
      out[forecast_index(l, a, 1, N)] = f.position.y;
    }
  return out;
}

/// Linear extrapolation from the last observed position and velocity.
inline Tensor cv_baseline(const SceneWindow& s, std::size_t steps = kFutureFrames) {
  if (s.past_len == 0) throw DataError("constant-velocity baseline needs a past segment");
  std::vector<Vec2> p, v;
  for (std::size_t a = 0; a < s.n_agents(); ++a) {
    const Frame& f = s.frame(a, s.last_past());
    p.push_back(f.position);
    v.push_back(f.velocity);
  }
  return constant_velocity(p, v, steps, s.dt).positions;
}

}  // namespace iaknn
