#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "iaknn/errors.hpp"

namespace iaknn {

/// Mean and covariance of one axis of the stacked multi-agent state.
struct FilterEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Index of p_{t+l+1} for agent n in the per-axis stacked state; the
/// matching velocity sits right after it.
inline std::size_t state_index(std::size_t agent, std::size_t step, std::size_t horizon) {
  return 2 * (agent * horizon + step);
}

/// Per-step transition and control blocks M1 = diag([[1, dt], [0, 1]]) and
/// M2 = stacked columns (dt^2/2, dt), repeated over N agents.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_F_B(std::size_t n_agents, std::size_t horizon, double dt) {
  if (n_agents == 0 || horizon == 0) throw ConfigError("build_F_B needs N >= 1 and L >= 1");
  if (!(dt > 0.0)) throw ConfigError("build_F_B needs dt > 0");
  const auto L = static_cast<Eigen::Index>(horizon);
  Eigen::MatrixXd M1 = Eigen::MatrixXd::Zero(2 * L, 2 * L);
  Eigen::MatrixXd M2 = Eigen::MatrixXd::Zero(2 * L, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    M1(2 * l, 2 * l) = 1.0;
    M1(2 * l, 2 * l + 1) = dt;
    M1(2 * l + 1, 2 * l + 1) = 1.0;
    M2(2 * l, l) = 0.5 * dt * dt;
    M2(2 * l + 1, l) = dt;
  }
  const auto N = static_cast<Eigen::Index>(n_agents);
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(N * 2 * L, N * 2 * L);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N * 2 * L, N * L);
  for (Eigen::Index n = 0; n < N; ++n) {
    F.block(n * 2 * L, n * 2 * L, 2 * L, 2 * L) = M1;
    B.block(n * 2 * L, n * L, 2 * L, L) = M2;
  }
  return {F, B};
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

namespace detail {

inline void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

}  // namespace detail

/// S- = F S + B U, P- = F P F^T + Q (symmetrized).
inline FilterEstimate predict_step(const FilterEstimate& prev, const Eigen::VectorXd& control,
                                   const Eigen::MatrixXd& Q, const Eigen::MatrixXd& F, const Eigen::MatrixXd& B) {
  const auto n = prev.mean.size();
  if (prev.cov.rows() != n || prev.cov.cols() != n || F.rows() != n || F.cols() != n || B.rows() != n ||
      B.cols() != control.size() || Q.rows() != n || Q.cols() != n) {
    throw DimensionError("predict_step: inconsistent state, covariance, F, B, U or Q shapes");
  }
  detail::require_finite(prev.mean, "predict_step: state");
  detail::require_finite(prev.cov, "predict_step: covariance");
  detail::require_finite(control, "predict_step: control");
  detail::require_finite(Q, "predict_step: Q");
  return {F * prev.mean + B * control, symmetrized(F * prev.cov * F.transpose() + Q)};
}

/// Update with an identity observation matrix: K = P-(P- + R)^-1.
inline FilterEstimate update_step(const FilterEstimate& pred, const Eigen::VectorXd& observation,
                                  const Eigen::MatrixXd& R) {
  const auto n = pred.mean.size();
  if (observation.size() != n || R.rows() != n || R.cols() != n) {
    throw DimensionError("update_step: observation or R does not match the state size");
  }
  detail::require_finite(observation, "update_step: observation");
  detail::require_finite(R, "update_step: R");
  const Eigen::MatrixXd S = pred.cov + R;
  // K = P S^-1  <=>  S^T K^T = P^T.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S.transpose());
  if (!lu.isInvertible()) throw NumericError("update_step: P- + R is singular");
  const Eigen::MatrixXd K = lu.solve(pred.cov.transpose()).transpose();
  FilterEstimate out;
  out.mean = pred.mean + K * (observation - pred.mean);
  out.cov = symmetrized((Eigen::MatrixXd::Identity(n, n) - K) * pred.cov);
  detail::require_finite(out.cov, "update_step: posterior covariance");
  return out;
}

/// Textbook linear Kalman filter with a general observation matrix.
class GenericKalmanFilter {
 public:
  GenericKalmanFilter(Eigen::MatrixXd F, Eigen::MatrixXd B, Eigen::MatrixXd H)
      : F_(std::move(F)), B_(std::move(B)), H_(std::move(H)) {
    if (F_.rows() != F_.cols() || B_.rows() != F_.rows() || H_.cols() != F_.rows()) {
      throw DimensionError("GenericKalmanFilter: F must be square and B, H must match its size");
    }
  }

  void reset(Eigen::VectorXd x, Eigen::MatrixXd P) {
    x_ = std::move(x);
    P_ = std::move(P);
  }

  void predict(const Eigen::VectorXd& u, const Eigen::MatrixXd& Q) {
    x_ = F_ * x_ + B_ * u;
    P_ = F_ * P_ * F_.transpose() + Q;
  }

  void update(const Eigen::VectorXd& z, const Eigen::MatrixXd& R) {
    const Eigen::VectorXd y = z - H_ * x_;
    const Eigen::MatrixXd S = H_ * P_ * H_.transpose() + R;
    const Eigen::MatrixXd K = P_ * H_.transpose() * S.inverse();
    x_ = x_ + K * y;
    P_ = (Eigen::MatrixXd::Identity(P_.rows(), P_.cols()) - K * H_) * P_;
  }

  const Eigen::VectorXd& state() const { return x_; }
  const Eigen::MatrixXd& covariance() const { return P_; }

 private:
  Eigen::MatrixXd F_, B_, H_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd P_;
};

}  // namespace iaknn
