#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iaknn/data/track.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/nn/ops.hpp"
#include "iaknn/nn/tensor.hpp"

namespace iaknn {

using nn::Tensor;
using nn::Var;

/// Accelerations as a tensor of shape [L, N, 2] (step, agent, axis).
using AccelerationForecast = Tensor;

/// Positions and velocities, each [L, N, 2]; entry l is the state at t + l + 1.
struct TrajectoryForecast {
  Tensor positions;
  Tensor velocities;
};

inline std::size_t forecast_index(std::size_t step, std::size_t agent, std::size_t axis, std::size_t n_agents) {
  return (step * n_agents + agent) * 2 + axis;
}

/// Planar rigid-body state with body-frame velocities.
struct BodyFrameState {
  double x = 0.0, y = 0.0;
  double theta = 0.0;
  double vx = 0.0, vy = 0.0;  // body frame
  double r = 0.0;
};

struct GlobalRates {
  double xdot = 0.0, ydot = 0.0, thetadot = 0.0;
};

/// Bicycle-model rotation of body-frame velocities into the global frame.
inline GlobalRates vdm_transform(const BodyFrameState& s) {
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  return {s.vx * c - s.vy * sn, s.vx * sn + s.vy * c, s.r};
}

/// Mass-point model: body and global velocities coincide.
inline Vec2 pdm_transform(double vx, double vy) { return {vx, vy}; }

enum class DynamicModel { vehicle, pedestrian };

inline DynamicModel dynamic_model_from_string(const std::string& s) {
  if (s == "vehicle" || s == "vdm") return DynamicModel::vehicle;
  if (s == "pedestrian" || s == "pdm") return DynamicModel::pedestrian;
  throw ConfigError("unknown dynamic model '" + s + "' (expected vehicle or pedestrian)");
}

/// Sensor reading of a frame expressed in its own body frame (heading and
/// yaw rate as stored on the frame).
inline BodyFrameState body_frame_state(const Frame& f) {
  const double c = std::cos(f.heading), s = std::sin(f.heading);
  return {f.position.x, f.position.y, normalize_angle(f.heading), c * f.velocity.x + s * f.velocity.y,
          -s * f.velocity.x + c * f.velocity.y, f.yaw_rate};
}

/// Current global-frame velocity of an agent through its dynamic model.
inline Vec2 current_velocity(const Frame& f, DynamicModel model = DynamicModel::vehicle) {
  if (model == DynamicModel::pedestrian) return pdm_transform(f.velocity.x, f.velocity.y);
  const auto g = vdm_transform(body_frame_state(f));
  return {g.xdot, g.ydot};
}

namespace detail {

inline void check_forecast(const Tensor& accel, std::size_t n_agents) {
  if (accel.rank() != 3 || accel.dim(1) != n_agents || accel.dim(2) != 2 || accel.dim(0) == 0) {
    throw DimensionError("acceleration forecast must be [L, " + std::to_string(n_agents) + ", 2], got " +
                         nn::shape_string(accel.shape()));
  }
}

inline void check_agents(std::span<const Vec2> p, std::span<const Vec2> v) {
  if (p.size() != v.size()) throw DimensionError("position and velocity agent counts differ");
}

}  // namespace detail

/// v_{t+i} = v_t + dt * sum_{k < i} a[k], with a[0] the acceleration applied at t.
inline Tensor integrate_velocities(std::span<const Vec2> v0, const AccelerationForecast& accel, double dt) {
  const std::size_t N = v0.size();
  detail::check_forecast(accel, N);
  const std::size_t L = accel.dim(0);
  Tensor out(accel.shape());
  for (std::size_t n = 0; n < N; ++n) {
    double v[2] = {v0[n].x, v0[n].y};
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t ax = 0; ax < 2; ++ax) {
        const std::size_t i = forecast_index(l, n, ax, N);
        v[ax] += dt * accel[i];
        out[i] = v[ax];
      }
    }
  }
  return out;
}

/// Second-order Taylor rollout p_{k+1} = p_k + v_k dt + a_k dt^2 / 2.
inline TrajectoryForecast rollout(std::span<const Vec2> p0, std::span<const Vec2> v0, const AccelerationForecast& accel,
                                  double dt) {
  detail::check_agents(p0, v0);
  const std::size_t N = p0.size();
  TrajectoryForecast out{Tensor(accel.shape()), integrate_velocities(v0, accel, dt)};
  const std::size_t L = accel.dim(0);
  for (std::size_t n = 0; n < N; ++n) {
    double p[2] = {p0[n].x, p0[n].y};
    double v[2] = {v0[n].x, v0[n].y};
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t ax = 0; ax < 2; ++ax) {
        const std::size_t i = forecast_index(l, n, ax, N);
        p[ax] += v[ax] * dt + 0.5 * accel[i] * dt * dt;
        out.positions[i] = p[ax];
        v[ax] = out.velocities[i];
      }
    }
  }
  return out;
}

struct TrajectoryVars {
  Var positions;   // [L, N, 2]
  Var velocities;  // [L, N, 2]
};

/// Tape version of rollout, differentiable with respect to the accelerations.
/// The initial state is data and receives no gradient.
inline TrajectoryVars rollout(std::span<const Vec2> p0, std::span<const Vec2> v0, const Var& accel, double dt) {
  const TrajectoryForecast f = rollout(p0, v0, accel.value(), dt);
  const nn::Shape shape = accel.shape();
  const std::size_t L = shape[0], N = shape[1], M = L * N * 2;
  std::vector<double> both(f.positions.data().begin(), f.positions.data().end());
  both.insert(both.end(), f.velocities.data().begin(), f.velocities.data().end());
  const std::size_t ia = accel.id();
  // d p_i / d a_k = dt^2 (i - k - 1/2) and d v_i / d a_k = dt for k < i (1-based i).
  Var joint = accel.tape().record(Tensor::vector(std::move(both)), [ia, L, N, M, dt](nn::Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t ax = 0; ax < 2; ++ax) {
        double sum_p = 0.0, sum_v = 0.0, moment_p = 0.0;  // over later steps: sum g_p, sum g_v, sum g_p (i - k)
        for (std::size_t k = L; k-- > 0;) {
          const std::size_t i = forecast_index(k, n, ax, N);
          sum_p += g[i];
          sum_v += g[M + i];
          moment_p += sum_p;
          ga[i] += dt * sum_v + dt * dt * (moment_p - 0.5 * sum_p);
        }
      }
    }
  });
  return {nn::reshape(nn::slice(joint, 0, M), shape), nn::reshape(nn::slice(joint, M, M), shape)};
}

/// Constant-velocity extrapolation over `steps` frames.
inline TrajectoryForecast constant_velocity(std::span<const Vec2> p0, std::span<const Vec2> v0, std::size_t steps,
                                            double dt) {
  return rollout(p0, v0, Tensor({steps, p0.size(), 2}), dt);
}

}  // namespace iaknn
