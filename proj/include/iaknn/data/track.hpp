#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iaknn/errors.hpp"

namespace iaknn {

inline constexpr double kFrameDt = 0.1;          // NGSIM sampling period, seconds
inline constexpr std::size_t kPastFrames = 20;    // 2 s of history
inline constexpr std::size_t kFutureFrames = 50;  // 5 s of ground truth
inline constexpr std::size_t kWindowFrames = kPastFrames + kFutureFrames;
inline constexpr std::size_t kSceneAgents = 6;    // host + 5 neighbours

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// One sampled kinematic record of an agent. Vectors are in the global frame.
struct Frame {
  double t = 0.0;  // seconds
  Vec2 position;
  Vec2 velocity;
  Vec2 acceleration;
  double heading = 0.0;   // radians
  double yaw_rate = 0.0;  // rad/s
  double width = 0.0;     // meters
  double length = 0.0;    // meters
  int lane_id = 0;
};

struct AgentTrack {
  std::int64_t agent_id = 0;
  std::vector<Frame> frames;
};

/// Frame index on the global grid of spacing dt.
inline std::int64_t frame_index(double t, double dt = kFrameDt) {
  return static_cast<std::int64_t>(std::llround(t / dt));
}

/// Checks strictly increasing, evenly spaced timestamps and positive sizes.
inline void validate_track(const AgentTrack& track, double dt = kFrameDt) {
  const auto& f = track.frames;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!(f[k].width > 0.0) || !(f[k].length > 0.0)) {
      throw DataError("vehicle " + std::to_string(track.agent_id) + " has a non-positive width or length");
    }
    if (k > 0 && frame_index(f[k].t, dt) != frame_index(f[k - 1].t, dt) + 1) {
      throw DataError("vehicle " + std::to_string(track.agent_id) + " has frames that are not evenly spaced by " +
                      std::to_string(dt) + " s");
    }
  }
}

/// Heading by central differences of position (one-sided at the ends) and
/// yaw rate by central differences of the heading. Samples with no
/// displacement inherit the nearest valid heading; a track that never moves
/// keeps `fallback`.
inline void estimate_heading_and_yaw_rate(std::vector<Frame>& frames, double dt, double fallback = 0.0) {
  const std::size_t n = frames.size();
  if (n == 0) return;
  std::vector<double> heading(n, std::nan(""));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 < n ? k + 1 : n - 1;
    const Vec2 d = frames[hi].position - frames[lo].position;
    if (hi != lo && d.norm() > 1e-9) heading[k] = std::atan2(d.y, d.x);
  }
  double last = std::nan("");
  for (std::size_t k = 0; k < n; ++k) {
    if (std::isnan(heading[k])) heading[k] = last;
    else last = heading[k];
  }
  double next = fallback;
  for (std::size_t k = n; k-- > 0;) {
    if (std::isnan(heading[k])) heading[k] = next;
    else next = heading[k];
  }
  for (std::size_t k = 0; k < n; ++k) frames[k].heading = normalize_angle(heading[k]);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 < n ? k + 1 : n - 1;
    frames[k].yaw_rate =
        hi == lo ? 0.0 : normalize_angle(heading[hi] - heading[lo]) / (static_cast<double>(hi - lo) * dt);
  }
}

/// Pairwise centre distances, symmetric with zero diagonal.
inline Eigen::MatrixXd pairwise_distances(std::span<const Frame> agents) {
  const auto n = static_cast<Eigen::Index>(agents.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = distance(agents[i].position, agents[j].position);
  return d;
}

/// exp((speed_i + speed_j) * dt - d).
inline double repulsive_force(double speed_i, double speed_j, double d, double dt) {
  return std::exp((speed_i + speed_j) * dt - d);
}

/// Social-force style repulsion e_ij = exp((|v_i| + |v_j|) * dt - d_ij);
/// the diagonal is 0.
inline Eigen::MatrixXd repulsive_forces(std::span<const Frame> agents, double dt) {
  const auto n = static_cast<Eigen::Index>(agents.size());
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = distance(agents[i].position, agents[j].position);
      e(i, j) = e(j, i) = repulsive_force(agents[i].velocity.norm(), agents[j].velocity.norm(), d, dt);
    }
  return e;
}

}  // namespace iaknn
