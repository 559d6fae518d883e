#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "iaknn/data/scene.hpp"
#include "iaknn/data/track.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/nn/params.hpp"

namespace iaknn {

enum class SynthMode { traffic, constant_acceleration };

/// Knobs of the synthetic highway. Speeds in m/s, distances in meters.
struct BehaviorConfig {
  SynthMode mode = SynthMode::traffic;
  int lanes = 3;
  double lane_width = 3.7;
  int vehicles_per_lane = 3;
  double speed_min = 10.0;
  double speed_max = 20.0;
  double desired_speed_spread = 4.0;  // v_desired = v0 + U(-spread, spread)
  double gap_min = 8.0;               // bumper-to-bumper spacing at t = 0
  double gap_max = 30.0;
  double speed_gain = 0.3;            // free-road: a = speed_gain * (v_desired - v)
  double gap_gain = 0.4;              // car following: a = gap_gain * (gap - desired_gap) + rel_speed_gain * dv
  double rel_speed_gain = 0.6;
  double min_gap = 2.0;
  double time_headway = 1.2;          // desired_gap = min_gap + time_headway * v
  double max_accel = 4.0;
  double lane_change_prob = 0.3;      // per non-host vehicle and window
  double lane_change_duration = 4.0;  // seconds
  double constant_accel = 1.0;        // forward acceleration in constant_acceleration mode
  double width_min = 1.7, width_max = 2.1;
  double length_min = 4.0, length_max = 5.5;

  void validate() const {
    if (lanes < 1 || vehicles_per_lane < 1 || lanes * vehicles_per_lane < static_cast<int>(kSceneAgents)) {
      throw ConfigError("synthetic highway needs at least " + std::to_string(kSceneAgents) + " vehicles");
    }
    if (!(speed_min >= 0.0 && speed_max >= speed_min)) throw ConfigError("speed range must satisfy 0 <= min <= max");
    if (!(gap_min > 0.0 && gap_max >= gap_min)) throw ConfigError("gap range must satisfy 0 < min <= max");
    if (!(lane_width > 0.0) || !(max_accel > 0.0) || !(lane_change_duration > 0.0)) {
      throw ConfigError("lane width, max accel and lane-change duration must be positive");
    }
    if (!(lane_change_prob >= 0.0 && lane_change_prob <= 1.0)) throw ConfigError("lane_change_prob must lie in [0, 1]");
    if (!(width_min > 0.0 && width_max >= width_min && length_min > 0.0 && length_max >= length_min)) {
      throw ConfigError("vehicle size ranges must be positive");
    }
  }
};

namespace detail {

struct SimVehicle {
  std::int64_t id;
  double x, y, vx, vy;
  double v_desired;
  double width, length;
  int lc_start = -1;      // frame at which a lane change starts, -1 for none
  double lc_sign = 0.0;   // +1 towards higher lane index
};

inline int lane_of(double y, const BehaviorConfig& cfg) {
  return std::clamp(static_cast<int>(std::floor(y / cfg.lane_width)), 0, cfg.lanes - 1) + 1;
}

inline double lane_center(int lane_index0, const BehaviorConfig& cfg) { return (lane_index0 + 0.5) * cfg.lane_width; }

/// Longitudinal acceleration from the free-road and car-following laws.
inline double longitudinal_accel(const std::vector<SimVehicle>& vs, std::size_t i, const BehaviorConfig& cfg) {
  const auto& me = vs[i];
  double a = cfg.speed_gain * (me.v_desired - me.vx);
  double best_gap = std::numeric_limits<double>::infinity();
  const SimVehicle* lead = nullptr;
  for (std::size_t j = 0; j < vs.size(); ++j) {
    if (j == i || std::abs(vs[j].y - me.y) >= cfg.lane_width / 2.0 || vs[j].x <= me.x) continue;
    const double gap = vs[j].x - me.x - 0.5 * (vs[j].length + me.length);
    if (gap < best_gap) {
      best_gap = gap;
      lead = &vs[j];
    }
  }
  if (lead != nullptr) {
    const double desired = cfg.min_gap + cfg.time_headway * me.vx;
    if (best_gap < desired) {
      a = std::min(a, cfg.gap_gain * (best_gap - desired) + cfg.rel_speed_gain * (lead->vx - me.vx));
    }
  }
  return std::clamp(a, -cfg.max_accel, cfg.max_accel);
}

/// Bang-bang lateral profile moving one lane width over the configured duration.
inline double lateral_accel(const SimVehicle& v, int frame, double dt, const BehaviorConfig& cfg) {
  if (v.lc_start < 0 || frame < v.lc_start) return 0.0;
  const int steps = static_cast<int>(std::llround(cfg.lane_change_duration / dt));
  const int k = frame - v.lc_start;
  if (k >= steps) return 0.0;
  const double T = steps * dt;
  const double mag = 4.0 * cfg.lane_width / (T * T);
  return (2 * k < steps ? mag : -mag) * v.lc_sign;
}

}  // namespace detail

/// Simulates one highway stretch and returns the scene around the vehicle
/// in the middle of the centre lane. Positions follow the second-order
/// Taylor update exactly, so they re-integrate from the stored velocities
/// and accelerations.
inline SceneWindow synth_scene(std::mt19937_64& rng, std::int64_t scene_index, const BehaviorConfig& cfg = {},
                               double dt = kFrameDt) {
  const int host_lane = cfg.lanes / 2;
  const int host_slot = cfg.vehicles_per_lane / 2;
  std::vector<detail::SimVehicle> vs;
  std::size_t host = 0;
  for (int lane = 0; lane < cfg.lanes; ++lane) {
    double x = nn::uniform(rng, 0.0, cfg.gap_max);
    for (int slot = 0; slot < cfg.vehicles_per_lane; ++slot) {
      detail::SimVehicle v{};
      v.id = scene_index * 100 + static_cast<std::int64_t>(vs.size()) + 1;
      v.width = nn::uniform(rng, cfg.width_min, cfg.width_max);
      v.length = nn::uniform(rng, cfg.length_min, cfg.length_max);
      if (slot > 0) x += nn::uniform(rng, cfg.gap_min, cfg.gap_max) + v.length;
      v.x = x;
      v.y = detail::lane_center(lane, cfg);
      v.vx = nn::uniform(rng, cfg.speed_min, cfg.speed_max);
      v.vy = 0.0;
      v.v_desired = std::max(0.0, v.vx + nn::uniform(rng, -cfg.desired_speed_spread, cfg.desired_speed_spread));
      const bool is_host = lane == host_lane && slot == host_slot;
      if (is_host) host = vs.size();
      const double lc_draw = nn::uniform01(rng);
      const double start_draw = nn::uniform01(rng);
      const double dir_draw = nn::uniform01(rng);
      if (!is_host && cfg.mode == SynthMode::traffic && lc_draw < cfg.lane_change_prob) {
        const int steps = static_cast<int>(std::llround(cfg.lane_change_duration / dt));
        const int latest = std::max(0, static_cast<int>(kWindowFrames) - steps);
        v.lc_start = std::min(latest, static_cast<int>(start_draw * (latest + 1)));
        if (lane == 0) v.lc_sign = cfg.lanes > 1 ? 1.0 : 0.0;
        else if (lane == cfg.lanes - 1) v.lc_sign = -1.0;
        else v.lc_sign = dir_draw < 0.5 ? -1.0 : 1.0;
        if (v.lc_sign == 0.0) v.lc_start = -1;
      }
      vs.push_back(v);
    }
  }

  std::vector<AgentTrack> tracks(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) tracks[i].agent_id = vs[i].id;
  for (int k = 0; k < static_cast<int>(kWindowFrames); ++k) {
    std::vector<Vec2> acc(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
      double ax = cfg.mode == SynthMode::constant_acceleration ? cfg.constant_accel
                                                                : detail::longitudinal_accel(vs, i, cfg);
      // Never reverse: brake at most to a stop within this step.
      if (vs[i].vx + ax * dt < 0.0) ax = -vs[i].vx / dt;
      const double ay = cfg.mode == SynthMode::constant_acceleration ? 0.0 : detail::lateral_accel(vs[i], k, dt, cfg);
      acc[i] = {ax, ay};
      Frame f;
      f.t = k * dt;
      f.position = {vs[i].x, vs[i].y};
      f.velocity = {vs[i].vx, vs[i].vy};
      f.acceleration = acc[i];
      f.width = vs[i].width;
      f.length = vs[i].length;
      f.lane_id = detail::lane_of(vs[i].y, cfg);
      tracks[i].frames.push_back(f);
    }
    for (std::size_t i = 0; i < vs.size(); ++i) {
      vs[i].x += vs[i].vx * dt + 0.5 * acc[i].x * dt * dt;
      vs[i].y += vs[i].vy * dt + 0.5 * acc[i].y * dt * dt;
      vs[i].vx += acc[i].x * dt;
      vs[i].vy += acc[i].y * dt;
    }
  }
  for (auto& t : tracks) {
    for (auto& f : t.frames) {
      f.heading = f.velocity.norm() > 1e-9 ? std::atan2(f.velocity.y, f.velocity.x) : 0.0;
    }
    const std::size_t n = t.frames.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = k == 0 ? 0 : k - 1;
      const std::size_t hi = k + 1 < n ? k + 1 : n - 1;
      t.frames[k].yaw_rate =
          normalize_angle(t.frames[hi].heading - t.frames[lo].heading) / (static_cast<double>(hi - lo) * dt);
    }
  }

  // Host plus its closest vehicles over the past segment, all within one lane.
  const auto& h = tracks[host];
  std::vector<RankedNeighbor> ranked;
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    if (j == host) continue;
    double total = 0.0;
    for (std::size_t k = 0; k < kPastFrames; ++k) total += distance(h.frames[k].position, tracks[j].frames[k].position);
    ranked.push_back({total / static_cast<double>(kPastFrames), tracks[j].agent_id, j});
  }
  std::sort(ranked.begin(), ranked.end());
  SceneWindow scene;
  scene.scene_id = scene_index;
  scene.host_id = h.agent_id;
  scene.dt = dt;
  scene.agents.push_back(h);
  for (std::size_t k = 0; k + 1 < kSceneAgents; ++k) scene.agents.push_back(tracks[ranked[k].index]);
  compute_pairwise(scene);
  return scene;
}

/// Deterministic batch of synthetic scenes; scene i uses its own stream
/// derived from (seed, i), so prefixes agree across different n_scenes.
inline std::vector<SceneWindow> synth_scenes(std::uint64_t seed, std::size_t n_scenes, const BehaviorConfig& cfg = {},
                                             double dt = kFrameDt) {
  cfg.validate();
  std::vector<SceneWindow> out;
  out.reserve(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::mt19937_64 rng(seq);
    out.push_back(synth_scene(rng, static_cast<std::int64_t>(i), cfg, dt));
  }
  return out;
}

}  // namespace iaknn
