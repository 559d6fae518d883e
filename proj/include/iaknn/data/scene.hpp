#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iaknn/data/track.hpp"
#include "iaknn/errors.hpp"

namespace iaknn {

/// A host vehicle and its ranked neighbours over one aligned window. Agent 0
/// is the host; agents 1.. are ordered by mean distance to the host over the
/// past segment.
struct SceneWindow {
  std::int64_t scene_id = 0;
  std::int64_t host_id = 0;
  std::int64_t start_frame = 0;
  double dt = kFrameDt;
  std::size_t past_len = kPastFrames;
  std::size_t future_len = kFutureFrames;
  std::vector<AgentTrack> agents;             // each with past_len + future_len frames
  std::vector<Eigen::MatrixXd> distances;     // per frame, N x N, meters
  std::vector<Eigen::MatrixXd> repulsive;     // per frame, N x N

  std::size_t n_agents() const { return agents.size(); }
  std::size_t n_frames() const { return past_len + future_len; }
  std::size_t last_past() const { return past_len - 1; }

  const Frame& frame(std::size_t agent, std::size_t k) const { return agents[agent].frames[k]; }

  std::vector<std::int64_t> agent_ids() const {
    std::vector<std::int64_t> ids;
    for (const auto& a : agents) ids.push_back(a.agent_id);
    return ids;
  }

  /// Frames of every agent at window index k.
  std::vector<Frame> snapshot(std::size_t k) const {
    std::vector<Frame> out;
    out.reserve(agents.size());
    for (const auto& a : agents) out.push_back(a.frames[k]);
    return out;
  }
};

/// Recomputes the pairwise distance and repulsion matrices from the tracks.
inline void compute_pairwise(SceneWindow& scene) {
  scene.distances.clear();
  scene.repulsive.clear();
  for (std::size_t k = 0; k < scene.n_frames(); ++k) {
    const auto snap = scene.snapshot(k);
    scene.distances.push_back(pairwise_distances(snap));
    scene.repulsive.push_back(repulsive_forces(snap, scene.dt));
  }
}

/// Structural checks: frame counts, finite values, matrix shapes.
inline void validate_scene(const SceneWindow& scene) {
  const std::string tag = "scene " + std::to_string(scene.scene_id);
  if (scene.agents.empty()) throw DataError(tag + " has no agents");
  const auto n = static_cast<Eigen::Index>(scene.n_agents());
  for (const auto& a : scene.agents) {
    if (a.frames.size() != scene.n_frames()) {
      throw DataError(tag + ": agent " + std::to_string(a.agent_id) + " has " + std::to_string(a.frames.size()) +
                      " frames, expected " + std::to_string(scene.n_frames()));
    }
    for (const auto& f : a.frames) {
      const double vals[] = {f.position.x, f.position.y, f.velocity.x, f.velocity.y, f.acceleration.x,
                             f.acceleration.y, f.heading, f.yaw_rate, f.width, f.length};
      for (double v : vals)
        if (!std::isfinite(v)) throw DataError(tag + ": non-finite value for agent " + std::to_string(a.agent_id));
    }
  }
  if (scene.distances.size() != scene.n_frames() || scene.repulsive.size() != scene.n_frames()) {
    throw DataError(tag + ": pairwise matrices do not cover every frame");
  }
  for (std::size_t k = 0; k < scene.n_frames(); ++k) {
    if (scene.distances[k].rows() != n || scene.distances[k].cols() != n || scene.repulsive[k].rows() != n ||
        scene.repulsive[k].cols() != n) {
      throw DataError(tag + ": pairwise matrix has the wrong size");
    }
  }
}

/// True when the window contains a lane change or any non-negligible
/// acceleration, i.e. constant-velocity extrapolation is not exact.
inline bool has_interaction_event(const SceneWindow& scene, double accel_threshold = 1e-6) {
  for (const auto& a : scene.agents) {
    for (const auto& f : a.frames) {
      if (f.lane_id != a.frames.front().lane_id) return true;
      if (f.acceleration.norm() > accel_threshold) return true;
    }
  }
  return false;
}

struct SceneBuildConfig {
  std::size_t window_frames = kWindowFrames;
  std::size_t past_frames = kPastFrames;
  std::size_t stride = 10;
  std::size_t neighbors = kSceneAgents - 1;
  double dt = kFrameDt;
};

struct SceneBuildResult {
  std::vector<SceneWindow> scenes;
  std::size_t skipped_windows = 0;  // windows whose host lacked enough eligible neighbours
  std::size_t skipped_hosts = 0;    // hosts with at least one full window but no scene
};

/// Neighbour candidates ranked by mean distance to the host over the past
/// segment; ties broken by agent id.
struct RankedNeighbor {
  double mean_distance;
  std::int64_t agent_id;
  std::size_t index;
};

inline bool operator<(const RankedNeighbor& a, const RankedNeighbor& b) {
  return std::tie(a.mean_distance, a.agent_id) < std::tie(b.mean_distance, b.agent_id);
}

namespace detail {

struct TrackSpan {
  std::int64_t first = 0;  // frame index of frames[0]
  std::int64_t last = 0;
};

inline TrackSpan track_span(const AgentTrack& t, double dt) {
  return {frame_index(t.frames.front().t, dt), frame_index(t.frames.back().t, dt)};
}

inline const Frame& at_frame(const AgentTrack& t, const TrackSpan& span, std::int64_t f) {
  return t.frames[static_cast<std::size_t>(f - span.first)];
}

}  // namespace detail

/// Slides a window over every host and assembles scenes of the host and its
/// `neighbors` closest eligible vehicles (same lane or an adjacent lane at the
/// last past frame). Output is ordered by (host_id, start_frame) regardless of
/// the input order.
inline SceneBuildResult build_scenes(std::span<const AgentTrack> input, const SceneBuildConfig& cfg = {}) {
  if (cfg.past_frames == 0 || cfg.past_frames >= cfg.window_frames || cfg.stride == 0) {
    throw ConfigError("scene window needs 0 < past_frames < window_frames and a positive stride");
  }
  std::vector<const AgentTrack*> tracks;
  for (const auto& t : input)
    if (!t.frames.empty()) tracks.push_back(&t);
  std::sort(tracks.begin(), tracks.end(), [](auto* a, auto* b) { return a->agent_id < b->agent_id; });
  for (std::size_t i = 1; i < tracks.size(); ++i) {
    if (tracks[i]->agent_id == tracks[i - 1]->agent_id) {
      throw DataError("vehicle id " + std::to_string(tracks[i]->agent_id) + " appears in more than one track");
    }
  }
  std::vector<detail::TrackSpan> spans;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> active;  // frame -> tracks present, ascending id
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    validate_track(*tracks[i], cfg.dt);
    spans.push_back(detail::track_span(*tracks[i], cfg.dt));
    for (std::int64_t f = spans[i].first; f <= spans[i].last; ++f) active[f].push_back(i);
  }

  const auto W = static_cast<std::int64_t>(cfg.window_frames);
  const auto P = static_cast<std::int64_t>(cfg.past_frames);
  SceneBuildResult result;
  for (std::size_t h = 0; h < tracks.size(); ++h) {
    const auto& host = *tracks[h];
    const auto hs = spans[h];
    bool had_window = false;
    bool had_scene = false;
    for (std::int64_t s = hs.first; s + W - 1 <= hs.last; s += static_cast<std::int64_t>(cfg.stride)) {
      had_window = true;
      const std::int64_t e = s + W - 1;
      const std::int64_t last_past = s + P - 1;
      const int host_lane = detail::at_frame(host, hs, last_past).lane_id;
      std::vector<RankedNeighbor> cands;
      for (std::size_t j : active.at(s)) {
        if (j == h || spans[j].last < e) continue;
        const auto& other = *tracks[j];
        if (std::abs(detail::at_frame(other, spans[j], last_past).lane_id - host_lane) > 1) continue;
        double total = 0.0;
        for (std::int64_t f = s; f <= last_past; ++f) {
          total += distance(detail::at_frame(host, hs, f).position, detail::at_frame(other, spans[j], f).position);
        }
        cands.push_back({total / static_cast<double>(P), other.agent_id, j});
      }
      if (cands.size() < cfg.neighbors) {
        ++result.skipped_windows;
        continue;
      }
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(cfg.neighbors), cands.end());
      SceneWindow scene;
      scene.host_id = host.agent_id;
      scene.start_frame = s;
      scene.dt = cfg.dt;
      scene.past_len = cfg.past_frames;
      scene.future_len = cfg.window_frames - cfg.past_frames;
      auto take = [&](std::size_t idx) {
        AgentTrack a;
        a.agent_id = tracks[idx]->agent_id;
        const auto off = static_cast<std::size_t>(s - spans[idx].first);
        a.frames.assign(tracks[idx]->frames.begin() + static_cast<std::ptrdiff_t>(off),
                        tracks[idx]->frames.begin() + static_cast<std::ptrdiff_t>(off + cfg.window_frames));
        return a;
      };
      scene.agents.push_back(take(h));
      for (std::size_t k = 0; k < cfg.neighbors; ++k) scene.agents.push_back(take(cands[k].index));
      compute_pairwise(scene);
      scene.scene_id = static_cast<std::int64_t>(result.scenes.size());
      result.scenes.push_back(std::move(scene));
      had_scene = true;
    }
    if (had_window && !had_scene) ++result.skipped_hosts;
  }
  return result;
}

}  // namespace iaknn
