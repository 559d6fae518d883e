#pragma once

#include <cstdint>
#include <vector>

#include "iaknn/data/scene.hpp"
#include "iaknn/data/synth.hpp"
#include "iaknn/model/pipeline.hpp"

namespace iaknn::testing {

/// N vehicles driving straight up parallel lanes at distinct constant speeds.
inline SceneWindow constant_velocity_scene(std::size_t n_agents = kSceneAgents, std::int64_t scene_id = 1) {
  SceneWindow s;
  s.scene_id = scene_id;
  s.host_id = 1;
  for (std::size_t a = 0; a < n_agents; ++a) {
    AgentTrack t;
    t.agent_id = static_cast<std::int64_t>(a) + 1;
    const double speed = 10.0 + static_cast<double>(a);
    for (std::size_t k = 0; k < kWindowFrames; ++k) {
      Frame f;
      f.t = kFrameDt * static_cast<double>(k);
      f.position = {3.7 * static_cast<double>(a), speed * f.t + 2.0 * static_cast<double>(a)};
      f.velocity = {0.0, speed};
      f.heading = std::numbers::pi / 2;
      f.width = 1.8;
      f.length = 4.5;
      f.lane_id = static_cast<int>(a) + 1;
      t.frames.push_back(f);
    }
    s.agents.push_back(t);
  }
  compute_pairwise(s);
  return s;
}

/// First `n_agents` agents of a synthetic scene.
inline SceneWindow reduced_scene(std::uint64_t seed, std::size_t n_agents) {
  SceneWindow s = synth_scenes(seed, 1)[0];
  s.agents.resize(n_agents);
  compute_pairwise(s);
  return s;
}

inline PipelineConfig tiny_pipeline_config(std::size_t n_agents = 2, std::size_t horizon = 3) {
  PipelineConfig c;
  c.interaction.n_agents = n_agents;
  c.interaction.horizon = horizon;
  c.interaction.conv1 = 2;
  c.interaction.conv2 = 2;
  c.interaction.fc1 = 4;
  c.interaction.fc2 = 3;
  c.interaction.hidden = 3;
  c.interaction.a_max = 2.0;
  c.noise.reduce_width = 4;
  c.noise.hidden = 3;
  c.obs_horizon = 2;
  return c;
}

}  // namespace iaknn::testing
