#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "iaknn/data/scene.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/model/filter.hpp"
#include "iaknn/model/interaction.hpp"
#include "iaknn/model/motion.hpp"
#include "iaknn/nn/checkpoint.hpp"
#include "iaknn/nn/params.hpp"

namespace iaknn {

/// Source of the filter control U_{t-1}.
enum class ControlSource { interaction, sensor };

struct PipelineConfig {
  InteractionConfig interaction;
  NoiseModelConfig noise;
  std::size_t obs_horizon = 5;  // L': filter steps before the forecast origin
  double p0 = 1.0;
  ControlSource control = ControlSource::interaction;
  DynamicModel dynamic = DynamicModel::vehicle;
  bool use_filter = true;             // false: estimates are the motion-layer trajectories
  bool loss_positions_only = false;

  void validate(std::size_t past_len = kPastFrames) const {
    interaction.validate();
    if (obs_horizon + 1 > past_len) {
      throw ConfigError("obs_horizon must be smaller than the past segment (" + std::to_string(past_len) + " frames)");
    }
    if (!(p0 > 0.0)) throw ConfigError("p0 must be positive");
    if (noise.reduce_width == 0 || noise.hidden == 0 || !(noise.sigma_min2 > 0.0)) {
      throw ConfigError("noise model widths and sigma_min2 must be positive");
    }
  }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"interaction", to_json(c.interaction)},
          {"noise",
           {{"reduce_width", c.noise.reduce_width},
            {"hidden", c.noise.hidden},
            {"input_scale", c.noise.input_scale},
            {"sigma_min2", c.noise.sigma_min2}}},
          {"obs_horizon", c.obs_horizon},
          {"p0", c.p0},
          {"control", c.control == ControlSource::interaction ? "interaction" : "sensor"},
          {"dynamic_model", c.dynamic == DynamicModel::vehicle ? "vehicle" : "pedestrian"},
          {"use_filter", c.use_filter},
          {"loss_positions_only", c.loss_positions_only}};
}

inline ControlSource control_source_from_string(const std::string& s) {
  if (s == "interaction") return ControlSource::interaction;
  if (s == "sensor") return ControlSource::sensor;
  throw ConfigError("unknown control source '" + s + "' (expected interaction or sensor)");
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    if (j.contains("interaction")) c.interaction = interaction_config_from_json(j.at("interaction"));
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      c.noise.reduce_width = n.value("reduce_width", c.noise.reduce_width);
      c.noise.hidden = n.value("hidden", c.noise.hidden);
      c.noise.input_scale = n.value("input_scale", c.noise.input_scale);
      c.noise.sigma_min2 = n.value("sigma_min2", c.noise.sigma_min2);
    }
    c.obs_horizon = j.value("obs_horizon", c.obs_horizon);
    c.p0 = j.value("p0", c.p0);
    c.control = control_source_from_string(j.value("control", std::string("interaction")));
    c.dynamic = dynamic_model_from_string(j.value("dynamic_model", std::string("vehicle")));
    c.use_filter = j.value("use_filter", c.use_filter);
    c.loss_positions_only = j.value("loss_positions_only", c.loss_positions_only);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model configuration: ") + e.what());
  }
  c.validate();
  return c;
}

inline std::vector<nn::ParamSpec> model_param_specs(const PipelineConfig& c) {
  auto specs = interaction_param_specs(c.interaction);
  for (auto& s : filter_param_specs(c.interaction.n_agents, c.interaction.horizon, c.noise)) specs.push_back(s);
  return specs;
}

/// Everything needed to run the model on a scene.
struct ModelBundle {
  PipelineConfig config;
  FeatureScaler scaler;
  nn::ParamStore params;
};

inline ModelBundle init_model(const PipelineConfig& config, const FeatureScaler& scaler, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const auto specs = model_param_specs(config);
  return {config, scaler, nn::init_params(specs, rng)};
}

inline nlohmann::json model_to_json(const ModelBundle& m, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j = nn::params_to_json(m.params);
  j["format_version"] = nn::kCheckpointFormatVersion;
  j["model"] = to_json(m.config);
  j["scaler"] = to_json(m.scaler);
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

inline ModelBundle model_from_json(const nlohmann::json& j) {
  ModelBundle m;
  try {
    m.config = pipeline_config_from_json(j.at("model"));
    m.scaler = feature_scaler_from_json(j.at("scaler"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint lacks model metadata: ") + e.what());
  }
  m.params = nn::params_from_json(j);
  for (const auto& spec : model_param_specs(m.config)) {
    if (!m.params.contains(spec.name)) throw SchemaError("checkpoint is missing parameter '" + spec.name + "'");
    if (m.params.at(spec.name).value.shape() != spec.shape) {
      throw SchemaError("checkpoint parameter '" + spec.name + "' has shape " +
                        nn::shape_string(m.params.at(spec.name).value.shape()) + ", expected " +
                        nn::shape_string(spec.shape));
    }
  }
  return m;
}

inline void save_model(const std::filesystem::path& path, const ModelBundle& m,
                       const nlohmann::json& extra = nlohmann::json::object()) {
  nn::write_file_atomic(path, model_to_json(m, extra).dump());
}

inline ModelBundle load_model(const std::filesystem::path& path) { return model_from_json(nn::read_checkpoint_json(path)); }

// ---------------------------------------------------------------------------

/// Positions and velocities of frames t+1..t+L as [L, N, 2] tensors.
struct TrajectoryWindow {
  Tensor positions;
  Tensor velocities;
};

inline TrajectoryWindow ground_truth_window(const SceneWindow& s, std::size_t t, std::size_t horizon) {
  if (t + horizon >= s.n_frames()) {
    throw DimensionError("ground truth for t = " + std::to_string(t) + " needs " + std::to_string(horizon) +
                         " future frames but the scene has " + std::to_string(s.n_frames()));
  }
  const std::size_t N = s.n_agents();
  TrajectoryWindow w{Tensor({horizon, N, 2}), Tensor({horizon, N, 2})};
  for (std::size_t l = 0; l < horizon; ++l)
    for (std::size_t a = 0; a < N; ++a) {
      const Frame& f = s.frame(a, t + l + 1);
      w.positions[forecast_index(l, a, 0, N)] = f.position.x;
      w.positions[forecast_index(l, a, 1, N)] = f.position.y;
      w.velocities[forecast_index(l, a, 0, N)] = f.velocity.x;
      w.velocities[forecast_index(l, a, 1, N)] = f.velocity.y;
    }
  return w;
}

/// One estimate per observation timestamp, in forecast layout [L, N, 2].
struct PipelineEstimate {
  std::size_t t = 0;  // frame index of the estimate
  Var positions;
  Var velocities;
  Var position_variance;  // pp blocks; invalid when the filter is bypassed
};

struct PipelineOutput {
  std::vector<PipelineEstimate> estimates;  // t0 .. t0 + L'
  std::vector<Var> accelerations;           // interaction forecast at each t
  FilterTrace trace;                        // empty when the filter is bypassed
  Var loss;                                 // set by pipeline_loss
};

namespace detail {

inline Var to_forecast_layout(const Var& p_x, const Var& p_y, std::size_t N, std::size_t L) {
  std::vector<std::size_t> order(L * N * 2);
  for (std::size_t ax = 0; ax < 2; ++ax) {
    const auto idx = detail::axis_indices(N, L, ax);
    for (std::size_t j = 0; j < idx.size(); ++j) order[idx[j]] = ax * N * L + j;
  }
  return nn::reshape(nn::gather(nn::concat({p_x, p_y}), std::move(order)), {L, N, 2});
}

inline Tensor teacher_tensor(const SceneWindow& s, std::size_t frame) {
  Tensor out({2 * s.n_agents()});
  for (std::size_t a = 0; a < s.n_agents(); ++a) {
    out[2 * a] = s.frame(a, frame).acceleration.x;
    out[2 * a + 1] = s.frame(a, frame).acceleration.y;
  }
  return out;
}

}  // namespace detail

struct PipelineRunOptions {
  double teacher_forcing = 0.0;      // probability of feeding ground truth at each decoder step
  std::mt19937_64* rng = nullptr;    // required when teacher_forcing > 0
};

/// Interaction -> Motion -> Filter on one scene. Filter timestamps end at
/// the last past frame; the final estimate is the forecast of the future
/// segment.
inline PipelineOutput run_pipeline(nn::Tape& tape, ModelBundle& model, const SceneWindow& scene,
                                   const PipelineRunOptions& opts = {}) {
  const auto& cfg = model.config;
  const std::size_t N = cfg.interaction.n_agents, L = cfg.interaction.horizon;
  if (scene.n_agents() != N) {
    throw DimensionError("scene " + std::to_string(scene.scene_id) + " has " + std::to_string(scene.n_agents()) +
                         " agents, the model expects " + std::to_string(N));
  }
  cfg.validate(scene.past_len);
  if (scene.future_len < L) {
    throw DimensionError("scene " + std::to_string(scene.scene_id) + " has fewer future frames than the horizon");
  }
  if (opts.teacher_forcing > 0.0 && opts.rng == nullptr) throw ConfigError("teacher forcing needs a random generator");

  const std::size_t t_last = scene.last_past();
  const std::size_t t0 = t_last - cfg.obs_horizon;
  const auto feats = build_features(scene, model.scaler);
  const auto enc = interaction_encode(tape, model.params, cfg.interaction, feats);

  PipelineOutput out;
  std::vector<std::vector<Vec2>> pos(t_last + 1), vel(t_last + 1);
  for (std::size_t t = t0; t <= t_last; ++t) {
    for (std::size_t a = 0; a < N; ++a) {
      pos[t].push_back(scene.frame(a, t).position);
      vel[t].push_back(current_velocity(scene.frame(a, t), cfg.dynamic));
    }
    TeacherFn teacher = nullptr;
    if (opts.teacher_forcing > 0.0) {
      teacher = [&, t](std::size_t l) {
        return nn::uniform01(*opts.rng) < opts.teacher_forcing ? detail::teacher_tensor(scene, t + l) : Tensor();
      };
    }
    out.accelerations.push_back(
        interaction_decode(tape, model.params, cfg.interaction, enc[t], feats.observed_accel[t], teacher));
  }
  const auto forecast_at = [&](std::size_t t) { return out.accelerations[t - t0]; };
  const auto observation = [&](std::size_t t) { return rollout(pos[t], vel[t], forecast_at(t), scene.dt); };

  if (!cfg.use_filter) {
    for (std::size_t t = t0; t <= t_last; ++t) {
      const auto obs = observation(t);
      out.estimates.push_back({t, obs.positions, obs.velocities, Var()});
    }
    return out;
  }

  FilterSequenceInput in;
  in.n_agents = N;
  in.horizon = L;
  in.dt = scene.dt;
  in.p0 = cfg.p0;
  const auto init = constant_velocity(pos[t0], vel[t0], L, scene.dt);
  in.init_positions = init.positions;
  in.init_velocities = init.velocities;
  for (std::size_t t = t0 + 1; t <= t_last; ++t) {
    FilterStepInput step;
    if (cfg.control == ControlSource::interaction) {
      step.control = forecast_at(t - 1);
    } else {
      Tensor held({L, N, 2});
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t a = 0; a < N; ++a) {
          held[forecast_index(l, a, 0, N)] = scene.frame(a, t - 1).acceleration.x;
          held[forecast_index(l, a, 1, N)] = scene.frame(a, t - 1).acceleration.y;
        }
      step.control = tape.constant(std::move(held));
    }
    const auto obs = observation(t);
    step.obs_positions = obs.positions;
    step.obs_velocities = obs.velocities;
    step.anchor_positions = pos[t];
    step.anchor_velocities = vel[t];
    in.steps.push_back(std::move(step));
  }
  FilterNoise noise;
  noise.model = cfg.noise;
  out.trace = filter_sequence(tape, model.params, in, noise);
  for (std::size_t k = 0; k < out.trace.estimates.size(); ++k) {
    const auto& e = out.trace.estimates[k];
    out.estimates.push_back({t0 + k, detail::to_forecast_layout(e.axis[0].p, e.axis[1].p, N, L),
                             detail::to_forecast_layout(e.axis[0].v, e.axis[1].v, N, L),
                             detail::to_forecast_layout(e.axis[0].a, e.axis[1].a, N, L)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss: mean over agents and observation timestamps of the squared
// displacement summed over the forecast window.

/// Plain version. `estimates[k]` and `truth[k]` are aligned windows.
inline double trajectory_loss(const std::vector<TrajectoryWindow>& estimates, const std::vector<TrajectoryWindow>& truth,
                              bool positions_only = false) {
  if (estimates.size() != truth.size() || estimates.empty()) {
    throw DimensionError("loss needs the same nonzero number of estimate and ground-truth windows");
  }
  const std::size_t N = estimates[0].positions.rank() == 3 ? estimates[0].positions.dim(1) : 0;
  double total = 0.0;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const auto& e = estimates[k];
    const auto& g = truth[k];
    if (e.positions.shape() != g.positions.shape() || e.velocities.shape() != g.velocities.shape() ||
        e.positions.shape() != e.velocities.shape() || e.positions.rank() != 3 || e.positions.dim(1) != N) {
      throw DimensionError("estimate and ground-truth horizons are misaligned at timestamp " + std::to_string(k));
    }
    for (std::size_t i = 0; i < e.positions.size(); ++i) {
      const double dp = e.positions[i] - g.positions[i];
      total += dp * dp;
      if (!positions_only) {
        const double dv = e.velocities[i] - g.velocities[i];
        total += dv * dv;
      }
    }
  }
  return total / (static_cast<double>(estimates.size()) * static_cast<double>(N));
}

/// Tape version over a pipeline run; stores the result in `out.loss`.
inline Var pipeline_loss(nn::Tape& tape, PipelineOutput& out, const SceneWindow& scene, bool positions_only) {
  if (out.estimates.empty()) throw StateError("pipeline produced no estimates");
  const nn::Shape shape = out.estimates[0].positions.shape();
  const std::size_t L = shape[0], N = shape[1];
  Var total = tape.constant(Tensor::scalar(0.0));
  for (const auto& e : out.estimates) {
    const auto g = ground_truth_window(scene, e.t, L);
    Tensor neg_p = g.positions, neg_v = g.velocities;
    for (double& x : neg_p.data()) x = -x;
    for (double& x : neg_v.data()) x = -x;
    total = nn::add(total, nn::sum(nn::square(nn::add_const(e.positions, neg_p))));
    if (!positions_only) total = nn::add(total, nn::sum(nn::square(nn::add_const(e.velocities, neg_v))));
  }
  out.loss = nn::scale(total, 1.0 / (static_cast<double>(out.estimates.size()) * static_cast<double>(N)));
  return out.loss;
}

/// Final forecast (from the last past frame) with its position variances.
struct ScenePrediction {
  Tensor positions;           // [L, N, 2]
  Tensor position_variance;   // [L, N, 2]; empty when the filter is bypassed
};

inline ScenePrediction predict_scene(ModelBundle& model, const SceneWindow& scene) {
  nn::Tape tape;
  const auto out = run_pipeline(tape, model, scene);
  const auto& last = out.estimates.back();
  return {last.positions.value(), last.position_variance.valid() ? last.position_variance.value() : Tensor()};
}

}  // namespace iaknn
