#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "iaknn/data/scene.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/nn/layers.hpp"
#include "iaknn/nn/ops.hpp"

namespace iaknn {

using nn::Tensor;
using nn::Var;

struct InteractionConfig {
  std::size_t n_agents = kSceneAgents;
  std::size_t horizon = kFutureFrames;
  std::size_t conv1 = 8;
  std::size_t conv2 = 16;
  std::size_t fc1 = 64;
  std::size_t fc2 = 32;
  std::size_t hidden = 32;
  double a_max = 8.0;

  void validate() const {
    if (n_agents == 0 || horizon == 0 || conv1 == 0 || conv2 == 0 || fc1 == 0 || fc2 == 0 || hidden == 0) {
      throw ConfigError("interaction widths, agent count and horizon must be positive");
    }
    if (!(a_max > 0.0)) throw ConfigError("a_max must be positive");
  }
};

inline nlohmann::json to_json(const InteractionConfig& c) {
  return {{"n_agents", c.n_agents}, {"horizon", c.horizon}, {"conv1", c.conv1}, {"conv2", c.conv2},
          {"fc1", c.fc1},           {"fc2", c.fc2},         {"hidden", c.hidden}, {"a_max", c.a_max}};
}

inline InteractionConfig interaction_config_from_json(const nlohmann::json& j) {
  InteractionConfig c;
  c.n_agents = j.value("n_agents", c.n_agents);
  c.horizon = j.value("horizon", c.horizon);
  c.conv1 = j.value("conv1", c.conv1);
  c.conv2 = j.value("conv2", c.conv2);
  c.fc1 = j.value("fc1", c.fc1);
  c.fc2 = j.value("fc2", c.fc2);
  c.hidden = j.value("hidden", c.hidden);
  c.a_max = j.value("a_max", c.a_max);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Features

enum FeatureChannel : std::size_t { ch_ax, ch_ay, ch_width, ch_length, ch_distance, ch_repulsive, kFeatureChannels };

/// Per-channel standardisation constants, fitted on training scenes.
struct FeatureScaler {
  std::array<double, kFeatureChannels> mean{};
  std::array<double, kFeatureChannels> stddev{1, 1, 1, 1, 1, 1};

  static FeatureScaler identity() { return {}; }

  double apply(std::size_t ch, double x) const { return (x - mean[ch]) / stddev[ch]; }

  /// Moments over every agent and past frame; pairwise channels use the
  /// off-diagonal entries only. Constant channels keep stddev 1.
  static FeatureScaler fit(std::span<const SceneWindow> scenes) {
    std::array<double, kFeatureChannels> sum{}, sq{}, count{};
    const auto add = [&](std::size_t ch, double x) {
      sum[ch] += x;
      sq[ch] += x * x;
      count[ch] += 1.0;
    };
    for (const auto& s : scenes) {
      for (std::size_t k = 0; k < s.past_len; ++k) {
        for (std::size_t a = 0; a < s.n_agents(); ++a) {
          const Frame& f = s.frame(a, k);
          add(ch_ax, f.acceleration.x);
          add(ch_ay, f.acceleration.y);
          add(ch_width, f.width);
          add(ch_length, f.length);
          for (std::size_t b = 0; b < s.n_agents(); ++b) {
            if (a == b) continue;
            const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
            add(ch_distance, s.distances[k](ia, ib));
            add(ch_repulsive, s.repulsive[k](ia, ib));
          }
        }
      }
    }
    FeatureScaler out;
    for (std::size_t ch = 0; ch < kFeatureChannels; ++ch) {
      if (count[ch] == 0.0) continue;
      const double m = sum[ch] / count[ch];
      const double var = std::max(0.0, sq[ch] / count[ch] - m * m);
      out.mean[ch] = m;
      out.stddev[ch] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return out;
  }
};

inline nlohmann::json to_json(const FeatureScaler& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

inline FeatureScaler feature_scaler_from_json(const nlohmann::json& j) {
  FeatureScaler s;
  s.mean = j.at("mean").get<std::array<double, kFeatureChannels>>();
  s.stddev = j.at("stddev").get<std::array<double, kFeatureChannels>>();
  for (double sd : s.stddev)
    if (!(sd > 0.0) || !std::isfinite(sd)) throw SchemaError("feature scaler stddev must be positive and finite");
  return s;
}

/// Standardised inputs for each past frame.
struct InteractionFeatures {
  std::vector<Tensor> agent;     // per frame, [4N]: (ax, ay, width, length) per agent
  std::vector<Tensor> pairwise;  // per frame, [N, N, 2]: (distance, repulsion); diagonal 0
  std::vector<Tensor> observed_accel;  // per frame, [2N] raw accelerations (decoder seed)

  std::size_t steps() const { return agent.size(); }
};

inline InteractionFeatures build_features(const SceneWindow& scene, const FeatureScaler& scaler) {
  const std::size_t N = scene.n_agents();
  if (scene.distances.size() < scene.past_len || scene.repulsive.size() < scene.past_len) {
    throw DataError("scene " + std::to_string(scene.scene_id) + " lacks pairwise matrices for the past frames");
  }
  InteractionFeatures out;
  for (std::size_t k = 0; k < scene.past_len; ++k) {
    Tensor agent({4 * N}), pair({N, N, 2}), accel({2 * N});
    for (std::size_t a = 0; a < N; ++a) {
      const Frame& f = scene.frame(a, k);
      agent[4 * a + 0] = scaler.apply(ch_ax, f.acceleration.x);
      agent[4 * a + 1] = scaler.apply(ch_ay, f.acceleration.y);
      agent[4 * a + 2] = scaler.apply(ch_width, f.width);
      agent[4 * a + 3] = scaler.apply(ch_length, f.length);
      accel[2 * a] = f.acceleration.x;
      accel[2 * a + 1] = f.acceleration.y;
      for (std::size_t b = 0; b < N; ++b) {
        if (a == b) continue;
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        pair[(a * N + b) * 2] = scaler.apply(ch_distance, scene.distances[k](ia, ib));
        pair[(a * N + b) * 2 + 1] = scaler.apply(ch_repulsive, scene.repulsive[k](ia, ib));
      }
    }
    if (!agent.all_finite() || !pair.all_finite() || !accel.all_finite()) {
      throw DataError("scene " + std::to_string(scene.scene_id) + ": non-finite feature at past frame " +
                      std::to_string(k));
    }
    out.agent.push_back(std::move(agent));
    out.pairwise.push_back(std::move(pair));
    out.observed_accel.push_back(std::move(accel));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoder-decoder

inline std::vector<nn::ParamSpec> interaction_param_specs(const InteractionConfig& c) {
  c.validate();
  const std::size_t N = c.n_agents;
  std::vector<nn::ParamSpec> specs;
  const auto append = [&](std::vector<nn::ParamSpec> more) {
    for (auto& s : more) specs.push_back(std::move(s));
  };
  append(nn::conv_param_specs("inter.conv1", 3, 2, c.conv1));
  append(nn::conv_param_specs("inter.conv2", 3, c.conv1, c.conv2));
  append(nn::fc_param_specs("inter.fc1", N * N * c.conv2 + 4 * N, c.fc1));
  append(nn::fc_param_specs("inter.fc2", c.fc1, c.fc2));
  append(nn::lstm_param_specs("inter.enc", c.fc2, c.hidden));
  append(nn::lstm_param_specs("inter.dec", 2 * N, c.hidden));
  append(nn::fc_param_specs("inter.head", c.hidden, 2 * N));
  return specs;
}

/// Encoder state after each past frame.
inline std::vector<nn::LstmState> interaction_encode(nn::Tape& tape, nn::ParamStore& params,
                                                     const InteractionConfig& c, const InteractionFeatures& feats) {
  const std::size_t N = c.n_agents;
  std::vector<nn::LstmState> states;
  nn::LstmState s = nn::lstm_zero_state(tape, c.hidden);
  for (std::size_t k = 0; k < feats.steps(); ++k) {
    if (feats.pairwise[k].shape() != nn::Shape{N, N, 2} || feats.agent[k].size() != 4 * N) {
      throw DimensionError("interaction features do not match n_agents = " + std::to_string(N));
    }
    Var x = tape.constant(feats.pairwise[k]);
    x = nn::conv2d_forward(tape, x, params, "inter.conv1", 1, 1, nn::Activation::relu);
    x = nn::conv2d_forward(tape, x, params, "inter.conv2", 1, 1, nn::Activation::relu);
    x = nn::concat({nn::reshape(x, {x.size()}), tape.constant(feats.agent[k])});
    x = nn::fc_forward(tape, x, params, "inter.fc1", nn::Activation::relu);
    x = nn::fc_forward(tape, x, params, "inter.fc2", nn::Activation::relu);
    s = nn::lstm_step(tape, x, s, params, "inter.enc");
    states.push_back(s);
  }
  return states;
}

/// Ground-truth accelerations for teacher forcing: given step l >= 1,
/// returns the [2N] input to use instead of the previous output, or an
/// empty tensor to keep the model's own output.
using TeacherFn = std::function<Tensor(std::size_t step)>;

/// Unrolls the decoder for `horizon` steps from an encoder state. The
/// first input is the observed acceleration at the forecast origin.
/// Returns accelerations [L, N, 2] bounded by a_max * tanh.
inline Var interaction_decode(nn::Tape& tape, nn::ParamStore& params, const InteractionConfig& c,
                              const nn::LstmState& encoded, const Tensor& observed_accel,
                              const TeacherFn& teacher = nullptr) {
  const std::size_t N = c.n_agents;
  if (observed_accel.size() != 2 * N) throw DimensionError("decoder seed must hold 2N accelerations");
  nn::LstmState s = encoded;
  Var input = nn::scale(tape.constant(observed_accel), 1.0 / c.a_max);
  std::vector<Var> outputs;
  outputs.reserve(c.horizon);
  for (std::size_t l = 0; l < c.horizon; ++l) {
    if (l > 0) {
      Tensor forced = teacher ? teacher(l) : Tensor();
      input = forced.empty() ? nn::scale(outputs.back(), 1.0 / c.a_max)
                             : nn::scale(tape.constant(std::move(forced)), 1.0 / c.a_max);
    }
    s = nn::lstm_step(tape, input, s, params, "inter.dec");
    Var head = nn::fc_forward(tape, s.hidden, params, "inter.head", nn::Activation::identity);
    outputs.push_back(nn::scale(nn::tanh(head), c.a_max));
  }
  return nn::reshape(nn::concat(outputs), {c.horizon, N, 2});
}

/// Forecast from the last past frame.
inline Var interaction_forward(nn::Tape& tape, nn::ParamStore& params, const InteractionConfig& c,
                               const InteractionFeatures& feats) {
  if (feats.steps() == 0) throw DataError("interaction features are empty");
  const auto states = interaction_encode(tape, params, c, feats);
  return interaction_decode(tape, params, c, states.back(), feats.observed_accel.back());
}

}  // namespace iaknn
