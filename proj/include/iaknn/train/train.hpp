#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "iaknn/data/scene.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/model/pipeline.hpp"
#include "iaknn/nn/optim.hpp"
#include "iaknn/nn/params.hpp"

namespace iaknn {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double max_grad_norm = 5.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  double teacher_forcing = 0.0;

  void validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite non-negative number");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (!(teacher_forcing >= 0.0 && teacher_forcing <= 1.0)) throw ConfigError("teacher_forcing must lie in [0, 1]");
  }

  nn::AdamConfig adam() const { return {lr, beta1, beta2, eps}; }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},           {"beta1", c.beta1},           {"beta2", c.beta2},
          {"eps", c.eps},         {"max_grad_norm", c.max_grad_norm}, {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"seed", c.seed},       {"teacher_forcing", c.teacher_forcing}};
}

struct TrainCallbacks {
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
  /// Polled before every batch; returning true stops training.
  std::function<bool()> should_stop;
};

struct TrainResult {
  std::vector<double> epoch_losses;
  bool interrupted = false;
};

/// Fisher-Yates on top of uniform01, so the order does not depend on the
/// standard library's distributions.
template <class T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

/// Forward, loss and backward for one scene. Gradients are accumulated with
/// weight `seed`. Returns the loss.
inline double scene_loss_and_grad(ModelBundle& model, const SceneWindow& scene, double seed,
                                  const PipelineRunOptions& opts = {}) {
  nn::Tape tape;
  auto out = run_pipeline(tape, model, scene, opts);
  const Var loss = pipeline_loss(tape, out, scene, model.config.loss_positions_only);
  const double value = loss.value()[0];
  if (!std::isfinite(value)) {
    throw TrainingError("non-finite loss on scene " + std::to_string(scene.scene_id));
  }
  tape.backward(loss, seed);
  return value;
}

inline double scene_loss(ModelBundle& model, const SceneWindow& scene) {
  nn::Tape tape;
  auto out = run_pipeline(tape, model, scene);
  return pipeline_loss(tape, out, scene, model.config.loss_positions_only).value()[0];
}

/// Mini-batch Adam over shuffled scenes. Gradients of a batch are averaged,
/// clipped to max_grad_norm, then applied.
inline TrainResult train(ModelBundle& model, const std::vector<SceneWindow>& scenes, const TrainConfig& cfg,
                         const TrainCallbacks& callbacks = {}) {
  cfg.validate();
  if (scenes.empty()) throw ConfigError("training needs at least one scene");
  std::mt19937_64 order_rng(cfg.seed);
  std::mt19937_64 teacher_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  PipelineRunOptions opts;
  opts.teacher_forcing = cfg.teacher_forcing;
  opts.rng = &teacher_rng;
  const auto adam = cfg.adam();

  TrainResult result;
  std::vector<std::size_t> order(scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  model.params.zero_grad();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    deterministic_shuffle(order, order_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (callbacks.should_stop && callbacks.should_stop()) {
        model.params.zero_grad();
        result.interrupted = true;
        return result;
      }
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        total += scene_loss_and_grad(model, scenes[order[k]], weight, opts);
      }
      nn::clip_global_norm(model.params, cfg.max_grad_norm);
      nn::adam_step(model.params, adam);
    }
    const double mean = total / static_cast<double>(scenes.size());
    result.epoch_losses.push_back(mean);
    if (callbacks.on_epoch) callbacks.on_epoch(epoch, mean);
  }
  return result;
}

// ---------------------------------------------------------------------------

struct SceneSplit {
  std::vector<SceneWindow> train, validation, test;
};

/// Host-disjoint split: hosts are shuffled with `seed`, then assigned in
/// order until each subset reaches its share of scenes.
inline SceneSplit split_scenes(const std::vector<SceneWindow>& scenes, std::uint64_t seed, double train_share = 0.70,
                               double validation_share = 0.15) {
  if (train_share < 0.0 || validation_share < 0.0 || train_share + validation_share > 1.0) {
    throw ConfigError("split shares must be non-negative and sum to at most 1");
  }
  std::map<std::int64_t, std::vector<std::size_t>> by_host;
  for (std::size_t i = 0; i < scenes.size(); ++i) by_host[scenes[i].host_id].push_back(i);
  std::vector<std::int64_t> hosts;
  for (const auto& [h, idx] : by_host) hosts.push_back(h);
  std::mt19937_64 rng(seed);
  deterministic_shuffle(hosts, rng);

  const double n = static_cast<double>(scenes.size());
  SceneSplit out;
  std::size_t assigned = 0;
  for (auto h : hosts) {
    const double done = static_cast<double>(assigned);
    auto& dst = done < train_share * n ? out.train : done < (train_share + validation_share) * n ? out.validation : out.test;
    for (std::size_t i : by_host[h]) dst.push_back(scenes[i]);
    assigned += by_host[h].size();
  }
  return out;
}

}  // namespace iaknn
