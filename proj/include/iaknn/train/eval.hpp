#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iaknn/data/scene.hpp"
#include "iaknn/model/pipeline.hpp"
#include "iaknn/train/metrics.hpp"

namespace iaknn {

inline constexpr std::array<std::size_t, 5> kEvalHorizons{10, 20, 30, 40, 50};

struct EvalRow {
  std::string model;
  std::size_t horizon_steps = 0;
  double horizon_s = 0.0;
  double rmse = 0.0;
  std::optional<double> nll;
  double hit_rate = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::size_t scene_count = 0;
  std::size_t interacting_scenes = 0;
  std::optional<double> runtime_s;

  const EvalRow& row(const std::string& model, std::size_t horizon_steps) const {
    for (const auto& r : rows)
      if (r.model == model && r.horizon_steps == horizon_steps) return r;
    throw ConfigError("report has no row for " + model + " at " + std::to_string(horizon_steps) + " steps");
  }
};

struct EvalOptions {
  bool include_cv = true;
  bool interacting_only = false;
  bool record_runtime = false;  // off by default so reports are reproducible
};

inline std::string model_label(const PipelineConfig& c) { return c.use_filter ? "iaknn" : "iaknn_nofl"; }

/// Runs the model and the constant-velocity baseline on every scene.
/// Parameters are read, never written.
inline EvalReport evaluate(ModelBundle& model, const std::vector<SceneWindow>& scenes, const EvalOptions& opts = {}) {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t H = kEvalHorizons.size();
  std::vector<MetricAccumulator> ours(H), cv(H);
  EvalReport report;
  for (const auto& s : scenes) {
    const bool interacting = has_interaction_event(s);
    if (opts.interacting_only && !interacting) continue;
    ++report.scene_count;
    report.interacting_scenes += interacting ? 1 : 0;
    const Tensor truth = future_positions(s);
    const auto pred = predict_scene(model, s);
    const Tensor base = opts.include_cv ? cv_baseline(s, truth.dim(0)) : Tensor();
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t steps = kEvalHorizons[h];
      if (steps > truth.dim(0)) continue;
      accumulate_positions(ours[h], pred.positions, truth, steps);
      if (!pred.position_variance.empty()) {
        accumulate_nll(ours[h], pred.positions, pred.position_variance, truth, steps, model.config.noise.sigma_min2);
      }
      if (opts.include_cv) accumulate_positions(cv[h], base, truth, steps);
    }
  }
  const auto emit = [&](const std::string& name, const std::vector<MetricAccumulator>& acc) {
    for (std::size_t h = 0; h < H; ++h) {
      if (acc[h].positions == 0) continue;
      EvalRow r{name, kEvalHorizons[h], static_cast<double>(kEvalHorizons[h]) * kFrameDt, acc[h].rmse(), std::nullopt,
                acc[h].hit_rate()};
      if (acc[h].nll_positions > 0) r.nll = acc[h].nll();
      report.rows.push_back(r);
    }
  };
  emit(model_label(model.config), ours);
  if (opts.include_cv) emit("cv", cv);
  if (opts.record_runtime) {
    report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return report;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"model", row.model},
                    {"horizon_steps", row.horizon_steps},
                    {"horizon_s", row.horizon_s},
                    {"rmse_m", row.rmse},
                    {"nll", row.nll ? nlohmann::json(*row.nll) : nlohmann::json(nullptr)},
                    {"hit_rate", row.hit_rate}});
  }
  nlohmann::json j{{"scene_count", r.scene_count}, {"interacting_scenes", r.interacting_scenes}, {"rows", rows}};
  j["runtime_s"] = r.runtime_s ? nlohmann::json(*r.runtime_s) : nlohmann::json(nullptr);
  return j;
}

/// Flat table: model,horizon_s,rmse_m,nll (nll empty when unavailable).
inline std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << std::setprecision(17) << "model,horizon_s,rmse_m,nll\n";
  for (const auto& row : r.rows) {
    out << row.model << ',' << std::setprecision(3) << row.horizon_s << ',' << std::setprecision(17) << row.rmse << ',';
    if (row.nll) out << *row.nll;
    out << '\n';
  }
  return out.str();
}

}  // namespace iaknn
