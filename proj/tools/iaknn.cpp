// iaknn command-line entry point: ingest, synth, train, eval, predict.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iaknn/data/ngsim.hpp"
#include "iaknn/data/scene.hpp"
#include "iaknn/data/scene_io.hpp"
#include "iaknn/data/synth.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/model/pipeline.hpp"
#include "iaknn/train/eval.hpp"
#include "iaknn/train/metrics.hpp"
#include "iaknn/train/train.hpp"

namespace fs = std::filesystem;
using namespace iaknn;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, usage = 1, data = 2, numeric = 3 };

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

/// Values from an optional JSON config; a key is used only when the matching
/// flag was not given on the command line.
class ConfigOverlay {
 public:
  ConfigOverlay(CLI::App* app, std::string path) : app_(app), path_(std::move(path)) {}

  template <class T>
  void bind(const std::string& key, T& target) {
    setters_[key] = [this, key, &target](const nlohmann::json& v) {
      if (app_->count("--" + dashed(key)) == 0) target = v.get<T>();
    };
  }

  /// Keys handled elsewhere (e.g. nested objects).
  void reserve(const std::string& key) {
    setters_[key] = [](const nlohmann::json&) {};
  }

  nlohmann::json apply() const {
    if (path_.empty()) return nlohmann::json::object();
    std::ifstream in(path_);
    if (!in) throw ConfigError("cannot open config file '" + path_ + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file '" + path_ + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
      auto it = setters_.find(key);
      if (it == setters_.end()) throw ConfigError("unknown config key '" + key + "'");
      try {
        it->second(value);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
    }
    return j;
  }

 private:
  static std::string dashed(std::string s) {
    for (char& c : s)
      if (c == '_') c = '-';
    return s;
  }

  CLI::App* app_;
  std::string path_;
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters_;
};

void write_text_atomic(const fs::path& path, const std::string& text) { nn::write_file_atomic(path, text); }

std::string scenes_text(const std::vector<SceneWindow>& scenes) {
  std::ostringstream out;
  write_scenes(out, scenes);
  return out.str();
}

std::vector<SceneWindow> select_subset(const std::vector<SceneWindow>& scenes, const std::string& subset,
                                       std::uint64_t seed) {
  if (subset == "all") return scenes;
  auto split = split_scenes(scenes, seed);
  if (subset == "train") return split.train;
  if (subset == "validation") return split.validation;
  if (subset == "test") return split.test;
  throw ConfigError("unknown subset '" + subset + "' (expected all, train, validation or test)");
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input, out, units = "feet", config;
  std::size_t stride = 10;
};

int run_ingest(CLI::App* app, const IngestArgs& raw) {
  IngestArgs a = raw;
  ConfigOverlay overlay(app, a.config);
  overlay.bind("input", a.input);
  overlay.bind("out", a.out);
  overlay.bind("units", a.units);
  overlay.bind("stride", a.stride);
  overlay.apply();
  if (a.input.empty() || a.out.empty()) throw ConfigError("ingest needs --input and --out");
  if (a.stride == 0) throw ConfigError("--stride must be at least 1");

  ColumnMap columns;
  columns.units = length_unit_from_string(a.units);
  const auto tracks = parse_ngsim_csv(fs::path(a.input), columns);
  SceneBuildConfig build;
  build.stride = a.stride;
  const auto result = build_scenes(tracks, build);
  write_text_atomic(a.out, scenes_text(result.scenes));
  std::cout << "tracks " << tracks.size() << "\nscenes " << result.scenes.size() << "\nskipped_hosts "
            << result.skipped_hosts << "\nskipped_windows " << result.skipped_windows << "\n";
  return ok;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t scenes = 100;
  std::string out, mode = "traffic", config;
};

int run_synth(CLI::App* app, const SynthArgs& raw) {
  SynthArgs a = raw;
  ConfigOverlay overlay(app, a.config);
  overlay.bind("seed", a.seed);
  overlay.bind("scenes", a.scenes);
  overlay.bind("out", a.out);
  overlay.bind("mode", a.mode);
  overlay.apply();
  if (a.out.empty()) throw ConfigError("synth needs --out");
  BehaviorConfig behavior;
  if (a.mode == "traffic") {
    behavior.mode = SynthMode::traffic;
  } else if (a.mode == "constant_acceleration") {
    behavior.mode = SynthMode::constant_acceleration;
  } else {
    throw ConfigError("unknown synth mode '" + a.mode + "' (expected traffic or constant_acceleration)");
  }
  const auto scenes = synth_scenes(a.seed, a.scenes, behavior);
  write_text_atomic(a.out, scenes_text(scenes));
  std::cout << "scenes " << scenes.size() << "\n";
  return ok;
}

struct TrainArgs {
  std::string scenes, out, config, loss_csv, subset = "all", control = "interaction", dynamic_model = "vehicle";
  TrainConfig train;
  std::size_t obs_horizon = 5;
  bool no_filter = false, positions_only = false;
  std::size_t interrupt_after = 0;  // simulated interrupt after this many batches; 0 = never
};

int run_train(CLI::App* app, const TrainArgs& raw) {
  TrainArgs a = raw;
  ConfigOverlay overlay(app, a.config);
  overlay.bind("scenes", a.scenes);
  overlay.bind("out", a.out);
  overlay.bind("loss_csv", a.loss_csv);
  overlay.bind("subset", a.subset);
  overlay.bind("lr", a.train.lr);
  overlay.bind("beta1", a.train.beta1);
  overlay.bind("beta2", a.train.beta2);
  overlay.bind("max_grad_norm", a.train.max_grad_norm);
  overlay.bind("epochs", a.train.epochs);
  overlay.bind("batch_size", a.train.batch_size);
  overlay.bind("seed", a.train.seed);
  overlay.bind("teacher_forcing", a.train.teacher_forcing);
  overlay.bind("obs_horizon", a.obs_horizon);
  overlay.bind("control", a.control);
  overlay.bind("dynamic_model", a.dynamic_model);
  overlay.bind("no_filter", a.no_filter);
  overlay.bind("positions_only", a.positions_only);
  overlay.reserve("model");
  const auto file = overlay.apply();

  PipelineConfig model_cfg = file.contains("model") ? pipeline_config_from_json(file.at("model")) : PipelineConfig{};
  if (app->count("--obs-horizon") || file.contains("obs_horizon")) model_cfg.obs_horizon = a.obs_horizon;
  if (app->count("--control") || file.contains("control")) model_cfg.control = control_source_from_string(a.control);
  if (app->count("--dynamic-model") || file.contains("dynamic_model")) {
    model_cfg.dynamic = dynamic_model_from_string(a.dynamic_model);
  }
  if (a.no_filter) model_cfg.use_filter = false;
  if (a.positions_only) model_cfg.loss_positions_only = true;
  if (a.scenes.empty() || a.out.empty()) throw ConfigError("train needs --scenes and --out");
  model_cfg.validate();
  a.train.validate();
  if (a.loss_csv.empty()) a.loss_csv = a.out + ".loss.csv";

  const auto scenes = select_subset(read_scenes(fs::path(a.scenes)), a.subset, a.train.seed);
  if (scenes.empty()) throw DataError("no scenes to train on in '" + a.scenes + "' (subset " + a.subset + ")");
  auto model = init_model(model_cfg, FeatureScaler::fit(scenes), a.train.seed);

  std::signal(SIGINT, on_sigint);
  std::size_t batches = 0;
  TrainCallbacks cb;
  cb.on_epoch = [](std::size_t epoch, double loss) {
    std::cout << "epoch " << epoch << " mean_loss " << std::setprecision(10) << loss << std::endl;
  };
  cb.should_stop = [&] {
    if (a.interrupt_after > 0 && batches >= a.interrupt_after) g_interrupted = true;
    ++batches;
    return g_interrupted.load();
  };
  const auto result = train(model, scenes, a.train, cb);
  if (result.interrupted) {
    std::cerr << "iaknn: interrupted; no checkpoint written\n";
    return numeric;
  }

  std::ostringstream csv;
  csv << std::setprecision(17) << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) csv << e + 1 << ',' << result.epoch_losses[e] << '\n';
  save_model(a.out, model, {{"train", to_json(a.train)}, {"loss_curve", result.epoch_losses}});
  write_text_atomic(a.loss_csv, csv.str());
  std::cout << "checkpoint " << a.out << "\nloss_csv " << a.loss_csv << "\n";
  return ok;
}

struct EvalArgs {
  std::string scenes, checkpoint, out, csv, config, subset = "all";
  std::uint64_t seed = 0;
  bool interacting_only = false, no_cv = false, runtime = false;
};

int run_eval(CLI::App* app, const EvalArgs& raw) {
  EvalArgs a = raw;
  ConfigOverlay overlay(app, a.config);
  overlay.bind("scenes", a.scenes);
  overlay.bind("checkpoint", a.checkpoint);
  overlay.bind("out", a.out);
  overlay.bind("csv", a.csv);
  overlay.bind("subset", a.subset);
  overlay.bind("seed", a.seed);
  overlay.bind("interacting_only", a.interacting_only);
  overlay.bind("no_cv", a.no_cv);
  overlay.bind("runtime", a.runtime);
  overlay.apply();
  if (a.scenes.empty() || a.checkpoint.empty() || a.out.empty()) {
    throw ConfigError("eval needs --scenes, --checkpoint and --out");
  }
  if (a.csv.empty()) a.csv = fs::path(a.out).replace_extension(".csv").string();

  auto model = load_model(a.checkpoint);
  const auto scenes = select_subset(read_scenes(fs::path(a.scenes)), a.subset, a.seed);
  EvalOptions opts;
  opts.include_cv = !a.no_cv;
  opts.interacting_only = a.interacting_only;
  opts.record_runtime = a.runtime;
  const auto report = evaluate(model, scenes, opts);
  write_text_atomic(a.out, to_json(report).dump(2) + "\n");
  write_text_atomic(a.csv, to_csv(report));
  std::cout << to_csv(report);
  return ok;
}

struct PredictArgs {
  std::string scenes, checkpoint, out, model = "iaknn", config;
  std::int64_t scene_id = -1;
};

int run_predict(CLI::App* app, const PredictArgs& raw) {
  PredictArgs a = raw;
  ConfigOverlay overlay(app, a.config);
  overlay.bind("scenes", a.scenes);
  overlay.bind("checkpoint", a.checkpoint);
  overlay.bind("out", a.out);
  overlay.bind("model", a.model);
  overlay.bind("scene", a.scene_id);
  overlay.apply();
  if (a.scenes.empty() || a.out.empty()) throw ConfigError("predict needs --scenes and --out");
  if (a.model != "iaknn" && a.model != "cv") throw ConfigError("--model must be iaknn or cv");
  if (a.model == "iaknn" && a.checkpoint.empty()) throw ConfigError("--model iaknn needs --checkpoint");

  const auto scenes = read_scenes(fs::path(a.scenes));
  const SceneWindow* scene = nullptr;
  for (const auto& s : scenes)
    if (s.scene_id == a.scene_id) scene = &s;
  if (scene == nullptr) throw DataError("scene " + std::to_string(a.scene_id) + " not found in '" + a.scenes + "'");

  Tensor pred, var;
  if (a.model == "cv") {
    pred = cv_baseline(*scene, scene->future_len);
  } else {
    auto model = load_model(a.checkpoint);
    auto p = predict_scene(model, *scene);
    pred = std::move(p.positions);
    var = std::move(p.position_variance);
  }
  const Tensor truth = future_positions(*scene);
  const std::size_t N = scene->n_agents(), L = std::min(pred.dim(0), truth.dim(0));
  std::ostringstream csv;
  csv << std::setprecision(17) << "t,agent,pred_x,pred_y,true_x,true_y,var_x,var_y\n";
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t ix = forecast_index(l, n, 0, N), iy = forecast_index(l, n, 1, N);
      csv << scene->frame(n, scene->past_len + l).t << ',' << scene->agents[n].agent_id << ',' << pred[ix] << ','
          << pred[iy] << ',' << truth[ix] << ',' << truth[iy] << ',';
      if (!var.empty()) csv << var[ix] << ',' << var[iy];
      else csv << ',';
      csv << '\n';
    }
  write_text_atomic(a.out, csv.str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interaction-aware Kalman neural network for multi-agent trajectory prediction"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print tool and file-format versions");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse an NGSIM CSV and write scene windows as NDJSON");
  ingest_cmd->add_option("--input", ingest.input, "NGSIM trajectory CSV");
  ingest_cmd->add_option("--units", ingest.units, "Length units of the CSV: feet or meters");
  ingest_cmd->add_option("--out", ingest.out, "Output scene file");
  ingest_cmd->add_option("--stride", ingest.stride, "Frames between window starts");
  ingest_cmd->add_option("--config", ingest.config, "JSON file with defaults for these flags");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic highway scenes");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--scenes", synth.scenes, "Number of scenes");
  synth_cmd->add_option("--out", synth.out, "Output scene file");
  synth_cmd->add_option("--mode", synth.mode, "traffic or constant_acceleration");
  synth_cmd->add_option("--config", synth.config, "JSON file with defaults for these flags");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the model and write a checkpoint");
  train_cmd->add_option("--scenes", tr.scenes, "Scene file");
  train_cmd->add_option("--out", tr.out, "Checkpoint path");
  train_cmd->add_option("--config", tr.config, "JSON file with defaults for these flags and a 'model' object");
  train_cmd->add_option("--loss-csv", tr.loss_csv, "Loss curve CSV (default: <out>.loss.csv)");
  train_cmd->add_option("--subset", tr.subset, "all, train, validation or test (host-disjoint split)");
  train_cmd->add_option("--lr", tr.train.lr, "Adam learning rate");
  train_cmd->add_option("--beta1", tr.train.beta1);
  train_cmd->add_option("--beta2", tr.train.beta2);
  train_cmd->add_option("--max-grad-norm", tr.train.max_grad_norm);
  train_cmd->add_option("--epochs", tr.train.epochs);
  train_cmd->add_option("--batch-size", tr.train.batch_size, "Scenes per gradient step");
  train_cmd->add_option("--seed", tr.train.seed, "Seed for initialisation, shuffling and the split");
  train_cmd->add_option("--teacher-forcing", tr.train.teacher_forcing, "Probability of feeding true accelerations");
  train_cmd->add_option("--obs-horizon", tr.obs_horizon, "Filter steps before the forecast origin");
  train_cmd->add_option("--control", tr.control, "Filter control: interaction or sensor");
  train_cmd->add_option("--dynamic-model", tr.dynamic_model, "vehicle or pedestrian");
  train_cmd->add_flag("--no-filter", tr.no_filter, "Bypass the filter layer (ablation)");
  train_cmd->add_flag("--positions-only", tr.positions_only, "Score positions only in the loss");
  train_cmd->add_option("--interrupt-after", tr.interrupt_after, "Simulate an interrupt after this many batches");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and the constant-velocity baseline");
  eval_cmd->add_option("--scenes", ev.scenes, "Scene file");
  eval_cmd->add_option("--checkpoint", ev.checkpoint);
  eval_cmd->add_option("--out", ev.out, "Report JSON");
  eval_cmd->add_option("--csv", ev.csv, "Report CSV (default: report path with .csv)");
  eval_cmd->add_option("--subset", ev.subset, "all, train, validation or test");
  eval_cmd->add_option("--seed", ev.seed, "Split seed (use the training seed)");
  eval_cmd->add_flag("--interacting-only", ev.interacting_only, "Skip scenes without braking or lane changes");
  eval_cmd->add_flag("--no-cv", ev.no_cv, "Leave out the constant-velocity baseline");
  eval_cmd->add_flag("--runtime", ev.runtime, "Record wall-clock runtime in the report");
  eval_cmd->add_option("--config", ev.config, "JSON file with defaults for these flags");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Write predicted and true future positions of one scene");
  predict_cmd->add_option("--scenes", pr.scenes, "Scene file");
  predict_cmd->add_option("--scene", pr.scene_id, "Scene id");
  predict_cmd->add_option("--checkpoint", pr.checkpoint);
  predict_cmd->add_option("--model", pr.model, "iaknn or cv");
  predict_cmd->add_option("--out", pr.out, "Trajectory CSV");
  predict_cmd->add_option("--config", pr.config, "JSON file with defaults for these flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (show_version) {
      std::cout << "iaknn " << kVersion << "\ncheckpoint_format " << nn::kCheckpointFormatVersion
                << "\nscene_format " << kSceneFormatVersion << "\n";
      return ok;
    }
    if (*ingest_cmd) return run_ingest(ingest_cmd, ingest);
    if (*synth_cmd) return run_synth(synth_cmd, synth);
    if (*train_cmd) return run_train(train_cmd, tr);
    if (*eval_cmd) return run_eval(eval_cmd, ev);
    if (*predict_cmd) return run_predict(predict_cmd, pr);
    std::cerr << app.help();
    return usage;
  } catch (const ConfigError& e) {
    std::cerr << "iaknn: " << e.what() << "\n";
    return usage;
  } catch (const NumericError& e) {
    std::cerr << "iaknn: numeric error: " << e.what() << "\n";
    return numeric;
  } catch (const TrainingError& e) {
    std::cerr << "iaknn: training error: " << e.what() << "\n";
    return numeric;
  } catch (const Error& e) {
    std::cerr << "iaknn: " << e.what() << "\n";
    return data;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "iaknn: " << e.what() << "\n";
    return data;
  }
}
