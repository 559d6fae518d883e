#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iaknn/data/scene.hpp"
#include "iaknn/errors.hpp"

namespace iaknn {

inline constexpr int kSceneFormatVersion = 1;

/// One scene per line. Per-agent channels are stored column-wise; the
/// pairwise matrices are derived and rebuilt on load.
inline nlohmann::json scene_to_json(const SceneWindow& s) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : s.agents) {
    std::vector<double> t, x, y, vx, vy, ax, ay, heading, yaw, width, length;
    std::vector<int> lane;
    for (const auto& f : a.frames) {
      t.push_back(f.t);
      x.push_back(f.position.x);
      y.push_back(f.position.y);
      vx.push_back(f.velocity.x);
      vy.push_back(f.velocity.y);
      ax.push_back(f.acceleration.x);
      ay.push_back(f.acceleration.y);
      heading.push_back(f.heading);
      yaw.push_back(f.yaw_rate);
      width.push_back(f.width);
      length.push_back(f.length);
      lane.push_back(f.lane_id);
    }
    agents.push_back({{"agent_id", a.agent_id}, {"t", t},       {"x", x},           {"y", y},
                      {"vx", vx},                {"vy", vy},     {"ax", ax},         {"ay", ay},
                      {"heading", heading},      {"yaw_rate", yaw}, {"width", width}, {"length", length},
                      {"lane_id", lane}});
  }
  return {{"format_version", kSceneFormatVersion},
          {"scene_id", s.scene_id},
          {"host_id", s.host_id},
          {"start_frame", s.start_frame},
          {"dt", s.dt},
          {"past_len", s.past_len},
          {"future_len", s.future_len},
          {"agents", agents}};
}

inline SceneWindow scene_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kSceneFormatVersion) {
      throw VersionError("scene record has format_version " + std::to_string(version) + ", this build reads " +
                         std::to_string(kSceneFormatVersion) + "; regenerate the scene file");
    }
    SceneWindow s;
    s.scene_id = j.at("scene_id").get<std::int64_t>();
    s.host_id = j.at("host_id").get<std::int64_t>();
    s.start_frame = j.at("start_frame").get<std::int64_t>();
    s.dt = j.at("dt").get<double>();
    s.past_len = j.at("past_len").get<std::size_t>();
    s.future_len = j.at("future_len").get<std::size_t>();
    for (const auto& ja : j.at("agents")) {
      AgentTrack a;
      a.agent_id = ja.at("agent_id").get<std::int64_t>();
      const auto col = [&](const char* name) { return ja.at(name).get<std::vector<double>>(); };
      const auto t = col("t"), x = col("x"), y = col("y"), vx = col("vx"), vy = col("vy"), ax = col("ax"),
                 ay = col("ay"), heading = col("heading"), yaw = col("yaw_rate"), width = col("width"),
                 length = col("length");
      const auto lane = ja.at("lane_id").get<std::vector<int>>();
      const std::size_t n = t.size();
      for (const auto* c : {&x, &y, &vx, &vy, &ax, &ay, &heading, &yaw, &width, &length}) {
        if (c->size() != n) throw SchemaError("agent " + std::to_string(a.agent_id) + " has ragged columns");
      }
      if (lane.size() != n) throw SchemaError("agent " + std::to_string(a.agent_id) + " has ragged columns");
      for (std::size_t k = 0; k < n; ++k) {
        a.frames.push_back({t[k], {x[k], y[k]}, {vx[k], vy[k]}, {ax[k], ay[k]}, heading[k], yaw[k], width[k],
                            length[k], lane[k]});
      }
      s.agents.push_back(std::move(a));
    }
    compute_pairwise(s);
    validate_scene(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed scene record: ") + e.what());
  }
}

inline void write_scenes(std::ostream& out, const std::vector<SceneWindow>& scenes) {
  for (const auto& s : scenes) out << scene_to_json(s).dump() << '\n';
}

inline std::vector<SceneWindow> read_scenes(std::istream& in) {
  std::vector<SceneWindow> scenes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      scenes.push_back(scene_from_json(j));
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return scenes;
}

inline std::vector<SceneWindow> read_scenes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scene file '" + path.string() + "'");
  return read_scenes(in);
}

}  // namespace iaknn
