#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "iaknn/data/track.hpp"
#include "iaknn/errors.hpp"

namespace iaknn {

enum class LengthUnit { feet, meters };

inline constexpr double kMetersPerFoot = 0.3048;

inline double to_meters(double v, LengthUnit unit) { return unit == LengthUnit::feet ? v * kMetersPerFoot : v; }
inline double from_meters(double v, LengthUnit unit) { return unit == LengthUnit::feet ? v / kMetersPerFoot : v; }

inline LengthUnit length_unit_from_string(const std::string& s) {
  if (s == "feet" || s == "ft") return LengthUnit::feet;
  if (s == "meters" || s == "m") return LengthUnit::meters;
  throw ConfigError("unknown unit '" + s + "' (expected feet or meters)");
}

/// Header names of the required columns. Defaults follow the NGSIM release.
struct ColumnMap {
  std::string vehicle_id = "Vehicle_ID";
  std::string frame_id = "Frame_ID";
  std::string local_x = "Local_X";
  std::string local_y = "Local_Y";
  std::string speed = "v_Vel";
  std::string acceleration = "v_Acc";
  std::string length = "v_Length";
  std::string width = "v_Width";
  std::string lane = "Lane_ID";
  LengthUnit units = LengthUnit::feet;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_number(std::string_view s, std::size_t row, const std::string& column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError("row " + std::to_string(row) + ": column '" + column + "' has non-numeric value '" +
                    std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

/// Reads an NGSIM-style trajectory CSV into one track per vehicle, sorted by
/// vehicle id with frames in time order. Scalar speed and acceleration are
/// projected onto the heading estimated from the position track.
inline std::vector<AgentTrack> parse_ngsim_csv(std::istream& in, const ColumnMap& columns = {},
                                               double dt = kFrameDt) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("input is empty: no header row");
  const auto header = detail::split_csv(line);
  auto column_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column_index(columns.vehicle_id), c_frame = column_index(columns.frame_id),
                    c_x = column_index(columns.local_x), c_y = column_index(columns.local_y),
                    c_v = column_index(columns.speed), c_a = column_index(columns.acceleration),
                    c_len = column_index(columns.length), c_w = column_index(columns.width),
                    c_lane = column_index(columns.lane);
  const std::size_t needed = std::max({c_id, c_frame, c_x, c_y, c_v, c_a, c_len, c_w, c_lane}) + 1;

  struct Row {
    std::int64_t frame;
    double x, y, speed, accel, length, width;
    int lane;
    std::size_t line;
  };
  std::map<std::int64_t, std::vector<Row>> by_vehicle;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() < needed) {
      throw SchemaError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " fields, expected at least " + std::to_string(needed));
    }
    const auto u = columns.units;
    Row r{static_cast<std::int64_t>(detail::parse_number(cells[c_frame], row, columns.frame_id)),
          to_meters(detail::parse_number(cells[c_x], row, columns.local_x), u),
          to_meters(detail::parse_number(cells[c_y], row, columns.local_y), u),
          to_meters(detail::parse_number(cells[c_v], row, columns.speed), u),
          to_meters(detail::parse_number(cells[c_a], row, columns.acceleration), u),
          to_meters(detail::parse_number(cells[c_len], row, columns.length), u),
          to_meters(detail::parse_number(cells[c_w], row, columns.width), u),
          static_cast<int>(detail::parse_number(cells[c_lane], row, columns.lane)),
          row};
    const auto id = static_cast<std::int64_t>(detail::parse_number(cells[c_id], row, columns.vehicle_id));
    by_vehicle[id].push_back(r);
  }

  std::vector<AgentTrack> tracks;
  tracks.reserve(by_vehicle.size());
  for (auto& [id, rows] : by_vehicle) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.frame < b.frame; });
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (rows[k].frame == rows[k - 1].frame) {
        throw DataError("vehicle " + std::to_string(id) + " repeats frame " + std::to_string(rows[k].frame) +
                        " (rows " + std::to_string(rows[k - 1].line) + " and " + std::to_string(rows[k].line) + ")");
      }
      if (rows[k].frame != rows[k - 1].frame + 1) {
        throw DataError("vehicle " + std::to_string(id) + " skips from frame " + std::to_string(rows[k - 1].frame) +
                        " to " + std::to_string(rows[k].frame) + " (row " + std::to_string(rows[k].line) + ")");
      }
    }
    AgentTrack track;
    track.agent_id = id;
    track.frames.reserve(rows.size());
    for (const auto& r : rows) {
      Frame f;
      f.t = static_cast<double>(r.frame) * dt;
      f.position = {r.x, r.y};
      f.width = r.width;
      f.length = r.length;
      f.lane_id = r.lane;
      track.frames.push_back(f);
    }
    // NGSIM vehicles travel along +Local_Y.
    estimate_heading_and_yaw_rate(track.frames, dt, std::numbers::pi / 2.0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      Frame& f = track.frames[k];
      const Vec2 dir{std::cos(f.heading), std::sin(f.heading)};
      f.velocity = rows[k].speed * dir;
      f.acceleration = rows[k].accel * dir;
    }
    validate_track(track, dt);
    tracks.push_back(std::move(track));
  }
  return tracks;
}

inline std::vector<AgentTrack> parse_ngsim_csv(const std::filesystem::path& path, const ColumnMap& columns = {},
                                               double dt = kFrameDt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_ngsim_csv(in, columns, dt);
}

}  // namespace iaknn
