#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "iaknn/data/ngsim.hpp"
#include "iaknn/data/scene.hpp"
#include "iaknn/data/scene_io.hpp"
#include "iaknn/data/synth.hpp"

using namespace iaknn;
using Catch::Approx;

namespace {

const char* kHeader = "Vehicle_ID,Frame_ID,Total_Frames,Local_X,Local_Y,v_Length,v_Width,v_Vel,v_Acc,Lane_ID\n";

std::string two_vehicle_csv() {
  std::ostringstream s;
  s << kHeader;
  for (int f = 1; f <= 5; ++f) {
    s << 7 << ',' << f << ",5," << 12.0 << ',' << 100.0 + 3.0 * f << ",15,6,30,1.5,2\n";
    s << 3 << ',' << f << ",5," << 24.0 << ',' << 90.0 + 4.0 * f << ",14,6,40,0,3\n";
  }
  return s.str();
}

AgentTrack straight_track(std::int64_t id, double y, double x0, double speed, int lane, std::size_t frames,
                          std::int64_t first_frame = 0) {
  AgentTrack t;
  t.agent_id = id;
  for (std::size_t k = 0; k < frames; ++k) {
    Frame f;
    f.t = static_cast<double>(first_frame + static_cast<std::int64_t>(k)) * kFrameDt;
    f.position = {x0 + speed * f.t, y};
    f.velocity = {speed, 0.0};
    f.width = 1.8;
    f.length = 4.5;
    f.lane_id = lane;
    t.frames.push_back(f);
  }
  return t;
}

std::string dump_all(const std::vector<SceneWindow>& scenes) {
  std::ostringstream s;
  write_scenes(s, scenes);
  return s.str();
}

}  // namespace

TEST_CASE("ngsim parser keeps one track per vehicle", "[ngsim]") {
  std::istringstream in(two_vehicle_csv());
  ColumnMap cols;
  cols.units = LengthUnit::meters;
  const auto tracks = parse_ngsim_csv(in, cols);
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].agent_id == 3);
  CHECK(tracks[1].agent_id == 7);
  for (const auto& t : tracks) {
    CHECK(t.frames.size() == 5);
    for (std::size_t k = 1; k < t.frames.size(); ++k) CHECK(t.frames[k].t > t.frames[k - 1].t);
  }
  // Vehicle 7 moves along +y, so scalar speed maps onto the y axis.
  const auto& f = tracks[1].frames[2];
  CHECK(f.velocity.x == Approx(0.0).margin(1e-12));
  CHECK(f.velocity.y == Approx(30.0));
  CHECK(f.acceleration.y == Approx(1.5));
  CHECK(f.heading == Approx(std::numbers::pi / 2));
  CHECK(f.lane_id == 2);
}

TEST_CASE("ngsim parser converts feet", "[ngsim]") {
  std::ostringstream s;
  s << kHeader << "1,10,1,32.8084,0,15,6,10,0,1\n";
  std::istringstream in(s.str());
  const auto tracks = parse_ngsim_csv(in);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].frames[0].position.x == Approx(10.0).epsilon(1e-6));
  CHECK(tracks[0].frames[0].length == Approx(15 * 0.3048));
  CHECK(tracks[0].frames[0].t == Approx(1.0));
}

TEST_CASE("ngsim parser rejects bad input", "[ngsim]") {
  SECTION("duplicate frame") {
    std::istringstream in(std::string(kHeader) + "4,1,2,0,0,15,6,10,0,1\n4,1,2,0,1,15,6,10,0,1\n");
    CHECK_THROWS_AS(parse_ngsim_csv(in), DataError);
  }
  SECTION("gap in frames names the vehicle") {
    std::istringstream in(std::string(kHeader) + "4,1,2,0,0,15,6,10,0,1\n4,3,2,0,1,15,6,10,0,1\n");
    CHECK_THROWS_WITH(parse_ngsim_csv(in), Catch::Matchers::ContainsSubstring("vehicle 4"));
  }
  SECTION("missing column") {
    std::istringstream in("Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,v_Acc,v_Length,v_Width\n1,1,0,0,1,0,15,6\n");
    CHECK_THROWS_AS(parse_ngsim_csv(in), SchemaError);
    std::istringstream again("Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,v_Acc,v_Length,v_Width\n");
    CHECK_THROWS_WITH(parse_ngsim_csv(again), Catch::Matchers::ContainsSubstring("Lane_ID"));
  }
  SECTION("non-numeric cell") {
    std::istringstream in(std::string(kHeader) + "4,1,2,abc,0,15,6,10,0,1\n");
    CHECK_THROWS_AS(parse_ngsim_csv(in), DataError);
  }
  SECTION("custom column map") {
    ColumnMap cols;
    cols.lane = "Lane";
    std::istringstream in(std::string(kHeader) + "4,1,2,0,0,15,6,10,0,1\n");
    CHECK_THROWS_WITH(parse_ngsim_csv(in, cols), Catch::Matchers::ContainsSubstring("'Lane'"));
  }
}

TEST_CASE("meters to feet and back preserves coordinates", "[units]") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double m = nn::uniform(rng, -5000.0, 5000.0);
    CHECK(std::abs(to_meters(from_meters(m, LengthUnit::feet), LengthUnit::feet) - m) <= 1e-9);
  }
  CHECK(length_unit_from_string("ft") == LengthUnit::feet);
  CHECK_THROWS_AS(length_unit_from_string("yards"), ConfigError);
}

TEST_CASE("repulsive force examples", "[features]") {
  CHECK(repulsive_force(5.0, 5.0, 1.0, 0.1) == 1.0);
  CHECK(repulsive_force(0.0, 0.0, 0.0, 0.1) == 1.0);
  CHECK(repulsive_force(10.0, 10.0, 2.0, 0.1) == 1.0);
  CHECK(repulsive_force(10.0, 10.0, 1.0, 0.1) == Approx(2.718281828459045));

  std::vector<Frame> snap(3);
  snap[0].position = {0, 0};
  snap[0].velocity = {5, 0};
  snap[1].position = {1, 0};
  snap[1].velocity = {0, 5};
  snap[2].position = {4, 3};
  const auto e = repulsive_forces(snap, 0.1);
  const auto d = pairwise_distances(snap);
  CHECK(e(0, 0) == 0.0);
  CHECK(e(0, 1) == Approx(1.0));
  CHECK(d(0, 2) == Approx(5.0));
  CHECK(e(0, 2) == Approx(std::exp(0.5 - 5.0)));
  CHECK(e(2, 0) == e(0, 2));
}

TEST_CASE("heading and yaw rate from a circular track", "[features]") {
  const double omega = 0.2, radius = 50.0;
  std::vector<Frame> frames(40);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const double th = omega * kFrameDt * static_cast<double>(k);
    frames[k].position = {radius * std::sin(th), radius * (1 - std::cos(th))};
  }
  estimate_heading_and_yaw_rate(frames, kFrameDt);
  CHECK(frames[10].heading == Approx(omega * kFrameDt * 10).margin(1e-3));
  CHECK(frames[10].yaw_rate == Approx(omega).margin(1e-6));

  std::vector<Frame> still(5);
  estimate_heading_and_yaw_rate(still, kFrameDt, 1.25);
  for (const auto& f : still) CHECK(f.heading == 1.25);
}

TEST_CASE("six parallel tracks yield one scene per host and start", "[scenes]") {
  std::vector<AgentTrack> tracks;
  for (int i = 0; i < 6; ++i) tracks.push_back(straight_track(i + 1, (i % 2) * 3.7, 10.0 * i, 15.0, 1 + i % 2, 90));
  const auto res = build_scenes(tracks);
  CHECK(res.scenes.size() == 6 * 3);  // starts 0, 10, 20
  for (const auto& s : res.scenes) {
    CHECK(s.n_agents() == 6);
    CHECK(s.agents[0].agent_id == s.host_id);
    auto ids = s.agent_ids();
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::int64_t>{1, 2, 3, 4, 5, 6});
    for (const auto& a : s.agents) CHECK(a.frames.size() == 70);
  }
  CHECK(res.skipped_hosts == 0);
}

TEST_CASE("five tracks are not enough", "[scenes]") {
  std::vector<AgentTrack> tracks;
  for (int i = 0; i < 5; ++i) tracks.push_back(straight_track(i + 1, 0.0, 10.0 * i, 15.0, 1, 80));
  const auto res = build_scenes(tracks);
  CHECK(res.scenes.empty());
  CHECK(res.skipped_hosts == 5);
  CHECK(res.skipped_windows == 10);
}

TEST_CASE("neighbour selection matches a brute-force ranking", "[scenes]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<AgentTrack> tracks;
    for (int i = 0; i < 8; ++i) {
      const int lane = 1 + static_cast<int>(nn::uniform01(rng) * 4);
      auto t = straight_track(100 + i, lane * 3.7, nn::uniform(rng, 0, 80), nn::uniform(rng, 10, 20), lane,
                              70 + static_cast<std::size_t>(nn::uniform01(rng) * 30));
      tracks.push_back(t);
    }
    const auto res = build_scenes(tracks);
    for (const auto& s : res.scenes) {
      const AgentTrack* host = nullptr;
      for (const auto& t : tracks)
        if (t.agent_id == s.host_id) host = &t;
      REQUIRE(host != nullptr);
      const auto hf = static_cast<std::size_t>(s.start_frame);
      std::vector<std::pair<double, std::int64_t>> all;
      for (const auto& t : tracks) {
        if (t.agent_id == s.host_id || t.frames.size() < hf + 70) continue;
        if (std::abs(t.frames[hf + 19].lane_id - host->frames[hf + 19].lane_id) > 1) continue;
        double sum = 0.0;
        for (std::size_t k = hf; k < hf + 20; ++k) sum += distance(t.frames[k].position, host->frames[k].position);
        all.emplace_back(sum / 20.0, t.agent_id);
      }
      std::sort(all.begin(), all.end());
      REQUIRE(all.size() >= 5);
      for (std::size_t k = 0; k < 5; ++k) CHECK(s.agents[k + 1].agent_id == all[k].second);
    }
  }
}

TEST_CASE("scene construction ignores input order", "[scenes]") {
  std::vector<AgentTrack> tracks;
  for (int i = 0; i < 8; ++i) tracks.push_back(straight_track(i + 1, (i % 3) * 3.7, 7.0 * i, 12.0 + i, 1 + i % 3, 100));
  const auto ref = dump_all(build_scenes(tracks).scenes);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(tracks.begin(), tracks.end(), rng);
    CHECK(dump_all(build_scenes(tracks).scenes) == ref);
  }
  tracks.push_back(tracks.front());
  CHECK_THROWS_AS(build_scenes(tracks), DataError);
}

TEST_CASE("windows respect late starts", "[scenes]") {
  std::vector<AgentTrack> tracks;
  for (int i = 0; i < 6; ++i) tracks.push_back(straight_track(i + 1, 0.0, 10.0 * i, 15.0, 1, 80, i == 0 ? 15 : 0));
  const auto res = build_scenes(tracks);
  // Host 1 covers frames 15..94, the others stop at 79.
  for (const auto& s : res.scenes) {
    if (s.host_id == 1) FAIL("host 1 never has full neighbours");
    CHECK(s.start_frame + 69 <= 79);
  }
}

TEST_CASE("synthetic scenes are deterministic", "[synth]") {
  const auto a = synth_scenes(42, 10);
  const auto b = synth_scenes(42, 10);
  CHECK(a.size() == 10);
  CHECK(dump_all(a) == dump_all(b));
  CHECK(dump_all(synth_scenes(43, 10)) != dump_all(a));
  // Prefix stability.
  const auto c = synth_scenes(42, 3);
  CHECK(dump_all(c) == dump_all(std::vector<SceneWindow>(a.begin(), a.begin() + 3)));
}

TEST_CASE("synthetic kinematics re-integrate exactly", "[synth]") {
  for (const auto& s : synth_scenes(7, 25)) {
    for (const auto& a : s.agents) {
      for (std::size_t k = 0; k + 1 < a.frames.size(); ++k) {
        const auto& f = a.frames[k];
        const auto& g = a.frames[k + 1];
        const double px = f.position.x + f.velocity.x * s.dt + 0.5 * f.acceleration.x * s.dt * s.dt;
        const double py = f.position.y + f.velocity.y * s.dt + 0.5 * f.acceleration.y * s.dt * s.dt;
        CHECK(std::abs(px - g.position.x) <= 1e-9);
        CHECK(std::abs(py - g.position.y) <= 1e-9);
        CHECK(std::abs(f.velocity.x + f.acceleration.x * s.dt - g.velocity.x) <= 1e-9);
        CHECK(g.velocity.x >= 0.0);
      }
    }
  }
}

TEST_CASE("quiet highway produces no acceleration", "[synth]") {
  BehaviorConfig cfg;
  cfg.lane_change_prob = 0.0;
  cfg.speed_min = cfg.speed_max = 15.0;
  cfg.desired_speed_spread = 0.0;
  cfg.gap_min = cfg.gap_max = 80.0;
  for (const auto& s : synth_scenes(1, 5, cfg)) {
    CHECK_FALSE(has_interaction_event(s));
    for (const auto& a : s.agents) {
      for (const auto& f : a.frames) {
        CHECK(f.acceleration == Vec2{0.0, 0.0});
        CHECK(f.position.y == a.frames[0].position.y);
      }
    }
  }
}

TEST_CASE("default synthetic traffic contains interaction events", "[synth]") {
  const auto scenes = synth_scenes(9, 40);
  const auto events = std::count_if(scenes.begin(), scenes.end(), [](const auto& s) { return has_interaction_event(s); });
  CHECK(events >= 30);
  bool lane_change = false;
  for (const auto& s : scenes)
    for (const auto& a : s.agents)
      if (a.frames.front().lane_id != a.frames.back().lane_id) lane_change = true;
  CHECK(lane_change);
}

TEST_CASE("constant acceleration mode", "[synth]") {
  BehaviorConfig cfg;
  cfg.mode = SynthMode::constant_acceleration;
  for (const auto& s : synth_scenes(2, 3, cfg))
    for (const auto& a : s.agents)
      for (const auto& f : a.frames) CHECK(f.acceleration == Vec2{1.0, 0.0});
}

TEST_CASE("scene invariants hold for generated scenes", "[synth]") {
  for (const auto& s : synth_scenes(13, 10)) {
    REQUIRE_NOTHROW(validate_scene(s));
    CHECK(s.n_agents() == 6);
    CHECK(s.past_len == 20);
    CHECK(s.future_len == 50);
    for (std::size_t k = 0; k < s.n_frames(); ++k) {
      const auto& d = s.distances[k];
      const auto& e = s.repulsive[k];
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        CHECK(d(i, i) == 0.0);
        CHECK(e(i, i) == 0.0);
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
          CHECK(d(i, j) == d(j, i));
          CHECK(d(i, j) >= 0.0);
          if (i != j) CHECK(e(i, j) > 0.0);
        }
      }
    }
  }
  BehaviorConfig bad;
  bad.vehicles_per_lane = 1;
  CHECK_THROWS_AS(synth_scenes(1, 1, bad), ConfigError);
}

TEST_CASE("scene files round-trip bit for bit", "[io]") {
  const auto scenes = synth_scenes(21, 4);
  std::stringstream buf;
  write_scenes(buf, scenes);
  const auto back = read_scenes(buf);
  REQUIRE(back.size() == scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    for (std::size_t a = 0; a < scenes[i].n_agents(); ++a) {
      for (std::size_t k = 0; k < scenes[i].n_frames(); ++k) {
        const auto& f = scenes[i].frame(a, k);
        const auto& g = back[i].frame(a, k);
        CHECK(f.position == g.position);
        CHECK(f.velocity == g.velocity);
        CHECK(f.acceleration == g.acceleration);
        CHECK(f.heading == g.heading);
        CHECK(f.lane_id == g.lane_id);
      }
    }
    CHECK(back[i].distances[5] == scenes[i].distances[5]);
  }
  CHECK(dump_all(back) == dump_all(scenes));

  std::istringstream broken("{\"format_version\": 1}\n");
  CHECK_THROWS_AS(read_scenes(broken), SchemaError);
  std::istringstream garbage("not json\n");
  CHECK_THROWS_AS(read_scenes(garbage), SchemaError);
  std::istringstream future("{\"format_version\": 2}\n");
  CHECK_THROWS_AS(read_scenes(future), VersionError);
}
