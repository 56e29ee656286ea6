/* Copyright 2026 The Contact Skill Workbench Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <filesystem>
#include <numeric>
#include <string>

#include "csf/error.hpp"
#include "csf/eval.hpp"
#include "doctest.h"

using namespace csf;
namespace fs = std::filesystem;

namespace {

SceneConfig planar() { return load_scene(std::string(CSF_DATA_DIR) + "/scenes/planar_slot.json"); }

LstmModel constant_model(const Vec6& wrench) {
  LstmModel m;
  m.hyper.hidden = 4;
  m.params = LstmParams::zeros(4);
  m.norm.out_mean = wrench;
  return m;
}

RolloutLog synthetic(const std::vector<double>& approach, const std::vector<double>& force) {
  RolloutLog log;
  for (std::size_t i = 0; i < approach.size(); ++i) {
    RolloutStep s;
    s.t = 0.02 * static_cast<double>(i);
    s.approach = approach[i];
    s.force = force[i];
    log.steps.push_back(s);
  }
  return log;
}

}  // namespace

TEST_CASE("window cycle plan alternates 312 and 313 cycles") {
  const RolloutConfig r;
  const ControllerConfig c;
  long total = 0;
  for (long w = 0; w < 8; ++w) {
    const auto plan = window_cycle_plan(w, r, c);
    REQUIRE(plan.size() == 50);
    const int sum = std::accumulate(plan.begin(), plan.end(), 0);
    CHECK(sum == (w % 2 == 0 ? 312 : 313));
    for (int j = 0; j + 1 < 50; ++j) CHECK(plan[j] == 6);
    total += sum;
  }
  CHECK(total == 2500);
}

TEST_CASE("a silent model leaves the object still and is scored stuck") {
  const SceneConfig scene = planar();
  Pose start = scene.goal_pose;
  start.position += scene.approach_axis * 0.1;
  RolloutConfig cfg;
  cfg.timeout = 20.0;
  const RolloutLog log = rollout_object(constant_model(Vec6::Zero()), scene, start, cfg);
  CHECK(log.outcome == Outcome::stuck);
  CHECK(log.duration == doctest::Approx(5.0).epsilon(0.02));
  CHECK(log.final_distance == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(to_string(log.outcome) == "stuck");
}

TEST_CASE("object rollouts are deterministic and reach the goal with a steady push") {
  const SceneConfig scene = planar();
  Pose start = scene.goal_pose;
  start.position += scene.approach_axis * 0.08;
  Vec6 push = Vec6::Zero();
  push.head<3>() = -5.0 * (scene.goal_pose.orientation.matrix().transpose() * scene.approach_axis);
  RolloutConfig cfg;
  cfg.timeout = 30.0;
  const LstmModel model = constant_model(push);
  const RolloutLog a = rollout_object(model, scene, start, cfg);
  const RolloutLog b = rollout_object(model, scene, start, cfg);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.final_distance == b.final_distance);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(a.outcome == Outcome::success);
  CHECK(a.inferences >= 1);
}

TEST_CASE("peak then drop on synthetic force traces") {
  const double e = 0.05;
  // Peak at the entrance, drop once inside.
  CHECK(peak_then_drop(synthetic({0.2, 0.15, 0.1, 0.08, 0.06, 0.06, 0.06, 0.06, 0.05, 0.03, 0.01, 0.0, 0.0, 0.0, 0.0},
                                 {0.5, 1.0, 2.0, 4.0, 8.0, 8.0, 8.0, 8.0, 8.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0}),
                       e));
  // Force keeps rising after entry.
  CHECK(!peak_then_drop(synthetic({0.2, 0.15, 0.1, 0.08, 0.06, 0.06, 0.03, 0.01, 0.0, 0.0},
                                  {0.5, 1.0, 2.0, 3.0, 3.0, 3.0, 6.0, 9.0, 9.0, 9.0}),
                        e));
  // Never enters.
  CHECK(!peak_then_drop(synthetic({0.2, 0.15, 0.1, 0.08, 0.07, 0.07, 0.07}, {0.5, 1.0, 8.0, 8.0, 8.0, 1.0, 0.5}),
                        e));
  // Too weak to count as a peak.
  CHECK(!peak_then_drop(synthetic({0.2, 0.1, 0.06, 0.01, 0.0, 0.0}, {0.1, 0.5, 0.8, 0.1, 0.1, 0.1}), e));
  CHECK(!peak_then_drop(RolloutLog{}, e));
}

TEST_CASE("cumulative histogram is monotone and conserves trials") {
  const std::vector<double> d = {0.0005, 0.0015, 0.0015, 0.0042, 0.01, 0.0};
  const auto h = cumulative_histogram(d, 0.001);
  REQUIRE(!h.empty());
  CHECK(h.front().distance_bin == 0.0);
  CHECK(h.front().trials_at_or_beyond == static_cast<int>(d.size()));
  for (std::size_t i = 1; i < h.size(); ++i) {
    CHECK(h[i].trials_at_or_beyond <= h[i - 1].trials_at_or_beyond);
    CHECK(h[i].distance_bin > h[i - 1].distance_bin);
  }
  CHECK(h.back().trials_at_or_beyond == 1);
  CHECK(h[2].trials_at_or_beyond == 2);
}

TEST_CASE("final distances classify against the clearance") {
  CHECK(classify_distance(0.001, 0.002, 10.0) == "success");
  CHECK(classify_distance(0.002, 0.002, 10.0) == "near_miss");
  CHECK(classify_distance(0.02, 0.002, 10.0) == "fail");
  CHECK(classify_distance(0.01, 0.002, 10.0) == "near_miss");
  CHECK(classify_distance(0.05, 0.002, 10.0) == "fail");
}

TEST_CASE("report tables round trip and refuse empty inputs") {
  const fs::path dir = fs::temp_directory_path() / "csf_report_test";
  fs::remove_all(dir);
  CHECK_THROWS_AS(build_report({}, {}, 0.001), Error);

  RolloutLog log = synthetic({0.1, 0.05, 0.0}, {1.0, 2.5, 0.125});
  for (auto& s : log.steps) s.distance = s.approach;
  OffsetTrial trial;
  trial.id = 3;
  trial.lin_offset = 0.01;
  trial.rot_offset = 0.02;
  trial.final_distance = 0.0015;
  trial.outcome_class = "success";
  const ReportTables t = build_report({log}, {trial}, 0.001);
  report_emit(t, dir.string(), true);
  for (const char* name : {"force_vs_distance.csv", "torque_vs_distance.csv", "cumulative_histogram.csv",
                           "offset_scatter.csv"}) {
    CHECK(fs::exists(dir / name));
  }
  const auto force = read_csv((dir / "force_vs_distance.csv").string());
  REQUIRE(force.size() == 4);
  CHECK(force[0] == std::vector<std::string>{"trial_id", "distance_m", "abs_force_n"});
  CHECK(std::stod(force[2][2]) == 2.5);
  const auto scatter = read_csv((dir / "offset_scatter.csv").string());
  REQUIRE(scatter.size() == 2);
  CHECK(scatter[1].back() == "success");
  CHECK(std::stod(scatter[1][2]) == 0.0015);

  ReportTables empty;
  CHECK_THROWS_AS(report_emit(empty, (dir / "none").string()), Error);
  CHECK(!fs::exists(dir / "none" / "force_vs_distance.csv"));
}

TEST_CASE("offset trials with zero margins carry no corruption") {
  const SceneConfig scene = planar();
  OffsetConfig o;
  o.margin_lin = 0.0;
  o.margin_rot = 0.0;
  o.trials = 4;
  RolloutConfig r;
  r.timeout = 6.0;
  const auto trials = eval_offsets(constant_model(Vec6::Zero()), nullptr, ControllerConfig{}, scene, o, r, 11);
  REQUIRE(trials.size() == 4);
  for (const auto& t : trials) {
    CHECK(t.lin_offset == 0.0);
    CHECK(t.rot_offset == 0.0);
    CHECK(!t.outcome_class.empty());
  }
  const auto again = eval_offsets(constant_model(Vec6::Zero()), nullptr, ControllerConfig{}, scene, o, r, 11);
  for (std::size_t i = 0; i < trials.size(); ++i) CHECK(trials[i].final_distance == again[i].final_distance);

  OffsetConfig bad;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("rollout logs and offset trials round trip through json") {
  const SceneConfig scene = planar();
  Pose start = scene.goal_pose;
  start.position += scene.approach_axis * 0.05;
  RolloutConfig cfg;
  cfg.timeout = 1.0;
  Vec6 push = Vec6::Zero();
  push[1] = 2.0;
  OffsetTrial t;
  t.id = 7;
  t.lin_offset = 0.003;
  t.rot_offset = 0.01;
  t.seed = 123456789012345ull;
  t.log = rollout_object(constant_model(push), scene, start, cfg);
  t.final_distance = t.log.final_distance;
  t.outcome_class = "fail";
  const nlohmann::json j = to_json(t);
  const OffsetTrial back = offset_trial_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
  CHECK(back.seed == t.seed);
  CHECK(back.log.steps.size() == t.log.steps.size());
  CHECK_THROWS_AS(rollout_log_from_json(nlohmann::json{{"outcome", "lost"}}), Error);
  CHECK_THROWS_AS(outcome_from_string("lost"), Error);
}

TEST_CASE("seeded start sets are reproducible and kept apart from demonstrations") {
  const SceneConfig scene = planar();
  const DemoPlan plan;
  const auto a = seeded_starts(scene, plan, StartKind::jammed, 5, 9);
  const auto b = seeded_starts(scene, plan, StartKind::jammed, 5, 9);
  const auto r = seeded_starts(scene, plan, StartKind::random, 5, 9);
  REQUIRE(a.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(a[i].to_array() == b[i].to_array());
    CHECK(a[i].to_array() != r[i].to_array());
    Rng demo_rng(mix_seed(9, static_cast<std::uint64_t>(i)));
    CHECK(jammed_start(scene, demo_rng, plan.jam_lateral, plan.jam_tilt).to_array() != a[i].to_array());
  }
  CHECK(start_kind_from_string("random") == StartKind::random);
  CHECK_THROWS_AS(start_kind_from_string("sideways"), Error);
}
