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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "csf/demo.hpp"
#include "csf/error.hpp"
#include "csf/expert.hpp"
#include "doctest.h"

using namespace csf;
namespace fs = std::filesystem;

namespace {

SceneConfig planar() { return load_scene(std::string(CSF_DATA_DIR) + "/scenes/planar_slot.json"); }

// Record k carries k in every twist and wrench slot.
Demonstration ramp_demo(int len, bool success = true) {
  Recorder rec("test", 100.0, Pose{}, "scripted");
  for (int k = 0; k < len; ++k) {
    SkillInput x;
    x.twist = Vec6::Constant(k);
    x.wrench = Vec6::Constant(k);
    rec.append(0.01 * k, x);
  }
  return rec.finalize(success);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("csf_test_demo_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

template <class F>
std::string error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Demonstration expert_demo(std::uint64_t seed) {
  const SceneConfig s = planar();
  Rng rng(seed);
  const Pose start = random_start(s, rng, 0.15, 0.3);
  return run_expert_demo(s, start, ExpertConfig{}, rng);
}

}  // namespace

TEST_CASE("recorder timing and validity") {
  const Demonstration d = ramp_demo(1001);
  CHECK(d.meta.valid);
  CHECK(d.meta.success);
  CHECK(d.duration() == doctest::Approx(10.0).epsilon(1e-12));

  Recorder empty("test", 100.0, Pose{}, "scripted");
  CHECK(error_code([&] { empty.finalize(true); }) == "invalid_demo");

  Recorder gap("test", 100.0, Pose{}, "scripted");
  gap.append(0.0, SkillInput{});
  gap.append(0.01, SkillInput{});
  gap.append(0.05, SkillInput{});
  CHECK_FALSE(gap.valid());
  CHECK_FALSE(gap.finalize(true).meta.success);
}

TEST_CASE("record of an object resting at the goal") {
  Pose goal;
  goal.position = Vec3(0.3, -0.2, 0.1);
  goal.orientation = UnitQuat::from_matrix(rpy_to_matrix(0.1, -0.2, 0.3));
  BodyState state;
  state.pose = goal;
  const SkillInput x = skill_input_from_state(goal, state, Wrench{Vec3::Zero(), Vec3::Zero(), Frame::object});
  const auto v = x.to_array();
  for (int i = 0; i < kSkillInputDim; ++i) CHECK(std::abs(v[i] - (i == 6 ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("window sampling") {
  const int n = 5;
  const Demonstration d = ramp_demo(n + 2);
  Rng rng(3);
  std::set<int> starts;
  for (int i = 0; i < 200; ++i) {
    const Sample s = window_sample(d, rng, n);
    const int t0 = static_cast<int>(s.seed[7]);
    starts.insert(t0);
    REQUIRE(s.labels.cols() == n);
    for (int k = 0; k < n; ++k) CHECK(s.labels(0, k) == t0 + 1 + k);
  }
  CHECK(starts == std::set<int>{0, 1});

  Rng a(9), b(9);
  const Demonstration long_demo = ramp_demo(300);
  CHECK(window_sample(long_demo, a, 50).seed == window_sample(long_demo, b, 50).seed);

  Rng rng2(1);
  CHECK(error_code([&] { window_sample(ramp_demo(n + 1), rng2, n); }) == "demo_too_short");
  CHECK(error_code([&] { window_sample(ramp_demo(20, false), rng2, n); }) == "unsuccessful_demo");
  CHECK(error_code([&] { make_window_sampler({ramp_demo(20, false)}, n); }) == "empty_dataset");
}

TEST_CASE("sampler only returns windows from one demonstration") {
  std::vector<Demonstration> demos{ramp_demo(12), ramp_demo(30)};
  for (auto& r : demos[1].records) {
    r.x.twist.array() += 1000.0;
    r.x.wrench.array() += 1000.0;
  }
  const WindowSampler sampler = make_window_sampler(demos, 4);
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const Sample s = sampler(rng);
    for (int k = 0; k < 4; ++k) CHECK(s.labels(0, k) == s.seed[7] + 1 + k);
  }
}

TEST_CASE("normalization statistics") {
  Recorder rec("test", 100.0, Pose{}, "scripted");
  SkillInput x;
  rec.append(0.0, x);
  x.twist[0] = 2.0;
  x.wrench[0] = 2.0;
  rec.append(0.01, x);
  const Demonstration d = rec.finalize(true);
  const NormStats s = norm_stats({d, d});
  CHECK(s.in_mean[7] == doctest::Approx(1.0));
  CHECK(s.in_std[7] == doctest::Approx(1.0));
  CHECK(s.out_mean[0] == doctest::Approx(1.0));
  CHECK(s.out_std[0] == doctest::Approx(1.0));
  CHECK(s.in_std[8] == 1e-8);
  CHECK(s.in_mean[6] == 1.0);
  CHECK(s.in_std[6] == 1e-8);

  const std::vector<Demonstration> demos{expert_demo(1), expert_demo(2), expert_demo(3)};
  const NormStats p = norm_stats(demos);
  const NormStats q = norm_stats({demos[2], demos[0], demos[1]});
  CHECK((p.in_mean - q.in_mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((p.in_std - q.in_std).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((p.out_std - q.out_std).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(error_code([] { norm_stats({}); }) == "empty_dataset");
}

TEST_CASE("demonstration files round trip") {
  const fs::path dir = scratch_dir("io");
  const Demonstration d = expert_demo(11);
  const std::string path = (dir / "one.demo.jsonl").string();
  write_demo(path, d);
  const Demonstration r = read_demo(path);
  CHECK(r.meta.scene == d.meta.scene);
  CHECK(r.meta.success == d.meta.success);
  CHECK(r.meta.source == "scripted");
  REQUIRE(r.records.size() == d.records.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < d.records.size(); ++k) {
    worst = std::max(worst, std::abs(r.records[k].t - d.records[k].t));
    const auto a = r.records[k].x.to_array();
    const auto b = d.records[k].x.to_array();
    for (int i = 0; i < kSkillInputDim; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  CHECK(worst <= 1e-12);

  write_dataset((dir / "set").string(), {d, expert_demo(12)});
  append_to_dataset((dir / "set").string(), expert_demo(13));
  CHECK(load_dataset((dir / "set").string()).size() == 3);
  CHECK(fs::exists(dir / "set" / "manifest.json"));
}

TEST_CASE("ten second file has 1001 data lines") {
  const fs::path dir = scratch_dir("lines");
  const std::string path = (dir / "ten.demo.jsonl").string();
  write_demo(path, ramp_demo(1001));
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1 + 1001);
}

TEST_CASE("loader rejects malformed files with line diagnostics") {
  const fs::path dir = scratch_dir("bad");
  const std::string good = (dir / "good.demo.jsonl").string();
  write_demo(good, ramp_demo(4));
  std::vector<std::string> lines;
  {
    std::ifstream in(good);
    std::string l;
    while (std::getline(in, l)) lines.push_back(l);
  }
  auto write_lines = [&](const std::string& name, const std::vector<std::string>& content) {
    const std::string p = (dir / name).string();
    std::ofstream out(p);
    for (const auto& l : content) out << l << '\n';
    return p;
  };

  // Records at 0.02 s spacing under a 100 Hz header.
  Recorder slow("test", 50.0, Pose{}, "scripted");
  for (int k = 0; k < 4; ++k) slow.append(0.02 * k, SkillInput{});
  Demonstration d50 = slow.finalize(true);
  const std::string p50 = (dir / "slow.demo.jsonl").string();
  write_demo(p50, d50);
  std::vector<std::string> slow_lines;
  {
    std::ifstream in(p50);
    std::string l;
    while (std::getline(in, l)) slow_lines.push_back(l);
  }
  slow_lines[0] = lines[0];
  std::string message;
  try {
    read_demo(write_lines("cadence.demo.jsonl", slow_lines));
  } catch (const Error& e) {
    CHECK(e.code() == "cadence");
    message = e.what();
  }
  CHECK(message.find("cadence.demo.jsonl:3") != std::string::npos);

  auto broken = lines;
  broken[2] = "{\"t\": 0.01, \"x\": [0,0,0]}";
  CHECK(error_code([&] { read_demo(write_lines("schema.demo.jsonl", broken)); }) == "schema");

  broken = lines;
  broken[2] = "{not json";
  CHECK(error_code([&] { read_demo(write_lines("json.demo.jsonl", broken)); }) == "schema");

  broken = lines;
  const auto pos = broken[0].find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  broken[0].replace(pos, 18, "\"format_version\":7");
  CHECK(error_code([&] { read_demo(write_lines("version.demo.jsonl", broken)); }) == "version_mismatch");
}

TEST_CASE("recorded wrench stream replays to the recorded poses") {
  const SceneConfig s = planar();
  for (std::uint64_t seed : {21u, 22u}) {
    const Demonstration d = expert_demo(seed);
    CHECK(replay_deviation(s, d) <= 1e-6);
  }
}

TEST_CASE("scripted expert basics") {
  const SceneConfig s = planar();
  Rng rng(1);
  ScriptedExpert expert;
  BodyState at_goal;
  at_goal.pose = s.goal_pose;
  const Wrench w = expert.act(s, at_goal, rng, 0.01);
  CHECK(w.force.norm() == 0.0);
  CHECK(w.torque.norm() == 0.0);

  ScriptedExpert pusher;
  BodyState offset;
  offset.pose = s.goal_pose;
  offset.pose.position += Vec3(0.05, 0, 0);
  const Wrench p = pusher.act(s, offset, rng, 0.01);
  CHECK(w.frame == Frame::object);
  CHECK(p.force.x() < 0.0);
  CHECK(std::abs(p.force.y()) < 1e-12);
  CHECK(std::abs(p.force.z()) < 1e-12);
  CHECK(p.torque.norm() < 1e-12);
}

TEST_CASE("scripted expert is a usable demonstration source") {
  const SceneConfig s = planar();
  int ok = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng rng(mix_seed(2026, i));
    const Pose start = i % 2 ? jammed_start(s, rng, 0.01, 0.15) : random_start(s, rng, 0.15, 0.3);
    ok += run_expert_demo(s, start, ExpertConfig{}, rng).meta.success;
  }
  CHECK(ok >= 45);

  const Demonstration a = expert_demo(77);
  const Demonstration b = expert_demo(77);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) CHECK(a.records[k].x.to_array() == b.records[k].x.to_array());
}
