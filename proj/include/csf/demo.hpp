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

#pragma once

#include <string>
#include <vector>

#include "csf/contact_sim.hpp"
#include "csf/rng.hpp"
#include "csf/skill_input.hpp"
#include "csf/skill_model.hpp"

namespace csf {

inline constexpr int kDemoFormatVersion = 1;

// Object-frame record: relative target pose, twist and the commanded wrench.
struct DemoRecord {
  double t = 0.0;
  SkillInput x;
};

struct DemoMeta {
  std::string scene;
  double rate_hz = 100.0;
  Pose start_pose;
  bool success = false;
  std::string source = "scripted";  // human | scripted
  bool valid = true;                // false when the recorder saw a cadence gap
};

struct Demonstration {
  DemoMeta meta;
  std::vector<DemoRecord> records;

  double duration() const { return records.empty() ? 0.0 : records.back().t - records.front().t; }
};

// Seed tuple of an object steered in a scene: target pose estimate in the
// object frame, object-frame twist and the last commanded wrench.
SkillInput skill_input_from_state(const Pose& goal_estimate, const BodyState& state, const Wrench& last_wrench);

class Recorder {
 public:
  Recorder(std::string scene, double rate_hz, const Pose& start_pose, std::string source);

  void append(double t, const SkillInput& x);
  std::size_t size() const { return demo_.records.size(); }
  bool valid() const { return demo_.meta.valid; }
  // Throws "invalid_demo" when nothing was recorded.
  Demonstration finalize(bool success);
  void clear();

 private:
  Demonstration demo_;
};

// Raw window: seed = record t0, labels = wrenches of records t0+1 ... t0+N.
Sample window_sample(const Demonstration& demo, Rng& rng, int n);

// Uniform over every admissible window of the successful demonstrations.
WindowSampler make_window_sampler(const std::vector<Demonstration>& demos, int n);

// Population mean/std per dimension over all records of successful demos,
// std floored at 1e-8.
NormStats norm_stats(const std::vector<Demonstration>& demos);

void write_demo(const std::string& path, const Demonstration& demo);
Demonstration read_demo(const std::string& path);

// Directory of *.demo.jsonl files plus a regenerated manifest.json.
void write_dataset(const std::string& dir, const std::vector<Demonstration>& demos);
// Returns the path of the new file.
std::string append_to_dataset(const std::string& dir, const Demonstration& demo);
std::vector<Demonstration> load_dataset(const std::string& dir);
void write_manifest(const std::string& dir);

// Replays the recorded wrench stream from the recorded start pose, holding
// each wrench for one record period, and returns the largest deviation of the
// replayed relative pose features from the recorded ones.
double replay_deviation(const SceneConfig& scene, const Demonstration& demo);

}  // namespace csf
