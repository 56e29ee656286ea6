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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "csf/contact_sim.hpp"
#include "csf/demo.hpp"
#include "csf/rng.hpp"

namespace csf {

struct ExpertConfig {
  double kp_lin = 1000.0;       // N / m
  double kp_rot = 20.0;         // N m / rad
  double max_force = 30.0;      // N, teleop range
  double max_torque = 6.0;      // N m
  double insert_force = 15.0;   // N, cap while passing the entrance
  double slide_force = 3.0;     // N, cap deeper inside the socket
  double slide_torque = 0.1;    // N m, cap deeper inside the socket
  double entry_depth = 0.03;    // m past the entrance where the cap switches
  double slew_force = 300.0;    // N / s
  double slew_torque = 60.0;    // N m / s
  double standoff = 0.02;       // m in front of the entrance
  double press_depth = 0.004;   // m, insertion aims this far past the goal
  double align_lin = 0.003;     // m
  double align_rot = 0.01;      // rad
  double deadband_lin = 0.0003;
  double deadband_rot = 0.002;
  double stall_window = 0.5;    // s
  double stall_progress = 0.001;
  double retreat_time = 0.3;
  double retreat_force = 10.0;
  double dither_time = 0.5;
  double dither_torque = 1.0;

  void validate() const;
};

ExpertConfig expert_config_from_json(const nlohmann::json& doc, ExpertConfig base = {});
nlohmann::json to_json(const ExpertConfig& cfg);

// Staged proportional steering with a retreat-and-dither reaction to stalls.
// Returns object-frame wrenches within the teleop range.
class ScriptedExpert {
 public:
  explicit ScriptedExpert(ExpertConfig cfg = {});

  void reset();
  Wrench act(const SceneConfig& scene, const BodyState& state, Rng& rng, double dt);
  const std::string& phase() const { return phase_; }

 private:
  ExpertConfig cfg_;
  Vec6 last_ = Vec6::Zero();
  double time_ = 0.0;
  double best_metric_ = 0.0;
  double best_time_ = 0.0;
  double retreat_until_ = -1.0;
  double dither_until_ = -1.0;
  double next_dither_ = 0.0;
  Vec3 dither_axis_ = Vec3::Zero();
  bool inserting_ = false;
  bool started_ = false;
  std::string phase_ = "idle";
};

// A start wedged at the socket entrance: a tilted approach is pushed straight
// in without correcting the tilt, then backed off until collision-free.
Pose jammed_start(const SceneConfig& scene, Rng& rng, double lateral_range, double tilt_range);

struct DemoRunConfig {
  double rate_hz = 100.0;
  double max_time = 30.0;
  double hold_after_success = 0.5;
};

Demonstration run_expert_demo(const SceneConfig& scene, const Pose& start, const ExpertConfig& cfg, Rng& rng,
                              const DemoRunConfig& run = {});

// Batch of scripted demonstrations mixing free random starts and jammed
// entrance starts, one derived seed per demonstration.
struct DemoPlan {
  int count = 1000;
  double random_fraction = 0.5;
  double random_lin = 0.15;   // m
  double random_rot = 0.3;    // rad
  double jam_lateral = 0.01;  // m
  double jam_tilt = 0.15;     // rad
  DemoRunConfig run;
  int workers = 0;            // 0: hardware concurrency

  void validate() const;
};

DemoPlan demo_plan_from_json(const nlohmann::json& doc, DemoPlan base = {});
nlohmann::json to_json(const DemoPlan& plan);

std::vector<Demonstration> generate_expert_demos(const SceneConfig& scene, const ExpertConfig& cfg,
                                                 const DemoPlan& plan, std::uint64_t seed);

}  // namespace csf
