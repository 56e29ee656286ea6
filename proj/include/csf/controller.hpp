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

#include "json.hpp"
#include "csf/kinematics.hpp"
#include "csf/skill_input.hpp"
#include "csf/spatial.hpp"

namespace csf {

struct ControllerConfig {
  Vec6 kp = (Vec6() << 1.5, 1.5, 1.5, 0.35, 0.35, 0.35).finished();  // force rows, torque rows
  Vec6 kd = Vec6::Constant(0.005);
  double dt = 0.008;             // 125 Hz
  double velocity_decay = 0.9;   // per-cycle factor on the twin's joint velocity
  double force_scale = 1.5;
  double torque_scale = 2.0;
  double max_joint_step = 0.01;  // rad (or m) per cycle
  // One-pole low-pass on the error derivative; 0 disables filtering.
  double derivative_filter = 0.0;
  double degraded_condition = 1e8;
  double degraded_clamp_time = 1.0;  // s

  void validate() const;
};

ControllerConfig controller_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ControllerConfig& cfg);

struct ControllerState {
  VecX q;
  VecX qd_virtual;
  Vec6 prev_error = Vec6::Zero();
  Vec6 error_rate = Vec6::Zero();
  Wrench sensor_bias{Vec3::Zero(), Vec3::Zero(), Frame::ee};
  double clamp_time = 0.0;
  bool degraded = false;

  static ControllerState at_rest(const VecX& q);
};

// f_c = kp∘e + kd∘ė with e = f_d − f_s and ė a backward difference.
// Both wrenches are end-effector frame; f_s must already be bias-corrected.
Wrench pd_regulate(const Wrench& f_d, const Wrench& f_s, ControllerState& state, const ControllerConfig& cfg);

struct TwinStepResult {
  VecX q_d;
  VecX qdd;
  bool clamped = false;
  double condition = 1.0;  // of the twin inertia matrix
};

// Forward-dynamics IK step: q̈ = H⁻¹ Jᵀ f, then decayed double integration.
TwinStepResult twin_step(const ChainModel& chain, ControllerState& state, const Wrench& f_c,
                         const ControllerConfig& cfg);

SkillInput compute_skill_input(const ChainModel& chain, const VecX& q, const VecX& qd,
                               const Transform& base_to_target, const Wrench& f_d_prev);

void tare_sensor(const Wrench& raw, ControllerState& state);
Wrench apply_bias(const Wrench& raw, const ControllerState& state);

Wrench scale_wrench(const Wrench& w, const ControllerConfig& cfg);

// One control cycle of the closed loop: bias correction, PD regulation and a
// twin step, bundled for callers that run the loop.
class VirtualTwinController {
 public:
  VirtualTwinController(const ChainModel& chain, ControllerConfig cfg, const VecX& q0);

  struct Cycle {
    Wrench f_c;
    Wrench f_s;
    TwinStepResult step;
  };

  Cycle cycle(const Wrench& f_d, const Wrench& raw_sensor);
  void tare(const Wrench& raw) { tare_sensor(raw, state_); }

  const ControllerState& state() const { return state_; }
  const ControllerConfig& config() const { return cfg_; }
  const ChainModel& chain() const { return *chain_; }

 private:
  const ChainModel* chain_;
  ControllerConfig cfg_;
  ControllerState state_;
};

}  // namespace csf
