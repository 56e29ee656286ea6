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

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "csf/contact_sim.hpp"
#include "csf/controller.hpp"
#include "csf/expert.hpp"
#include "csf/kinematics.hpp"
#include "csf/skill_model.hpp"

namespace csf {

enum class Outcome { success, stuck, timeout };
std::string to_string(Outcome o);

struct RolloutConfig {
  double serve_rate_hz = 50.0;   // object mode: one prediction per serving interval
  int execute_steps = 50;        // predictions played before re-seeding (object mode)
  double window_time = 2.5;      // robot mode: one inference per window
  int setpoints = 50;            // robot mode: setpoints per window
  double stuck_window = 5.0;     // s
  double stuck_progress = 0.001; // m
  double timeout = 120.0;        // s

  void validate() const;
};

RolloutConfig rollout_config_from_json(const nlohmann::json& doc, RolloutConfig base = {});
nlohmann::json to_json(const RolloutConfig& cfg);

struct RolloutStep {
  double t = 0.0;
  double distance = 0.0;       // to the true goal [m]
  double rotation_error = 0.0; // [rad]
  double approach = 0.0;       // coordinate along the approach axis [m]
  double force = 0.0;          // |f| of the applied command [N]
  double torque = 0.0;         // |t| [N m]
  Vec6 wrench = Vec6::Zero();
  std::array<double, 7> pose{};  // world pose of the object
};

struct RolloutLog {
  std::vector<RolloutStep> steps;
  Outcome outcome = Outcome::timeout;
  double final_distance = 0.0;
  double final_rotation = 0.0;
  double duration = 0.0;
  long inferences = 0;
  long setpoints = 0;
  long cycles = 0;
  bool degraded = false;
  nlohmann::json config;
};

nlohmann::json to_json(const RolloutLog& log);
RolloutLog rollout_log_from_json(const nlohmann::json& doc);
Outcome outcome_from_string(const std::string& s);

enum class StartKind { jammed, random };
StartKind start_kind_from_string(const std::string& s);

// Evaluation start poses drawn with the demo plan's ranges on a seed stream
// separate from demonstration generation.
std::vector<Pose> seeded_starts(const SceneConfig& scene, const DemoPlan& plan, StartKind kind, int count,
                                std::uint64_t seed);

// Steers the free object in the simulator with the model's predictions.
// `goal_estimate` enters the features only; scoring uses the scene's goal.
RolloutLog rollout_object(const LstmModel& model, const SceneConfig& scene, const Pose& start,
                          const RolloutConfig& cfg, const Pose& goal_estimate);
RolloutLog rollout_object(const LstmModel& model, const SceneConfig& scene, const Pose& start,
                          const RolloutConfig& cfg);

// Robot-coupled placement: the chain base sits in the world so that its home
// configuration puts the end-effector (and the grasped object) on the goal.
Transform robot_base_in_world(const ChainModel& chain, const SceneConfig& scene);

// Control cycles assigned to each setpoint of a window: floor per setpoint,
// remainder to the last one.
std::vector<int> window_cycle_plan(long window_index, const RolloutConfig& rcfg, const ControllerConfig& ccfg);

// Executes the model through the virtual-twin force controller with nested
// rates (inference per window, setpoint advance, control cycle).
RolloutLog rollout_robot(const LstmModel& model, const ChainModel& chain, const ControllerConfig& ctrl,
                         const SceneConfig& scene, const Pose& start, const RolloutConfig& cfg,
                         const Pose& goal_estimate);
RolloutLog rollout_robot(const LstmModel& model, const ChainModel& chain, const ControllerConfig& ctrl,
                         const SceneConfig& scene, const Pose& start, const RolloutConfig& cfg);

// Force profile check: a peak of the smoothed |f| while the object is still
// outside the entrance band, followed after it by a drop below
// `drop_ratio` x peak once the object reaches the band or goes deeper.
struct PeakDropConfig {
  int smooth = 5;
  double band = 0.03;        // m around the entrance coordinate
  double drop_ratio = 0.7;
  double min_peak = 1.0;     // N
};
bool peak_then_drop(const RolloutLog& log, double entrance_distance, const PeakDropConfig& cfg = {});

struct OffsetConfig {
  double margin_lin = 0.05;                                   // m
  double margin_rot = 5.0 * 3.14159265358979323846 / 180.0;   // rad
  int trials = 227;
  double start_lateral = 0.01;  // entrance starts, see jammed_start
  double start_tilt = 0.15;
  double near_miss_factor = 10.0;  // near-miss below this multiple of the clearance
  double histogram_bin = 0.001;    // m
  int workers = 0;                 // 0: hardware concurrency

  void validate() const;
};

OffsetConfig offset_config_from_json(const nlohmann::json& doc, OffsetConfig base = {});
nlohmann::json to_json(const OffsetConfig& cfg);

struct OffsetTrial {
  int id = 0;
  double lin_offset = 0.0;
  double rot_offset = 0.0;
  std::uint64_t seed = 0;
  double final_distance = 0.0;
  std::string outcome_class;  // success | near_miss | fail
  RolloutLog log;
};

nlohmann::json to_json(const OffsetTrial& trial);
OffsetTrial offset_trial_from_json(const nlohmann::json& doc);

std::string classify_distance(double final_distance, double clearance, double near_miss_factor);

// Corrupts the target estimate per trial and runs a rollout from a seeded
// start, on the robot when `chain` is set, else in object mode.
std::vector<OffsetTrial> eval_offsets(const LstmModel& model, const ChainModel* chain, const ControllerConfig& ctrl,
                                      const SceneConfig& scene, const OffsetConfig& ocfg, const RolloutConfig& rcfg,
                                      std::uint64_t seed);

struct HistogramRow {
  double distance_bin = 0.0;
  int trials_at_or_beyond = 0;
};
// Trials accumulated from right to left over lower bin edges.
std::vector<HistogramRow> cumulative_histogram(const std::vector<double>& final_distances, double bin);

// Tabular outputs for the force/torque-versus-distance and offset figures.
struct ReportTables {
  std::vector<std::vector<std::string>> force_vs_distance;
  std::vector<std::vector<std::string>> torque_vs_distance;
  std::vector<std::vector<std::string>> cumulative_histogram;
  std::vector<std::vector<std::string>> offset_scatter;
};

ReportTables build_report(const std::vector<RolloutLog>& logs, const std::vector<OffsetTrial>& trials,
                          double histogram_bin);
// Writes the CSV files (and SVG plots when requested) into `dir`.
void report_emit(const ReportTables& tables, const std::string& dir, bool svg = false);
std::vector<std::vector<std::string>> read_csv(const std::string& path);
std::string format_number(double v);

}  // namespace csf
