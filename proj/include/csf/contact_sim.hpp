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

#include "json.hpp"
#include "csf/collision.hpp"
#include "csf/rng.hpp"
#include "csf/spatial.hpp"

namespace csf {

struct ReceptacleBox {
  Pose pose;      // world
  Vec3 extents;   // full edge lengths [m]
};

// Zero-gravity quasi-static assembly scene. The socket opens along
// `approach_axis` (world, unit): moving from the goal along that axis leads
// out of the socket, and the object's center has left the socket once its
// coordinate along the axis exceeds `entrance_distance`.
struct SceneConfig {
  std::string name = "scene";
  Vec3 active_extents = Vec3(0.1, 0.04, 0.04);
  std::vector<ReceptacleBox> receptacle;
  Pose goal_pose;
  Vec3 approach_axis = Vec3::UnitX();
  double entrance_distance = 0.1;
  double clearance_lin = 0.002;
  double clearance_rot = 0.8 * 3.14159265358979323846 / 180.0;
  double d_lin = 50.0;   // N s / m
  double d_rot = 5.0;    // N m s / rad
  double k_pen = 1e4;    // N / m
  double c_pen = 10.0;   // N s / m
  double c_t = 10.0;     // N s / m, viscous slope of the friction law
  double mu = 0.8;
  double sim_dt = 1e-3;

  void validate() const;
  OrientedBox active_box(const Pose& pose) const;
  OrientedBox receptacle_box(std::size_t index) const;
};

SceneConfig scene_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SceneConfig& scene);
SceneConfig load_scene(const std::string& path);

// Re-expresses the whole scene under a rigid motion of the world.
SceneConfig transform_scene(const SceneConfig& scene, const Transform& motion);

struct BodyState {
  Pose pose;                                            // world
  Twist twist{Vec3::Zero(), Vec3::Zero(), Frame::object};  // object frame
};

std::vector<ContactPoint> collide(const SceneConfig& scene, const Pose& pose);

// Penalty normal force plus viscous-capped Coulomb friction, summed about the
// object center and expressed in the object frame.
Wrench contact_wrench(const std::vector<ContactPoint>& contacts, const BodyState& state, const SceneConfig& scene);

struct SimStepResult {
  BodyState state;
  std::vector<ContactPoint> contacts;  // at the new pose
  Wrench f_c;                          // contact wrench used for this step, object frame
};

// One step of D ẋ = f_d + f_c with f_d in the object frame.
SimStepResult sim_step(const SceneConfig& scene, const BodyState& state, const Wrench& f_d, double dt);

// Sensor reading for the robot-coupled mode: the wrench the object exerts on
// the environment, expressed in the end-effector frame.
Wrench coupled_sensor_wrench(const std::vector<ContactPoint>& contacts, const BodyState& state,
                             const SceneConfig& scene);

Pose random_start(const SceneConfig& scene, Rng& rng, double linear_range, double angular_range);

double distance_to_goal(const SceneConfig& scene, const Pose& pose);
double rotation_error(const SceneConfig& scene, const Pose& pose);
// Coordinate of the object center along the approach axis, measured from the goal.
double approach_coordinate(const SceneConfig& scene, const Pose& pose);
bool is_success(const SceneConfig& scene, const Pose& pose);

// Sequential stepper owning one simulation instance.
class Simulator {
 public:
  explicit Simulator(SceneConfig scene);

  void reset(const Pose& pose);
  const SimStepResult& step(const Wrench& f_d);

  const SceneConfig& scene() const { return scene_; }
  const BodyState& state() const { return last_.state; }
  const SimStepResult& last() const { return last_; }
  double time() const { return time_; }
  bool success() const { return is_success(scene_, last_.state.pose); }

 private:
  SceneConfig scene_;
  SimStepResult last_;
  double time_ = 0.0;
};

}  // namespace csf
