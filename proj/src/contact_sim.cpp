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

#include "csf/contact_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csf/error.hpp"
#include "csf/json_util.hpp"

namespace csf {

namespace {

Mat6 damping_matrix(const SceneConfig& scene) {
  Mat6 d = Mat6::Zero();
  d.diagonal() << Vec3::Constant(scene.d_lin), Vec3::Constant(scene.d_rot);
  return d;
}

Pose integrate(const Pose& pose, const Twist& twist, double dt) {
  const Mat3 r = pose.orientation.matrix();
  Pose out;
  out.position = pose.position + r * twist.linear * dt;
  const Eigen::Quaterniond q(pose.orientation.w, pose.orientation.x, pose.orientation.y, pose.orientation.z);
  const Vec3 w = twist.angular * dt;
  const double angle = w.norm();
  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (angle > 0.0) dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle));
  const Eigen::Quaterniond next = q * dq;
  out.orientation = canonicalize_quat(next.x(), next.y(), next.z(), next.w());
  return out;
}

}  // namespace

void SceneConfig::validate() const {
  if ((active_extents.array() <= 0.0).any()) throw Error("bad_scene", "active box extents must be positive");
  for (const auto& r : receptacle) {
    if ((r.extents.array() <= 0.0).any()) throw Error("bad_scene", "receptacle extents must be positive");
  }
  if (!(clearance_lin > 0.0)) throw Error("bad_scene", "clearance_lin must be positive");
  if (!(clearance_rot > 0.0)) throw Error("bad_scene", "clearance_rot must be positive");
  if (!(d_lin > 0.0) || !(d_rot > 0.0)) throw Error("bad_scene", "damping must be positive");
  if (!(sim_dt > 0.0)) throw Error("bad_scene", "sim_dt must be positive");
  if (k_pen < 0.0 || c_pen < 0.0 || c_t < 0.0 || mu < 0.0) throw Error("bad_scene", "contact parameters must be >= 0");
  if (std::abs(approach_axis.norm() - 1.0) > 1e-9) throw Error("bad_scene", "approach_axis must be a unit vector");
}

OrientedBox SceneConfig::active_box(const Pose& pose) const {
  return OrientedBox{pose.position, pose.orientation.matrix(), 0.5 * active_extents};
}

OrientedBox SceneConfig::receptacle_box(std::size_t index) const {
  const ReceptacleBox& r = receptacle.at(index);
  return OrientedBox{r.pose.position, r.pose.orientation.matrix(), 0.5 * r.extents};
}

SceneConfig scene_from_json(const nlohmann::json& doc) {
  using namespace json_util;
  SceneConfig s;
  s.name = value_or<std::string>(doc, "name", s.name);
  s.active_extents = vec3(require(require(doc, "active_box"), "extents"), "active_box.extents");
  for (const auto& r : require(doc, "receptacle")) {
    s.receptacle.push_back(ReceptacleBox{pose(require(r, "pose"), "receptacle[].pose"),
                                         vec3(require(r, "extents"), "receptacle[].extents")});
  }
  s.goal_pose = pose(require(doc, "goal_pose"), "goal_pose");
  if (doc.contains("approach_axis")) s.approach_axis = vec3(doc.at("approach_axis"), "approach_axis").normalized();
  s.entrance_distance = value_or(doc, "entrance_distance", s.entrance_distance);
  s.clearance_lin = value_or(doc, "clearance_lin", s.clearance_lin);
  s.clearance_rot = value_or(doc, "clearance_rot", s.clearance_rot);
  s.d_lin = value_or(doc, "d_lin", s.d_lin);
  s.d_rot = value_or(doc, "d_rot", s.d_rot);
  s.k_pen = value_or(doc, "k_pen", s.k_pen);
  s.c_pen = value_or(doc, "c_pen", s.c_pen);
  s.c_t = value_or(doc, "c_t", s.c_t);
  s.mu = value_or(doc, "mu", s.mu);
  s.sim_dt = value_or(doc, "sim_dt", s.sim_dt);
  s.validate();
  return s;
}

nlohmann::json to_json(const SceneConfig& s) {
  using json_util::to_json;
  nlohmann::json receptacle = nlohmann::json::array();
  for (const auto& r : s.receptacle) receptacle.push_back({{"pose", to_json(r.pose)}, {"extents", to_json(r.extents)}});
  return {{"name", s.name},
          {"active_box", {{"extents", to_json(s.active_extents)}}},
          {"receptacle", receptacle},
          {"goal_pose", to_json(s.goal_pose)},
          {"approach_axis", to_json(s.approach_axis)},
          {"entrance_distance", s.entrance_distance},
          {"clearance_lin", s.clearance_lin},
          {"clearance_rot", s.clearance_rot},
          {"d_lin", s.d_lin},
          {"d_rot", s.d_rot},
          {"k_pen", s.k_pen},
          {"c_pen", s.c_pen},
          {"c_t", s.c_t},
          {"mu", s.mu},
          {"sim_dt", s.sim_dt}};
}

SceneConfig load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open scene file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", path + ": " + e.what());
  }
  return scene_from_json(doc);
}

SceneConfig transform_scene(const SceneConfig& scene, const Transform& motion) {
  auto move = [&](const Pose& p) {
    return compose(motion, Transform::from_pose(p, motion.child, motion.child)).to_pose();
  };
  SceneConfig out = scene;
  for (auto& r : out.receptacle) r.pose = move(r.pose);
  out.goal_pose = move(scene.goal_pose);
  out.approach_axis = motion.rotation * scene.approach_axis;
  return out;
}

std::vector<ContactPoint> collide(const SceneConfig& scene, const Pose& pose) {
  const OrientedBox active = scene.active_box(pose);
  std::vector<ContactPoint> out;
  for (std::size_t i = 0; i < scene.receptacle.size(); ++i) {
    auto pair = collide_boxes(active, scene.receptacle_box(i), static_cast<int>(i));
    out.insert(out.end(), pair.begin(), pair.end());
  }
  return out;
}

Wrench contact_wrench(const std::vector<ContactPoint>& contacts, const BodyState& state, const SceneConfig& scene) {
  const Mat3 r = state.pose.orientation.matrix();
  const Vec3 v = r * state.twist.linear;
  const Vec3 w = r * state.twist.angular;
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (const ContactPoint& c : contacts) {
    const Vec3 arm = c.point - state.pose.position;
    const Vec3 vp = v + w.cross(arm);
    const double vn = vp.dot(c.normal);
    const Vec3 fn = (scene.k_pen * c.depth + scene.c_pen * std::max(0.0, -vn)) * c.normal;
    const Vec3 vt = vp - vn * c.normal;
    const double vt_norm = vt.norm();
    Vec3 ft = Vec3::Zero();
    if (vt_norm > 0.0) ft = -std::min(scene.c_t * vt_norm, scene.mu * fn.norm()) * (vt / vt_norm);
    force += fn + ft;
    torque += arm.cross(fn + ft);
  }
  return Wrench{r.transpose() * force, r.transpose() * torque, Frame::object};
}

namespace {

struct Substep {
  BodyState state;
  Wrench f_c;
};

// Velocity-dependent contact terms are solved implicitly:
// residual(v) = D v - f_d - f_c(v) = 0, damped Newton with a
// finite-difference Jacobian.
Vec6 solve_velocity(const SceneConfig& scene, const BodyState& state, const std::vector<ContactPoint>& contacts,
                    const Vec6& fd, Vec6& f_c) {
  Vec6 v;
  if (contacts.empty()) {
    v << fd.head<3>() / scene.d_lin, fd.tail<3>() / scene.d_rot;
    f_c.setZero();
    return v;
  }
  const Mat6 d = damping_matrix(scene);
  BodyState probe = state;
  auto contact_at = [&](const Vec6& vel) {
    probe.twist = Twist::from_vec6(vel, Frame::object);
    return contact_wrench(contacts, probe, scene).to_vec6();
  };
  auto residual = [&](const Vec6& vel) { return Vec6(d * vel - fd - contact_at(vel)); };

  v = d.inverse() * (fd + contact_at(state.twist.to_vec6()));
  Vec6 r = residual(v);
  for (int it = 0; it < 12 && r.norm() > 1e-12 * (1.0 + fd.norm()); ++it) {
    Mat6 jac;
    for (int k = 0; k < 6; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(v[k]));
      Vec6 vp = v;
      vp[k] += h;
      jac.col(k) = (residual(vp) - r) / h;
    }
    const Vec6 delta = -jac.partialPivLu().solve(r);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 10; ++ls, alpha *= 0.5) {
      const Vec6 cand = v + alpha * delta;
      const Vec6 rc = residual(cand);
      if (rc.norm() < r.norm()) {
        v = cand;
        r = rc;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  f_c = contact_at(v);
  return v;
}

constexpr double kMaxTravel = 5e-5;  // m per substep near contact
constexpr int kMaxSubsteps = 64;

}  // namespace

SimStepResult sim_step(const SceneConfig& scene, const BodyState& state, const Wrench& f_d, double dt) {
  if (f_d.frame != Frame::object && f_d.frame != Frame::ee) {
    throw Error("frame_mismatch", "simulator wrench must be expressed in the object frame");
  }
  const Vec6 fd = f_d.to_vec6();
  const double reach = 0.5 * scene.active_extents.norm();

  std::vector<ContactPoint> contacts = collide(scene, state.pose);
  Vec6 f_c;
  Vec6 v = solve_velocity(scene, state, contacts, fd, f_c);

  // Split the step when the swept motion could reach a receptacle box, so
  // impacts are resolved before deep penetration builds up.
  const double travel = dt * (v.head<3>().norm() + v.tail<3>().norm() * reach);
  int substeps = 1;
  if (travel > kMaxTravel) {
    const OrientedBox active = scene.active_box(state.pose);
    bool near = !contacts.empty();
    for (std::size_t i = 0; i < scene.receptacle.size() && !near; ++i) {
      near = boxes_overlap(active, scene.receptacle_box(i), travel);
    }
    if (near) substeps = std::min(kMaxSubsteps, static_cast<int>(std::ceil(travel / kMaxTravel)));
  }

  BodyState cur = state;
  const double h = dt / substeps;
  for (int k = 0; k < substeps; ++k) {
    if (k > 0) {
      contacts = collide(scene, cur.pose);
      v = solve_velocity(scene, cur, contacts, fd, f_c);
    }
    cur.twist = Twist::from_vec6(v, Frame::object);
    cur.pose = integrate(cur.pose, cur.twist, h);
  }

  SimStepResult out;
  out.f_c = Wrench::from_vec6(f_c, Frame::object);
  out.state = cur;
  out.contacts = collide(scene, out.state.pose);
  return out;
}

Wrench coupled_sensor_wrench(const std::vector<ContactPoint>& contacts, const BodyState& state,
                             const SceneConfig& scene) {
  const Wrench f_c = contact_wrench(contacts, state, scene);
  return Wrench{-f_c.force, -f_c.torque, Frame::ee};
}

double distance_to_goal(const SceneConfig& scene, const Pose& pose) {
  return (pose.position - scene.goal_pose.position).norm();
}

double rotation_error(const SceneConfig& scene, const Pose& pose) {
  return rotation_angle(scene.goal_pose.orientation.matrix().transpose() * pose.orientation.matrix());
}

double approach_coordinate(const SceneConfig& scene, const Pose& pose) {
  return (pose.position - scene.goal_pose.position).dot(scene.approach_axis);
}

bool is_success(const SceneConfig& scene, const Pose& pose) {
  return distance_to_goal(scene, pose) < scene.clearance_lin && rotation_error(scene, pose) < scene.clearance_rot &&
         approach_coordinate(scene, pose) < scene.entrance_distance;
}

Pose random_start(const SceneConfig& scene, Rng& rng, double linear_range, double angular_range) {
  if (linear_range < 0.0 || angular_range < 0.0) throw Error("bad_argument", "start ranges must be >= 0");
  if (linear_range == 0.0 && angular_range == 0.0) {
    if (!collide(scene, scene.goal_pose).empty()) {
      throw Error("start_rejected", "goal pose of scene '" + scene.name + "' is in collision");
    }
    return scene.goal_pose;
  }
  const Mat3 goal_r = scene.goal_pose.orientation.matrix();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    const double mag = uniform(rng, 0.0, linear_range);
    const double angle = uniform(rng, 0.0, angular_range);
    Pose p;
    p.position = scene.goal_pose.position + dir.normalized() * mag;
    p.orientation = UnitQuat::from_matrix(axis_angle(axis, angle) * goal_r);
    if (linear_range > 0.0 && approach_coordinate(scene, p) <= scene.entrance_distance) continue;
    if (!collide(scene, p).empty()) continue;
    return p;
  }
  throw Error("start_rejected", "no collision-free start found in 10^4 draws for scene '" + scene.name + "'");
}

Simulator::Simulator(SceneConfig scene) : scene_(std::move(scene)) {
  scene_.validate();
  reset(scene_.goal_pose);
}

void Simulator::reset(const Pose& pose) {
  last_ = SimStepResult{};
  last_.state.pose = pose;
  last_.contacts = collide(scene_, pose);
  last_.f_c = Wrench{Vec3::Zero(), Vec3::Zero(), Frame::object};
  time_ = 0.0;
}

const SimStepResult& Simulator::step(const Wrench& f_d) {
  last_ = sim_step(scene_, last_.state, f_d, scene_.sim_dt);
  time_ += scene_.sim_dt;
  return last_;
}

}  // namespace csf
