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

#include "csf/kinematics.hpp"

#include <cmath>
#include <fstream>

#include "csf/error.hpp"
#include "csf/json_util.hpp"

namespace csf {

namespace {

void check_dimension(const ChainModel& chain, const VecX& q) {
  if (q.size() != chain.dof()) {
    throw Error("dimension_mismatch", "chain '" + chain.name() + "' has " + std::to_string(chain.dof()) +
                                          " joints, got a vector of size " + std::to_string(q.size()));
  }
}

Eigen::Isometry3d joint_motion(const JointSpec& joint, double q) {
  Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
  if (joint.kind == JointKind::revolute) {
    m.linear() = Eigen::AngleAxisd(q, joint.axis).toRotationMatrix();
  } else {
    m.translation() = joint.axis * q;
  }
  return m;
}

// Spatial inertia about the base origin, coordinates [w; v].
Mat6 spatial_inertia(double mass, const Vec3& com, const Mat3& inertia_com) {
  const Mat3 c = skew(com);
  Mat6 m;
  m.topLeftCorner<3, 3>() = inertia_com + mass * c * c.transpose();
  m.topRightCorner<3, 3>() = mass * c;
  m.bottomLeftCorner<3, 3>() = mass * c.transpose();
  m.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return m;
}

}  // namespace

ChainModel::ChainModel(std::string name, std::vector<JointSpec> joints, Eigen::Isometry3d ee_offset,
                       std::vector<LinkParams> links, VecX home)
    : name_(std::move(name)),
      joints_(std::move(joints)),
      ee_offset_(ee_offset),
      links_(std::move(links)),
      home_(std::move(home)) {
  if (joints_.empty()) throw Error("bad_chain", "chain '" + name_ + "' has no joints");
  if (links_.size() != joints_.size()) throw Error("bad_chain", "one link parameter set per joint required");
  for (const auto& j : joints_) {
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) throw Error("bad_chain", "joint axis must be unit norm");
  }
  for (const auto& l : links_) {
    if (!(l.mass > 0.0)) throw Error("bad_chain", "link mass must be positive");
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error("bad_chain", "link inertia must be symmetric");
    }
    if (Eigen::LLT<Mat3>(l.inertia).info() != Eigen::Success) {
      throw Error("bad_chain", "link inertia must be positive definite");
    }
  }
  if (home_.size() == 0) home_ = VecX::Zero(dof());
  if (home_.size() != dof()) throw Error("bad_chain", "home configuration has wrong size");
}

ChainModel ChainModel::with_default_links(std::string name, std::vector<JointSpec> joints,
                                          Eigen::Isometry3d ee_offset, double link_mass,
                                          double inertia_scale, VecX home, double tool_mass,
                                          double tool_inertia) {
  std::vector<LinkParams> links(joints.size());
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const Vec3 next = i + 1 < joints.size() ? joints[i + 1].origin.translation() : ee_offset.translation();
    links[i].mass = link_mass;
    links[i].com = 0.5 * next;
    links[i].inertia = inertia_scale * Mat3::Identity();
  }
  if (tool_mass > 0.0 && !links.empty()) {
    // Lump a virtual tool body at the end-effector point into the last link.
    LinkParams& last = links.back();
    const Vec3 tool = ee_offset.translation();
    const double mass = last.mass + tool_mass;
    const Vec3 com = (last.mass * last.com + tool_mass * tool) / mass;
    auto parallel_axis = [](double m, const Vec3& r) {
      return Mat3(m * (r.squaredNorm() * Mat3::Identity() - r * r.transpose()));
    };
    last.inertia = last.inertia + parallel_axis(last.mass, last.com - com) + tool_inertia * Mat3::Identity() +
                   parallel_axis(tool_mass, tool - com);
    last.mass = mass;
    last.com = com;
  }
  return ChainModel(std::move(name), std::move(joints), ee_offset, std::move(links), std::move(home));
}

ChainFrames chain_frames(const ChainModel& chain, const VecX& q) {
  check_dimension(chain, q);
  ChainFrames f;
  const int n = chain.dof();
  f.link.reserve(n);
  f.axis.reserve(n);
  f.origin.reserve(n);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (int i = 0; i < n; ++i) {
    const JointSpec& joint = chain.joints()[i];
    t = t * joint.origin;
    f.origin.push_back(t.translation());
    f.axis.push_back(t.linear() * joint.axis);
    t = t * joint_motion(joint, q[i]);
    f.link.push_back(t);
  }
  f.ee = t * chain.ee_offset();
  return f;
}

Transform forward_kinematics(const ChainModel& chain, const VecX& q) {
  const ChainFrames f = chain_frames(chain, q);
  Transform out;
  out.rotation = f.ee.linear();
  out.translation = f.ee.translation();
  out.parent = Frame::base;
  out.child = Frame::ee;
  return out;
}

Jacobian geometric_jacobian(const ChainModel& chain, const VecX& q) {
  const ChainFrames f = chain_frames(chain, q);
  const int n = chain.dof();
  Jacobian j(6, n);
  const Vec3 p_e = f.ee.translation();
  for (int i = 0; i < n; ++i) {
    const Vec3& z = f.axis[i];
    if (chain.joints()[i].kind == JointKind::revolute) {
      j.col(i) << z.cross(p_e - f.origin[i]), z;
    } else {
      j.col(i) << z, Vec3::Zero();
    }
  }
  return j;
}

MatX unit_mass_matrix(const ChainModel& chain, const VecX& q) {
  const ChainFrames f = chain_frames(chain, q);
  const int n = chain.dof();

  // Joint motion subspaces s_i as spatial velocities [w; v_O] about the base origin.
  std::vector<Vec6> s(n);
  for (int i = 0; i < n; ++i) {
    if (chain.joints()[i].kind == JointKind::revolute) {
      s[i] << f.axis[i], f.origin[i].cross(f.axis[i]);
    } else {
      s[i] << Vec3::Zero(), f.axis[i];
    }
  }

  // Composite inertias, accumulated tip to base.
  std::vector<Mat6> composite(n);
  Mat6 acc = Mat6::Zero();
  for (int i = n - 1; i >= 0; --i) {
    const LinkParams& link = chain.links()[i];
    const Mat3& r = f.link[i].linear();
    const Vec3 com = f.link[i] * link.com;
    acc += spatial_inertia(link.mass, com, r * link.inertia * r.transpose());
    composite[i] = acc;
  }

  MatX h(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      // H_ij = s_i^T I^c_j s_j for j >= i.
      const double v = s[i].dot(composite[j] * s[j]);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  if (Eigen::LLT<MatX>(h).info() != Eigen::Success) {
    throw Error("numerical", "virtual twin inertia of chain '" + chain.name() + "' is not positive definite");
  }
  return h;
}

VecX solve_ik(const ChainModel& chain, const Transform& target, const VecX& q_init, double* residual,
              int max_iterations) {
  check_dimension(chain, q_init);
  VecX q = q_init;
  const double damping = 1e-4;
  double err_norm = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    const Transform now = forward_kinematics(chain, q);
    Vec6 err;
    err << target.translation - now.translation, rotation_log(target.rotation * now.rotation.transpose());
    err_norm = err.norm();
    if (err_norm < 1e-12) break;
    const Jacobian j = geometric_jacobian(chain, q);
    const MatX jjt = j * j.transpose() + damping * MatX::Identity(6, 6);
    const VecX step = j.transpose() * jjt.ldlt().solve(err);
    const double max_step = step.cwiseAbs().maxCoeff();
    q += max_step > 0.2 ? step * (0.2 / max_step) : step;
  }
  if (residual != nullptr) *residual = err_norm;
  return q;
}

ChainModel chain_from_json(const nlohmann::json& doc) {
  using namespace json_util;
  const std::string name = value_or<std::string>(doc, "name", "chain");
  std::vector<JointSpec> joints;
  for (const auto& j : require(doc, "joints")) {
    JointSpec spec;
    const std::string type = value_or<std::string>(j, "type", "revolute");
    if (type == "revolute") {
      spec.kind = JointKind::revolute;
    } else if (type == "prismatic") {
      spec.kind = JointKind::prismatic;
    } else {
      throw Error("schema", "joint type must be revolute or prismatic, got '" + type + "'");
    }
    const Vec3 axis = vec3(require(j, "axis"), "joints[].axis");
    if (!(axis.norm() > 0.0)) throw Error("bad_chain", "zero joint axis");
    spec.axis = axis.normalized();
    const Vec3 xyz = j.contains("origin_xyz") ? vec3(j.at("origin_xyz"), "joints[].origin_xyz") : Vec3::Zero();
    const Vec3 rpy = j.contains("origin_rpy") ? vec3(j.at("origin_rpy"), "joints[].origin_rpy") : Vec3::Zero();
    spec.origin.linear() = rpy_to_matrix(rpy.x(), rpy.y(), rpy.z());
    spec.origin.translation() = xyz;
    joints.push_back(spec);
  }
  Eigen::Isometry3d ee = Eigen::Isometry3d::Identity();
  if (doc.contains("ee_offset")) {
    const auto& e = doc.at("ee_offset");
    const Vec3 xyz = e.contains("xyz") ? vec3(e.at("xyz"), "ee_offset.xyz") : Vec3::Zero();
    const Vec3 rpy = e.contains("rpy") ? vec3(e.at("rpy"), "ee_offset.rpy") : Vec3::Zero();
    ee.linear() = rpy_to_matrix(rpy.x(), rpy.y(), rpy.z());
    ee.translation() = xyz;
  }
  const double mass = value_or<double>(doc, "link_mass", 1.0);
  const double inertia_scale = value_or<double>(doc, "link_inertia_scale", 1e-2);
  VecX home;
  if (doc.contains("home_q")) {
    const auto v = number_array(doc.at("home_q"), "home_q");
    home = Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  const double tool_mass = value_or<double>(doc, "tool_mass", 0.0);
  const double tool_inertia = value_or<double>(doc, "tool_inertia", 0.0);
  if (tool_mass < 0.0 || tool_inertia < 0.0) throw Error("bad_chain", "tool mass and inertia must be non-negative");
  return ChainModel::with_default_links(name, std::move(joints), ee, mass, inertia_scale, home, tool_mass,
                                        tool_inertia);
}

ChainModel load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open chain file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", path + ": " + e.what());
  }
  return chain_from_json(doc);
}

}  // namespace csf
