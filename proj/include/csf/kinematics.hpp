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

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"
#include "csf/spatial.hpp"

namespace csf {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

enum class JointKind { revolute, prismatic };

struct JointSpec {
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();  // from previous link frame
  Vec3 axis = Vec3::UnitZ();                                 // unit, in the joint frame
  JointKind kind = JointKind::revolute;
};

// Virtual-twin parameters of the link moved by a joint, in that link's frame.
struct LinkParams {
  double mass = 1.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = 1e-2 * Mat3::Identity();  // about the center of mass
};

// Serial chain: per-joint fixed offset + axis, followed by a fixed
// end-effector offset. Immutable once built.
class ChainModel {
 public:
  ChainModel(std::string name, std::vector<JointSpec> joints, Eigen::Isometry3d ee_offset,
             std::vector<LinkParams> links, VecX home);

  // Fills link parameters with unit masses, centers of mass at link
  // midpoints and inertia_scale * I. A nonzero tool_mass adds a virtual body
  // at the end-effector point (inertia tool_inertia * I) to the last link,
  // which evens out the twin's Cartesian mobility.
  static ChainModel with_default_links(std::string name, std::vector<JointSpec> joints,
                                       Eigen::Isometry3d ee_offset, double link_mass = 1.0,
                                       double inertia_scale = 1e-2, VecX home = VecX(),
                                       double tool_mass = 0.0, double tool_inertia = 0.0);

  const std::string& name() const { return name_; }
  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const std::vector<LinkParams>& links() const { return links_; }
  const Eigen::Isometry3d& ee_offset() const { return ee_offset_; }
  // A well-conditioned reference configuration used to place tasks.
  const VecX& home() const { return home_; }

 private:
  std::string name_;
  std::vector<JointSpec> joints_;
  Eigen::Isometry3d ee_offset_;
  std::vector<LinkParams> links_;
  VecX home_;
};

struct JointState {
  VecX q;
  VecX qd;
};

// Per-joint world quantities at a configuration.
struct ChainFrames {
  std::vector<Eigen::Isometry3d> link;  // link frame i (after joint i moved)
  std::vector<Vec3> axis;               // joint axis in base coordinates
  std::vector<Vec3> origin;             // joint origin in base coordinates
  Eigen::Isometry3d ee = Eigen::Isometry3d::Identity();
};

ChainFrames chain_frames(const ChainModel& chain, const VecX& q);

// ^bT_e = g(q).
Transform forward_kinematics(const ChainModel& chain, const VecX& q);

// Base-frame geometric Jacobian at the end-effector point, rows [v; w].
Jacobian geometric_jacobian(const ChainModel& chain, const VecX& q);

// Joint-space inertia of the virtual twin by the composite-rigid-body
// algorithm. Throws Error("numerical") if the result is not positive definite.
MatX unit_mass_matrix(const ChainModel& chain, const VecX& q);

// Damped least-squares IK to a base-frame pose; returns the final joint
// vector and writes the residual (position + rotation norm) if requested.
VecX solve_ik(const ChainModel& chain, const Transform& base_to_ee, const VecX& q_init,
              double* residual = nullptr, int max_iterations = 500);

ChainModel chain_from_json(const nlohmann::json& doc);
ChainModel load_chain(const std::string& path);

}  // namespace csf
