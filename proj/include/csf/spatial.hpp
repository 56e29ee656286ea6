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
#include <Eigen/Geometry>
#include <array>
#include <string>

namespace csf {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// b: robot base, e: end-effector / grasped object, t: assembly target.
enum class Frame { base, ee, target, world, object };

std::string to_string(Frame frame);
Frame frame_from_string(const std::string& name);

// Quaternion in (x, y, z, w) order, the order used in every file format.
struct UnitQuat {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;

  Mat3 matrix() const;
  static UnitQuat from_matrix(const Mat3& rotation);
};

// Normalizes and fixes the double-cover sign: w >= 0, and when w == 0 the
// first nonzero of (x, y, z) is made positive. Throws on a zero quaternion.
UnitQuat canonicalize_quat(double x, double y, double z, double w);

struct Pose {
  Vec3 position = Vec3::Zero();
  UnitQuat orientation;

  std::array<double, 7> to_array() const;
  static Pose from_array(const std::array<double, 7>& values);
};

// Rigid transform ^parent T_child: maps coordinates expressed in `child`
// into coordinates expressed in `parent`.
struct Transform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Frame parent = Frame::world;
  Frame child = Frame::world;

  static Transform identity(Frame parent, Frame child);
  static Transform from_pose(const Pose& pose, Frame parent, Frame child);
  Pose to_pose() const;
  Vec3 apply(const Vec3& point) const { return rotation * point + translation; }
};

struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
  Frame frame = Frame::world;

  Vec6 to_vec6() const;
  static Twist from_vec6(const Vec6& v, Frame frame);
};

struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  Frame frame = Frame::world;

  Vec6 to_vec6() const;
  static Wrench from_vec6(const Vec6& v, Frame frame);
};

// a ∘ b. Requires a.child == b.parent; result is ^{a.parent}T_{b.child}.
Transform compose(const Transform& a, const Transform& b);
Transform invert(const Transform& t);

struct RelativeTarget {
  Transform ee_to_target;          // ^eT_t
  std::array<double, 7> features;  // [x y z qx qy qz qw], canonical sign
};

// ^eT_t = (^bT_e)^-1 ^bT_t and its pose features.
RelativeTarget relative_target(const Transform& base_to_ee, const Transform& base_to_target);

// Applies blockdiag(^eR_b, ^eR_b) to a base-frame twist.
Twist rotate_twist_to_ee(const Mat3& ee_from_base, const Twist& base_twist);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);
// Fixed-axis roll, pitch, yaw: R = Rz(yaw) Ry(pitch) Rx(roll).
Mat3 rpy_to_matrix(double roll, double pitch, double yaw);
Mat3 axis_angle(const Vec3& axis, double angle);
// Rotation vector (axis * angle) of R, angle in [0, pi].
Vec3 rotation_log(const Mat3& rotation);
Mat3 rotation_exp(const Vec3& rotation_vector);
double rotation_angle(const Mat3& rotation);
Mat3 skew(const Vec3& v);
// Projects a nearly-orthonormal matrix back onto SO(3).
Mat3 orthonormalize(const Mat3& rotation);

}  // namespace csf
