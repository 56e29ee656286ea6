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

#include "csf/spatial.hpp"

#include <cmath>
#include <limits>

#include "csf/error.hpp"

namespace csf {

std::string to_string(Frame frame) {
  switch (frame) {
    case Frame::base: return "b";
    case Frame::ee: return "e";
    case Frame::target: return "t";
    case Frame::world: return "world";
    case Frame::object: return "object";
  }
  return "?";
}

Frame frame_from_string(const std::string& name) {
  if (name == "b") return Frame::base;
  if (name == "e") return Frame::ee;
  if (name == "t") return Frame::target;
  if (name == "world") return Frame::world;
  if (name == "object") return Frame::object;
  throw Error("bad_frame", "unknown frame label '" + name + "'");
}

Mat3 UnitQuat::matrix() const {
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

UnitQuat UnitQuat::from_matrix(const Mat3& rotation) {
  const Eigen::Quaterniond q(rotation);
  return canonicalize_quat(q.x(), q.y(), q.z(), q.w());
}

UnitQuat canonicalize_quat(double x, double y, double z, double w) {
  const double n = std::sqrt(x * x + y * y + z * z + w * w);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error("zero_quaternion", "cannot normalize a zero or non-finite quaternion");
  }
  // Already-unit input is left untouched so canonicalization is idempotent.
  const double scale = std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() ? 1.0 : n;
  UnitQuat q{x / scale, y / scale, z / scale, w / scale};
  bool flip = q.w < 0.0;
  if (q.w == 0.0) {
    for (double c : {q.x, q.y, q.z}) {
      if (c != 0.0) {
        flip = c < 0.0;
        break;
      }
    }
  }
  if (flip) {
    q.x = -q.x;
    q.y = -q.y;
    q.z = -q.z;
    q.w = -q.w;
  }
  // -0.0 would otherwise leak into files and break byte-level comparisons.
  for (double* c : {&q.x, &q.y, &q.z, &q.w}) {
    if (*c == 0.0) *c = 0.0;
  }
  return q;
}

std::array<double, 7> Pose::to_array() const {
  return {position.x(), position.y(), position.z(),
          orientation.x, orientation.y, orientation.z, orientation.w};
}

Pose Pose::from_array(const std::array<double, 7>& v) {
  Pose p;
  p.position = Vec3(v[0], v[1], v[2]);
  p.orientation = canonicalize_quat(v[3], v[4], v[5], v[6]);
  return p;
}

Transform Transform::identity(Frame parent, Frame child) {
  Transform t;
  t.parent = parent;
  t.child = child;
  return t;
}

Transform Transform::from_pose(const Pose& pose, Frame parent, Frame child) {
  Transform t;
  t.rotation = pose.orientation.matrix();
  t.translation = pose.position;
  t.parent = parent;
  t.child = child;
  return t;
}

Pose Transform::to_pose() const {
  Pose p;
  p.position = translation;
  p.orientation = UnitQuat::from_matrix(rotation);
  return p;
}

Vec6 Twist::to_vec6() const {
  Vec6 v;
  v << linear, angular;
  return v;
}

Twist Twist::from_vec6(const Vec6& v, Frame frame) {
  return Twist{v.head<3>(), v.tail<3>(), frame};
}

Vec6 Wrench::to_vec6() const {
  Vec6 v;
  v << force, torque;
  return v;
}

Wrench Wrench::from_vec6(const Vec6& v, Frame frame) {
  return Wrench{v.head<3>(), v.tail<3>(), frame};
}

Mat3 orthonormalize(const Mat3& rotation) {
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) = -u.col(2);
    r = u * svd.matrixV().transpose();
  }
  return r;
}

Transform compose(const Transform& a, const Transform& b) {
  if (a.child != b.parent) {
    throw Error("frame_mismatch", "cannot compose ^" + to_string(a.parent) + "T_" +
                                      to_string(a.child) + " with ^" + to_string(b.parent) +
                                      "T_" + to_string(b.child));
  }
  Transform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  out.parent = a.parent;
  out.child = b.child;
  if ((out.rotation.transpose() * out.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    out.rotation = orthonormalize(out.rotation);
  }
  return out;
}

Transform invert(const Transform& t) {
  Transform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  out.parent = t.child;
  out.child = t.parent;
  return out;
}

RelativeTarget relative_target(const Transform& base_to_ee, const Transform& base_to_target) {
  RelativeTarget r;
  r.ee_to_target = compose(invert(base_to_ee), base_to_target);
  r.features = r.ee_to_target.to_pose().to_array();
  return r;
}

Twist rotate_twist_to_ee(const Mat3& ee_from_base, const Twist& base_twist) {
  if (base_twist.frame != Frame::base) {
    throw Error("frame_mismatch", "expected a base-frame twist, got " + to_string(base_twist.frame));
  }
  return Twist{ee_from_base * base_twist.linear, ee_from_base * base_twist.angular, Frame::ee};
}

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

Mat3 rpy_to_matrix(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Vec3 rotation_log(const Mat3& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.axis() * aa.angle();
}

Mat3 rotation_exp(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, v / angle).toRotationMatrix();
}

double rotation_angle(const Mat3& rotation) {
  return Eigen::AngleAxisd(rotation).angle();
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace csf
