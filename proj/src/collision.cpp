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

#include "csf/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace csf {

namespace {

double projected_radius(const OrientedBox& box, const Vec3& axis) {
  return box.half_extents.x() * std::abs(box.rotation.col(0).dot(axis)) +
         box.half_extents.y() * std::abs(box.rotation.col(1).dot(axis)) +
         box.half_extents.z() * std::abs(box.rotation.col(2).dot(axis));
}

struct AxisResult {
  double overlap = std::numeric_limits<double>::infinity();
  Vec3 axis = Vec3::Zero();  // unit, oriented from fixed toward moving
  int kind = -1;             // 0..2 fixed face, 3..5 moving face, 6..14 edge pair
};

// Returns false as soon as a separating axis is found.
bool find_min_axis(const OrientedBox& moving, const OrientedBox& fixed, double margin, AxisResult& best) {
  const Vec3 d = moving.center - fixed.center;
  auto test = [&](Vec3 axis, int kind, double bias) {
    const double len = axis.norm();
    if (len < 1e-9) return true;
    axis /= len;
    const double dist = d.dot(axis);
    const double overlap = projected_radius(moving, axis) + projected_radius(fixed, axis) + margin - std::abs(dist);
    if (overlap < 0.0) return false;
    // Face axes win ties so resting face contacts get full manifolds.
    if (overlap * bias < best.overlap) {
      best.overlap = overlap * bias;
      best.axis = dist >= 0.0 ? axis : Vec3(-axis);
      best.kind = kind;
    }
    return true;
  };
  for (int i = 0; i < 3; ++i) {
    if (!test(fixed.rotation.col(i), i, 1.0)) return false;
  }
  for (int i = 0; i < 3; ++i) {
    if (!test(moving.rotation.col(i), 3 + i, 1.0 + 1e-9)) return false;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (!test(moving.rotation.col(i).cross(fixed.rotation.col(j)), 6 + 3 * i + j, 1.05)) return false;
    }
  }
  return true;
}

using Polygon = std::vector<Vec3>;

// Face of `box` whose outward normal is most aligned with `direction`.
Polygon support_face(const OrientedBox& box, const Vec3& direction, Vec3* face_normal, double* face_offset,
                     int* face_axis) {
  int axis = 0;
  double best = -1.0;
  for (int i = 0; i < 3; ++i) {
    const double a = std::abs(box.rotation.col(i).dot(direction));
    if (a > best) {
      best = a;
      axis = i;
    }
  }
  const double sign = box.rotation.col(axis).dot(direction) >= 0.0 ? 1.0 : -1.0;
  const Vec3 n = sign * box.rotation.col(axis);
  const int u = (axis + 1) % 3;
  const int v = (axis + 2) % 3;
  const Vec3 c = box.center + n * box.half_extents[axis];
  const Vec3 eu = box.rotation.col(u) * box.half_extents[u];
  const Vec3 ev = box.rotation.col(v) * box.half_extents[v];
  if (face_normal != nullptr) *face_normal = n;
  if (face_offset != nullptr) *face_offset = n.dot(c);
  if (face_axis != nullptr) *face_axis = axis;
  return {c + eu + ev, c - eu + ev, c - eu - ev, c + eu - ev};
}

// Sutherland-Hodgman against the half space n·x <= offset.
Polygon clip(const Polygon& poly, const Vec3& n, double offset) {
  Polygon out;
  if (poly.empty()) return out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % poly.size()];
    const double da = n.dot(a) - offset;
    const double db = n.dot(b) - offset;
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      out.push_back(a + (b - a) * (da / (da - db)));
    }
  }
  return out;
}

std::vector<ContactPoint> reduce_manifold(std::vector<ContactPoint> points) {
  if (points.size() <= 4) return points;
  std::vector<ContactPoint> kept;
  auto take = [&](std::size_t index) {
    kept.push_back(points[index]);
    points.erase(points.begin() + static_cast<std::ptrdiff_t>(index));
  };
  std::size_t deepest = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].depth > points[deepest].depth) deepest = i;
  }
  take(deepest);
  std::size_t far = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if ((points[i].point - kept[0].point).squaredNorm() > (points[far].point - kept[0].point).squaredNorm()) far = i;
  }
  take(far);
  const Vec3 n = kept[0].normal;
  auto signed_area = [&](const Vec3& p) { return n.dot((kept[1].point - kept[0].point).cross(p - kept[0].point)); };
  std::size_t third = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (std::abs(signed_area(points[i].point)) > std::abs(signed_area(points[third].point))) third = i;
  }
  const double side = signed_area(points[third].point);
  take(third);
  std::size_t fourth = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    // Prefer the point on the opposite side of the first edge.
    const double score = -std::copysign(1.0, side) * signed_area(points[i].point);
    if (score > best) {
      best = score;
      fourth = i;
    }
  }
  take(fourth);
  return kept;
}

std::vector<ContactPoint> face_contacts(const OrientedBox& reference, const OrientedBox& incident,
                                        const Vec3& reference_normal, const Vec3& contact_normal, int pair) {
  Vec3 ref_n;
  double ref_offset = 0.0;
  int ref_axis = 0;
  (void)support_face(reference, reference_normal, &ref_n, &ref_offset, &ref_axis);
  Polygon poly = support_face(incident, -reference_normal, nullptr, nullptr, nullptr);
  for (int k = 1; k <= 2; ++k) {
    const int side = (ref_axis + k) % 3;
    const Vec3 axis = reference.rotation.col(side);
    const double c = axis.dot(reference.center);
    const double h = reference.half_extents[side];
    poly = clip(poly, axis, c + h);
    poly = clip(poly, -axis, -c + h);
  }
  std::vector<ContactPoint> out;
  for (const Vec3& p : poly) {
    const double depth = ref_offset - ref_n.dot(p);
    if (depth >= 0.0) out.push_back(ContactPoint{p, contact_normal, depth, pair});
  }
  return reduce_manifold(std::move(out));
}

// Closest points between two segments given as center + half-length * direction.
void closest_on_lines(const Vec3& p1, const Vec3& d1, const Vec3& p2, const Vec3& d2, Vec3& c1, Vec3& c2) {
  const Vec3 r = p1 - p2;
  const double a = d1.dot(d1);
  const double e = d2.dot(d2);
  const double b = d1.dot(d2);
  const double c = d1.dot(r);
  const double f = d2.dot(r);
  const double denom = a * e - b * b;
  double s = denom > 1e-14 ? (b * f - c * e) / denom : 0.0;
  double t = (b * s + f) / e;
  s = std::clamp(s, -1.0, 1.0);
  t = std::clamp(t, -1.0, 1.0);
  c1 = p1 + d1 * s;
  c2 = p2 + d2 * t;
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b, double margin) {
  AxisResult best;
  return find_min_axis(a, b, margin, best);
}

std::vector<ContactPoint> collide_boxes(const OrientedBox& moving, const OrientedBox& fixed, int pair) {
  AxisResult best;
  if (!find_min_axis(moving, fixed, 0.0, best)) return {};
  const Vec3 n = best.axis;  // fixed -> moving

  std::vector<ContactPoint> out;
  if (best.kind < 3) {
    out = face_contacts(fixed, moving, n, n, pair);
  } else if (best.kind < 6) {
    out = face_contacts(moving, fixed, -n, n, pair);
  } else {
    const int i = (best.kind - 6) / 3;
    const int j = (best.kind - 6) % 3;
    // Edge of the moving box nearest the fixed box, and vice versa.
    Vec3 pm = moving.center;
    Vec3 pf = fixed.center;
    for (int k = 0; k < 3; ++k) {
      if (k != i) {
        const Vec3 ax = moving.rotation.col(k);
        pm += ax * (ax.dot(-n) >= 0.0 ? 1.0 : -1.0) * moving.half_extents[k];
      }
      if (k != j) {
        const Vec3 ax = fixed.rotation.col(k);
        pf += ax * (ax.dot(n) >= 0.0 ? 1.0 : -1.0) * fixed.half_extents[k];
      }
    }
    Vec3 cm, cf;
    closest_on_lines(pm, moving.rotation.col(i) * moving.half_extents[i], pf,
                     fixed.rotation.col(j) * fixed.half_extents[j], cm, cf);
    out.push_back(ContactPoint{0.5 * (cm + cf), n, best.overlap / 1.05, pair});
  }
  std::sort(out.begin(), out.end(), [](const ContactPoint& a, const ContactPoint& b) {
    return std::lexicographical_compare(a.point.data(), a.point.data() + 3, b.point.data(), b.point.data() + 3);
  });
  return out;
}

}  // namespace csf
