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

#include <vector>

#include "csf/spatial.hpp"

namespace csf {

// Oriented box in world coordinates.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 half_extents = Vec3::Constant(0.5);
};

struct ContactPoint {
  Vec3 point = Vec3::Zero();   // world coordinates, inside the overlap region
  Vec3 normal = Vec3::UnitZ(); // unit, pointing from the fixed box into the moving box
  double depth = 0.0;          // >= 0
  int pair = 0;                // index of the fixed box
};

// Separating-axis test between a moving box and a fixed box. Returns at most
// four manifold points; empty when the boxes are separated.
std::vector<ContactPoint> collide_boxes(const OrientedBox& moving, const OrientedBox& fixed, int pair = 0);

// Overlap test only (no manifold), with an optional inflation margin.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b, double margin = 0.0);

}  // namespace csf
