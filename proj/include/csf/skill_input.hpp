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

#include "csf/spatial.hpp"

namespace csf {

inline constexpr int kSkillInputDim = 19;
inline constexpr int kWrenchDim = 6;

// Seed tuple [relative target pose (7) | twist (6) | last wrench setpoint (6)],
// everything expressed in the moving object / end-effector frame.
struct SkillInput {
  std::array<double, 7> pose{0, 0, 0, 0, 0, 0, 1};
  Vec6 twist = Vec6::Zero();
  Vec6 wrench = Vec6::Zero();

  std::array<double, kSkillInputDim> to_array() const {
    std::array<double, kSkillInputDim> out{};
    for (int i = 0; i < 7; ++i) out[i] = pose[i];
    for (int i = 0; i < 6; ++i) out[7 + i] = twist[i];
    for (int i = 0; i < 6; ++i) out[13 + i] = wrench[i];
    return out;
  }

  static SkillInput from_array(const std::array<double, kSkillInputDim>& v) {
    SkillInput s;
    for (int i = 0; i < 7; ++i) s.pose[i] = v[i];
    for (int i = 0; i < 6; ++i) s.twist[i] = v[7 + i];
    for (int i = 0; i < 6; ++i) s.wrench[i] = v[13 + i];
    return s;
  }
};

}  // namespace csf
