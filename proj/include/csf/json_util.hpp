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
#include "csf/error.hpp"
#include "csf/spatial.hpp"

namespace csf::json_util {

using nlohmann::json;

inline const json& require(const json& doc, const std::string& key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error("schema", "missing field '" + key + "'");
  }
  return doc.at(key);
}

inline double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw Error("schema", "field '" + what + "' must be a number");
  return v.get<double>();
}

template <std::size_t N>
std::array<double, N> fixed_array(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != N) {
    throw Error("schema", "field '" + what + "' must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = number(v[i], what);
  return out;
}

inline std::vector<double> number_array(const json& v, const std::string& what) {
  if (!v.is_array()) throw Error("schema", "field '" + what + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

inline Vec3 vec3(const json& v, const std::string& what) {
  const auto a = fixed_array<3>(v, what);
  return Vec3(a[0], a[1], a[2]);
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Pose pose(const json& v, const std::string& what) {
  return Pose::from_array(fixed_array<7>(v, what));
}

inline json to_json(const Pose& p) {
  const auto a = p.to_array();
  return json(std::vector<double>(a.begin(), a.end()));
}

template <typename T>
T value_or(const json& doc, const std::string& key, T fallback) {
  if (!doc.is_object() || !doc.contains(key)) return fallback;
  return doc.at(key).get<T>();
}

}  // namespace csf::json_util
