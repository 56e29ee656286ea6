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

#include "csf/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace csf::log {

namespace {

Level parse_level(const char* text) {
  if (text == nullptr) return Level::warn;
  const std::string s(text);
  if (s == "error") return Level::error;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return Level::warn;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level threshold() {
  static const Level level = parse_level(std::getenv("CSF_LOG"));
  return level;
}

void write(Level level, std::string_view message) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[csf " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace csf::log
