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

#include <cstdint>
#include <string>

#include "json.hpp"
#include "csf/contact_sim.hpp"
#include "csf/controller.hpp"
#include "csf/eval.hpp"
#include "csf/expert.hpp"
#include "csf/skill_model.hpp"

namespace csf {

struct TeleopConfig {
  std::string bind = "127.0.0.1";
  int port = 8732;
  double gain_lin = 30.0;      // N at full deflection
  double gain_rot = 6.0;       // N m at full deflection
  double broadcast_hz = 30.0;
  double record_hz = 100.0;
  bool debug_contacts = false;  // contact points in state frames, never while recording

  void validate() const;
};

TeleopConfig teleop_config_from_json(const nlohmann::json& doc, TeleopConfig base = {});
nlohmann::json to_json(const TeleopConfig& cfg);

// Every module section of the main configuration file. File paths inside the
// file are resolved against the directory that holds it.
struct AppConfig {
  std::uint64_t seed = 0;
  std::string scene_path;
  SceneConfig scene;
  std::string chain_path;
  ControllerConfig controller;
  Hyperparams training;
  ExpertConfig expert;
  DemoPlan demos;
  RolloutConfig rollout;
  OffsetConfig offsets;
  PeakDropConfig peak_drop;
  TeleopConfig teleop;
};

// Defaults with the bundled planar scene and the UR10-like chain.
AppConfig default_config();
AppConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir);
AppConfig load_config(const std::string& path);
nlohmann::json to_json(const AppConfig& cfg);

ChainModel load_config_chain(const AppConfig& cfg);

// Directory of the bundled data files (scenes, chains, config).
std::string data_dir();

}  // namespace csf
