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

#include "csf/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "csf/error.hpp"
#include "csf/json_util.hpp"
#include "csf/kinematics.hpp"

#ifndef CSF_DEFAULT_DATA_DIR
#define CSF_DEFAULT_DATA_DIR "data"
#endif

namespace csf {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

PeakDropConfig peak_drop_from_json(const nlohmann::json& doc, PeakDropConfig c) {
  using json_util::value_or;
  c.smooth = value_or(doc, "smooth", c.smooth);
  c.band = value_or(doc, "band", c.band);
  c.drop_ratio = value_or(doc, "drop_ratio", c.drop_ratio);
  c.min_peak = value_or(doc, "min_peak", c.min_peak);
  if (c.smooth < 1 || c.band < 0.0 || !(c.drop_ratio > 0.0 && c.drop_ratio < 1.0) || c.min_peak < 0.0) {
    throw Error("bad_config", "invalid peak_drop section");
  }
  return c;
}

nlohmann::json to_json(const PeakDropConfig& c) {
  return {{"smooth", c.smooth}, {"band", c.band}, {"drop_ratio", c.drop_ratio}, {"min_peak", c.min_peak}};
}

const nlohmann::json& section(const nlohmann::json& doc, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!doc.contains(key)) return empty;
  const auto& s = doc.at(key);
  if (!s.is_object()) throw Error("schema", std::string("config section '") + key + "' must be an object");
  return s;
}

}  // namespace

std::string data_dir() {
  if (const char* env = std::getenv("CSF_DATA_DIR"); env && *env) return env;
  return CSF_DEFAULT_DATA_DIR;
}

void TeleopConfig::validate() const {
  if (port < 0 || port > 65535) throw Error("bad_config", "teleop port out of range");
  if (!(gain_lin > 0.0) || !(gain_rot > 0.0)) throw Error("bad_config", "teleop gains must be > 0");
  if (!(broadcast_hz > 0.0) || !(record_hz > 0.0)) throw Error("bad_config", "teleop rates must be > 0");
}

TeleopConfig teleop_config_from_json(const nlohmann::json& doc, TeleopConfig c) {
  using json_util::value_or;
  c.bind = value_or(doc, "bind", c.bind);
  c.port = value_or(doc, "port", c.port);
  c.gain_lin = value_or(doc, "gain_lin", c.gain_lin);
  c.gain_rot = value_or(doc, "gain_rot", c.gain_rot);
  c.broadcast_hz = value_or(doc, "broadcast_hz", c.broadcast_hz);
  c.record_hz = value_or(doc, "record_hz", c.record_hz);
  c.debug_contacts = value_or(doc, "debug_contacts", c.debug_contacts);
  c.validate();
  return c;
}

nlohmann::json to_json(const TeleopConfig& c) {
  return {{"bind", c.bind},         {"port", c.port},
          {"gain_lin", c.gain_lin}, {"gain_rot", c.gain_rot},
          {"broadcast_hz", c.broadcast_hz}, {"record_hz", c.record_hz},
          {"debug_contacts", c.debug_contacts}};
}

AppConfig default_config() {
  AppConfig c;
  c.scene_path = (fs::path(data_dir()) / "scenes" / "planar_slot.json").string();
  c.scene = load_scene(c.scene_path);
  c.chain_path = (fs::path(data_dir()) / "chains" / "ur10_like.json").string();
  return c;
}

AppConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw Error("schema", "config must be a JSON object");
  static const std::set<std::string> known{"seed",  "scene",  "chain",   "controller", "training",
                                           "expert", "demos", "rollout", "offsets",    "peak_drop", "teleop"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw Error("schema", "unknown config section '" + key + "'");
  }
  try {
    AppConfig c = default_config();
    c.seed = json_util::value_or<std::uint64_t>(doc, "seed", c.seed);
    if (doc.contains("scene")) {
      const auto& s = doc.at("scene");
      if (s.is_string()) {
        c.scene_path = resolve(s.get<std::string>(), base_dir);
        c.scene = load_scene(c.scene_path);
      } else {
        c.scene_path.clear();
        c.scene = scene_from_json(s);
      }
    }
    if (doc.contains("chain")) c.chain_path = resolve(doc.at("chain").get<std::string>(), base_dir);
    if (doc.contains("controller")) c.controller = controller_config_from_json(section(doc, "controller"));
    c.training = hyperparams_from_json(section(doc, "training"), c.training);
    c.expert = expert_config_from_json(section(doc, "expert"), c.expert);
    c.demos = demo_plan_from_json(section(doc, "demos"), c.demos);
    c.rollout = rollout_config_from_json(section(doc, "rollout"), c.rollout);
    c.offsets = offset_config_from_json(section(doc, "offsets"), c.offsets);
    c.peak_drop = peak_drop_from_json(section(doc, "peak_drop"), c.peak_drop);
    c.teleop = teleop_config_from_json(section(doc, "teleop"), c.teleop);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", std::string("config: ") + e.what());
  }
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open config " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", path + ": " + e.what());
  }
  try {
    return config_from_json(doc, fs::path(path).parent_path().string());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.message());
  }
}

nlohmann::json to_json(const AppConfig& c) {
  nlohmann::json doc;
  doc["seed"] = c.seed;
  doc["scene"] = c.scene_path.empty() ? to_json(c.scene) : nlohmann::json(c.scene_path);
  doc["chain"] = c.chain_path;
  doc["controller"] = to_json(c.controller);
  doc["training"] = to_json(c.training);
  doc["expert"] = to_json(c.expert);
  doc["demos"] = to_json(c.demos);
  doc["rollout"] = to_json(c.rollout);
  doc["offsets"] = to_json(c.offsets);
  doc["peak_drop"] = to_json(c.peak_drop);
  doc["teleop"] = to_json(c.teleop);
  return doc;
}

ChainModel load_config_chain(const AppConfig& c) {
  if (c.chain_path.empty()) throw Error("bad_config", "no chain configured");
  return load_chain(c.chain_path);
}

}  // namespace csf
