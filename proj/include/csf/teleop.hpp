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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "csf/config.hpp"
#include "csf/contact_sim.hpp"
#include "csf/demo.hpp"

namespace csf {

inline constexpr int kTeleopProtocolVersion = 1;

// Linear device map: deflections clamped to [-1, 1], forces and torques in
// the object frame.
Wrench map_device(const Vec6& deflection, double gain_lin, double gain_rot);

struct TeleopReply {
  std::vector<nlohmann::json> frames;  // to the sender
  std::string close_reason;            // non-empty: close the sender's connection
};

// Simulation, steering and recording state of the gateway, free of any
// networking so it can be stepped directly.
class TeleopSession {
 public:
  TeleopSession(SceneConfig scene, TeleopConfig cfg, std::string out_dir, std::uint64_t seed);

  int connect();
  void disconnect(int client);
  TeleopReply handle(int client, const std::string& text);

  // One simulation step. Commands are latched at recording-period
  // boundaries so every record holds the wrench applied until the next one.
  void step();
  void advance(long steps);

  nlohmann::json state_frame() const;

  const Simulator& sim() const { return sim_; }
  double time() const { return static_cast<double>(steps_) * scene_.sim_dt; }
  bool recording() const { return recording_; }
  std::size_t buffered_records() const { return recorder_ ? recorder_->size() : 0; }
  int steerer() const { return steerer_; }
  const Wrench& applied_wrench() const { return applied_; }

 private:
  TeleopReply on_wrench(const nlohmann::json& msg);
  TeleopReply on_reset(const nlohmann::json& msg);
  TeleopReply on_record(const nlohmann::json& msg);
  void reset_to(const Pose& pose);

  SceneConfig scene_;
  TeleopConfig cfg_;
  std::string out_dir_;
  Rng rng_;
  Simulator sim_;
  int per_record_ = 10;
  long steps_ = 0;
  int next_client_ = 1;
  int steerer_ = 0;
  Wrench pending_{Vec3::Zero(), Vec3::Zero(), Frame::object};
  Wrench applied_{Vec3::Zero(), Vec3::Zero(), Frame::object};
  bool recording_ = false;
  long recorded_ = 0;
  std::optional<Recorder> recorder_;
};

// WebSocket front end on `/teleop`. Everything runs on one I/O thread: a
// real-time timer steps the session, a second timer broadcasts state frames,
// and each connection keeps only the newest unsent frame.
class TeleopServer {
 public:
  TeleopServer(SceneConfig scene, TeleopConfig cfg, std::string out_dir, std::uint64_t seed);
  ~TeleopServer();

  // Binds the listening socket; port 0 picks an ephemeral port.
  unsigned short bind();
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace csf
