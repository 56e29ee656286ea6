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

#include "csf/expert.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "csf/error.hpp"
#include "csf/json_util.hpp"

namespace csf {

namespace {

Vec3 clamp_norm(const Vec3& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec3(v * (limit / n)) : v;
}

Vec3 random_unit(Rng& rng) {
  Vec3 v(normal(rng), normal(rng), normal(rng));
  return v.normalized();
}

}  // namespace

void ExpertConfig::validate() const {
  const double positive[] = {kp_lin, kp_rot, max_force, max_torque, insert_force, slide_force, slide_torque, slew_force, slew_torque,
                             align_lin, align_rot, stall_window, stall_progress};
  for (double v : positive)
    if (!(v > 0.0)) throw Error("bad_config", "expert gains, limits and thresholds must be > 0");
  const double non_negative[] = {standoff,     press_depth,   entry_depth, deadband_lin, deadband_rot,
                                 retreat_time, retreat_force, dither_time, dither_torque};
  bool ok = true;
  for (double v : non_negative) ok = ok && v >= 0.0;
  if (!ok) {
    throw Error("bad_config", "expert standoff, deadbands and retreat settings must be >= 0");
  }
}

ExpertConfig expert_config_from_json(const nlohmann::json& doc, ExpertConfig c) {
  using json_util::value_or;
  c.kp_lin = value_or(doc, "kp_lin", c.kp_lin);
  c.kp_rot = value_or(doc, "kp_rot", c.kp_rot);
  c.max_force = value_or(doc, "max_force", c.max_force);
  c.max_torque = value_or(doc, "max_torque", c.max_torque);
  c.insert_force = value_or(doc, "insert_force", c.insert_force);
  c.slide_force = value_or(doc, "slide_force", c.slide_force);
  c.slide_torque = value_or(doc, "slide_torque", c.slide_torque);
  c.entry_depth = value_or(doc, "entry_depth", c.entry_depth);
  c.slew_force = value_or(doc, "slew_force", c.slew_force);
  c.slew_torque = value_or(doc, "slew_torque", c.slew_torque);
  c.standoff = value_or(doc, "standoff", c.standoff);
  c.press_depth = value_or(doc, "press_depth", c.press_depth);
  c.align_lin = value_or(doc, "align_lin", c.align_lin);
  c.align_rot = value_or(doc, "align_rot", c.align_rot);
  c.deadband_lin = value_or(doc, "deadband_lin", c.deadband_lin);
  c.deadband_rot = value_or(doc, "deadband_rot", c.deadband_rot);
  c.stall_window = value_or(doc, "stall_window", c.stall_window);
  c.stall_progress = value_or(doc, "stall_progress", c.stall_progress);
  c.retreat_time = value_or(doc, "retreat_time", c.retreat_time);
  c.retreat_force = value_or(doc, "retreat_force", c.retreat_force);
  c.dither_time = value_or(doc, "dither_time", c.dither_time);
  c.dither_torque = value_or(doc, "dither_torque", c.dither_torque);
  c.validate();
  return c;
}

nlohmann::json to_json(const ExpertConfig& c) {
  return {{"kp_lin", c.kp_lin},           {"kp_rot", c.kp_rot},
          {"max_force", c.max_force},     {"max_torque", c.max_torque},
          {"insert_force", c.insert_force}, {"slide_force", c.slide_force},
          {"slide_torque", c.slide_torque}, {"entry_depth", c.entry_depth},   {"slew_force", c.slew_force},
          {"slew_torque", c.slew_torque}, {"standoff", c.standoff},
          {"press_depth", c.press_depth},
          {"align_lin", c.align_lin},     {"align_rot", c.align_rot},
          {"deadband_lin", c.deadband_lin}, {"deadband_rot", c.deadband_rot},
          {"stall_window", c.stall_window}, {"stall_progress", c.stall_progress},
          {"retreat_time", c.retreat_time}, {"retreat_force", c.retreat_force},
          {"dither_time", c.dither_time}, {"dither_torque", c.dither_torque}};
}

ScriptedExpert::ScriptedExpert(ExpertConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  reset();
}

void ScriptedExpert::reset() {
  last_.setZero();
  time_ = 0.0;
  best_metric_ = 0.0;
  best_time_ = 0.0;
  retreat_until_ = -1.0;
  dither_until_ = -1.0;
  next_dither_ = 0.0;
  dither_axis_.setZero();
  inserting_ = false;
  started_ = false;
  phase_ = "idle";
}

Wrench ScriptedExpert::act(const SceneConfig& scene, const BodyState& state, Rng& rng, double dt) {
  const double t = time_;
  time_ += dt;
  const Vec3& p = state.pose.position;
  const Mat3 r = state.pose.orientation.matrix();
  const Vec3& pg = scene.goal_pose.position;
  const Vec3& axis = scene.approach_axis;
  const double dist = distance_to_goal(scene, state.pose);
  const double rot = rotation_error(scene, state.pose);
  const double s = approach_coordinate(scene, state.pose);

  const double metric = dist + 0.05 * rot;
  if (!started_ || metric < best_metric_ - cfg_.stall_progress || is_success(scene, state.pose)) {
    best_metric_ = metric;
    best_time_ = t;
    started_ = true;
  }
  // Stalls are only judged in contact or while inserting.
  if (!inserting_ && collide(scene, state.pose).empty()) {
    best_metric_ = metric;
    best_time_ = t;
  }

  Vec3 force = Vec3::Zero();
  Vec3 torque = clamp_norm(cfg_.kp_rot * rotation_log(scene.goal_pose.orientation.matrix() * r.transpose()),
                           cfg_.max_torque);

  if (dist < cfg_.deadband_lin && rot < cfg_.deadband_rot) {
    phase_ = "hold";
    torque.setZero();
    best_time_ = t;
  } else {
    if (t >= retreat_until_ && t >= dither_until_ && t - best_time_ > cfg_.stall_window) {
      retreat_until_ = t + cfg_.retreat_time;
      dither_until_ = retreat_until_ + cfg_.dither_time;
      best_time_ = dither_until_;
      best_metric_ = metric;
      inserting_ = false;
    }
    if (t < retreat_until_) {
      phase_ = "retreat";
      force = axis * cfg_.retreat_force;
    } else {
      const Vec3 lateral = (p - pg) - s * axis;
      const bool inside = s < scene.entrance_distance;
      if (inserting_) {
        if (!inside && (lateral.norm() > 2.0 * cfg_.align_lin || rot > 2.0 * cfg_.align_rot)) inserting_ = false;
      } else if (inside || (lateral.norm() <= cfg_.align_lin && rot <= cfg_.align_rot)) {
        inserting_ = true;
      }
      const Vec3 target = inserting_ ? Vec3(pg - axis * cfg_.press_depth)
                                     : Vec3(pg + axis * (scene.entrance_distance + cfg_.standoff));
      const bool sliding = inserting_ && s <= scene.entrance_distance - cfg_.entry_depth;
      const double cap = !inserting_ ? cfg_.max_force : sliding ? cfg_.slide_force : cfg_.insert_force;
      force = clamp_norm(cfg_.kp_lin * (target - p), cap);
      if (sliding) torque = clamp_norm(torque, cfg_.slide_torque);
      phase_ = inserting_ ? "insert" : "align";
      if (t < dither_until_) {
        if (t >= next_dither_) {
          dither_axis_ = random_unit(rng);
          next_dither_ = t + 0.1;
        }
        torque = clamp_norm(torque + cfg_.dither_torque * dither_axis_, cfg_.max_torque);
        phase_ = "dither";
      }
    }
  }

  Vec6 cmd;
  cmd << r.transpose() * force, r.transpose() * torque;
  Vec6 delta = cmd - last_;
  delta.head<3>() = clamp_norm(delta.head<3>(), cfg_.slew_force * dt);
  delta.tail<3>() = clamp_norm(delta.tail<3>(), cfg_.slew_torque * dt);
  last_ += delta;
  return Wrench::from_vec6(last_, Frame::object);
}

Pose jammed_start(const SceneConfig& scene, Rng& rng, double lateral_range, double tilt_range) {
  const Vec3& axis = scene.approach_axis;
  const Vec3 u = axis.unitOrthogonal();
  const Vec3 v = axis.cross(u);
  const Mat3 rg = scene.goal_pose.orientation.matrix();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double rad = lateral_range * std::sqrt(uniform(rng, 0.0, 1.0));
    const double phi = uniform(rng, 0.0, 2.0 * 3.14159265358979323846);
    const Vec3 tilt_axis = random_unit(rng);
    const double tilt = uniform(rng, 0.5 * tilt_range, tilt_range);
    Pose start;
    start.position = scene.goal_pose.position + axis * (scene.entrance_distance + 0.03) +
                     rad * (std::cos(phi) * u + std::sin(phi) * v);
    start.orientation = UnitQuat::from_matrix(axis_angle(tilt_axis, tilt) * rg);
    if (!collide(scene, start).empty()) continue;

    Simulator sim(scene);
    sim.reset(start);
    const int steps = static_cast<int>(std::lround(1.0 / scene.sim_dt));
    for (int i = 0; i < steps; ++i) {
      const Mat3 r = sim.state().pose.orientation.matrix();
      const Vec3 f = clamp_norm(1000.0 * (scene.goal_pose.position - sim.state().pose.position), 20.0);
      sim.step(Wrench{r.transpose() * f, Vec3::Zero(), Frame::object});
    }
    Pose jam = sim.state().pose;
    if (distance_to_goal(scene, jam) < 0.02) continue;  // slid in: not jammed
    int backoff = 0;
    while (!collide(scene, jam).empty() && backoff < 200) {
      jam.position += axis * 2e-4;
      ++backoff;
    }
    if (!collide(scene, jam).empty()) continue;
    return jam;
  }
  throw Error("start_rejected", "no jammed start found for scene '" + scene.name + "'");
}

Demonstration run_expert_demo(const SceneConfig& scene, const Pose& start, const ExpertConfig& cfg, Rng& rng,
                              const DemoRunConfig& run) {
  const double ratio = 1.0 / (run.rate_hz * scene.sim_dt);
  const int per_record = static_cast<int>(std::lround(ratio));
  if (per_record < 1 || std::abs(ratio - per_record) > 1e-9) {
    throw Error("bad_argument", "recording period must be a whole number of simulation steps");
  }
  Simulator sim(scene);
  sim.reset(start);
  ScriptedExpert expert(cfg);
  Recorder rec(scene.name, run.rate_hz, start, "scripted");
  const double period = 1.0 / run.rate_hz;
  double success_time = -1.0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * period;
    const Wrench w = expert.act(scene, sim.state(), rng, period);
    rec.append(t, skill_input_from_state(scene.goal_pose, sim.state(), w));
    if (success_time >= 0.0 && t - success_time >= run.hold_after_success - 1e-9) break;
    if (t >= run.max_time - 1e-9) break;
    for (int i = 0; i < per_record; ++i) sim.step(w);
    if (success_time < 0.0 && sim.success()) success_time = t + period;
  }
  return rec.finalize(success_time >= 0.0 && sim.success());
}

void DemoPlan::validate() const {
  if (count < 1) throw Error("bad_config", "demo count must be >= 1");
  if (!(random_fraction >= 0.0 && random_fraction <= 1.0)) {
    throw Error("bad_config", "random_fraction must lie in [0, 1]");
  }
  if (random_lin < 0.0 || random_rot < 0.0 || jam_lateral < 0.0 || jam_tilt < 0.0) {
    throw Error("bad_config", "start ranges must be >= 0");
  }
  if (!(run.rate_hz > 0.0) || !(run.max_time > 0.0) || run.hold_after_success < 0.0) {
    throw Error("bad_config", "bad demo run settings");
  }
  if (workers < 0) throw Error("bad_config", "workers must be >= 0");
}

DemoPlan demo_plan_from_json(const nlohmann::json& doc, DemoPlan p) {
  using json_util::value_or;
  p.count = value_or(doc, "count", p.count);
  p.random_fraction = value_or(doc, "random_fraction", p.random_fraction);
  p.random_lin = value_or(doc, "random_lin", p.random_lin);
  p.random_rot = value_or(doc, "random_rot", p.random_rot);
  p.jam_lateral = value_or(doc, "jam_lateral", p.jam_lateral);
  p.jam_tilt = value_or(doc, "jam_tilt", p.jam_tilt);
  p.run.rate_hz = value_or(doc, "rate_hz", p.run.rate_hz);
  p.run.max_time = value_or(doc, "max_time", p.run.max_time);
  p.run.hold_after_success = value_or(doc, "hold_after_success", p.run.hold_after_success);
  p.workers = value_or(doc, "workers", p.workers);
  p.validate();
  return p;
}

nlohmann::json to_json(const DemoPlan& p) {
  return {{"count", p.count},           {"random_fraction", p.random_fraction},
          {"random_lin", p.random_lin}, {"random_rot", p.random_rot},
          {"jam_lateral", p.jam_lateral}, {"jam_tilt", p.jam_tilt},
          {"rate_hz", p.run.rate_hz},   {"max_time", p.run.max_time},
          {"hold_after_success", p.run.hold_after_success}, {"workers", p.workers}};
}

std::vector<Demonstration> generate_expert_demos(const SceneConfig& scene, const ExpertConfig& cfg,
                                                 const DemoPlan& plan, std::uint64_t seed) {
  plan.validate();
  cfg.validate();
  std::vector<Demonstration> demos(plan.count);
  std::vector<std::string> errors(plan.count);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < plan.count; i = next++) {
      try {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        const Pose start = uniform(rng) < plan.random_fraction
                               ? random_start(scene, rng, plan.random_lin, plan.random_rot)
                               : jammed_start(scene, rng, plan.jam_lateral, plan.jam_tilt);
        demos[i] = run_expert_demo(scene, start, cfg, rng, plan.run);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned workers = plan.workers > 0 ? static_cast<unsigned>(plan.workers) : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(plan.count));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (int i = 0; i < plan.count; ++i) {
    if (!errors[i].empty()) throw Error("demo_failed", "demonstration " + std::to_string(i) + ": " + errors[i]);
  }
  return demos;
}

}  // namespace csf
