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

#include "csf/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "csf/demo.hpp"
#include "csf/error.hpp"
#include "csf/expert.hpp"
#include "csf/json_util.hpp"

namespace csf {

namespace {

int whole_steps(double period, double dt, const char* what) {
  const double ratio = period / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    throw Error("bad_config", std::string(what) + " is not a whole number of simulation steps");
  }
  return static_cast<int>(n);
}

RolloutStep make_step(double t, const SceneConfig& scene, const Pose& pose, const Wrench& w) {
  RolloutStep s;
  s.t = t;
  s.distance = distance_to_goal(scene, pose);
  s.rotation_error = rotation_error(scene, pose);
  s.approach = approach_coordinate(scene, pose);
  s.force = w.force.norm();
  s.torque = w.torque.norm();
  s.wrench = w.to_vec6();
  s.pose = pose.to_array();
  return s;
}

void finish(RolloutLog& log, const SceneConfig& scene, const Pose& pose, double t, Outcome outcome) {
  log.outcome = outcome;
  log.final_distance = distance_to_goal(scene, pose);
  log.final_rotation = rotation_error(scene, pose);
  log.duration = t;
}

// Progress tracker for the stuck criterion.
struct Progress {
  double best;
  double best_t = 0.0;
  bool stuck(double distance, double t, const RolloutConfig& cfg) {
    if (distance < best - cfg.stuck_progress) {
      best = distance;
      best_t = t;
    }
    return t - best_t >= cfg.stuck_window - 1e-9;
  }
};

Vec3 random_unit(Rng& rng) { return Vec3(normal(rng), normal(rng), normal(rng)).normalized(); }

}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::success:
      return "success";
    case Outcome::stuck:
      return "stuck";
    case Outcome::timeout:
      return "timeout";
  }
  return "timeout";
}

void RolloutConfig::validate() const {
  if (!(serve_rate_hz > 0.0)) throw Error("bad_config", "serve_rate_hz must be > 0");
  if (execute_steps < 1) throw Error("bad_config", "execute_steps must be >= 1");
  if (!(window_time > 0.0)) throw Error("bad_config", "window_time must be > 0");
  if (setpoints < 1) throw Error("bad_config", "setpoints must be >= 1");
  if (!(stuck_window > 0.0) || stuck_progress < 0.0) throw Error("bad_config", "bad stuck criterion");
  if (!(timeout > 0.0)) throw Error("bad_config", "timeout must be > 0");
}

RolloutConfig rollout_config_from_json(const nlohmann::json& doc, RolloutConfig c) {
  using json_util::value_or;
  c.serve_rate_hz = value_or(doc, "serve_rate_hz", c.serve_rate_hz);
  c.execute_steps = value_or(doc, "execute_steps", c.execute_steps);
  c.window_time = value_or(doc, "window_time", c.window_time);
  c.setpoints = value_or(doc, "setpoints", c.setpoints);
  c.stuck_window = value_or(doc, "stuck_window", c.stuck_window);
  c.stuck_progress = value_or(doc, "stuck_progress", c.stuck_progress);
  c.timeout = value_or(doc, "timeout", c.timeout);
  c.validate();
  return c;
}

nlohmann::json to_json(const RolloutConfig& c) {
  return {{"serve_rate_hz", c.serve_rate_hz}, {"execute_steps", c.execute_steps}, {"window_time", c.window_time},
          {"setpoints", c.setpoints},         {"stuck_window", c.stuck_window},   {"stuck_progress", c.stuck_progress},
          {"timeout", c.timeout}};
}

nlohmann::json to_json(const RolloutLog& log) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : log.steps) {
    steps.push_back({{"t", s.t},
                     {"distance", s.distance},
                     {"rotation_error", s.rotation_error},
                     {"approach", s.approach},
                     {"abs_force", s.force},
                     {"abs_torque", s.torque},
                     {"wrench", std::vector<double>(s.wrench.data(), s.wrench.data() + 6)},
                     {"pose", s.pose}});
  }
  return {{"outcome", to_string(log.outcome)},
          {"final_distance", log.final_distance},
          {"final_rotation", log.final_rotation},
          {"duration", log.duration},
          {"inferences", log.inferences},
          {"setpoints", log.setpoints},
          {"cycles", log.cycles},
          {"degraded", log.degraded},
          {"config", log.config},
          {"steps", steps}};
}

StartKind start_kind_from_string(const std::string& s) {
  if (s == "jammed") return StartKind::jammed;
  if (s == "random") return StartKind::random;
  throw Error("bad_config", "start kind must be jammed or random, got '" + s + "'");
}

std::vector<Pose> seeded_starts(const SceneConfig& scene, const DemoPlan& plan, StartKind kind, int count,
                                std::uint64_t seed) {
  if (count < 0) throw Error("bad_config", "start count must be non-negative");
  const std::uint64_t stream = mix_seed(seed, 0x65766173u);
  std::vector<Pose> starts;
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(stream, static_cast<std::uint64_t>(i)));
    starts.push_back(kind == StartKind::jammed ? jammed_start(scene, rng, plan.jam_lateral, plan.jam_tilt)
                                               : random_start(scene, rng, plan.random_lin, plan.random_rot));
  }
  return starts;
}

Outcome outcome_from_string(const std::string& s) {
  if (s == "success") return Outcome::success;
  if (s == "stuck") return Outcome::stuck;
  if (s == "timeout") return Outcome::timeout;
  throw Error("schema", "unknown outcome '" + s + "'");
}

RolloutLog rollout_log_from_json(const nlohmann::json& doc) {
  try {
    RolloutLog log;
    log.outcome = outcome_from_string(doc.at("outcome").get<std::string>());
    log.final_distance = doc.at("final_distance").get<double>();
    log.final_rotation = doc.at("final_rotation").get<double>();
    log.duration = doc.at("duration").get<double>();
    log.inferences = doc.at("inferences").get<long>();
    log.setpoints = doc.at("setpoints").get<long>();
    log.cycles = doc.at("cycles").get<long>();
    log.degraded = doc.at("degraded").get<bool>();
    log.config = doc.at("config");
    for (const auto& j : doc.at("steps")) {
      RolloutStep s;
      s.t = j.at("t").get<double>();
      s.distance = j.at("distance").get<double>();
      s.rotation_error = j.at("rotation_error").get<double>();
      s.approach = j.at("approach").get<double>();
      s.force = j.at("abs_force").get<double>();
      s.torque = j.at("abs_torque").get<double>();
      const auto w = j.at("wrench").get<std::vector<double>>();
      if (w.size() != 6) throw Error("schema", "wrench needs 6 values");
      s.wrench = Eigen::Map<const Vec6>(w.data());
      s.pose = j.at("pose").get<std::array<double, 7>>();
      log.steps.push_back(s);
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", std::string("rollout log: ") + e.what());
  }
}

RolloutLog rollout_object(const LstmModel& model, const SceneConfig& scene, const Pose& start,
                          const RolloutConfig& cfg) {
  return rollout_object(model, scene, start, cfg, scene.goal_pose);
}

RolloutLog rollout_object(const LstmModel& model, const SceneConfig& scene, const Pose& start,
                          const RolloutConfig& cfg, const Pose& goal_estimate) {
  cfg.validate();
  const int per_serve = whole_steps(1.0 / cfg.serve_rate_hz, scene.sim_dt, "serving interval");
  const double period = per_serve * scene.sim_dt;
  Simulator sim(scene);
  sim.reset(start);
  RolloutLog log;
  log.config = {{"mode", "object"}, {"scene", scene.name}, {"rollout", to_json(cfg)}};
  Wrench last{Vec3::Zero(), Vec3::Zero(), Frame::object};
  long tick = 0;
  Progress progress{distance_to_goal(scene, start)};
  if (sim.success()) {
    log.steps.push_back(make_step(0.0, scene, sim.state().pose, last));
    finish(log, scene, sim.state().pose, 0.0, Outcome::success);
    return log;
  }
  for (;;) {
    const SkillInput seed = skill_input_from_state(goal_estimate, sim.state(), last);
    const std::vector<Wrench> preds = predict_sequence(model, seed, cfg.execute_steps);
    ++log.inferences;
    for (const Wrench& p : preds) {
      const Wrench w{p.force, p.torque, Frame::object};
      log.steps.push_back(make_step(static_cast<double>(tick) * period, scene, sim.state().pose, w));
      for (int i = 0; i < per_serve; ++i) sim.step(w);
      ++tick;
      ++log.setpoints;
      last = w;
      const double t = static_cast<double>(tick) * period;
      const Pose& pose = sim.state().pose;
      if (sim.success()) {
        finish(log, scene, pose, t, Outcome::success);
        return log;
      }
      if (progress.stuck(distance_to_goal(scene, pose), t, cfg)) {
        finish(log, scene, pose, t, Outcome::stuck);
        return log;
      }
      if (t >= cfg.timeout - 1e-9) {
        finish(log, scene, pose, t, Outcome::timeout);
        return log;
      }
    }
  }
}

Transform robot_base_in_world(const ChainModel& chain, const SceneConfig& scene) {
  const Transform home = forward_kinematics(chain, chain.home());
  const Transform goal = Transform::from_pose(scene.goal_pose, Frame::world, Frame::ee);
  Transform out = Transform::identity(Frame::world, Frame::base);
  out.rotation = goal.rotation * home.rotation.transpose();
  out.translation = goal.translation - out.rotation * home.translation;
  return out;
}

std::vector<int> window_cycle_plan(long window_index, const RolloutConfig& rcfg, const ControllerConfig& ccfg) {
  const double per_window = rcfg.window_time / ccfg.dt;
  const long begin = static_cast<long>(std::floor(static_cast<double>(window_index) * per_window + 1e-9));
  const long end = static_cast<long>(std::floor(static_cast<double>(window_index + 1) * per_window + 1e-9));
  const int total = static_cast<int>(end - begin);
  const int each = static_cast<int>(std::floor(per_window / rcfg.setpoints + 1e-9));
  std::vector<int> plan(rcfg.setpoints, each);
  plan.back() = total - each * (rcfg.setpoints - 1);
  if (plan.back() < 0) throw Error("bad_config", "window too short for the setpoint count");
  return plan;
}

RolloutLog rollout_robot(const LstmModel& model, const ChainModel& chain, const ControllerConfig& ctrl,
                         const SceneConfig& scene, const Pose& start, const RolloutConfig& cfg) {
  return rollout_robot(model, chain, ctrl, scene, start, cfg, scene.goal_pose);
}

RolloutLog rollout_robot(const LstmModel& model, const ChainModel& chain, const ControllerConfig& ctrl,
                         const SceneConfig& scene, const Pose& start, const RolloutConfig& cfg,
                         const Pose& goal_estimate) {
  cfg.validate();
  ctrl.validate();
  const Transform world_to_base = robot_base_in_world(chain, scene);
  const Transform base_to_world = invert(world_to_base);
  const Transform base_to_start = compose(base_to_world, Transform::from_pose(start, Frame::world, Frame::ee));
  double residual = 0.0;
  const VecX q0 = solve_ik(chain, base_to_start, chain.home(), &residual);
  if (residual > 1e-6) throw Error("ik_failed", "start pose is not reachable by chain '" + chain.name() + "'");
  const Transform base_to_target =
      compose(base_to_world, Transform::from_pose(goal_estimate, Frame::world, Frame::target));

  VirtualTwinController controller(chain, ctrl, q0);
  auto object_state = [&]() {
    const ControllerState& st = controller.state();
    const Transform base_to_ee = forward_kinematics(chain, st.q);
    BodyState body;
    body.pose = compose(world_to_base, base_to_ee).to_pose();
    const Vec6 v = geometric_jacobian(chain, st.q) * st.qd_virtual;
    const Mat3 rt = base_to_ee.rotation.transpose();
    body.twist = Twist{rt * v.head<3>(), rt * v.tail<3>(), Frame::object};
    return body;
  };
  auto sensor = [&](const BodyState& body) {
    return coupled_sensor_wrench(collide(scene, body.pose), body, scene);
  };
  controller.tare(sensor(object_state()));

  RolloutLog log;
  log.config = {{"mode", "robot"},
                {"scene", scene.name},
                {"chain", chain.name()},
                {"rollout", to_json(cfg)},
                {"controller", to_json(ctrl)}};
  Wrench last_prediction{Vec3::Zero(), Vec3::Zero(), Frame::ee};
  Progress progress{distance_to_goal(scene, start)};
  {
    const BodyState body = object_state();
    if (is_success(scene, body.pose)) {
      log.steps.push_back(make_step(0.0, scene, body.pose, last_prediction));
      finish(log, scene, body.pose, 0.0, Outcome::success);
      return log;
    }
  }
  for (long window = 0;; ++window) {
    const ControllerState& st = controller.state();
    const SkillInput seed = compute_skill_input(chain, st.q, st.qd_virtual, base_to_target, last_prediction);
    const std::vector<Wrench> preds = predict_sequence(model, seed, cfg.setpoints);
    ++log.inferences;
    const std::vector<int> plan = window_cycle_plan(window, cfg, ctrl);
    for (int j = 0; j < cfg.setpoints; ++j) {
      const Wrench f_d = scale_wrench(preds[j], ctrl);
      const double t0 = static_cast<double>(log.cycles) * ctrl.dt;
      log.steps.push_back(make_step(t0, scene, object_state().pose, f_d));
      ++log.setpoints;
      for (int c = 0; c < plan[j]; ++c) {
        controller.cycle(f_d, sensor(object_state()));
        ++log.cycles;
        log.degraded = log.degraded || controller.state().degraded;
      }
      last_prediction = preds[j];
      const double t = static_cast<double>(log.cycles) * ctrl.dt;
      const Pose pose = object_state().pose;
      if (is_success(scene, pose)) {
        finish(log, scene, pose, t, Outcome::success);
        return log;
      }
      if (progress.stuck(distance_to_goal(scene, pose), t, cfg)) {
        finish(log, scene, pose, t, Outcome::stuck);
        return log;
      }
      if (t >= cfg.timeout - 1e-9) {
        finish(log, scene, pose, t, Outcome::timeout);
        return log;
      }
    }
  }
}

bool peak_then_drop(const RolloutLog& log, double entrance_distance, const PeakDropConfig& cfg) {
  const std::size_t n = log.steps.size();
  if (n < 3) return false;
  std::vector<double> smooth(n);
  const int w = std::max(1, cfg.smooth);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(w) ? i + 1 - w : 0;
    double sum = 0.0;
    for (std::size_t k = lo; k <= i; ++k) sum += log.steps[k].force;
    smooth[i] = sum / static_cast<double>(i - lo + 1);
  }
  std::size_t peak = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (log.steps[i].approach < entrance_distance - cfg.band) break;
    if (peak == n || smooth[i] > smooth[peak]) peak = i;
  }
  if (peak == n || smooth[peak] < cfg.min_peak || !(log.steps.front().force < smooth[peak])) return false;
  for (std::size_t i = peak + 1; i < n; ++i) {
    if (log.steps[i].approach < entrance_distance - cfg.band && smooth[i] <= cfg.drop_ratio * smooth[peak]) {
      return true;
    }
  }
  return false;
}

void OffsetConfig::validate() const {
  if (margin_lin < 0.0 || margin_rot < 0.0) throw Error("bad_config", "offset margins must be >= 0");
  if (trials < 1) throw Error("bad_config", "trials must be >= 1");
  if (start_lateral < 0.0 || start_tilt < 0.0) throw Error("bad_config", "start ranges must be >= 0");
  if (!(near_miss_factor > 1.0)) throw Error("bad_config", "near_miss_factor must be > 1");
  if (!(histogram_bin > 0.0)) throw Error("bad_config", "histogram_bin must be > 0");
  if (workers < 0) throw Error("bad_config", "workers must be >= 0");
}

OffsetConfig offset_config_from_json(const nlohmann::json& doc, OffsetConfig c) {
  using json_util::value_or;
  c.margin_lin = value_or(doc, "margin_lin", c.margin_lin);
  c.margin_rot = value_or(doc, "margin_rot", c.margin_rot);
  c.trials = value_or(doc, "trials", c.trials);
  c.start_lateral = value_or(doc, "start_lateral", c.start_lateral);
  c.start_tilt = value_or(doc, "start_tilt", c.start_tilt);
  c.near_miss_factor = value_or(doc, "near_miss_factor", c.near_miss_factor);
  c.histogram_bin = value_or(doc, "histogram_bin", c.histogram_bin);
  c.workers = value_or(doc, "workers", c.workers);
  c.validate();
  return c;
}

nlohmann::json to_json(const OffsetConfig& c) {
  return {{"margin_lin", c.margin_lin},       {"margin_rot", c.margin_rot},
          {"trials", c.trials},               {"start_lateral", c.start_lateral},
          {"start_tilt", c.start_tilt},         {"near_miss_factor", c.near_miss_factor},
          {"histogram_bin", c.histogram_bin}, {"workers", c.workers}};
}

nlohmann::json to_json(const OffsetTrial& trial) {
  return {{"id", trial.id},
          {"lin_offset", trial.lin_offset},
          {"rot_offset", trial.rot_offset},
          {"seed", trial.seed},
          {"final_distance", trial.final_distance},
          {"class", trial.outcome_class},
          {"log", to_json(trial.log)}};
}

OffsetTrial offset_trial_from_json(const nlohmann::json& doc) {
  try {
    OffsetTrial t;
    t.id = doc.at("id").get<int>();
    t.lin_offset = doc.at("lin_offset").get<double>();
    t.rot_offset = doc.at("rot_offset").get<double>();
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.final_distance = doc.at("final_distance").get<double>();
    t.outcome_class = doc.at("class").get<std::string>();
    t.log = rollout_log_from_json(doc.at("log"));
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", std::string("offset trial: ") + e.what());
  }
}

std::string classify_distance(double final_distance, double clearance, double near_miss_factor) {
  if (final_distance < clearance) return "success";
  if (final_distance < near_miss_factor * clearance) return "near_miss";
  return "fail";
}

std::vector<OffsetTrial> eval_offsets(const LstmModel& model, const ChainModel* chain, const ControllerConfig& ctrl,
                                      const SceneConfig& scene, const OffsetConfig& ocfg, const RolloutConfig& rcfg,
                                      std::uint64_t seed) {
  ocfg.validate();
  std::vector<OffsetTrial> trials(ocfg.trials);
  std::vector<std::string> errors(ocfg.trials);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < ocfg.trials; i = next++) {
      try {
        OffsetTrial& tr = trials[i];
        tr.id = i;
        tr.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        Rng rng(tr.seed);
        const Pose start = jammed_start(scene, rng, ocfg.start_lateral, ocfg.start_tilt);
        tr.lin_offset = uniform(rng, 0.0, ocfg.margin_lin);
        tr.rot_offset = uniform(rng, 0.0, ocfg.margin_rot);
        const Vec3 dir = random_unit(rng);
        const Vec3 axis = random_unit(rng);
        Pose estimate;
        estimate.position = scene.goal_pose.position + dir * tr.lin_offset;
        estimate.orientation =
            UnitQuat::from_matrix(axis_angle(axis, tr.rot_offset) * scene.goal_pose.orientation.matrix());
        tr.log = chain ? rollout_robot(model, *chain, ctrl, scene, start, rcfg, estimate)
                       : rollout_object(model, scene, start, rcfg, estimate);
        tr.final_distance = tr.log.final_distance;
        tr.outcome_class = classify_distance(tr.final_distance, scene.clearance_lin, ocfg.near_miss_factor);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned workers = ocfg.workers > 0 ? static_cast<unsigned>(ocfg.workers) : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(ocfg.trials));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (int i = 0; i < ocfg.trials; ++i) {
    if (!errors[i].empty()) throw Error("trial_failed", "offset trial " + std::to_string(i) + ": " + errors[i]);
  }
  return trials;
}

std::vector<HistogramRow> cumulative_histogram(const std::vector<double>& final_distances, double bin) {
  if (!(bin > 0.0)) throw Error("bad_argument", "histogram bin must be > 0");
  std::vector<HistogramRow> rows;
  if (final_distances.empty()) return rows;
  const double max_d = *std::max_element(final_distances.begin(), final_distances.end());
  const long bins = static_cast<long>(std::floor(max_d / bin)) + 1;
  std::vector<int> counts(bins, 0);
  for (double d : final_distances) counts[std::min(bins - 1, static_cast<long>(std::floor(d / bin)))] += 1;
  rows.resize(bins);
  int running = 0;
  for (long b = bins - 1; b >= 0; --b) {
    running += counts[b];
    rows[b] = HistogramRow{static_cast<double>(b) * bin, running};
  }
  return rows;
}

}  // namespace csf
