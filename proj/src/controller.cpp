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

#include "csf/controller.hpp"

#include <cmath>

#include "csf/error.hpp"
#include "csf/json_util.hpp"

namespace csf {

namespace {

void require_frame(const Wrench& w, Frame expected, const char* what) {
  if (w.frame != expected) {
    throw Error("frame_mismatch", std::string(what) + " must be expressed in frame " + to_string(expected) +
                                      ", got " + to_string(w.frame));
  }
}

Vec6 vec6_field(const nlohmann::json& doc, const std::string& key, const Vec6& fallback) {
  if (!doc.contains(key)) return fallback;
  const auto a = json_util::fixed_array<6>(doc.at(key), key);
  return Eigen::Map<const Vec6>(a.data());
}

}  // namespace

void ControllerConfig::validate() const {
  if (!(dt > 0.0)) throw Error("bad_config", "controller dt must be positive");
  if ((kp.array() < 0.0).any() || (kd.array() < 0.0).any()) {
    throw Error("bad_config", "controller gains must be non-negative");
  }
  if (!(velocity_decay >= 0.0 && velocity_decay <= 1.0)) {
    throw Error("bad_config", "velocity_decay must lie in [0, 1]");
  }
  if (!(max_joint_step > 0.0)) throw Error("bad_config", "max_joint_step must be positive");
  if (force_scale < 0.0 || torque_scale < 0.0) throw Error("bad_config", "wrench scales must be non-negative");
  if (!(derivative_filter >= 0.0 && derivative_filter < 1.0)) {
    throw Error("bad_config", "derivative_filter must lie in [0, 1)");
  }
}

ControllerConfig controller_config_from_json(const nlohmann::json& doc) {
  using json_util::value_or;
  ControllerConfig cfg;
  cfg.kp = vec6_field(doc, "kp", cfg.kp);
  cfg.kd = vec6_field(doc, "kd", cfg.kd);
  cfg.dt = value_or(doc, "dt", cfg.dt);
  cfg.velocity_decay = value_or(doc, "velocity_decay", cfg.velocity_decay);
  cfg.force_scale = value_or(doc, "force_scale", cfg.force_scale);
  cfg.torque_scale = value_or(doc, "torque_scale", cfg.torque_scale);
  cfg.max_joint_step = value_or(doc, "max_joint_step", cfg.max_joint_step);
  cfg.derivative_filter = value_or(doc, "derivative_filter", cfg.derivative_filter);
  cfg.degraded_condition = value_or(doc, "degraded_condition", cfg.degraded_condition);
  cfg.degraded_clamp_time = value_or(doc, "degraded_clamp_time", cfg.degraded_clamp_time);
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const ControllerConfig& cfg) {
  auto arr = [](const Vec6& v) { return std::vector<double>(v.data(), v.data() + 6); };
  return {{"kp", arr(cfg.kp)},
          {"kd", arr(cfg.kd)},
          {"dt", cfg.dt},
          {"velocity_decay", cfg.velocity_decay},
          {"force_scale", cfg.force_scale},
          {"torque_scale", cfg.torque_scale},
          {"max_joint_step", cfg.max_joint_step},
          {"derivative_filter", cfg.derivative_filter},
          {"degraded_condition", cfg.degraded_condition},
          {"degraded_clamp_time", cfg.degraded_clamp_time}};
}

ControllerState ControllerState::at_rest(const VecX& q) {
  ControllerState s;
  s.q = q;
  s.qd_virtual = VecX::Zero(q.size());
  return s;
}

Wrench pd_regulate(const Wrench& f_d, const Wrench& f_s, ControllerState& state, const ControllerConfig& cfg) {
  require_frame(f_d, Frame::ee, "f_d");
  require_frame(f_s, Frame::ee, "f_s");
  const Vec6 e = f_d.to_vec6() - f_s.to_vec6();
  if (!e.allFinite()) throw Error("non_finite", "non-finite wrench reached the force regulator");
  const Vec6 raw_rate = (e - state.prev_error) / cfg.dt;
  state.error_rate = cfg.derivative_filter * state.error_rate + (1.0 - cfg.derivative_filter) * raw_rate;
  state.prev_error = e;
  const Vec6 f_c = cfg.kp.cwiseProduct(e) + cfg.kd.cwiseProduct(state.error_rate);
  return Wrench::from_vec6(f_c, Frame::ee);
}

TwinStepResult twin_step(const ChainModel& chain, ControllerState& state, const Wrench& f_c,
                         const ControllerConfig& cfg) {
  require_frame(f_c, Frame::ee, "f_c");
  const int n = chain.dof();
  if (state.q.size() != n || state.qd_virtual.size() != n) {
    throw Error("dimension_mismatch", "controller state does not match chain '" + chain.name() + "'");
  }

  const Transform base_to_ee = forward_kinematics(chain, state.q);
  Vec6 f_base;
  f_base << base_to_ee.rotation * f_c.force, base_to_ee.rotation * f_c.torque;

  const Jacobian j = geometric_jacobian(chain, state.q);
  const MatX h = unit_mass_matrix(chain, state.q);
  const Eigen::LLT<MatX> llt(h);
  if (llt.info() != Eigen::Success) throw Error("numerical", "twin inertia factorization failed");

  TwinStepResult r;
  r.qdd = llt.solve(j.transpose() * f_base);
  const Eigen::SelfAdjointEigenSolver<MatX> eig(h, Eigen::EigenvaluesOnly);
  r.condition = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();

  state.qd_virtual = cfg.velocity_decay * (state.qd_virtual + r.qdd * cfg.dt);
  VecX step = state.qd_virtual * cfg.dt;
  for (int i = 0; i < n; ++i) {
    if (std::abs(step[i]) > cfg.max_joint_step) {
      step[i] = std::copysign(cfg.max_joint_step, step[i]);
      // Keep the stored velocity consistent with the motion actually commanded.
      state.qd_virtual[i] = step[i] / cfg.dt;
      r.clamped = true;
    }
  }
  r.q_d = state.q + step;
  state.q = r.q_d;

  state.clamp_time = r.clamped ? state.clamp_time + cfg.dt : 0.0;
  state.degraded = r.condition > cfg.degraded_condition || state.clamp_time > cfg.degraded_clamp_time;
  return r;
}

SkillInput compute_skill_input(const ChainModel& chain, const VecX& q, const VecX& qd,
                               const Transform& base_to_target, const Wrench& f_d_prev) {
  require_frame(f_d_prev, Frame::ee, "f_d_prev");
  const Transform base_to_ee = forward_kinematics(chain, q);
  SkillInput s;
  s.pose = relative_target(base_to_ee, base_to_target).features;
  const Vec6 v = geometric_jacobian(chain, q) * qd;
  const Twist base_twist = Twist::from_vec6(v, Frame::base);
  s.twist = rotate_twist_to_ee(base_to_ee.rotation.transpose(), base_twist).to_vec6();
  s.wrench = f_d_prev.to_vec6();
  return s;
}

void tare_sensor(const Wrench& raw, ControllerState& state) {
  state.sensor_bias = raw;
}

Wrench apply_bias(const Wrench& raw, const ControllerState& state) {
  return Wrench{raw.force - state.sensor_bias.force, raw.torque - state.sensor_bias.torque, raw.frame};
}

Wrench scale_wrench(const Wrench& w, const ControllerConfig& cfg) {
  if (cfg.force_scale < 0.0 || cfg.torque_scale < 0.0) {
    throw Error("bad_config", "wrench scales must be non-negative");
  }
  return Wrench{w.force * cfg.force_scale, w.torque * cfg.torque_scale, w.frame};
}

VirtualTwinController::VirtualTwinController(const ChainModel& chain, ControllerConfig cfg, const VecX& q0)
    : chain_(&chain), cfg_(std::move(cfg)), state_(ControllerState::at_rest(q0)) {
  cfg_.validate();
  if (q0.size() != chain.dof()) throw Error("dimension_mismatch", "initial configuration size");
}

VirtualTwinController::Cycle VirtualTwinController::cycle(const Wrench& f_d, const Wrench& raw_sensor) {
  Cycle c;
  c.f_s = apply_bias(raw_sensor, state_);
  c.f_c = pd_regulate(f_d, c.f_s, state_, cfg_);
  c.step = twin_step(*chain_, state_, c.f_c, cfg_);
  return c;
}

}  // namespace csf
