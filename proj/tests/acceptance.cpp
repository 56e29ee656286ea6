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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csf/config.hpp"
#include "csf/contact_sim.hpp"
#include "csf/controller.hpp"
#include "csf/demo.hpp"
#include "csf/error.hpp"
#include "csf/eval.hpp"
#include "csf/expert.hpp"
#include "csf/kinematics.hpp"
#include "csf/skill_model.hpp"
#include "csf/teleop.hpp"

using namespace csf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<std::string> kChains = {"ur10_like", "spherical_wrist6", "planar2"};
const std::vector<std::string> kRobotChains = {"ur10_like", "spherical_wrist6"};

ChainModel bundled_chain(const std::string& name) { return load_chain(data_dir() + "/chains/" + name + ".json"); }

VecX random_q(Rng& rng, int n) {
  VecX q(n);
  for (int i = 0; i < n; ++i) q[i] = uniform(rng, -std::numbers::pi, std::numbers::pi);
  return q;
}

// Condition bounds used to call a configuration nonsingular: the whole
// Jacobian and its translational rows over the reachable directions.
bool nonsingular(const ChainModel& chain, const VecX& q) {
  const Jacobian j = geometric_jacobian(chain, q);
  const Eigen::JacobiSVD<MatX> full(j);
  const VecX s = full.singularValues();
  if (s(s.size() - 1) <= 0.0 || s(0) / s(s.size() - 1) > 50.0) return false;
  const Eigen::JacobiSVD<MatX> lin(j.topRows(3));
  const VecX sl = lin.singularValues();
  const int r = std::min(3, chain.dof());
  return sl(r - 1) > 0.0 && sl(0) / sl(r - 1) <= 10.0;
}

// Per-link oracle for the joint-space inertia: sum of Jk^T M_k Jk.
MatX inertia_oracle(const ChainModel& chain, const VecX& q) {
  const ChainFrames f = chain_frames(chain, q);
  const int n = chain.dof();
  MatX h = MatX::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const LinkParams& link = chain.links()[k];
    const Vec3 com = f.link[k] * link.com;
    Jacobian jk = Jacobian::Zero(6, n);
    for (int i = 0; i <= k; ++i) {
      if (chain.joints()[i].kind == JointKind::revolute) {
        jk.block<3, 1>(0, i) = f.axis[i].cross(com - f.origin[i]);
        jk.block<3, 1>(3, i) = f.axis[i];
      } else {
        jk.block<3, 1>(0, i) = f.axis[i];
      }
    }
    const Mat3 r = f.link[k].linear();
    Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
    m.topLeftCorner<3, 3>() = link.mass * Mat3::Identity();
    m.bottomRightCorner<3, 3>() = r * link.inertia * r.transpose();
    h += jk.transpose() * m * jk;
  }
  return h;
}

Sample random_window(Rng& rng, int n) {
  Sample s;
  for (int i = 0; i < kSkillInputDim; ++i) s.seed[i] = normal(rng);
  s.labels.resize(kWrenchDim, n);
  for (int k = 0; k < n; ++k)
    for (int d = 0; d < kWrenchDim; ++d) s.labels(d, k) = normal(rng);
  return s;
}

double worst_gradient_error(const LstmModel& model, const std::vector<const Sample*>& batch,
                            const DropoutMasks& masks) {
  LstmParams grads;
  bptt_gradients(model, batch, masks, grads);
  LstmModel probe = model;
  std::vector<Eigen::Ref<MatX>> blocks;
  std::vector<MatX> analytic;
  probe.params.for_each([&](Eigen::Ref<MatX> m) { blocks.push_back(m); });
  grads.for_each([&](Eigen::Ref<MatX> m) { analytic.emplace_back(m); });
  const double h = 1e-5;
  double worst = 0.0;
  LstmParams scratch;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (long i = 0; i < blocks[b].size(); ++i) {
      double& x = blocks[b].data()[i];
      const double orig = x;
      x = orig + h;
      const double lp = bptt_gradients(probe, batch, masks, scratch);
      x = orig - h;
      const double lm = bptt_gradients(probe, batch, masks, scratch);
      x = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double g = analytic[b].data()[i];
      worst = std::max(worst, std::abs(fd - g) / std::max(1e-6, std::abs(fd) + std::abs(g)));
    }
  }
  return worst;
}

struct Shared {
  AppConfig cfg;
  fs::path out;
  std::vector<Demonstration> demos;
  std::optional<LstmModel> model;
  std::vector<Pose> jammed;
  double pipeline_seconds = 0.0;
};

std::vector<Demonstration> usable(std::vector<Demonstration> all) {
  std::vector<Demonstration> keep;
  for (auto& d : all)
    if (d.meta.success && d.meta.valid) keep.push_back(std::move(d));
  return keep;
}

// P1
Verdict gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int configs = 0;
  for (int hidden : {2, 4, 8}) {
    for (int n : {1, 3, 5}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(hidden * 16 + n)));
        Hyperparams h;
        h.hidden = hidden;
        h.horizon = n;
        h.batch = 3;
        LstmModel m = init_model(h, rng);
        m.params.for_each([&](Eigen::Ref<MatX> p) {
          for (long i = 0; i < p.size(); ++i) p.data()[i] = 0.5 * normal(rng);
        });
        const Sample a = random_window(rng, n), b = random_window(rng, n), c = random_window(rng, n);
        const DropoutMasks masks = draw_dropout_masks(hidden, n, 3, 0.2, rng);
        worst = std::max(worst, worst_gradient_error(m, {&a, &b, &c}, masks));
        worst = std::max(worst, worst_gradient_error(m, {&a}, {}));
        ++configs;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 60.0, "worst relative error " + fmt("%.2e", worst) + " over " + std::to_string(configs) +
                                         " configs, " + fmt("%.1f", t) + " s"};
}

// P2
Verdict kinematics() {
  const auto t0 = Clock::now();
  Rng rng(2);
  double jac = 0.0, crb = 0.0, asym = 0.0, min_eig = 1e300;
  const double h = 1e-6;
  for (const auto& name : kChains) {
    const ChainModel chain = bundled_chain(name);
    for (int trial = 0; trial < 100; ++trial) {
      const VecX q = random_q(rng, chain.dof());
      const Jacobian j = geometric_jacobian(chain, q);
      Jacobian fd(6, chain.dof());
      for (int i = 0; i < chain.dof(); ++i) {
        VecX dq = VecX::Zero(chain.dof());
        dq[i] = h;
        const Transform plus = forward_kinematics(chain, q + dq);
        const Transform minus = forward_kinematics(chain, q - dq);
        fd.block<3, 1>(0, i) = (plus.translation - minus.translation) / (2 * h);
        fd.block<3, 1>(3, i) = rotation_log(plus.rotation * minus.rotation.transpose()) / (2 * h);
      }
      jac = std::max(jac, (j - fd).norm() / j.norm());
      const MatX hq = unit_mass_matrix(chain, q);
      const MatX oracle = inertia_oracle(chain, q);
      crb = std::max(crb, (hq - oracle).norm() / oracle.norm());
      asym = std::max(asym, (hq - hq.transpose()).cwiseAbs().maxCoeff() / hq.cwiseAbs().maxCoeff());
      const Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (hq + hq.transpose()));
      min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
    }
  }
  const double t = seconds_since(t0);
  const bool pass = jac < 1e-6 && crb < 1e-10 && asym < 1e-12 && min_eig > 0.0 && t < 30.0;
  return {pass, "jacobian rel err " + fmt("%.2e", jac) + ", inertia vs oracle " + fmt("%.2e", crb) + ", asymmetry " +
                    fmt("%.1e", asym) + ", min eigenvalue " + fmt("%.3e", min_eig) + ", 3 chains x 100 q, " +
                    fmt("%.2f", t) + " s"};
}

// P3
Verdict damping_law(const Shared& s) {
  const SceneConfig& scene = s.cfg.scene;
  Rng rng(3);
  double worst = 0.0;
  double still = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    BodyState st;
    const Vec3 axis = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
    st.pose.position = scene.goal_pose.position + scene.approach_axis * uniform(rng, 0.5, 1.5);
    st.pose.orientation = UnitQuat::from_matrix(axis_angle(axis, uniform(rng, -std::numbers::pi, std::numbers::pi)));
    if (!collide(scene, st.pose).empty()) continue;
    ++checked;
    Vec6 f;
    for (int i = 0; i < 6; ++i) f[i] = uniform(rng, -20.0, 20.0);
    const SimStepResult r = sim_step(scene, st, Wrench{f.head<3>(), f.tail<3>(), Frame::object}, scene.sim_dt);
    const Vec6 v = r.state.twist.to_vec6();
    for (int i = 0; i < 3; ++i) {
      worst = std::max(worst, std::abs(v[i] - f[i] / scene.d_lin));
      worst = std::max(worst, std::abs(v[i + 3] - f[i + 3] / scene.d_rot));
    }
    const SimStepResult z = sim_step(scene, st, Wrench{Vec3::Zero(), Vec3::Zero(), Frame::object}, scene.sim_dt);
    still = std::max({still, z.state.twist.to_vec6().cwiseAbs().maxCoeff(),
                      (z.state.pose.position - st.pose.position).norm()});
  }
  return {checked > 0 && worst <= 1e-12 && still == 0.0,
          "max |v - f/d| " + fmt("%.1e", worst) + ", zero input motion " + fmt("%.1e", still) + " over " +
              std::to_string(checked) + " free poses"};
}

// P4
Verdict wall_press(const Shared& s) {
  bool pass = true;
  std::ostringstream detail;
  for (const auto& name : kRobotChains) {
    const ChainModel chain = bundled_chain(name);
    const ControllerConfig cfg = s.cfg.controller;
    const double stiffness = s.cfg.scene.k_pen;
    const VecX q0 = chain.home();
    const Transform ee0 = forward_kinematics(chain, q0);
    const Vec3 n = ee0.rotation.col(2);
    const Vec3 wall = ee0.translation;
    VirtualTwinController ctl(chain, cfg, q0);
    const Wrench target{ee0.rotation.transpose() * (10.0 * n), Vec3::Zero(), Frame::ee};
    Wrench raw{Vec3::Zero(), Vec3::Zero(), Frame::ee};
    ctl.tare(raw);
    double settled = -1.0;
    double early_lo = 1e300, early_hi = 0.0, late_lo = 1e300, late_hi = 0.0;
    const int cycles = static_cast<int>(std::lround(10.0 / cfg.dt));
    for (int k = 0; k < cycles; ++k) {
      const auto c = ctl.cycle(target, raw);
      const Transform ee = forward_kinematics(chain, c.step.q_d);
      const double depth = std::max(0.0, n.dot(ee.translation - wall));
      raw = Wrench{ee.rotation.transpose() * (stiffness * depth * n), Vec3::Zero(), Frame::ee};
      const double err = (raw.force - target.force).norm();
      const double t = (k + 1) * cfg.dt;
      if (err < 0.2) {
        if (settled < 0.0) settled = t;
      } else {
        settled = -1.0;
      }
      if (t > 2.0 && t <= 4.0) {
        early_lo = std::min(early_lo, err);
        early_hi = std::max(early_hi, err);
      }
      if (t > 8.0) {
        late_lo = std::min(late_lo, err);
        late_hi = std::max(late_hi, err);
      }
    }
    const double early_swing = early_hi - early_lo, late_swing = late_hi - late_lo;
    const bool ok = settled >= 0.0 && settled <= 2.0 && late_hi < 0.2 && late_swing <= early_swing + 1e-3;
    pass = pass && ok;
    detail << name << ": within 0.2 N from " << fmt("%.3f", settled) << " s, error in last 2 s " << fmt("%.4f", late_hi)
           << " N, swing " << fmt("%.1e", early_swing) << " -> " << fmt("%.1e", late_swing) << "; ";
  }
  return {pass, detail.str() + "wall stiffness " + fmt("%.0f", s.cfg.scene.k_pen) + " N/m, 125 Hz"};
}

// P5
Verdict admittance(const Shared& s) {
  bool pass = true;
  std::ostringstream detail;
  const ControllerConfig cfg = s.cfg.controller;
  for (const auto& name : kChains) {
    const ChainModel chain = bundled_chain(name);
    Rng rng(5);
    int good = 0, tried = 0;
    double worst = 1.0;
    while (tried < 50) {
      const VecX q = random_q(rng, chain.dof());
      if (!nonsingular(chain, q)) continue;
      ++tried;
      const Transform ee = forward_kinematics(chain, q);
      Vec3 f(normal(rng), normal(rng), normal(rng));
      if (chain.dof() < 3) f -= f.dot(geometric_jacobian(chain, q).col(0).tail<3>()) *
                                geometric_jacobian(chain, q).col(0).tail<3>();
      f = 5.0 * f.normalized();
      VirtualTwinController ctl(chain, cfg, q);
      const Wrench none{Vec3::Zero(), Vec3::Zero(), Frame::ee};
      Vec3 prev = ee.translation;
      Vec3 v = Vec3::Zero();
      Transform now = ee;
      const int cycles = static_cast<int>(std::lround(0.2 / cfg.dt));
      for (int k = 0; k < cycles; ++k) {
        const auto c = ctl.cycle(Wrench{now.rotation.transpose() * f, Vec3::Zero(), Frame::ee}, none);
        now = forward_kinematics(chain, c.step.q_d);
        v = (now.translation - prev) / cfg.dt;
        prev = now.translation;
      }
      const double cosine = v.dot(f) / (v.norm() * f.norm());
      worst = std::min(worst, cosine);
      good += cosine > 0.9 ? 1 : 0;
    }
    pass = pass && good == tried;
    detail << name << " " << good << "/" << tried << " (worst cosine " << fmt("%.3f", worst) << "); ";
  }
  return {pass, detail.str() + "force held in world coordinates, velocity at 0.2 s"};
}

// P6
Verdict overfit() {
  Hyperparams h;
  h.hidden = 8;
  h.horizon = 5;
  h.batch = 1;
  h.dropout = 0.0;
  h.steps = 5000;
  h.learning_rate = 1e-2;
  h.grad_clip = 0.0;
  Rng data(6);
  const Sample window = random_window(data, h.horizon);
  const WindowSampler sampler = [&](Rng&) { return window; };
  Rng rng(60);
  int first = -1;
  const TrainResult r = train(sampler, NormStats{}, h, rng, [&](int k, double loss) {
    if (first < 0 && loss < 1e-3) first = k;
  });
  return {first >= 0, "loss below 1e-3 at step " + std::to_string(first) + ", final " +
                          fmt("%.2e", r.loss_curve.back()) + " (H=8, N=5)"};
}

// Demonstrations, training and the jammed start set shared by P7-P9.
void build_pipeline(Shared& s) {
  if (s.model) return;
  const auto t0 = Clock::now();
  const fs::path dir = s.out / "demos";
  fs::remove_all(dir);
  write_dataset(dir.string(), generate_expert_demos(s.cfg.scene, s.cfg.expert, s.cfg.demos, s.cfg.seed));
  s.demos = usable(load_dataset(dir.string()));
  if (s.demos.empty()) throw Error("empty_dataset", "no successful demonstrations");
  Rng rng = training_rng(s.cfg.seed);
  const TrainResult r =
      train(make_window_sampler(s.demos, s.cfg.training.horizon), norm_stats(s.demos), s.cfg.training, rng);
  save_model(r.model, (s.out / "model.json").string());
  s.model = r.model;
  s.jammed = seeded_starts(s.cfg.scene, s.cfg.demos, StartKind::jammed, 20, s.cfg.seed);
  s.pipeline_seconds = seconds_since(t0);
}

// P7
Verdict end_to_end(Shared& s) {
  build_pipeline(s);
  const auto t0 = Clock::now();
  int ok = 0, peaks = 0;
  std::vector<RolloutLog> logs;
  for (const Pose& start : s.jammed) {
    RolloutLog log = rollout_object(*s.model, s.cfg.scene, start, s.cfg.rollout);
    ok += log.outcome == Outcome::success ? 1 : 0;
    peaks += peak_then_drop(log, s.cfg.scene.entrance_distance, s.cfg.peak_drop) ? 1 : 0;
    logs.push_back(std::move(log));
  }
  report_emit(build_report(logs, {}, s.cfg.offsets.histogram_bin), (s.out / "rollouts").string(), true);
  const double total = s.pipeline_seconds + seconds_since(t0);
  const int n = static_cast<int>(s.jammed.size());
  const bool pass = ok >= 16 && peaks >= 15 && total < 1800.0;
  return {pass, std::to_string(s.demos.size()) + " demos, success " + std::to_string(ok) + "/" + std::to_string(n) +
                    ", peak-then-drop " + std::to_string(peaks) + "/" + std::to_string(n) + ", " +
                    fmt("%.0f", total) + " s (H=" + std::to_string(s.cfg.training.hidden) +
                    ", N=" + std::to_string(s.cfg.training.horizon) +
                    ", batch=" + std::to_string(s.cfg.training.batch) + ")"};
}

// P8
Verdict robot_transfer(Shared& s) {
  build_pipeline(s);
  bool pass = true;
  std::ostringstream detail;
  for (const auto& name : kRobotChains) {
    const ChainModel chain = bundled_chain(name);
    int ok = 0;
    for (const Pose& start : s.jammed) {
      const RolloutLog log = rollout_robot(*s.model, chain, s.cfg.controller, s.cfg.scene, start, s.cfg.rollout);
      ok += log.outcome == Outcome::success ? 1 : 0;
    }
    pass = pass && ok >= 14;
    detail << name << " " << ok << "/" << s.jammed.size() << "; ";
  }
  return {pass, detail.str() + "same jammed starts as the object rollouts"};
}

struct OffsetSummary {
  int success = 0, near = 0, fail = 0;
  bool histogram_ok = true;
  std::string line() const {
    return std::to_string(success) + " success / " + std::to_string(near) + " near-miss / " + std::to_string(fail) +
           " fail";
  }
};

OffsetSummary summarize(const std::vector<OffsetTrial>& trials, double bin) {
  OffsetSummary o;
  std::vector<double> d;
  for (const auto& t : trials) {
    d.push_back(t.final_distance);
    (t.outcome_class == "success" ? o.success : t.outcome_class == "near_miss" ? o.near : o.fail)++;
  }
  const auto h = cumulative_histogram(d, bin);
  o.histogram_ok = !h.empty() && h.front().trials_at_or_beyond == static_cast<int>(trials.size());
  for (std::size_t i = 1; i < h.size(); ++i) o.histogram_ok = o.histogram_ok && h[i].trials_at_or_beyond <= h[i - 1].trials_at_or_beyond;
  return o;
}

// P9
Verdict offsets(Shared& s) {
  build_pipeline(s);
  const SceneConfig& scene = s.cfg.scene;
  const ChainModel chain = bundled_chain("ur10_like");
  std::ostringstream detail;
  bool pass = true;
  struct Region {
    const char* label;
    double lin, rot;
    bool asserted;
  };
  for (const Region& r : {Region{"2x", 2.0, 2.0, true}, Region{"5x/3x", 5.0, 3.0, false}}) {
    OffsetConfig o = s.cfg.offsets;
    o.margin_lin = r.lin * scene.clearance_lin;
    o.margin_rot = r.rot * scene.clearance_rot;
    for (bool robot : {false, true}) {
      const auto trials =
          eval_offsets(*s.model, robot ? &chain : nullptr, s.cfg.controller, scene, o, s.cfg.rollout, s.cfg.seed);
      const OffsetSummary sum = summarize(trials, o.histogram_bin);
      const std::string tag = std::string(r.label) + (robot ? "-robot" : "-object");
      report_emit(build_report({}, trials, o.histogram_bin), (s.out / ("offsets_" + tag)).string(), true);
      pass = pass && sum.histogram_ok;
      if (r.asserted) pass = pass && sum.success * 10 >= static_cast<int>(trials.size()) * 8;
      detail << tag << (r.asserted ? "" : " (measured)") << ": " << sum.line() << " of " << trials.size() << "; ";
    }
  }
  return {pass, detail.str() + "histograms monotone and conserving"};
}

// P10
Verdict determinism(const Shared& s) {
  const auto once = [&](const fs::path& dir) {
    std::string trace;
    DemoPlan plan = s.cfg.demos;
    plan.count = 24;
    const auto demos = usable(generate_expert_demos(s.cfg.scene, s.cfg.expert, plan, s.cfg.seed));
    Hyperparams h = s.cfg.training;
    h.steps = 40;
    h.batch = 64;
    Rng rng = training_rng(s.cfg.seed);
    const TrainResult r = train(make_window_sampler(demos, h.horizon), norm_stats(demos), h, rng);
    for (double l : r.loss_curve) trace += fmt("%a", l) + ",";
    const auto starts = seeded_starts(s.cfg.scene, s.cfg.demos, StartKind::jammed, 2, s.cfg.seed);
    RolloutConfig rc = s.cfg.rollout;
    rc.timeout = 10.0;
    std::vector<RolloutLog> logs;
    for (const Pose& p : starts) {
      logs.push_back(rollout_object(r.model, s.cfg.scene, p, rc));
      trace += to_json(logs.back()).dump();
    }
    trace += to_json(rollout_robot(r.model, bundled_chain("ur10_like"), s.cfg.controller, s.cfg.scene, starts[0], rc))
                 .dump();
    OffsetConfig o = s.cfg.offsets;
    o.trials = 6;
    const auto trials = eval_offsets(r.model, nullptr, s.cfg.controller, s.cfg.scene, o, rc, s.cfg.seed);
    fs::remove_all(dir);
    report_emit(build_report(logs, trials, o.histogram_bin), dir.string());
    for (const char* name : {"force_vs_distance.csv", "torque_vs_distance.csv", "cumulative_histogram.csv",
                             "offset_scatter.csv"}) {
      std::ifstream in(dir / name);
      std::stringstream ss;
      ss << in.rdbuf();
      trace += ss.str();
    }
    return std::make_pair(trace, r.loss_curve.size());
  };
  const auto a = once(s.out / "determinism_a");
  const auto b = once(s.out / "determinism_b");
  return {a.first == b.first && !a.first.empty(),
          "loss curve (" + std::to_string(a.second) + " steps), object and robot rollout logs, offset trials and CSV " +
              "files " + (a.first == b.first ? "bit-identical" : "differ") + " across two runs"};
}

// P11
Verdict replay(Shared& s) {
  std::vector<Demonstration> streams;
  if (!s.demos.empty()) {
    for (std::size_t i = 0; i < s.demos.size() && streams.size() < 100; i += std::max<std::size_t>(1, s.demos.size() / 100))
      streams.push_back(s.demos[i]);
  } else {
    DemoPlan plan = s.cfg.demos;
    plan.count = 40;
    streams = generate_expert_demos(s.cfg.scene, s.cfg.expert, plan, s.cfg.seed);
  }
  const std::size_t scripted = streams.size();
  // A teleoperated recording with a wrench that changes every few records.
  const fs::path dir = s.out / "teleop";
  fs::remove_all(dir);
  TeleopSession session(s.cfg.scene, s.cfg.teleop, dir.string(), s.cfg.seed);
  const int client = session.connect();
  session.handle(client, R"({"v":1,"type":"reset","start":"goal_offset"})");
  session.handle(client, R"({"v":1,"type":"record","action":"start"})");
  Rng rng(11);
  for (int k = 0; k < 60; ++k) {
    nlohmann::json d = nlohmann::json::array();
    for (int i = 0; i < 6; ++i) d.push_back(i == 0 ? uniform(rng, -0.6, 0.1) : uniform(rng, -0.2, 0.2));
    session.handle(client, nlohmann::json{{"v", 1}, {"type", "wrench"}, {"d", d}}.dump());
    session.advance(100);
  }
  const auto saved = session.handle(client, R"({"v":1,"type":"record","action":"save"})");
  streams.push_back(read_demo(saved.frames.at(0).at("path").get<std::string>()));
  double worst = 0.0;
  for (const auto& d : streams) worst = std::max(worst, replay_deviation(s.cfg.scene, d));
  return {worst <= 1e-6, "max per-step pose deviation " + fmt("%.2e", worst) + " over " + std::to_string(scripted) +
                             " scripted and 1 teleoperated recording"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string out = "acceptance_out";
  std::string config = data_dir() + "/config/default.json";
  std::vector<std::string> only;
  app.add_option("--out", out, "working directory for generated data");
  app.add_option("--config", config, "configuration file")->check(CLI::ExistingFile);
  app.add_option("--only", only, "criteria to run, e.g. P1 P7");
  CLI11_PARSE(app, argc, argv);

  Shared s;
  s.cfg = load_config(config);
  s.out = out;
  fs::create_directories(s.out);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"P1", [] { return gradients(); }},
      {"P2", [] { return kinematics(); }},
      {"P3", [&] { return damping_law(s); }},
      {"P4", [&] { return wall_press(s); }},
      {"P5", [&] { return admittance(s); }},
      {"P6", [] { return overfit(); }},
      {"P7", [&] { return end_to_end(s); }},
      {"P8", [&] { return robot_transfer(s); }},
      {"P9", [&] { return offsets(s); }},
      {"P10", [&] { return determinism(s); }},
      {"P11", [&] { return replay(s); }},
  };
  const std::set<std::string> selected(only.begin(), only.end());
  int failed = 0;
  nlohmann::json results = nlohmann::json::object();
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const Error& e) {
      v = {false, "error [" + e.code() + "]: " + e.message()};
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << "  [" << fmt("%.1f", seconds_since(t0))
              << " s]" << std::endl;
    results[id] = {{"pass", v.pass}, {"detail", v.detail}};
  }
  std::ofstream(s.out / "acceptance.json") << results.dump(2) << "\n";
  return failed == 0 ? 0 : 1;
}
