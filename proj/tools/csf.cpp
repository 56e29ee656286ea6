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

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "csf/config.hpp"
#include "csf/demo.hpp"
#include "csf/error.hpp"
#include "csf/eval.hpp"
#include "csf/expert.hpp"
#include "csf/log.hpp"
#include "csf/skill_model.hpp"
#include "csf/teleop.hpp"

using namespace csf;
namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const nlohmann::json& doc, int indent = -1) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << doc.dump(indent) << "\n";
  if (!out) throw Error("io", "write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_json", path.string() + ": " + e.what());
  }
}

fs::path prepare_out(const std::string& out, const std::string& fallback) {
  const fs::path dir = out.empty() ? fs::path(fallback) : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

std::string rollout_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rollout_%03d.json", i);
  return buf;
}

struct RolloutOptions {
  std::string model = "model/model.json";
  int trials = 20;
  std::string start = "jammed";
  std::string chain;
};

int cmd_demo_script(const AppConfig& cfg, const std::string& out, int count) {
  DemoPlan plan = cfg.demos;
  if (count > 0) plan.count = count;
  const fs::path dir = prepare_out(out, "demos");
  const auto demos = generate_expert_demos(cfg.scene, cfg.expert, plan, cfg.seed);
  write_dataset(dir.string(), demos);
  int ok = 0;
  for (const auto& d : demos) ok += d.meta.success ? 1 : 0;
  std::cout << "wrote " << demos.size() << " demonstrations (" << ok << " successful) to " << dir.string() << "\n";
  return 0;
}

sigset_t stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

int cmd_teleop_serve(AppConfig cfg, const std::string& out, const std::string& scene, int port) {
  if (!scene.empty()) cfg.scene = load_scene(scene);
  if (port >= 0) cfg.teleop.port = port;
  const fs::path dir = prepare_out(out, "teleop_demos");
  const sigset_t set = stop_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  TeleopServer server(cfg.scene, cfg.teleop, dir.string(), cfg.seed);
  const unsigned short bound = server.bind();
  std::cout << "teleop gateway on ws://" << cfg.teleop.bind << ":" << bound << "/teleop, saving to " << dir.string()
            << std::endl;
  std::thread waiter([&server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.run();
  // A signal may not have arrived if the loop ended on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

int cmd_train(const AppConfig& cfg, const std::string& out, const std::string& data, int steps, int batch) {
  Hyperparams h = cfg.training;
  if (steps > 0) h.steps = steps;
  if (batch > 0) h.batch = batch;
  h.validate();
  std::vector<Demonstration> demos;
  int skipped = 0;
  for (auto& d : load_dataset(data)) {
    if (d.meta.success && d.meta.valid) {
      demos.push_back(std::move(d));
    } else {
      ++skipped;
    }
  }
  if (demos.empty()) throw Error("empty_dataset", "no successful demonstrations in " + data);
  std::cout << "training on " << demos.size() << " demonstrations (" << skipped << " skipped)" << std::endl;
  const fs::path dir = prepare_out(out, "model");
  Rng rng = training_rng(cfg.seed);
  const int every = std::max(1, h.steps / 20);
  const TrainResult r = train(make_window_sampler(demos, h.horizon), norm_stats(demos), h, rng, [&](int k, double loss) {
    if (k % every == 0 || k + 1 == h.steps) std::cout << "step " << k << " loss " << format_number(loss) << std::endl;
  });
  save_model(r.model, (dir / "model.json").string());
  std::ofstream curve(dir / "loss_curve.csv");
  curve << "step,loss\n";
  for (std::size_t i = 0; i < r.loss_curve.size(); ++i) curve << i << "," << format_number(r.loss_curve[i]) << "\n";
  write_json(dir / "train.json",
             {{"hyperparams", to_json(h)},
              {"seed", cfg.seed},
              {"demonstrations", demos.size()},
              {"skipped", skipped},
              {"final_loss", r.loss_curve.empty() ? 0.0 : r.loss_curve.back()}},
             2);
  std::cout << "model written to " << (dir / "model.json").string() << "\n";
  return 0;
}

int cmd_rollout(const AppConfig& cfg, const std::string& out, const RolloutOptions& o, bool robot) {
  const LstmModel model = load_model(o.model);
  const auto starts = seeded_starts(cfg.scene, cfg.demos, start_kind_from_string(o.start), o.trials, cfg.seed);
  std::optional<ChainModel> chain;
  if (robot) {
    AppConfig c = cfg;
    if (!o.chain.empty()) c.chain_path = o.chain;
    chain = load_config_chain(c);
  }
  const fs::path dir = prepare_out(out, robot ? "rollouts_robot" : "rollouts");
  int ok = 0;
  int peaks = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < o.trials; ++i) {
    const RolloutLog log = robot ? rollout_robot(model, *chain, cfg.controller, cfg.scene, starts[i], cfg.rollout)
                                 : rollout_object(model, cfg.scene, starts[i], cfg.rollout);
    const bool pd = peak_then_drop(log, cfg.scene.entrance_distance, cfg.peak_drop);
    ok += log.outcome == Outcome::success ? 1 : 0;
    peaks += pd ? 1 : 0;
    write_json(dir / rollout_name(i), to_json(log));
    rows.push_back({{"trial", i},
                    {"outcome", to_string(log.outcome)},
                    {"final_distance", log.final_distance},
                    {"duration", log.duration},
                    {"peak_then_drop", pd}});
    std::cout << i << " " << to_string(log.outcome) << " distance " << format_number(log.final_distance) << " time "
              << format_number(log.duration) << (pd ? " peak-drop" : "") << std::endl;
  }
  write_json(dir / "summary.json",
             {{"mode", robot ? "robot" : "object"},
              {"start", o.start},
              {"seed", cfg.seed},
              {"trials", o.trials},
              {"successes", ok},
              {"peak_then_drop", peaks},
              {"rollouts", rows}},
             2);
  std::cout << "success " << ok << "/" << o.trials << ", peak-then-drop " << peaks << "/" << o.trials << "\n";
  return 0;
}

int cmd_eval_offsets(const AppConfig& cfg, const std::string& out, const RolloutOptions& o, const std::string& mode,
                     double lin_factor, double rot_factor) {
  if (mode != "object" && mode != "robot") throw Error("bad_config", "mode must be object or robot");
  const LstmModel model = load_model(o.model);
  OffsetConfig ocfg = cfg.offsets;
  if (o.trials > 0) ocfg.trials = o.trials;
  if (lin_factor >= 0) ocfg.margin_lin = lin_factor * cfg.scene.clearance_lin;
  if (rot_factor >= 0) ocfg.margin_rot = rot_factor * cfg.scene.clearance_rot;
  std::optional<ChainModel> chain;
  if (mode == "robot") {
    AppConfig c = cfg;
    if (!o.chain.empty()) c.chain_path = o.chain;
    chain = load_config_chain(c);
  }
  const auto trials =
      eval_offsets(model, chain ? &*chain : nullptr, cfg.controller, cfg.scene, ocfg, cfg.rollout, cfg.seed);
  const fs::path dir = prepare_out(out, "offsets");
  nlohmann::json all = nlohmann::json::array();
  int counts[3] = {0, 0, 0};
  for (const auto& t : trials) {
    all.push_back(to_json(t));
    counts[t.outcome_class == "success" ? 0 : t.outcome_class == "near_miss" ? 1 : 2]++;
  }
  write_json(dir / "trials.json", all);
  write_json(dir / "summary.json",
             {{"mode", mode},
              {"seed", cfg.seed},
              {"offsets", to_json(ocfg)},
              {"trials", trials.size()},
              {"success", counts[0]},
              {"near_miss", counts[1]},
              {"fail", counts[2]}},
             2);
  std::cout << "success " << counts[0] << ", near_miss " << counts[1] << ", fail " << counts[2] << " of "
            << trials.size() << "\n";
  return 0;
}

int cmd_report(const AppConfig& cfg, const std::string& out, const std::string& rollouts, const std::string& offsets,
               bool svg) {
  std::vector<RolloutLog> logs;
  if (!rollouts.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(rollouts)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("rollout_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) logs.push_back(rollout_log_from_json(read_json(f)));
  }
  std::vector<OffsetTrial> trials;
  if (!offsets.empty()) {
    const fs::path p = fs::is_directory(offsets) ? fs::path(offsets) / "trials.json" : fs::path(offsets);
    for (const auto& j : read_json(p)) trials.push_back(offset_trial_from_json(j));
  }
  const fs::path dir = out.empty() ? fs::path("report") : fs::path(out);
  report_emit(build_report(logs, trials, cfg.offsets.histogram_bin), dir.string(), svg);
  std::cout << "report written to " << dir.string() << " (" << logs.size() << " rollouts, " << trials.size()
            << " offset trials)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact skill workbench: demonstrations, training and evaluation of force-based insertion skills"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--config", config_path, "configuration file (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "global seed");
  app.add_option("--out", out, "output directory");

  int count = 0;
  auto* demo = app.add_subcommand("demo-script", "generate scripted expert demonstrations");
  demo->add_option("--count", count, "number of demonstrations");

  std::string scene;
  int port = -1;
  auto* serve = app.add_subcommand("teleop-serve", "run the teleoperation gateway");
  serve->add_option("--scene", scene, "scene file")->check(CLI::ExistingFile);
  serve->add_option("--port", port, "listening port");

  std::string data = "demos";
  int steps = 0;
  int batch = 0;
  auto* tr = app.add_subcommand("train", "train the skill model on a demonstration dataset");
  tr->add_option("--data", data, "dataset directory");
  tr->add_option("--steps", steps, "optimizer steps");
  tr->add_option("--batch", batch, "windows per step");

  RolloutOptions ro;
  auto* roll = app.add_subcommand("rollout", "steer the free object with a trained model");
  auto* robot = app.add_subcommand("rollout-robot", "execute a trained model on a robot through the force controller");
  for (auto* sub : {roll, robot}) {
    sub->add_option("--model", ro.model, "model file");
    sub->add_option("--trials", ro.trials, "number of seeded starts");
    sub->add_option("--start", ro.start, "start set")->check(CLI::IsMember({"jammed", "random"}));
  }
  robot->add_option("--chain", ro.chain, "chain file")->check(CLI::ExistingFile);

  RolloutOptions eo;
  eo.trials = 0;
  std::string mode = "object";
  double lin_factor = -1.0;
  double rot_factor = -1.0;
  auto* offs = app.add_subcommand("eval-offsets", "rollouts under corrupted target estimates");
  offs->add_option("--model", eo.model, "model file");
  offs->add_option("--trials", eo.trials, "number of trials");
  offs->add_option("--mode", mode, "object or robot")->check(CLI::IsMember({"object", "robot"}));
  offs->add_option("--chain", eo.chain, "chain file")->check(CLI::ExistingFile);
  offs->add_option("--lin-factor", lin_factor, "linear margin as a multiple of the clearance");
  offs->add_option("--rot-factor", rot_factor, "rotational margin as a multiple of the clearance");

  std::string rollouts;
  std::string offsets;
  bool svg = false;
  auto* rep = app.add_subcommand("report", "tables (and plots) from rollout and offset runs");
  rep->add_option("--rollouts", rollouts, "directory with rollout logs")->check(CLI::ExistingDirectory);
  rep->add_option("--offsets", offsets, "offset trials file or directory")->check(CLI::ExistingPath);
  rep->add_flag("--svg", svg, "also write SVG plots");

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (*seed_opt) cfg.seed = seed;
    if (demo->parsed()) return cmd_demo_script(cfg, out, count);
    if (serve->parsed()) return cmd_teleop_serve(cfg, out, scene, port);
    if (tr->parsed()) return cmd_train(cfg, out, data, steps, batch);
    if (roll->parsed()) return cmd_rollout(cfg, out, ro, false);
    if (robot->parsed()) return cmd_rollout(cfg, out, ro, true);
    if (offs->parsed()) return cmd_eval_offsets(cfg, out, eo, mode, lin_factor, rot_factor);
    if (rep->parsed()) return cmd_report(cfg, out, rollouts, offsets, svg);
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.message() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
