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

#include "csf/demo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "csf/error.hpp"
#include "csf/json_util.hpp"

namespace csf {

namespace fs = std::filesystem;

namespace {

using ordered_json = nlohmann::ordered_json;

InputVec input_vec(const SkillInput& x) {
  const auto a = x.to_array();
  return Eigen::Map<const InputVec>(a.data());
}

std::vector<const Demonstration*> trainable(const std::vector<Demonstration>& demos) {
  std::vector<const Demonstration*> out;
  for (const auto& d : demos)
    if (d.meta.success && d.meta.valid && !d.records.empty()) out.push_back(&d);
  return out;
}

std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line) + ": "; }

template <std::size_t N>
std::array<double, N> line_array(const nlohmann::json& doc, const char* key, const std::string& at) {
  if (!doc.contains(key)) throw Error("schema", at + "missing field '" + key + "'");
  try {
    return json_util::fixed_array<N>(doc.at(key), key);
  } catch (const Error& e) {
    throw Error("schema", at + e.what());
  }
}

}  // namespace

SkillInput skill_input_from_state(const Pose& goal_estimate, const BodyState& state, const Wrench& last_wrench) {
  SkillInput x;
  x.pose = relative_target(Transform::from_pose(state.pose, Frame::base, Frame::ee),
                           Transform::from_pose(goal_estimate, Frame::base, Frame::target))
               .features;
  x.twist = state.twist.to_vec6();
  x.wrench = last_wrench.to_vec6();
  return x;
}

Recorder::Recorder(std::string scene, double rate_hz, const Pose& start_pose, std::string source) {
  if (!(rate_hz > 0.0)) throw Error("bad_argument", "recording rate must be > 0");
  demo_.meta.scene = std::move(scene);
  demo_.meta.rate_hz = rate_hz;
  demo_.meta.start_pose = start_pose;
  demo_.meta.source = std::move(source);
}

void Recorder::append(double t, const SkillInput& x) {
  if (!demo_.records.empty()) {
    const double gap = t - demo_.records.back().t;
    if (!(gap > 0.0) || gap > 2.0 / demo_.meta.rate_hz + 1e-9) demo_.meta.valid = false;
  }
  demo_.records.push_back(DemoRecord{t, x});
}

Demonstration Recorder::finalize(bool success) {
  if (demo_.records.empty()) throw Error("invalid_demo", "cannot finalize an empty recording");
  demo_.meta.success = success && demo_.meta.valid;
  return demo_;
}

void Recorder::clear() {
  demo_.records.clear();
  demo_.meta.valid = true;
  demo_.meta.success = false;
}

Sample window_sample(const Demonstration& demo, Rng& rng, int n) {
  if (n < 1) throw Error("bad_argument", "window length must be >= 1");
  if (!demo.meta.success) throw Error("unsuccessful_demo", "windows are only drawn from successful demonstrations");
  const long len = static_cast<long>(demo.records.size());
  if (len < n + 2) {
    throw Error("demo_too_short", "demonstration has " + std::to_string(len) + " records, window needs " +
                                      std::to_string(n + 2));
  }
  const long t0 = static_cast<long>(uniform_index(rng, static_cast<std::uint64_t>(len - n)));
  Sample s;
  s.seed = input_vec(demo.records[t0].x);
  s.labels.resize(kWrenchDim, n);
  for (int k = 0; k < n; ++k) s.labels.col(k) = demo.records[t0 + 1 + k].x.wrench;
  return s;
}

WindowSampler make_window_sampler(const std::vector<Demonstration>& demos, int n) {
  auto pool = std::make_shared<std::vector<Demonstration>>();
  auto offsets = std::make_shared<std::vector<std::uint64_t>>();
  std::uint64_t total = 0;
  for (const Demonstration* d : trainable(demos)) {
    const long len = static_cast<long>(d->records.size());
    if (len < n + 2) continue;
    pool->push_back(*d);
    offsets->push_back(total);
    total += static_cast<std::uint64_t>(len - n);
  }
  if (total == 0) throw Error("empty_dataset", "no successful demonstration is long enough for windows of " +
                                                   std::to_string(n));
  return [pool, offsets, total, n](Rng& rng) {
    const std::uint64_t u = uniform_index(rng, total);
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(offsets->begin(), offsets->end(), u) -
                                                   offsets->begin()) - 1;
    const Demonstration& d = (*pool)[i];
    const std::size_t t0 = static_cast<std::size_t>(u - (*offsets)[i]);
    Sample s;
    s.seed = input_vec(d.records[t0].x);
    s.labels.resize(kWrenchDim, n);
    for (int k = 0; k < n; ++k) s.labels.col(k) = d.records[t0 + 1 + k].x.wrench;
    return s;
  };
}

NormStats norm_stats(const std::vector<Demonstration>& demos) {
  const auto use = trainable(demos);
  double count = 0;
  InputVec in_sum = InputVec::Zero();
  Vec6 out_sum = Vec6::Zero();
  for (const Demonstration* d : use) {
    for (const auto& r : d->records) {
      in_sum += input_vec(r.x);
      out_sum += r.x.wrench;
      count += 1;
    }
  }
  if (count == 0) throw Error("empty_dataset", "normalization statistics need at least one successful record");
  NormStats s;
  s.in_mean = in_sum / count;
  s.out_mean = out_sum / count;
  InputVec in_var = InputVec::Zero();
  Vec6 out_var = Vec6::Zero();
  for (const Demonstration* d : use) {
    for (const auto& r : d->records) {
      in_var += (input_vec(r.x) - s.in_mean).cwiseAbs2();
      out_var += (r.x.wrench - s.out_mean).cwiseAbs2();
    }
  }
  s.in_std = (in_var / count).cwiseSqrt().cwiseMax(1e-8);
  s.out_std = (out_var / count).cwiseSqrt().cwiseMax(1e-8);
  return s;
}

void write_demo(const std::string& path, const Demonstration& demo) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write demonstration " + path);
  ordered_json header;
  header["format_version"] = kDemoFormatVersion;
  header["scene"] = demo.meta.scene;
  header["rate_hz"] = demo.meta.rate_hz;
  header["start_pose"] = json_util::to_json(demo.meta.start_pose);
  header["success"] = demo.meta.success;
  header["source"] = demo.meta.source;
  if (!demo.meta.valid) header["valid"] = false;
  out << header.dump() << '\n';
  for (const auto& r : demo.records) {
    ordered_json line;
    line["t"] = r.t;
    line["x"] = r.x.pose;
    line["xd"] = std::vector<double>(r.x.twist.data(), r.x.twist.data() + 6);
    line["f"] = std::vector<double>(r.x.wrench.data(), r.x.wrench.data() + 6);
    out << line.dump() << '\n';
  }
  if (!out) throw Error("io", "failed writing demonstration " + path);
}

Demonstration read_demo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open demonstration " + path);
  Demonstration demo;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error("schema", where(path, line_no) + "malformed JSON: " + e.what());
    }
    if (!doc.is_object()) throw Error("schema", where(path, line_no) + "expected a JSON object");
    if (!have_header) {
      try {
        const int version = json_util::require(doc, "format_version").get<int>();
        if (version != kDemoFormatVersion) {
          throw Error("version_mismatch", where(path, line_no) + "unsupported format_version " + std::to_string(version));
        }
        demo.meta.scene = json_util::require(doc, "scene").get<std::string>();
        demo.meta.rate_hz = json_util::number(json_util::require(doc, "rate_hz"), "rate_hz");
        demo.meta.start_pose = json_util::pose(json_util::require(doc, "start_pose"), "start_pose");
        demo.meta.success = json_util::require(doc, "success").get<bool>();
        demo.meta.source = json_util::require(doc, "source").get<std::string>();
        demo.meta.valid = json_util::value_or(doc, "valid", true);
      } catch (const nlohmann::json::exception& e) {
        throw Error("schema", where(path, line_no) + e.what());
      } catch (const Error& e) {
        if (e.code() == "version_mismatch") throw;
        throw Error(e.code(), where(path, line_no) + e.message());
      }
      if (!(demo.meta.rate_hz > 0.0)) throw Error("schema", where(path, line_no) + "rate_hz must be > 0");
      if (demo.meta.source != "human" && demo.meta.source != "scripted") {
        throw Error("schema", where(path, line_no) + "source must be 'human' or 'scripted'");
      }
      have_header = true;
      continue;
    }
    const std::string at = where(path, line_no);
    DemoRecord r;
    if (!doc.contains("t") || !doc.at("t").is_number()) throw Error("schema", at + "missing numeric field 't'");
    r.t = doc.at("t").get<double>();
    r.x.pose = line_array<7>(doc, "x", at);
    const auto xd = line_array<6>(doc, "xd", at);
    const auto f = line_array<6>(doc, "f", at);
    r.x.twist = Eigen::Map<const Vec6>(xd.data());
    r.x.wrench = Eigen::Map<const Vec6>(f.data());
    const Eigen::Vector4d q(r.x.pose[3], r.x.pose[4], r.x.pose[5], r.x.pose[6]);
    if (std::abs(q.norm() - 1.0) > 1e-9) throw Error("schema", at + "quaternion is not unit length");
    if (q[3] < 0.0) throw Error("schema", at + "quaternion is not in canonical sign (qw >= 0)");
    if (!demo.records.empty()) {
      const double gap = r.t - demo.records.back().t;
      if (std::abs(gap - 1.0 / demo.meta.rate_hz) > 1e-6) {
        throw Error("cadence", at + "record spacing " + std::to_string(gap) + " s does not match rate " +
                                   std::to_string(demo.meta.rate_hz) + " Hz");
      }
    }
    demo.records.push_back(r);
  }
  if (!have_header) throw Error("schema", path + ": missing header line");
  return demo;
}

void write_manifest(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 11 && name.ends_with(".demo.jsonl")) files.push_back(name);
  }
  std::sort(files.begin(), files.end());
  ordered_json manifest;
  manifest["format_version"] = kDemoFormatVersion;
  manifest["files"] = ordered_json::array();
  std::size_t successful = 0, records = 0;
  for (const auto& name : files) {
    const Demonstration d = read_demo((fs::path(dir) / name).string());
    ordered_json entry;
    entry["file"] = name;
    entry["scene"] = d.meta.scene;
    entry["records"] = d.records.size();
    entry["success"] = d.meta.success;
    entry["source"] = d.meta.source;
    manifest["files"].push_back(entry);
    successful += d.meta.success ? 1 : 0;
    records += d.records.size();
  }
  manifest["count"] = files.size();
  manifest["successful"] = successful;
  manifest["records"] = records;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw Error("io", "cannot write manifest in " + dir);
  out << manifest.dump(1) << '\n';
}

namespace {

std::string demo_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "demo_%05zu.demo.jsonl", index);
  return buf;
}

std::size_t count_demo_files(const std::string& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().ends_with(".demo.jsonl")) ++n;
  return n;
}

}  // namespace

void write_dataset(const std::string& dir, const std::vector<Demonstration>& demos) {
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().ends_with(".demo.jsonl")) fs::remove(e.path());
  for (std::size_t i = 0; i < demos.size(); ++i) write_demo((fs::path(dir) / demo_file_name(i)).string(), demos[i]);
  write_manifest(dir);
}

std::string append_to_dataset(const std::string& dir, const Demonstration& demo) {
  fs::create_directories(dir);
  std::size_t index = count_demo_files(dir);
  while (fs::exists(fs::path(dir) / demo_file_name(index))) ++index;
  const std::string path = (fs::path(dir) / demo_file_name(index)).string();
  write_demo(path, demo);
  write_manifest(dir);
  return path;
}

std::vector<Demonstration> load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("io", "dataset directory not found: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().ends_with(".demo.jsonl")) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  std::vector<Demonstration> out;
  for (const auto& f : files) out.push_back(read_demo(f));
  return out;
}

double replay_deviation(const SceneConfig& scene, const Demonstration& demo) {
  if (demo.records.empty()) return 0.0;
  const double ratio = 1.0 / (demo.meta.rate_hz * scene.sim_dt);
  const int per_record = static_cast<int>(std::lround(ratio));
  if (per_record < 1 || std::abs(ratio - per_record) > 1e-9) {
    throw Error("bad_argument", "record period is not a whole number of simulation steps");
  }
  Simulator sim(scene);
  sim.reset(demo.meta.start_pose);
  const Pose& goal = scene.goal_pose;
  auto deviation = [&](const DemoRecord& r) {
    const auto f = skill_input_from_state(goal, sim.state(), Wrench::from_vec6(Vec6::Zero(), Frame::object)).pose;
    double worst = 0.0;
    for (int i = 0; i < 7; ++i) worst = std::max(worst, std::abs(f[i] - r.x.pose[i]));
    return worst;
  };
  double worst = deviation(demo.records.front());
  for (std::size_t k = 0; k + 1 < demo.records.size(); ++k) {
    const Wrench w = Wrench::from_vec6(demo.records[k].x.wrench, Frame::object);
    for (int s = 0; s < per_record; ++s) sim.step(w);
    worst = std::max(worst, deviation(demo.records[k + 1]));
  }
  return worst;
}

}  // namespace csf
