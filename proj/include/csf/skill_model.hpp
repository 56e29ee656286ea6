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
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "csf/kinematics.hpp"
#include "csf/rng.hpp"
#include "csf/skill_input.hpp"

namespace csf {

using InputVec = Eigen::Matrix<double, kSkillInputDim, 1>;

struct Hyperparams {
  int hidden = 50;
  int horizon = 50;
  int batch = 512;
  double dropout = 0.2;
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double grad_clip = 1.0;  // global gradient-norm clip, 0 disables
  int steps = 3000;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const nlohmann::json& doc, Hyperparams base = {});

// Per-dimension z-scoring of seeds and wrench labels.
struct NormStats {
  InputVec in_mean = InputVec::Zero();
  InputVec in_std = InputVec::Ones();
  Vec6 out_mean = Vec6::Zero();
  Vec6 out_std = Vec6::Ones();

  InputVec normalize(const InputVec& x) const;
  Vec6 normalize_output(const Vec6& w) const;
  Vec6 denormalize_output(const Vec6& p) const;
};

// Gate blocks are stacked in the order [input, forget, output, candidate].
struct LstmParams {
  MatX w_in;   // H x 19
  MatX w_x;    // 4H x H, input side
  MatX w_h;    // 4H x H, recurrent side
  VecX b;      // 4H
  MatX w_out;  // 6 x H

  static LstmParams zeros(int hidden);
  int hidden() const { return static_cast<int>(w_in.rows()); }
  std::size_t size() const;
  // Visits the five blocks in a fixed order.
  void for_each(const std::function<void(Eigen::Ref<MatX>)>& fn);
  double squared_norm() const;
};

struct LstmModel {
  Hyperparams hyper;
  NormStats norm;
  LstmParams params;
};

LstmModel init_model(const Hyperparams& hyper, Rng& rng);

struct CellState {
  VecX c;
  VecX h;
  static CellState zeros(int hidden);
};

// One cell update; returns y = h'.
VecX lstm_step(const LstmParams& p, CellState& state, const VecX& input);

// One-to-many generation in normalized space (6 x n).
MatX predict_normalized(const LstmModel& model, const InputVec& seed_normalized, int n);
// Raw seed in, denormalized end-effector-frame wrenches out. Dropout inactive.
std::vector<Wrench> predict_sequence(const LstmModel& model, const SkillInput& seed, int n);

// Raw training window: seed record and the N following wrench setpoints.
struct Sample {
  InputVec seed;
  MatX labels;  // 6 x N
};

Sample normalize_sample(const NormStats& norm, const Sample& raw);

// Mean squared error over steps and wrench dimensions, normalized sample.
double sequence_loss(const LstmModel& model, const Sample& sample);

// Dropout keep-masks per step (each H x B, already divided by the keep rate).
using DropoutMasks = std::vector<MatX>;
DropoutMasks draw_dropout_masks(int hidden, int steps, int batch, double rate, Rng& rng);

// Mean batch loss and its exact gradient (written into `grads`) for
// normalized samples. Empty masks disable dropout.
double bptt_gradients(const LstmModel& model, const std::vector<const Sample*>& batch, const DropoutMasks& masks,
                      LstmParams& grads);

struct AdamState {
  LstmParams m;
  LstmParams v;
  long long t = 0;
  static AdamState zeros(int hidden);
};

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state, const Hyperparams& hyper);

using WindowSampler = std::function<Sample(Rng&)>;

struct TrainResult {
  LstmModel model;
  std::vector<double> loss_curve;
};

// Draws `hyper.batch` windows per step from the sampler (raw values),
// normalizes them with `norm` and optimizes with Adam. The callback, if set,
// receives (step, loss) after each update.
TrainResult train(const WindowSampler& sampler, const NormStats& norm, const Hyperparams& hyper, Rng& rng,
                  const std::function<void(int, double)>& progress = {});

// Training stream derived from the global seed.
Rng training_rng(std::uint64_t seed);

nlohmann::json model_to_json(const LstmModel& model);
LstmModel model_from_json(const nlohmann::json& doc);
void save_model(const LstmModel& model, const std::string& path);
LstmModel load_model(const std::string& path);

}  // namespace csf
