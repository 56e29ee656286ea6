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

#include "csf/skill_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "csf/error.hpp"
#include "csf/json_util.hpp"

namespace csf {

namespace {

constexpr int kFormatVersion = 1;

MatX sigmoid(const MatX& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

MatX uniform_matrix(int rows, int cols, double bound, Rng& rng) {
  MatX m(rows, cols);
  // Filled column by column so the draw order is fixed.
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = uniform(rng, -bound, bound);
  return m;
}

struct StepCache {
  MatX h_prev, c_prev, i, f, o, g, c, tc, h, d;
};

struct Forward {
  MatX y0;
  std::vector<StepCache> steps;
  std::vector<MatX> p;
};

// Batched unroll of the one-to-many recursion. Columns are samples. After the
// first step the input equals the previous output, so both matrices act on the
// same vector and are applied as one sum.
Forward forward(const LstmParams& p, const MatX& seeds, int n, const DropoutMasks& masks, bool keep_cache) {
  const int hidden = p.hidden();
  const long batch = seeds.cols();
  Forward out;
  out.y0 = p.w_in * seeds;
  const MatX w_sum = p.w_x + p.w_h;
  MatX h = MatX::Zero(hidden, batch);
  MatX c = MatX::Zero(hidden, batch);
  for (int k = 0; k < n; ++k) {
    MatX z = (k == 0) ? MatX(p.w_x * out.y0) : MatX(w_sum * h);
    z.colwise() += p.b;
    StepCache s;
    s.i = sigmoid(z.topRows(hidden));
    s.f = sigmoid(z.middleRows(hidden, hidden));
    s.o = sigmoid(z.middleRows(2 * hidden, hidden));
    s.g = z.bottomRows(hidden).array().tanh().matrix();
    s.c = (s.f.array() * c.array() + s.i.array() * s.g.array()).matrix();
    s.tc = s.c.array().tanh().matrix();
    s.h = (s.o.array() * s.tc.array()).matrix();
    s.d = masks.empty() ? s.h : MatX(s.h.array() * masks[k].array());
    out.p.push_back(p.w_out * s.d);
    s.h_prev = std::move(h);
    s.c_prev = std::move(c);
    h = s.h;
    c = s.c;
    if (keep_cache) out.steps.push_back(std::move(s));
  }
  return out;
}

nlohmann::json matrix_to_json(const MatX& m) {
  std::vector<double> data;
  data.reserve(m.size());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatX matrix_from_json(const nlohmann::json& doc, const std::string& name, long rows, long cols) {
  const long r = json_util::require(doc, "rows").get<long>();
  const long c = json_util::require(doc, "cols").get<long>();
  if (r != rows || c != cols) {
    throw Error("shape_mismatch", name + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                      std::to_string(r) + "x" + std::to_string(c));
  }
  const auto& data = json_util::require(doc, "data");
  if (!data.is_array() || static_cast<long>(data.size()) != rows * cols) {
    throw Error("shape_mismatch", name + ": data length does not match shape");
  }
  MatX m(rows, cols);
  for (long i = 0; i < rows * cols; ++i) m(i / cols, i % cols) = data[i].get<double>();
  if (!m.allFinite()) throw Error("schema", name + ": non-finite weight");
  return m;
}

template <int N>
nlohmann::json vec_to_json(const Eigen::Matrix<double, N, 1>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from_json(const nlohmann::json& doc, const std::string& name) {
  const auto arr = json_util::fixed_array<N>(doc, name);
  return Eigen::Map<const Eigen::Matrix<double, N, 1>>(arr.data());
}

}  // namespace

void Hyperparams::validate() const {
  if (hidden <= 0) throw Error("bad_hyperparams", "hidden must be > 0");
  if (horizon <= 0) throw Error("bad_hyperparams", "horizon must be > 0");
  if (batch < 1) throw Error("bad_hyperparams", "batch must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("bad_hyperparams", "dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw Error("bad_hyperparams", "learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error("bad_hyperparams", "adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw Error("bad_hyperparams", "epsilon must be > 0");
  if (grad_clip < 0.0) throw Error("bad_hyperparams", "grad_clip must be >= 0");
  if (steps < 0) throw Error("bad_hyperparams", "steps must be >= 0");
}

nlohmann::json to_json(const Hyperparams& h) {
  return {{"hidden", h.hidden},       {"horizon", h.horizon}, {"batch", h.batch},     {"dropout", h.dropout},
          {"learning_rate", h.learning_rate}, {"beta1", h.beta1}, {"beta2", h.beta2}, {"epsilon", h.epsilon},
          {"grad_clip", h.grad_clip}, {"steps", h.steps},     {"seed", h.seed}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& doc, Hyperparams h) {
  using json_util::value_or;
  h.hidden = value_or(doc, "hidden", h.hidden);
  h.horizon = value_or(doc, "horizon", h.horizon);
  h.batch = value_or(doc, "batch", h.batch);
  h.dropout = value_or(doc, "dropout", h.dropout);
  h.learning_rate = value_or(doc, "learning_rate", h.learning_rate);
  h.beta1 = value_or(doc, "beta1", h.beta1);
  h.beta2 = value_or(doc, "beta2", h.beta2);
  h.epsilon = value_or(doc, "epsilon", h.epsilon);
  h.grad_clip = value_or(doc, "grad_clip", h.grad_clip);
  h.steps = value_or(doc, "steps", h.steps);
  h.seed = value_or(doc, "seed", h.seed);
  h.validate();
  return h;
}

InputVec NormStats::normalize(const InputVec& x) const { return (x - in_mean).cwiseQuotient(in_std); }
Vec6 NormStats::normalize_output(const Vec6& w) const { return (w - out_mean).cwiseQuotient(out_std); }
Vec6 NormStats::denormalize_output(const Vec6& p) const { return p.cwiseProduct(out_std) + out_mean; }

LstmParams LstmParams::zeros(int hidden) {
  return LstmParams{MatX::Zero(hidden, kSkillInputDim), MatX::Zero(4 * hidden, hidden),
                    MatX::Zero(4 * hidden, hidden), VecX::Zero(4 * hidden), MatX::Zero(kWrenchDim, hidden)};
}

std::size_t LstmParams::size() const {
  return static_cast<std::size_t>(w_in.size() + w_x.size() + w_h.size() + b.size() + w_out.size());
}

void LstmParams::for_each(const std::function<void(Eigen::Ref<MatX>)>& fn) {
  fn(w_in);
  fn(w_x);
  fn(w_h);
  fn(b);
  fn(w_out);
}

double LstmParams::squared_norm() const {
  return w_in.squaredNorm() + w_x.squaredNorm() + w_h.squaredNorm() + b.squaredNorm() + w_out.squaredNorm();
}

LstmModel init_model(const Hyperparams& hyper, Rng& rng) {
  hyper.validate();
  const int h = hyper.hidden;
  LstmModel m;
  m.hyper = hyper;
  m.params.w_in = uniform_matrix(h, kSkillInputDim, 1.0 / std::sqrt(double(kSkillInputDim)), rng);
  m.params.w_x = uniform_matrix(4 * h, h, 1.0 / std::sqrt(2.0 * h), rng);
  m.params.w_h = uniform_matrix(4 * h, h, 1.0 / std::sqrt(2.0 * h), rng);
  m.params.b = VecX::Zero(4 * h);
  m.params.b.segment(h, h).setOnes();
  m.params.w_out = uniform_matrix(kWrenchDim, h, 1.0 / std::sqrt(double(h)), rng);
  return m;
}

CellState CellState::zeros(int hidden) { return CellState{VecX::Zero(hidden), VecX::Zero(hidden)}; }

VecX lstm_step(const LstmParams& p, CellState& state, const VecX& input) {
  const int h = p.hidden();
  if (input.size() != h || state.c.size() != h || state.h.size() != h) {
    throw Error("dimension_mismatch", "lstm_step expects vectors of size H");
  }
  const VecX z = p.w_x * input + p.w_h * state.h + p.b;
  const VecX i = sigmoid(z.head(h));
  const VecX f = sigmoid(z.segment(h, h));
  const VecX o = sigmoid(z.segment(2 * h, h));
  const VecX g = z.tail(h).array().tanh().matrix();
  state.c = (f.array() * state.c.array() + i.array() * g.array()).matrix();
  state.h = (o.array() * state.c.array().tanh()).matrix();
  return state.h;
}

MatX predict_normalized(const LstmModel& model, const InputVec& seed_normalized, int n) {
  if (n < 0) throw Error("bad_argument", "prediction length must be >= 0");
  const Forward fw = forward(model.params, seed_normalized, n, {}, false);
  MatX out(kWrenchDim, n);
  for (int k = 0; k < n; ++k) out.col(k) = fw.p[k];
  return out;
}

std::vector<Wrench> predict_sequence(const LstmModel& model, const SkillInput& seed, int n) {
  const auto arr = seed.to_array();
  const InputVec raw = Eigen::Map<const InputVec>(arr.data());
  const MatX p = predict_normalized(model, model.norm.normalize(raw), n);
  std::vector<Wrench> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(Wrench::from_vec6(model.norm.denormalize_output(p.col(k)), Frame::ee));
  return out;
}

Sample normalize_sample(const NormStats& norm, const Sample& raw) {
  Sample s;
  s.seed = norm.normalize(raw.seed);
  s.labels = ((raw.labels.colwise() - norm.out_mean).array().colwise() / norm.out_std.array()).matrix();
  return s;
}

double sequence_loss(const LstmModel& model, const Sample& sample) {
  if (sample.labels.rows() != kWrenchDim || sample.labels.cols() < 1) {
    throw Error("length_mismatch", "labels must be 6 x N with N >= 1");
  }
  const MatX p = predict_normalized(model, sample.seed, static_cast<int>(sample.labels.cols()));
  return (p - sample.labels).squaredNorm() / static_cast<double>(p.size());
}

DropoutMasks draw_dropout_masks(int hidden, int steps, int batch, double rate, Rng& rng) {
  DropoutMasks masks;
  if (rate <= 0.0) return masks;
  const double keep = 1.0 - rate;
  for (int k = 0; k < steps; ++k) {
    MatX m(hidden, batch);
    for (int c = 0; c < batch; ++c)
      for (int r = 0; r < hidden; ++r) m(r, c) = uniform(rng, 0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

double bptt_gradients(const LstmModel& model, const std::vector<const Sample*>& batch, const DropoutMasks& masks,
                      LstmParams& grads) {
  if (batch.empty()) throw Error("empty_batch", "bptt_gradients needs at least one sample");
  const LstmParams& p = model.params;
  const int hidden = p.hidden();
  const long n = batch.front()->labels.cols();
  const long bsz = static_cast<long>(batch.size());
  MatX seeds(kSkillInputDim, bsz);
  for (long j = 0; j < bsz; ++j) {
    if (batch[j]->labels.cols() != n || batch[j]->labels.rows() != kWrenchDim) {
      throw Error("length_mismatch", "all samples in a batch must have 6 x N labels");
    }
    seeds.col(j) = batch[j]->seed;
  }
  if (!masks.empty() && static_cast<long>(masks.size()) != n) {
    throw Error("dimension_mismatch", "one dropout mask per step required");
  }

  const Forward fw = forward(p, seeds, static_cast<int>(n), masks, true);
  const double scale = 1.0 / static_cast<double>(n * bsz * kWrenchDim);

  grads = LstmParams::zeros(hidden);
  double loss = 0.0;
  MatX dw_tied = MatX::Zero(4 * hidden, hidden);
  const MatX w_sum = p.w_x + p.w_h;
  MatX dh_next = MatX::Zero(hidden, bsz);
  MatX dc_next = MatX::Zero(hidden, bsz);
  MatX dz(4 * hidden, bsz);
  for (long k = n - 1; k >= 0; --k) {
    const StepCache& s = fw.steps[k];
    MatX labels(kWrenchDim, bsz);
    for (long j = 0; j < bsz; ++j) labels.col(j) = batch[j]->labels.col(k);
    const MatX err = fw.p[k] - labels;
    loss += err.squaredNorm();
    const MatX dp = 2.0 * scale * err;
    grads.w_out.noalias() += dp * s.d.transpose();
    MatX dh = p.w_out.transpose() * dp;
    if (!masks.empty()) dh.array() *= masks[k].array();
    dh += dh_next;

    const auto o = s.o.array();
    const auto tc = s.tc.array();
    const MatX dc = (dh.array() * o * (1.0 - tc.square()) + dc_next.array()).matrix();
    dz.topRows(hidden) = (dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
    dz.middleRows(hidden, hidden) = (dc.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
    dz.middleRows(2 * hidden, hidden) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dz.bottomRows(hidden) = (dc.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
    dc_next = (dc.array() * s.f.array()).matrix();

    grads.b += dz.rowwise().sum();
    if (k > 0) {
      dw_tied.noalias() += dz * s.h_prev.transpose();
      dh_next.noalias() = w_sum.transpose() * dz;
    } else {
      grads.w_x.noalias() += dz * fw.y0.transpose();
      const MatX dy0 = p.w_x.transpose() * dz;
      grads.w_in.noalias() += dy0 * seeds.transpose();
    }
  }
  grads.w_x += dw_tied;
  grads.w_h += dw_tied;
  return loss * scale;
}

AdamState AdamState::zeros(int hidden) { return AdamState{LstmParams::zeros(hidden), LstmParams::zeros(hidden), 0}; }

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state, const Hyperparams& hyper) {
  state.t += 1;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  auto update = [&](MatX& theta, const MatX& g, MatX& m, MatX& v) {
    if (theta.rows() != g.rows() || theta.cols() != g.cols()) {
      throw Error("dimension_mismatch", "gradient shape does not match parameters");
    }
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.cwiseAbs2();
    theta.array() -= hyper.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + hyper.epsilon);
  };
  update(params.w_in, grads.w_in, state.m.w_in, state.v.w_in);
  update(params.w_x, grads.w_x, state.m.w_x, state.v.w_x);
  update(params.w_h, grads.w_h, state.m.w_h, state.v.w_h);
  MatX b = params.b, mb = state.m.b, vb = state.v.b;
  update(b, grads.b, mb, vb);
  params.b = b;
  state.m.b = mb;
  state.v.b = vb;
  update(params.w_out, grads.w_out, state.m.w_out, state.v.w_out);
}

TrainResult train(const WindowSampler& sampler, const NormStats& norm, const Hyperparams& hyper, Rng& rng,
                  const std::function<void(int, double)>& progress) {
  hyper.validate();
  TrainResult result;
  result.model = init_model(hyper, rng);
  result.model.norm = norm;
  AdamState adam = AdamState::zeros(hyper.hidden);
  LstmParams grads;
  std::vector<Sample> samples(hyper.batch);
  std::vector<const Sample*> batch(hyper.batch);
  for (int step = 0; step < hyper.steps; ++step) {
    for (int j = 0; j < hyper.batch; ++j) {
      Sample raw = sampler(rng);
      if (raw.labels.cols() != hyper.horizon) throw Error("length_mismatch", "sampler returned wrong window length");
      samples[j] = normalize_sample(norm, raw);
      batch[j] = &samples[j];
    }
    const DropoutMasks masks = draw_dropout_masks(hyper.hidden, hyper.horizon, hyper.batch, hyper.dropout, rng);
    const double loss = bptt_gradients(result.model, batch, masks, grads);
    if (!std::isfinite(loss)) throw Error("numerical", "training loss became non-finite at step " + std::to_string(step));
    if (hyper.grad_clip > 0.0) {
      const double gn = std::sqrt(grads.squared_norm());
      if (gn > hyper.grad_clip) grads.for_each([&](Eigen::Ref<MatX> m) { m *= hyper.grad_clip / gn; });
    }
    adam_step(result.model.params, grads, adam, hyper);
    result.loss_curve.push_back(loss);
    if (progress) progress(step, loss);
  }
  return result;
}

Rng training_rng(std::uint64_t seed) { return Rng(mix_seed(seed, 0x747261696eu)); }

nlohmann::json model_to_json(const LstmModel& m) {
  return {{"format_version", kFormatVersion},
          {"kind", "lstm_wrench_sequence"},
          {"frames", {{"input", "e"}, {"output", "e"}}},
          {"input_layout", "pose[x,y,z,qx,qy,qz,qw] twist[6] wrench[6]"},
          {"gate_order", {"input", "forget", "output", "candidate"}},
          {"hyper", to_json(m.hyper)},
          {"norm",
           {{"input_mean", vec_to_json(m.norm.in_mean)},
            {"input_std", vec_to_json(m.norm.in_std)},
            {"output_mean", vec_to_json(m.norm.out_mean)},
            {"output_std", vec_to_json(m.norm.out_std)}}},
          {"weights",
           {{"w_in", matrix_to_json(m.params.w_in)},
            {"w_x", matrix_to_json(m.params.w_x)},
            {"w_h", matrix_to_json(m.params.w_h)},
            {"b", matrix_to_json(m.params.b)},
            {"w_out", matrix_to_json(m.params.w_out)}}}};
}

LstmModel model_from_json(const nlohmann::json& doc) {
  using json_util::require;
  try {
    const int version = require(doc, "format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error("version_mismatch", "unsupported model format_version " + std::to_string(version));
    }
    LstmModel m;
    m.hyper = hyperparams_from_json(require(doc, "hyper"));
    const int h = m.hyper.hidden;
    const auto& norm = require(doc, "norm");
    m.norm.in_mean = vec_from_json<kSkillInputDim>(require(norm, "input_mean"), "norm.input_mean");
    m.norm.in_std = vec_from_json<kSkillInputDim>(require(norm, "input_std"), "norm.input_std");
    m.norm.out_mean = vec_from_json<kWrenchDim>(require(norm, "output_mean"), "norm.output_mean");
    m.norm.out_std = vec_from_json<kWrenchDim>(require(norm, "output_std"), "norm.output_std");
    if ((m.norm.in_std.array() <= 0.0).any() || (m.norm.out_std.array() <= 0.0).any()) {
      throw Error("schema", "normalization std must be > 0");
    }
    const auto& w = require(doc, "weights");
    m.params.w_in = matrix_from_json(require(w, "w_in"), "w_in", h, kSkillInputDim);
    m.params.w_x = matrix_from_json(require(w, "w_x"), "w_x", 4 * h, h);
    m.params.w_h = matrix_from_json(require(w, "w_h"), "w_h", 4 * h, h);
    m.params.b = matrix_from_json(require(w, "b"), "b", 4 * h, 1);
    m.params.w_out = matrix_from_json(require(w, "w_out"), "w_out", kWrenchDim, h);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", std::string("model file: ") + e.what());
  }
}

void save_model(const LstmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write model file " + path);
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw Error("io", "failed writing model file " + path);
}

LstmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open model file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace csf
