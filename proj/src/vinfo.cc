// Copyright 2026 The TaskCodec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taskcodec/vinfo.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "taskcodec/layers.h"
#include "taskcodec/optimizer.h"
#include "taskcodec/rng.h"

namespace taskcodec {

const char* FamilyKindName(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kMarginalOnly: return "marginal_only";
    case FamilyKind::kLinearProbe: return "linear_probe";
    case FamilyKind::kShallowMlp: return "shallow_mlp";
    case FamilyKind::kConvProbe: return "conv_probe";
  }
  return "?";
}

FamilyKind ParseFamilyKind(const std::string& name) {
  for (FamilyKind k : {FamilyKind::kMarginalOnly, FamilyKind::kLinearProbe,
                       FamilyKind::kShallowMlp, FamilyKind::kConvProbe}) {
    if (name == FamilyKindName(k)) return k;
  }
  throw ConfigError("unknown predictive family: " + name);
}

void PredictiveFamilySpec::Validate() const {
  if (kind != FamilyKind::kMarginalOnly) {
    if (steps <= 0 || learning_rate <= 0.0 || batch_size <= 0) {
      throw ConfigError("vinfo: family budget must be positive");
    }
    if (width <= 0 || depth <= 0) throw ConfigError("vinfo: width and depth must be positive");
  }
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw ConfigError("vinfo: eval_fraction must be in (0, 1)");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("vinfo: validation_fraction must be in [0, 1)");
  }
  if (bootstrap_resamples < 0) throw ConfigError("vinfo: bootstrap_resamples must be >= 0");
}

void VInfoData::Validate() const {
  if (y.n() < 2) throw ConfigError("vinfo: need at least 2 samples");
  if (discrete()) {
    if (static_cast<int>(z_labels.size()) != y.n()) throw ShapeError("vinfo: label count mismatch");
    for (int32_t z : z_labels) {
      if (z < 0 || z >= num_classes) throw ConfigError("vinfo: label out of range");
    }
  } else {
    if (z_values.n() != y.n() || z_values.empty()) {
      throw ShapeError("vinfo: target count mismatch");
    }
  }
}

namespace {

constexpr double kMinVariance = 1e-6;

struct Split {
  std::vector<int> fit;
  std::vector<int> val;
  std::vector<int> eval;

  std::vector<int> train() const {
    std::vector<int> t = fit;
    t.insert(t.end(), val.begin(), val.end());
    return t;
  }
};

Split MakeSplit(int n, const PredictiveFamilySpec& spec, uint64_t seed) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(MixSeed(seed, 0x5b117));
  rng.Shuffle(order);
  const int n_eval = std::clamp(static_cast<int>(std::lround(n * spec.eval_fraction)), 1, n - 1);
  const int n_train = n - n_eval;
  const int n_val =
      std::clamp(static_cast<int>(std::lround(n_train * spec.validation_fraction)), 0, n_train - 1);
  Split s;
  s.eval.assign(order.begin(), order.begin() + n_eval);
  s.val.assign(order.begin() + n_eval, order.begin() + n_eval + n_val);
  s.fit.assign(order.begin() + n_eval + n_val, order.end());
  return s;
}

Tensor<float> Gather(const Tensor<float>& t, std::span<const int> idx) {
  Tensor<float> out(static_cast<int>(idx.size()), t.c(), t.h(), t.w());
  const size_t per = static_cast<size_t>(t.c()) * t.shape().plane();
  for (size_t i = 0; i < idx.size(); ++i) {
    std::copy(t.sample(idx[i]), t.sample(idx[i]) + per, out.sample(static_cast<int>(i)));
  }
  return out;
}

int OutputsOf(const VInfoData& d) { return d.discrete() ? d.num_classes : d.z_values.c(); }

// Constant predictor fitted on `train`: log-probabilities (discrete) or
// per-dimension mean and variance (continuous).
struct Marginal {
  std::vector<double> log_p;
  std::vector<double> mean;
  std::vector<double> var;
};

Marginal FitMarginal(const VInfoData& d, std::span<const int> train,
                     std::span<const int> held_out) {
  Marginal m;
  if (d.discrete()) {
    std::vector<double> counts(d.num_classes, 0.5);
    for (int i : train) counts[d.z_labels[i]] += 1.0;
    const double total = train.size() + 0.5 * d.num_classes;
    for (double c : counts) m.log_p.push_back(std::log(c / total));
  } else {
    const int dims = d.z_values.c();
    m.mean.assign(dims, 0.0);
    m.var.assign(dims, 0.0);
    for (int i : train)
      for (int k = 0; k < dims; ++k) m.mean[k] += d.z_values.at(i, k, 0, 0);
    for (double& v : m.mean) v /= train.size();
    // Variance comes from the held-out split, as for the trained families.
    for (int i : held_out)
      for (int k = 0; k < dims; ++k) {
        const double r = d.z_values.at(i, k, 0, 0) - m.mean[k];
        m.var[k] += r * r;
      }
    for (double& v : m.var) v = std::max(kMinVariance, v / held_out.size());
  }
  return m;
}

double GaussianNll(double z, double mean, double var) {
  const double r = z - mean;
  return 0.5 * std::log(2.0 * std::numbers::pi * var) + r * r / (2.0 * var);
}

double DiscreteNll(const float* scores, size_t stride, int k, int label) {
  double mx = scores[0];
  for (int j = 1; j < k; ++j) mx = std::max<double>(mx, scores[j * stride]);
  double sum = 0.0;
  for (int j = 0; j < k; ++j) sum += std::exp(scores[j * stride] - mx);
  return mx + std::log(sum) - scores[label * stride];
}

std::vector<double> MarginalNll(const VInfoData& d, const Marginal& m,
                                std::span<const int> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (int i : idx) {
    if (d.discrete()) {
      out.push_back(-m.log_p[d.z_labels[i]]);
    } else {
      double nll = 0.0;
      for (int k = 0; k < d.z_values.c(); ++k) {
        nll += GaussianNll(d.z_values.at(i, k, 0, 0), m.mean[k], m.var[k]);
      }
      out.push_back(nll);
    }
  }
  return out;
}

class GlobalAvgPool : public Layer<float> {
 public:
  Tensor<float> Forward(const Tensor<float>& x) override {
    shape_ = x.shape();
    Tensor<float> y(x.n(), x.c(), 1, 1);
    const size_t plane = x.shape().plane();
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        double s = 0.0;
        const float* p = x.sample(n) + c * plane;
        for (size_t i = 0; i < plane; ++i) s += p[i];
        y.at(n, c, 0, 0) = static_cast<float>(s / plane);
      }
    return y;
  }
  Tensor<float> Backward(const Tensor<float>& dy) override {
    Tensor<float> dx(shape_);
    const size_t plane = shape_.plane();
    for (int n = 0; n < shape_.n; ++n)
      for (int c = 0; c < shape_.c; ++c) {
        const float g = dy.at(n, c, 0, 0) / static_cast<float>(plane);
        float* p = dx.sample(n) + c * plane;
        std::fill(p, p + plane, g);
      }
    return dx;
  }

 private:
  Shape shape_;
};

struct Probe {
  Sequential<float> net;
  Conv2d<float>* head = nullptr;
};

void BuildProbe(Probe& p, const PredictiveFamilySpec& spec, const Shape& in, int outputs) {
  const ConvGeometry dense{1, 1, 0, 0};
  const int flat = in.c * in.h * in.w;
  switch (spec.kind) {
    case FamilyKind::kLinearProbe:
      p.net.Add<Flatten<float>>("flatten");
      p.head = p.net.Add<Conv2d<float>>("head", flat, outputs, dense);
      break;
    case FamilyKind::kShallowMlp: {
      p.net.Add<Flatten<float>>("flatten");
      int c = flat;
      for (int l = 0; l < spec.depth; ++l) {
        p.net.Add<Conv2d<float>>("hidden" + std::to_string(l), c, spec.width, dense);
        p.net.Add<Elu<float>>("act" + std::to_string(l));
        c = spec.width;
      }
      p.head = p.net.Add<Conv2d<float>>("head", c, outputs, dense);
      break;
    }
    case FamilyKind::kConvProbe: {
      int c = in.c;
      for (int l = 0; l < spec.depth; ++l) {
        p.net.Add<Conv2d<float>>("conv" + std::to_string(l), c, spec.width, ConvGeometry{3, 1, 1, 0});
        p.net.Add<Elu<float>>("act" + std::to_string(l));
        c = spec.width;
      }
      p.net.Add<GlobalAvgPool>("pool");
      p.head = p.net.Add<Conv2d<float>>("head", c, outputs, dense);
      break;
    }
    case FamilyKind::kMarginalOnly:
      break;
  }
}

Tensor<float> PredictAll(Probe& p, const Tensor<float>& x) {
  constexpr int kChunk = 256;
  Tensor<float> out;
  for (int b = 0; b < x.n(); b += kChunk) {
    Tensor<float> part = p.net.Forward(x.Slice(b, std::min(x.n(), b + kChunk)));
    if (out.empty()) out = Tensor<float>(x.n(), part.c(), 1, 1);
    std::copy(part.data(), part.data() + part.size(), out.sample(b));
  }
  return out;
}

// Per-sample NLL of predictions for samples `idx`; continuous targets use
// `var` per dimension.
std::vector<double> PredictionNll(const VInfoData& d, const Tensor<float>& pred,
                                  std::span<const int> idx, const std::vector<double>& var) {
  std::vector<double> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    const float* row = pred.sample(static_cast<int>(i));
    if (d.discrete()) {
      out[i] = DiscreteNll(row, 1, d.num_classes, d.z_labels[idx[i]]);
    } else {
      double nll = 0.0;
      for (int k = 0; k < d.z_values.c(); ++k) {
        nll += GaussianNll(d.z_values.at(idx[i], k, 0, 0), row[k], var[k]);
      }
      out[i] = nll;
    }
  }
  return out;
}

std::vector<double> ResidualVariance(const VInfoData& d, const Tensor<float>& pred,
                                     std::span<const int> idx) {
  const int dims = d.z_values.c();
  std::vector<double> var(dims, 0.0);
  for (size_t i = 0; i < idx.size(); ++i)
    for (int k = 0; k < dims; ++k) {
      const double r = d.z_values.at(idx[i], k, 0, 0) - pred.at(static_cast<int>(i), k, 0, 0);
      var[k] += r * r;
    }
  for (double& v : var) v = std::max(kMinVariance, v / idx.size());
  return var;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

// Standardizes every input feature with statistics of `fit`.
Tensor<float> Standardize(const Tensor<float>& y, std::span<const int> fit) {
  const size_t per = static_cast<size_t>(y.c()) * y.shape().plane();
  std::vector<double> mean(per, 0.0), sq(per, 0.0);
  for (int i : fit) {
    const float* p = y.sample(i);
    for (size_t k = 0; k < per; ++k) {
      mean[k] += p[k];
      sq[k] += static_cast<double>(p[k]) * p[k];
    }
  }
  Tensor<float> out(y.shape());
  std::vector<float> scale(per), shift(per);
  for (size_t k = 0; k < per; ++k) {
    const double m = mean[k] / fit.size();
    const double var = sq[k] / fit.size() - m * m;
    const double sd = var > 1e-12 ? std::sqrt(var) : 1.0;
    shift[k] = static_cast<float>(m);
    scale[k] = static_cast<float>(1.0 / sd);
  }
  for (int n = 0; n < y.n(); ++n) {
    const float* p = y.sample(n);
    float* q = out.sample(n);
    for (size_t k = 0; k < per; ++k) q[k] = (p[k] - shift[k]) * scale[k];
  }
  return out;
}

VEntropyEstimate TrainedEstimate(const VInfoData& d, const PredictiveFamilySpec& spec,
                                 const Split& split, const Marginal& marginal, uint64_t seed) {
  const int outputs = OutputsOf(d);
  const Tensor<float> y = Standardize(d.y, split.fit);
  Probe probe;
  BuildProbe(probe, spec, Shape{1, y.c(), y.h(), y.w()}, outputs);
  probe.head->set_init_gain(0.0);
  Rng init_rng(MixSeed(seed, 0x1417));
  probe.net.Initialize(init_rng);
  // Start from the constant predictor.
  auto& bias = probe.head->bias().value;
  for (int k = 0; k < outputs; ++k) {
    bias[k] = static_cast<float>(d.discrete() ? marginal.log_p[k] : marginal.mean[k]);
  }
  ParameterList<float> params;
  probe.net.CollectParameters("", params);
  AdamOptions opt_options;
  opt_options.learning_rate = spec.learning_rate;
  Adam<float> opt(params, opt_options);

  const std::vector<int>& select = split.val.empty() ? split.fit : split.val;
  const Tensor<float> x_select = Gather(y, select);
  std::vector<double> var;
  auto score = [&]() {
    const Tensor<float> pred = PredictAll(probe, x_select);
    if (!d.discrete()) var = ResidualVariance(d, pred, select);
    return Mean(PredictionNll(d, pred, select, var));
  };
  std::vector<Tensor<float>> best;
  std::vector<double> best_var;
  auto snapshot = [&]() {
    best.clear();
    for (const auto& p : params) best.push_back(p.param->value);
  };
  double best_score = score();
  snapshot();
  best_var = var;

  Rng rng(MixSeed(seed, 0x7a11));
  std::vector<int> order = split.fit;
  size_t cursor = order.size();
  const int batch = std::min<int>(spec.batch_size, static_cast<int>(order.size()));
  const int eval_every = std::max(1, spec.steps / 25);
  for (int step = 1; step <= spec.steps; ++step) {
    std::vector<int> idx;
    idx.reserve(batch);
    for (int b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        rng.Shuffle(order);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    const Tensor<float> pred = probe.net.Forward(Gather(y, idx));
    Tensor<float> grad(pred.shape());
    for (int i = 0; i < batch; ++i) {
      float* g = grad.sample(i);
      const float* s = pred.sample(i);
      if (d.discrete()) {
        double mx = s[0];
        for (int k = 1; k < outputs; ++k) mx = std::max<double>(mx, s[k]);
        double sum = 0.0;
        for (int k = 0; k < outputs; ++k) sum += std::exp(s[k] - mx);
        for (int k = 0; k < outputs; ++k) {
          const double p = std::exp(s[k] - mx) / sum;
          g[k] = static_cast<float>((p - (k == d.z_labels[idx[i]] ? 1.0 : 0.0)) / batch);
        }
      } else {
        for (int k = 0; k < outputs; ++k) {
          g[k] = static_cast<float>((s[k] - d.z_values.at(idx[i], k, 0, 0)) /
                                    (marginal.var[k] * batch));
        }
      }
    }
    opt.ZeroGrad();
    probe.net.Backward(grad);
    opt.Step();
    if (step % eval_every == 0 || step == spec.steps) {
      const double s = score();
      if (s < best_score) {
        best_score = s;
        snapshot();
        best_var = var;
      }
    }
  }
  for (size_t k = 0; k < params.size(); ++k) params[k].param->value = best[k];

  VEntropyEstimate est;
  est.eval_indices = split.eval;
  est.train_size = static_cast<int>(split.fit.size() + split.val.size());
  // Continuous targets keep the held-out residual variance of the selected step.
  est.eval_nll =
      PredictionNll(d, PredictAll(probe, Gather(y, split.eval)), split.eval, best_var);
  est.nats = Mean(est.eval_nll);
  return est;
}

VEntropyEstimate Estimate(const VInfoData& data, const PredictiveFamilySpec& family,
                          const Split& split, uint64_t seed) {
  const std::vector<int> train = split.train();
  const Marginal marginal = FitMarginal(data, train, split.val);
  if (family.kind == FamilyKind::kMarginalOnly) {
    VEntropyEstimate est;
    est.eval_indices = split.eval;
    est.train_size = static_cast<int>(train.size());
    est.eval_nll = MarginalNll(data, marginal, split.eval);
    est.nats = Mean(est.eval_nll);
    return est;
  }
  return TrainedEstimate(data, family, split, marginal, seed);
}

}  // namespace

VEntropyEstimate EstimateConditionalVEntropy(const VInfoData& data,
                                             const PredictiveFamilySpec& family,
                                             uint64_t seed) {
  family.Validate();
  data.Validate();
  return Estimate(data, family, MakeSplit(data.size(), family, seed), seed);
}

double VInfoReport::ToBits(double nats) { return nats / std::numbers::ln2; }

VInfoReport EstimateVInformation(const VInfoData& data, const PredictiveFamilySpec& family,
                                 uint64_t seed) {
  family.Validate();
  data.Validate();
  const Split split = MakeSplit(data.size(), family, seed);
  PredictiveFamilySpec marginal_spec = family;
  marginal_spec.kind = FamilyKind::kMarginalOnly;
  const VEntropyEstimate h_null = Estimate(data, marginal_spec, split, seed);
  const VEntropyEstimate h_y = Estimate(data, family, split, seed);

  VInfoReport r;
  r.h_given_null = h_null.nats;
  r.h_given_y = h_y.nats;
  r.i_v = r.h_given_null - r.h_given_y;
  r.family = family;
  r.seed = seed;
  r.train_size = h_y.train_size;
  r.eval_size = static_cast<int>(split.eval.size());

  const size_t n = split.eval.size();
  if (family.bootstrap_resamples > 1 && n > 0) {
    Rng rng(MixSeed(seed, 0xb0075));
    std::vector<double> means;
    for (int b = 0; b < family.bootstrap_resamples; ++b) {
      double s = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const size_t k = static_cast<size_t>(rng.UniformInt(0, static_cast<int>(n) - 1));
        s += h_null.eval_nll[k] - h_y.eval_nll[k];
      }
      means.push_back(s / n);
    }
    const double m = Mean(means);
    double var = 0.0;
    for (double v : means) var += (v - m) * (v - m);
    r.uncertainty = std::sqrt(var / (means.size() - 1));
  }
  return r;
}

namespace {

nlohmann::ordered_json FamilyJson(const PredictiveFamilySpec& f) {
  nlohmann::ordered_json j;
  j["kind"] = FamilyKindName(f.kind);
  j["width"] = f.width;
  j["depth"] = f.depth;
  j["steps"] = f.steps;
  j["learning_rate"] = f.learning_rate;
  j["batch_size"] = f.batch_size;
  j["eval_fraction"] = f.eval_fraction;
  j["validation_fraction"] = f.validation_fraction;
  j["bootstrap_resamples"] = f.bootstrap_resamples;
  return j;
}

}  // namespace

std::string VInfoReport::ToJson() const {
  nlohmann::ordered_json j;
  j["H_given_null"] = h_given_null;
  j["H_given_Y"] = h_given_y;
  j["I_V"] = i_v;
  j["uncertainty"] = uncertainty;
  j["units"] = "nats";
  j["H_given_null_bits"] = ToBits(h_given_null);
  j["H_given_Y_bits"] = ToBits(h_given_y);
  j["I_V_bits"] = ToBits(i_v);
  j["family"] = FamilyJson(family);
  j["seed"] = seed;
  j["train_size"] = train_size;
  j["eval_size"] = eval_size;
  return j.dump(2);
}

double SignTestPValue(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  const int k = std::min(wins, losses);
  double tail = 0.0;
  double c = 1.0;  // C(n, i)
  for (int i = 0; i <= k; ++i) {
    tail += c;
    c = c * (n - i) / (i + 1);
  }
  return std::min(1.0, 2.0 * tail / std::pow(2.0, n));
}

RepresentationComparison CompareRepresentations(const VInfoData& a, const VInfoData& b,
                                                const PredictiveFamilySpec& family,
                                                const std::vector<uint64_t>& seeds) {
  if (seeds.size() < 3) throw ConfigError("vinfo: comparison needs at least 3 seeds");
  if (a.size() != b.size() || a.num_classes != b.num_classes || a.z_labels != b.z_labels ||
      a.z_values.shape() != b.z_values.shape()) {
    throw ConfigError("vinfo: representations must share the task data");
  }
  RepresentationComparison out;
  out.seeds = seeds;
  for (uint64_t s : seeds) {
    const double ia = EstimateVInformation(a, family, s).i_v;
    const double ib = EstimateVInformation(b, family, s).i_v;
    out.i_v_a.push_back(ia);
    out.i_v_b.push_back(ib);
    if (ia > ib) ++out.a_wins;
    if (ib > ia) ++out.b_wins;
  }
  out.sign_test_p = SignTestPValue(out.a_wins, out.b_wins);
  return out;
}

std::string RepresentationComparison::ToJson() const {
  nlohmann::ordered_json j;
  j["seeds"] = seeds;
  j["I_V_a"] = i_v_a;
  j["I_V_b"] = i_v_b;
  j["a_wins"] = a_wins;
  j["b_wins"] = b_wins;
  j["sign_test_p"] = sign_test_p;
  return j.dump(2);
}

}  // namespace taskcodec
