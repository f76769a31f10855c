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

#include "taskcodec/objectives.h"

#include <cmath>
#include <vector>

namespace taskcodec {

namespace {

template <typename T>
void RequireFinite(const Tensor<T>& t, const char* what) {
  for (size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(static_cast<double>(t[i]))) {
      throw NumericError(std::string(what) + ": non-finite value");
    }
  }
}

}  // namespace

template <typename T>
LossValue<T> Rmse(const Tensor<T>& prediction, const Tensor<T>& target) {
  RequireSameShape(prediction.shape(), target.shape(), "rmse");
  RequireFinite(prediction, "rmse prediction");
  RequireFinite(target, "rmse target");
  double sq = 0.0;
  for (size_t i = 0; i < prediction.size(); ++i) {
    const double d = static_cast<double>(prediction[i]) - target[i];
    sq += d * d;
  }
  const double count = static_cast<double>(prediction.size());
  LossValue<T> out{std::sqrt(sq / count), Tensor<T>(prediction.shape())};
  if (out.value > 0.0) {
    const double scale = 1.0 / (count * out.value);
    for (size_t i = 0; i < prediction.size(); ++i) {
      out.grad[i] = static_cast<T>(scale * (static_cast<double>(prediction[i]) - target[i]));
    }
  }
  return out;
}

template <typename T>
LossValue<T> CrossEntropy(const Tensor<T>& scores, const Tensor<T>& labels) {
  if (labels.c() != 1 || labels.n() != scores.n() || labels.h() != scores.h() ||
      labels.w() != scores.w()) {
    throw ShapeError("cross-entropy: labels " + labels.shape().ToString() +
                     " vs scores " + scores.shape().ToString());
  }
  RequireFinite(scores, "cross-entropy scores");
  const int classes = scores.c();
  const size_t plane = scores.shape().plane();
  const double pixels = static_cast<double>(scores.n()) * plane;
  LossValue<T> out{0.0, Tensor<T>(scores.shape())};
  std::vector<double> z(classes);
  for (int n = 0; n < scores.n(); ++n) {
    for (size_t p = 0; p < plane; ++p) {
      const int label = static_cast<int>(labels[static_cast<size_t>(n) * plane + p]);
      if (label < 0 || label >= classes) throw ShapeError("cross-entropy: label out of range");
      double mx = -INFINITY;
      for (int c = 0; c < classes; ++c) {
        z[c] = scores.sample(n)[c * plane + p];
        mx = std::max(mx, z[c]);
      }
      double s = 0.0;
      for (int c = 0; c < classes; ++c) s += std::exp(z[c] - mx);
      const double log_norm = mx + std::log(s);
      out.value += log_norm - z[label];
      for (int c = 0; c < classes; ++c) {
        const double prob = std::exp(z[c] - log_norm);
        out.grad.sample(n)[c * plane + p] =
            static_cast<T>((prob - (c == label ? 1.0 : 0.0)) / pixels);
      }
    }
  }
  out.value /= pixels;
  return out;
}

template <typename T>
LossValue<T> Distortion(TaskKind kind, const Tensor<T>& prediction,
                        const Tensor<T>& target) {
  return kind == TaskKind::kSegmentation ? CrossEntropy(prediction, target)
                                         : Rmse(prediction, target);
}

template <typename T>
BaseLossResult<T> BaseLoss(const Tensor<T>& image, TaskKind kind,
                           const Tensor<T>& target, const Tensor<T>& prediction,
                           const Tensor<T>* reconstruction, double total_bits,
                           double lambda, double beta) {
  if (beta < 0.0) throw ConfigError("base loss: beta must be >= 0");
  if (beta > 0.0 && reconstruction == nullptr) {
    throw ContractViolation("base loss: beta > 0 needs the auxiliary reconstruction");
  }
  const double pixels = static_cast<double>(image.n()) * image.h() * image.w();
  BaseLossResult<T> r;
  LossValue<T> d = Distortion(kind, prediction, target);
  r.breakdown.task_distortion = d.value;
  r.breakdown.rate_bits = total_bits / pixels;
  r.breakdown.lambda = lambda;
  r.breakdown.beta = beta;
  r.dprediction = std::move(d.grad);
  for (size_t i = 0; i < r.dprediction.size(); ++i) {
    r.dprediction[i] = static_cast<T>(lambda * r.dprediction[i]);
  }
  if (beta > 0.0) {
    LossValue<T> aux = Rmse(*reconstruction, image);
    r.breakdown.aux_recon = aux.value;
    r.dreconstruction = std::move(aux.grad);
    for (size_t i = 0; i < r.dreconstruction.size(); ++i) {
      r.dreconstruction[i] = static_cast<T>(beta * r.dreconstruction[i]);
    }
  } else if (reconstruction != nullptr) {
    r.breakdown.aux_recon = Rmse(*reconstruction, image).value;
  }
  r.breakdown.total = lambda * r.breakdown.task_distortion + r.breakdown.rate_bits +
                      beta * r.breakdown.aux_recon;
  r.dtotal_bits = 1.0 / pixels;
  return r;
}

template <typename T>
EnhancementLossResult<T> EnhancementLoss(TaskKind kind, const Tensor<T>& target,
                                         const Tensor<T>& prediction,
                                         double total_bits, size_t pixels,
                                         double lambda,
                                         const ParameterList<T>& frozen_base) {
  for (const auto& p : frozen_base) {
    if (p.param->trainable) {
      throw ContractViolation("enhancement loss: base parameter '" + p.name +
                              "' is not frozen");
    }
  }
  EnhancementLossResult<T> r;
  LossValue<T> d = Distortion(kind, prediction, target);
  r.breakdown.task_distortion = d.value;
  r.breakdown.conditional_rate_bits = total_bits / static_cast<double>(pixels);
  r.breakdown.lambda = lambda;
  r.breakdown.total = lambda * d.value + r.breakdown.conditional_rate_bits;
  r.dprediction = std::move(d.grad);
  for (size_t i = 0; i < r.dprediction.size(); ++i) {
    r.dprediction[i] = static_cast<T>(lambda * r.dprediction[i]);
  }
  r.dtotal_bits = 1.0 / static_cast<double>(pixels);
  return r;
}

#define TASKCODEC_OBJECTIVES(T)                                                 \
  template LossValue<T> Rmse(const Tensor<T>&, const Tensor<T>&);               \
  template LossValue<T> CrossEntropy(const Tensor<T>&, const Tensor<T>&);       \
  template LossValue<T> Distortion(TaskKind, const Tensor<T>&, const Tensor<T>&); \
  template BaseLossResult<T> BaseLoss(const Tensor<T>&, TaskKind,               \
                                      const Tensor<T>&, const Tensor<T>&,       \
                                      const Tensor<T>*, double, double, double); \
  template EnhancementLossResult<T> EnhancementLoss(                            \
      TaskKind, const Tensor<T>&, const Tensor<T>&, double, size_t, double,     \
      const ParameterList<T>&);

TASKCODEC_OBJECTIVES(float)
TASKCODEC_OBJECTIVES(double)

}  // namespace taskcodec
