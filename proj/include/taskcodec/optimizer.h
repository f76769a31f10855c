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

#ifndef TASKCODEC_OPTIMIZER_H_
#define TASKCODEC_OPTIMIZER_H_

#include <cmath>
#include <vector>

#include "taskcodec/layers.h"

namespace taskcodec {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 0.0;
};

// Adam over a fixed parameter list. Parameters marked non-trainable are
// skipped and never modified.
template <typename T>
class Adam {
 public:
  Adam(ParameterList<T> params, AdamOptions options)
      : params_(std::move(params)), options_(options) {
    for (const auto& p : params_) {
      m_.emplace_back(p.param->value.size(), 0.0);
      v_.emplace_back(p.param->value.size(), 0.0);
    }
  }

  // Returns the pre-clip global gradient norm.
  double Step() {
    double sq = 0.0;
    for (const auto& p : params_) {
      if (!p.param->trainable) continue;
      for (size_t i = 0; i < p.param->grad.size(); ++i) {
        const double g = p.param->grad[i];
        sq += g * g;
      }
    }
    const double norm = std::sqrt(sq);
    double scale = 1.0;
    if (options_.clip_norm > 0.0 && norm > options_.clip_norm) {
      scale = options_.clip_norm / norm;
    }
    ++step_;
    const double c1 = 1.0 - std::pow(options_.beta1, step_);
    const double c2 = 1.0 - std::pow(options_.beta2, step_);
    const double lr = options_.learning_rate * std::sqrt(c2) / c1;
    for (size_t k = 0; k < params_.size(); ++k) {
      Parameter<T>* p = params_[k].param;
      if (!p->trainable) continue;
      auto& m = m_[k];
      auto& v = v_[k];
      for (size_t i = 0; i < p->value.size(); ++i) {
        const double g = scale * p->grad[i];
        m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
        v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
        p->value[i] -= static_cast<T>(lr * m[i] / (std::sqrt(v[i]) + options_.epsilon));
      }
    }
    return norm;
  }

  void ZeroGrad() { ZeroGrads(params_); }
  long step() const { return step_; }
  const ParameterList<T>& params() const { return params_; }

 private:
  ParameterList<T> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_ = 0;
};

}  // namespace taskcodec

#endif  // TASKCODEC_OPTIMIZER_H_
