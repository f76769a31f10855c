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

#ifndef TASKCODEC_OBJECTIVES_H_
#define TASKCODEC_OBJECTIVES_H_

// Training objectives. Rates enter the losses in bits per input pixel.
//
//   base:        lambda_b * d_b(Z_b_hat, Z_b) + R_b + beta * RMSE(X_hat, X)
//   enhancement: lambda_e * d_e(Z_e_hat, Z_e) + R_e|b
//
// Each loss returns its exact breakdown plus the gradients of the total
// w.r.t. the predictions and the total bit count.

#include <cstddef>

#include "taskcodec/layers.h"
#include "taskcodec/transforms.h"

namespace taskcodec {

inline constexpr double kDefaultBeta = 0.1;

template <typename T>
struct LossValue {
  double value = 0.0;
  Tensor<T> grad;  // d value / d prediction
};

// Root mean squared error over all elements.
template <typename T>
LossValue<T> Rmse(const Tensor<T>& prediction, const Tensor<T>& target);

// Mean per-pixel cross-entropy (nats). `labels` holds class ids as
// integer-valued entries with shape (N, 1, H, W).
template <typename T>
LossValue<T> CrossEntropy(const Tensor<T>& scores, const Tensor<T>& labels);

// RMSE for reconstruction and depth, cross-entropy for segmentation.
template <typename T>
LossValue<T> Distortion(TaskKind kind, const Tensor<T>& prediction,
                        const Tensor<T>& target);

template <typename T>
double AuxReconstructionTerm(const Tensor<T>& image, const Tensor<T>& reconstruction) {
  return Rmse(reconstruction, image).value;
}

struct BaseLossBreakdown {
  double task_distortion = 0.0;
  double rate_bits = 0.0;  // bits per pixel
  double aux_recon = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
};

struct EnhancementLossBreakdown {
  double task_distortion = 0.0;
  double conditional_rate_bits = 0.0;  // bits per pixel
  double total = 0.0;
  double lambda = 0.0;
};

template <typename T>
struct BaseLossResult {
  BaseLossBreakdown breakdown;
  Tensor<T> dprediction;
  Tensor<T> dreconstruction;  // empty when beta == 0
  double dtotal_bits = 0.0;
};

template <typename T>
struct EnhancementLossResult {
  EnhancementLossBreakdown breakdown;
  Tensor<T> dprediction;
  double dtotal_bits = 0.0;
};

// `reconstruction` is the auxiliary head output on the same quantized
// latent used for the rate; it may be null only when beta == 0.
template <typename T>
BaseLossResult<T> BaseLoss(const Tensor<T>& image, TaskKind kind,
                           const Tensor<T>& target, const Tensor<T>& prediction,
                           const Tensor<T>* reconstruction, double total_bits,
                           double lambda, double beta);

// `frozen_base` lists the base analysis parameters; any of them still
// marked trainable is a contract violation.
template <typename T>
EnhancementLossResult<T> EnhancementLoss(TaskKind kind, const Tensor<T>& target,
                                         const Tensor<T>& prediction,
                                         double total_bits, size_t pixels,
                                         double lambda,
                                         const ParameterList<T>& frozen_base);

}  // namespace taskcodec

#endif  // TASKCODEC_OBJECTIVES_H_
