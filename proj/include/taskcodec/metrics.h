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

#ifndef TASKCODEC_METRICS_H_
#define TASKCODEC_METRICS_H_

// Evaluation metrics and rate-distortion curve analytics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskcodec/tensor.h"

namespace taskcodec {

inline constexpr double kPsnrCapDb = 100.0;

// 10 log10(max^2 / MSE), capped at kPsnrCapDb when MSE < max^2 * 1e-10.
template <typename T>
double Psnr(const Tensor<T>& x, const Tensor<T>& x_hat, double max_value = 1.0);
double PsnrFromMse(double mse, double max_value = 1.0);

// Bits per pixel of one image.
double Bpp(double total_bits, int height, int width);

// Mean IoU over classes present in the prediction or the target.
// Throws ShapeError on empty or mismatched inputs and ConfigError on an
// out-of-range label.
double MeanIou(std::span<const int32_t> prediction, std::span<const int32_t> target,
               int num_classes);

// Argmax labels of (N, C, H, W) scores as (N*H*W) ids.
template <typename T>
std::vector<int32_t> ArgmaxLabels(const Tensor<T>& scores);
template <typename T>
std::vector<int32_t> LabelsFromTensor(const Tensor<T>& labels);

enum class MetricKind { kPsnr, kRmse, kMiou };

const char* MetricKindName(MetricKind kind);
MetricKind ParseMetricKind(const std::string& name);
// Higher-is-better quality for BD-rate: PSNR and mIoU as is, -RMSE.
double QualityOf(MetricKind kind, double metric_value);

struct RDPoint {
  std::string method;  // e.g. "beta_0.1"
  std::string mode;    // base | direct | scalable | standalone
  double lambda = 0.0;
  int64_t seed = 0;
  double bpp = 0.0;
  MetricKind metric_kind = MetricKind::kPsnr;
  double metric_value = 0.0;

  double quality() const { return QualityOf(metric_kind, metric_value); }
};

struct RDCurve {
  std::string id;
  MetricKind metric_kind = MetricKind::kPsnr;
  double beta = 0.0;
  std::string task;
  std::string dataset_hash;
  std::vector<RDPoint> points;

  // Sorts by bpp and checks the curve invariants (strictly increasing bpp,
  // positive bpp, one metric kind).
  void Normalize();
};

struct BdRateResult {
  bool overlap = false;
  double percent = 0.0;  // valid when overlap
};

// Bjontegaard-delta rate of `test` against `anchor`: piecewise cubic
// Hermite fits of log10(bpp) over quality, averaged over the overlapping
// quality interval. Negative means `test` needs less rate. Each curve needs
// at least four distinct qualities.
BdRateResult BdRate(const RDCurve& anchor, const RDCurve& test);

std::string BdRateJson(const std::string& anchor_id, const std::string& test_id,
                       const BdRateResult& result);

// CSV columns: method,mode,lambda,seed,bpp,metric_kind,metric_value.
// Numbers are written with 17 significant digits.
std::string CurvesToCsv(std::span<const RDPoint> points);
std::vector<RDPoint> CurvesFromCsv(const std::string& text);

// Points of one (method, mode, seed) as a curve.
RDCurve SelectCurve(std::span<const RDPoint> points, const std::string& method,
                    const std::string& mode, std::optional<int64_t> seed);

}  // namespace taskcodec

#endif  // TASKCODEC_METRICS_H_
