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

#ifndef TASKCODEC_ENTROPY_MODEL_H_
#define TASKCODEC_ENTROPY_MODEL_H_

// Autoregressive conditional Gaussian entropy model.
//
// For every spatial position p (raster order) the model predicts a mean and
// scale for all latent channels at p from
//   * a masked convolution over the quantized latent at positions strictly
//     before p (all channels), and
//   * optionally, side features computed by a small residual network over a
//     fully-known side latent (the base representation).
// The two feature vectors are concatenated and fused by two 1x1 layers.
//
// The one-shot (training/evaluation) path and the sequential (decoding)
// path evaluate the same per-position routines, so they agree bit for bit.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "taskcodec/layers.h"
#include "taskcodec/tensor.h"

namespace taskcodec {

inline constexpr double kSigmaMin = 0.11;
inline constexpr double kProbabilityFloor = 0x1p-24;
inline constexpr int kCdfPrecision = 16;

struct EntropyModelSpec {
  int latent_channels = 64;
  int context_channels = 64;
  int context_kernel = 5;  // odd
  // Channels of the side latent; 0 disables the side branch (base layer).
  int side_input_channels = 0;
  int side_channels = 64;
  int side_blocks = 2;
  int fusion_width = 128;

  bool has_side() const { return side_input_channels > 0; }
  int causal_taps() const { return context_kernel * context_kernel / 2; }
  void Validate() const;
  bool operator==(const EntropyModelSpec&) const = default;
};

template <typename T>
struct GaussianFieldParams {
  Tensor<T> mu;
  Tensor<T> sigma;
};

template <typename T>
class EntropyModel {
 public:
  explicit EntropyModel(const EntropyModelSpec& spec);

  void Initialize(Rng& rng);
  void CollectParameters(const std::string& prefix, ParameterList<T>& out);
  const EntropyModelSpec& spec() const { return spec_; }

  // Masked-convolution features, (N, context_channels, H, W).
  Tensor<T> ContextFeatures(const Tensor<T>& y_hat) const;
  // Side-branch features, (N, side_channels, H, W). Not causal.
  Tensor<T> SideFeatures(const Tensor<T>& y_side);
  // `side` must be null exactly when the model has no side branch.
  GaussianFieldParams<T> PredictParams(const Tensor<T>& context,
                                       const Tensor<T>* side) const;

  // One-shot evaluation that caches intermediates for Backward.
  GaussianFieldParams<T> Forward(const Tensor<T>& y_hat, const Tensor<T>* y_side);
  // Accumulates parameter gradients and returns d/dy_hat through the
  // context path. Gradients never flow into the side latent.
  Tensor<T> Backward(const Tensor<T>& dmu, const Tensor<T>& dsigma);

  // Parameters at one position of sample n, reading only positions of
  // `y_hat` strictly before (y, x) in raster order. `side_features` is the
  // output of SideFeatures (or null without a side branch).
  void ParamsAt(const Tensor<T>& y_hat, const Tensor<T>* side_features, int n,
                int y, int x, std::span<T> mu, std::span<T> sigma) const;

 private:
  struct PositionCache;

  void ContextAt(const Tensor<T>& y_hat, int n, int y, int x, T* out) const;
  // Writes mu/sigma; `hidden` and `raw` receive intermediates when non-null.
  void FuseAt(const T* context, const T* side, T* mu, T* sigma, T* hidden,
              T* raw) const;
  void CheckSide(const Tensor<T>* side, int n, int h, int w) const;

  EntropyModelSpec spec_;
  // Layout (causal_taps, latent_channels, context_channels, 1).
  Parameter<T> context_weight_;
  Parameter<T> context_bias_;
  std::unique_ptr<Sequential<T>> side_net_;
  // Layout (fusion_in, fusion_width, 1, 1) and (fusion_width, 2M, 1, 1).
  Parameter<T> fuse0_weight_;
  Parameter<T> fuse0_bias_;
  Parameter<T> fuse1_weight_;
  Parameter<T> fuse1_bias_;

  // Training cache.
  Tensor<T> cached_y_hat_;
  Tensor<T> cached_side_;
  std::vector<T> cached_context_;  // [n][pos][Fc]
  std::vector<T> cached_hidden_;   // [n][pos][fusion_width] pre-activation
  std::vector<T> cached_raw_;      // [n][pos][2M]
};

// Sequential (decoder-side) parameter generation for one plane.
template <typename T>
class AutoregressiveDecoder {
 public:
  // `side_features` is a single-sample SideFeatures output or null.
  AutoregressiveDecoder(const EntropyModel<T>& model, int height, int width,
                        const Tensor<T>* side_features);

  int position() const { return position_; }
  int num_positions() const { return plane_.h() * plane_.w(); }
  bool done() const { return position_ == num_positions(); }

  // Parameters for all channels at the next undecoded position.
  void NextParams(std::span<T> mu, std::span<T> sigma) const;
  // Stores the decoded latent values for the next position and advances.
  void Commit(std::span<const T> values);

  const Tensor<T>& plane() const { return plane_; }

 private:
  const EntropyModel<T>& model_;
  const Tensor<T>* side_;
  Tensor<T> plane_;
  int position_ = 0;
};

// Parameters at raster `position` given a plane whose first
// `decoded_positions` positions are decoded. Throws ContractViolation when
// position != decoded_positions (a gap or a rewind).
template <typename T>
void AutoregressiveDecodeParams(const EntropyModel<T>& model,
                                const Tensor<T>& decoded_prefix,
                                int decoded_positions,
                                const Tensor<T>* side_features, int position,
                                std::span<T> mu, std::span<T> sigma);

// ---------------------------------------------------------------------------
// Rate estimation with the discretized Gaussian
//   P(v) = Phi((v - mu + 1/2) / sigma) - Phi((v - mu - 1/2) / sigma),
// floored at kProbabilityFloor.

// Probability of integer value v; computed in double.
double DiscretizedGaussianProbability(double v, double mu, double sigma);

// -log2 P(v) and its partial derivatives w.r.t. v, mu and sigma.
struct ElementRate {
  double bits;
  double dv;
  double dmu;
  double dsigma;
};
ElementRate DiscretizedGaussianBits(double v, double mu, double sigma);

template <typename T>
struct RateEstimate {
  double total_bits = 0.0;
  Tensor<T> bits;  // per element
};

// Requires integer-valued y_hat unless `allow_fractional` (noise training).
template <typename T>
RateEstimate<T> EstimateRate(const Tensor<T>& y_hat,
                             const GaussianFieldParams<T>& params,
                             bool allow_fractional = false);

// Gradients of scale * total_bits. Outputs are overwritten.
template <typename T>
void EstimateRateBackward(const Tensor<T>& y_hat,
                          const GaussianFieldParams<T>& params, double scale,
                          Tensor<T>& dy_hat, Tensor<T>& dmu, Tensor<T>& dsigma);

// ---------------------------------------------------------------------------
// Quantized CDF tables for the range coder.
//
// Each row covers symbols [s_min, s_max] followed by an escape symbol and
// has |range| + 2 entries: 0, cumulative frequencies, and 2^16. Every symbol
// (including the escape) has frequency >= 1.

struct QuantizedCdfTable {
  int32_t s_min = 0;
  int32_t s_max = 0;
  uint8_t precision = kCdfPrecision;
  std::vector<uint32_t> entries;  // rows back to back

  int symbols() const { return s_max - s_min + 1; }
  int row_length() const { return symbols() + 2; }
  size_t rows() const { return entries.size() / row_length(); }
  std::span<const uint32_t> row(size_t i) const {
    return std::span<const uint32_t>(entries).subspan(i * row_length(), row_length());
  }
};

// Appends one row for an element with the given parameters; symbol s
// stands for the latent value round(s + mu).
void AppendCdfRow(double mu, double sigma, int32_t s_min, int32_t s_max,
                  std::vector<uint32_t>& entries);

template <typename T>
QuantizedCdfTable ExportCdfs(const GaussianFieldParams<T>& params,
                             int32_t s_min, int32_t s_max);

// Throws ContractViolation when a row breaks the table invariants.
void ValidateCdfTable(const QuantizedCdfTable& table);

// Wire layout: {s_min: i32 LE, s_max: i32 LE, precision: u8}, then rows of
// u16 LE. The terminator 2^16 does not fit in 16 bits and is written as 0;
// readers restore it.
std::vector<uint8_t> SerializeCdfTable(const QuantizedCdfTable& table);
QuantizedCdfTable ParseCdfTable(std::span<const uint8_t> bytes);

}  // namespace taskcodec

#endif  // TASKCODEC_ENTROPY_MODEL_H_
