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

#ifndef TASKCODEC_QUANTIZER_H_
#define TASKCODEC_QUANTIZER_H_

// Latent quantization. Training uses rounding with a straight-through
// (identity) gradient. Coding transmits s = round(y_hat - mu) and the
// decoder recovers y_hat = round(s + mu). Every rounding in the codec is
// round-half-away-from-zero (std::round).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "taskcodec/rng.h"
#include "taskcodec/tensor.h"

namespace taskcodec {

inline double RoundHalfAway(double v) { return std::round(v); }

enum class QuantizationMode {
  kStraightThrough,
  // Additive U(-1/2, 1/2) noise during training; kept for ablations only.
  kUniformNoise,
};

inline QuantizationMode ParseQuantizationMode(const std::string& name) {
  if (name == "ste" || name == "straight_through") return QuantizationMode::kStraightThrough;
  if (name == "noise" || name == "uniform_noise") return QuantizationMode::kUniformNoise;
  throw ConfigError("unknown quantization mode: " + name);
}

// Forward pass of the straight-through rounding; the backward pass is the
// identity, see SteRoundBackward.
template <typename T>
Tensor<T> SteRound(const Tensor<T>& y) {
  Tensor<T> out(y.shape());
  for (size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(static_cast<double>(y[i]))) {
      throw NumericError("ste_round: non-finite latent value");
    }
    out[i] = static_cast<T>(std::round(y[i]));
  }
  return out;
}

template <typename T>
Tensor<T> SteRoundBackward(const Tensor<T>& dy_hat) {
  return dy_hat;
}

template <typename T>
Tensor<T> AddUniformNoise(const Tensor<T>& y, Rng& rng) {
  Tensor<T> out(y.shape());
  for (size_t i = 0; i < y.size(); ++i) {
    out[i] = y[i] + static_cast<T>(rng.Uniform(-0.5, 0.5));
  }
  return out;
}

// Quantizes for the training graph (noise or rounding) or for evaluation
// (always rounding). Both training variants use an identity backward.
template <typename T>
Tensor<T> QuantizeLatent(const Tensor<T>& y, QuantizationMode mode,
                         bool training, Rng* rng) {
  if (training && mode == QuantizationMode::kUniformNoise && rng != nullptr) {
    return AddUniformNoise(y, *rng);
  }
  return SteRound(y);
}

struct SymbolPlane {
  Shape shape;
  std::vector<int32_t> symbols;
};

template <typename T>
SymbolPlane Symbolize(const Tensor<T>& y_hat, const Tensor<T>& mu) {
  RequireSameShape(y_hat.shape(), mu.shape(), "symbolize");
  SymbolPlane out{y_hat.shape(), std::vector<int32_t>(y_hat.size())};
  for (size_t i = 0; i < y_hat.size(); ++i) {
    const double v = y_hat[i];
    if (std::abs(v - std::round(v)) > 1e-9) {
      throw ContractViolation("symbolize: latent is not integer-valued");
    }
    out.symbols[i] = static_cast<int32_t>(RoundHalfAway(v - static_cast<double>(mu[i])));
  }
  return out;
}

template <typename T>
T DesymbolizeOne(int32_t symbol, T mu) {
  return static_cast<T>(RoundHalfAway(static_cast<double>(symbol) + static_cast<double>(mu)));
}

template <typename T>
Tensor<T> Desymbolize(const SymbolPlane& s, const Tensor<T>& mu) {
  RequireSameShape(s.shape, mu.shape(), "desymbolize");
  Tensor<T> out(s.shape);
  for (size_t i = 0; i < out.size(); ++i) out[i] = DesymbolizeOne(s.symbols[i], mu[i]);
  return out;
}

}  // namespace taskcodec

#endif  // TASKCODEC_QUANTIZER_H_
