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

#ifndef TASKCODEC_LAYERS_H_
#define TASKCODEC_LAYERS_H_

// Minimal layer library with explicit backward passes. Each layer caches
// what its backward pass needs during Forward, so a layer instance serves
// one forward/backward pair at a time.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "taskcodec/kernels.h"
#include "taskcodec/rng.h"
#include "taskcodec/tensor.h"

namespace taskcodec {

template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  explicit Parameter(Shape s = {}) : value(s), grad(s) {}
  void ZeroGrad() { grad.Fill(T(0)); }
};

template <typename T>
struct NamedParameter {
  std::string name;
  Parameter<T>* param;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

template <typename T>
void ZeroGrads(const ParameterList<T>& params) {
  for (const auto& p : params) p.param->ZeroGrad();
}

template <typename T>
void SetTrainable(const ParameterList<T>& params, bool trainable) {
  for (const auto& p : params) p.param->trainable = trainable;
}

template <typename T>
size_t CountParameters(const ParameterList<T>& params) {
  size_t total = 0;
  for (const auto& p : params) total += p.param->value.size();
  return total;
}

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor<T> Forward(const Tensor<T>& x) = 0;
  // Gradient w.r.t. the input of the most recent Forward; parameter
  // gradients are accumulated.
  virtual Tensor<T> Backward(const Tensor<T>& dy) = 0;
  virtual void CollectParameters(const std::string& /*prefix*/,
                                 ParameterList<T>& /*out*/) {}
  virtual void Initialize(Rng& /*rng*/) {}
};

template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(int in_channels, int out_channels, ConvGeometry geometry);

  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  void CollectParameters(const std::string& prefix,
                         ParameterList<T>& out) override;
  void Initialize(Rng& rng) override;

  // Scales the initial weights; 0 gives an all-zero layer.
  void set_init_gain(double gain) { init_gain_ = gain; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  ConvGeometry geometry_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
  double init_gain_ = 1.0;
};

template <typename T>
class ConvTranspose2d : public Layer<T> {
 public:
  ConvTranspose2d(int in_channels, int out_channels, ConvGeometry geometry);

  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  void CollectParameters(const std::string& prefix,
                         ParameterList<T>& out) override;
  void Initialize(Rng& rng) override;

 private:
  ConvGeometry geometry_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class Elu : public Layer<T> {
 public:
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Tensor<T> output_;
};

// Clamps to [lo, hi] after adding `offset`; the backward pass is the
// identity so saturated outputs still receive a corrective gradient.
template <typename T>
class SaturatingOutput : public Layer<T> {
 public:
  SaturatingOutput(T offset, T lo, T hi) : offset_(offset), lo_(lo), hi_(hi) {}
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override { return dy; }

 private:
  T offset_, lo_, hi_;
};

// (N, C, H, W) -> (N, C*H*W, 1, 1).
template <typename T>
class Flatten : public Layer<T> {
 public:
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Shape input_shape_;
};

template <typename T>
class Sequential : public Layer<T> {
 public:
  Sequential() = default;

  template <typename L, typename... Args>
  L* Add(std::string name, Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.emplace_back(std::move(name), std::move(layer));
    return raw;
  }

  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  void CollectParameters(const std::string& prefix,
                         ParameterList<T>& out) override;
  void Initialize(Rng& rng) override;

  size_t size() const { return layers_.size(); }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Layer<T>>>> layers_;
};

// 1x1 reduce -> ELU -> 3x3 -> ELU -> 1x1 expand, plus identity skip.
template <typename T>
class ResidualBottleneck : public Layer<T> {
 public:
  explicit ResidualBottleneck(int channels);

  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  void CollectParameters(const std::string& prefix,
                         ParameterList<T>& out) override;
  void Initialize(Rng& rng) override { body_.Initialize(rng); }

 private:
  Sequential<T> body_;
};

// Joins a prefix and a name with '.', skipping an empty prefix.
std::string JoinName(const std::string& prefix, const std::string& name);

}  // namespace taskcodec

#endif  // TASKCODEC_LAYERS_H_
