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

#include "taskcodec/layers.h"

#include <algorithm>
#include <cmath>

namespace taskcodec {

std::string JoinName(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

namespace {

template <typename T>
void UniformFill(Tensor<T>& t, double bound, Rng& rng) {
  for (size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<T>(rng.Uniform(-bound, bound));
  }
}

}  // namespace

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, ConvGeometry geometry)
    : geometry_(geometry),
      weight_(Shape{out_channels, in_channels, geometry.kernel, geometry.kernel}),
      bias_(Shape{1, out_channels, 1, 1}) {}

template <typename T>
Tensor<T> Conv2d<T>::Forward(const Tensor<T>& x) {
  input_ = x;
  Tensor<T> y;
  kernels::Conv2dForward(x, weight_.value, bias_.value, geometry_, y);
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::Backward(const Tensor<T>& dy) {
  Tensor<T> dx;
  kernels::Conv2dBackward(input_, weight_.value, dy, geometry_, &dx,
                          weight_.grad, bias_.grad);
  return dx;
}

template <typename T>
void Conv2d<T>::CollectParameters(const std::string& prefix,
                                  ParameterList<T>& out) {
  out.push_back({JoinName(prefix, "weight"), &weight_});
  out.push_back({JoinName(prefix, "bias"), &bias_});
}

template <typename T>
void Conv2d<T>::Initialize(Rng& rng) {
  const Shape& s = weight_.value.shape();
  const double fan_in = static_cast<double>(s.c) * s.h * s.w;
  UniformFill(weight_.value, init_gain_ * std::sqrt(3.0 / fan_in), rng);
  bias_.value.Fill(T(0));
}

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(int in_channels, int out_channels,
                                    ConvGeometry geometry)
    : geometry_(geometry),
      weight_(Shape{in_channels, out_channels, geometry.kernel, geometry.kernel}),
      bias_(Shape{1, out_channels, 1, 1}) {}

template <typename T>
Tensor<T> ConvTranspose2d<T>::Forward(const Tensor<T>& x) {
  input_ = x;
  Tensor<T> y;
  kernels::ConvTranspose2dForward(x, weight_.value, bias_.value, geometry_, y);
  return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::Backward(const Tensor<T>& dy) {
  Tensor<T> dx;
  kernels::ConvTranspose2dBackward(input_, weight_.value, dy, geometry_, &dx,
                                   weight_.grad, bias_.grad);
  return dx;
}

template <typename T>
void ConvTranspose2d<T>::CollectParameters(const std::string& prefix,
                                           ParameterList<T>& out) {
  out.push_back({JoinName(prefix, "weight"), &weight_});
  out.push_back({JoinName(prefix, "bias"), &bias_});
}

template <typename T>
void ConvTranspose2d<T>::Initialize(Rng& rng) {
  const Shape& s = weight_.value.shape();
  // Each output pixel sees roughly in_channels * (k / stride)^2 inputs.
  const double taps = static_cast<double>(s.h) * s.w /
                      (geometry_.stride * geometry_.stride);
  const double fan_in = std::max(1.0, s.n * taps);
  UniformFill(weight_.value, std::sqrt(3.0 / fan_in), rng);
  bias_.value.Fill(T(0));
}

template <typename T>
Tensor<T> Elu<T>::Forward(const Tensor<T>& x) {
  output_ = Tensor<T>(x.shape());
  for (size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    output_[i] = v > T(0) ? v : std::expm1(v);
  }
  return output_;
}

template <typename T>
Tensor<T> Elu<T>::Backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.shape());
  for (size_t i = 0; i < dy.size(); ++i) {
    const T o = output_[i];
    dx[i] = o > T(0) ? dy[i] : dy[i] * (o + T(1));
  }
  return dx;
}

template <typename T>
Tensor<T> SaturatingOutput<T>::Forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = std::clamp(x[i] + offset_, lo_, hi_);
  }
  return y;
}

template <typename T>
Tensor<T> Flatten<T>::Forward(const Tensor<T>& x) {
  input_shape_ = x.shape();
  Tensor<T> y = x;
  y.Reshape({x.n(), x.c() * x.h() * x.w(), 1, 1});
  return y;
}

template <typename T>
Tensor<T> Flatten<T>::Backward(const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  dx.Reshape(input_shape_);
  return dx;
}

template <typename T>
Tensor<T> Sequential<T>::Forward(const Tensor<T>& x) {
  if (layers_.empty()) return x;
  Tensor<T> h = layers_.front().second->Forward(x);
  for (size_t i = 1; i < layers_.size(); ++i) h = layers_[i].second->Forward(h);
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::Backward(const Tensor<T>& dy) {
  if (layers_.empty()) return dy;
  Tensor<T> g = layers_.back().second->Backward(dy);
  for (size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i].second->Backward(g);
  return g;
}

template <typename T>
void Sequential<T>::CollectParameters(const std::string& prefix,
                                      ParameterList<T>& out) {
  for (auto& [name, layer] : layers_) {
    layer->CollectParameters(JoinName(prefix, name), out);
  }
}

template <typename T>
void Sequential<T>::Initialize(Rng& rng) {
  for (auto& [name, layer] : layers_) layer->Initialize(rng);
}

template <typename T>
ResidualBottleneck<T>::ResidualBottleneck(int channels) {
  const int mid = std::max(1, channels / 2);
  body_.template Add<Conv2d<T>>("reduce", channels, mid, ConvGeometry{1, 1, 0});
  body_.template Add<Elu<T>>("act0");
  body_.template Add<Conv2d<T>>("conv", mid, mid, ConvGeometry{3, 1, 1});
  body_.template Add<Elu<T>>("act1");
  auto* expand =
      body_.template Add<Conv2d<T>>("expand", mid, channels, ConvGeometry{1, 1, 0});
  // Blocks start as the identity map.
  expand->set_init_gain(0.0);
}

template <typename T>
Tensor<T> ResidualBottleneck<T>::Forward(const Tensor<T>& x) {
  Tensor<T> y = body_.Forward(x);
  for (size_t i = 0; i < y.size(); ++i) y[i] += x[i];
  return y;
}

template <typename T>
Tensor<T> ResidualBottleneck<T>::Backward(const Tensor<T>& dy) {
  Tensor<T> dx = body_.Backward(dy);
  for (size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  return dx;
}

template <typename T>
void ResidualBottleneck<T>::CollectParameters(const std::string& prefix,
                                              ParameterList<T>& out) {
  body_.CollectParameters(prefix, out);
}

#define TASKCODEC_LAYERS(T)              \
  template class Conv2d<T>;              \
  template class ConvTranspose2d<T>;     \
  template class Elu<T>;                 \
  template class SaturatingOutput<T>;    \
  template class Flatten<T>;             \
  template class Sequential<T>;          \
  template class ResidualBottleneck<T>;

TASKCODEC_LAYERS(float)
TASKCODEC_LAYERS(double)

}  // namespace taskcodec
