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

#include <gtest/gtest.h>

#include "taskcodec/kernels.h"
#include "taskcodec/layers.h"
#include "test_util.h"

namespace taskcodec {
namespace {

using testing::Dot;
using testing::ExpectGradientMatches;
using testing::RandomTensor;

struct Case {
  int n, cin, cout, h, w;
  ConvGeometry g;
};

const Case kCases[] = {
    {2, 3, 5, 9, 7, {3, 1, 1, 0}},
    {1, 4, 6, 16, 16, {5, 2, 2, 0}},
    {3, 2, 3, 8, 8, {1, 1, 0, 0}},
    {2, 5, 4, 6, 10, {3, 2, 1, 0}},
};

TEST(Kernels, ConvForwardMatchesReference) {
  Rng rng(11);
  for (const Case& c : kCases) {
    const auto x = RandomTensor<float>({c.n, c.cin, c.h, c.w}, rng);
    const auto wt = RandomTensor<float>({c.cout, c.cin, c.g.kernel, c.g.kernel}, rng);
    const auto b = RandomTensor<float>({1, c.cout, 1, 1}, rng);
    Tensor<float> y, yr;
    kernels::Conv2dForward(x, wt, b, c.g, y);
    kernels::reference::Conv2dForward(x, wt, b, c.g, yr);
    ASSERT_EQ(y.shape(), yr.shape());
    for (size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], yr[i], 1e-5);
  }
}

TEST(Kernels, ConvBackwardMatchesReference) {
  Rng rng(12);
  for (const Case& c : kCases) {
    const auto x = RandomTensor<double>({c.n, c.cin, c.h, c.w}, rng);
    const auto wt = RandomTensor<double>({c.cout, c.cin, c.g.kernel, c.g.kernel}, rng);
    const auto b = RandomTensor<double>({1, c.cout, 1, 1}, rng);
    Tensor<double> y;
    kernels::Conv2dForward(x, wt, b, c.g, y);
    const auto dy = RandomTensor<double>(y.shape(), rng);
    Tensor<double> dx, dxr, dw(wt.shape()), db(b.shape()), dwr(wt.shape()), dbr(b.shape());
    kernels::Conv2dBackward(x, wt, dy, c.g, &dx, dw, db);
    kernels::reference::Conv2dBackward(x, wt, dy, c.g, &dxr, dwr, dbr);
    for (size_t i = 0; i < dx.size(); ++i) EXPECT_NEAR(dx[i], dxr[i], 1e-10);
    for (size_t i = 0; i < dw.size(); ++i) EXPECT_NEAR(dw[i], dwr[i], 1e-10);
    for (size_t i = 0; i < db.size(); ++i) EXPECT_NEAR(db[i], dbr[i], 1e-10);
  }
}

TEST(Kernels, TransposedConvMatchesReference) {
  Rng rng(13);
  const ConvGeometry g{3, 2, 1, 1};
  const auto x = RandomTensor<double>({2, 4, 5, 6}, rng);
  const auto wt = RandomTensor<double>({4, 3, 3, 3}, rng);
  const auto b = RandomTensor<double>({1, 3, 1, 1}, rng);
  Tensor<double> y, yr;
  kernels::ConvTranspose2dForward(x, wt, b, g, y);
  kernels::reference::ConvTranspose2dForward(x, wt, b, g, yr);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 10, 12}));
  for (size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], yr[i], 1e-10);
  const auto dy = RandomTensor<double>(y.shape(), rng);
  Tensor<double> dx, dxr, dw(wt.shape()), db(b.shape()), dwr(wt.shape()), dbr(b.shape());
  kernels::ConvTranspose2dBackward(x, wt, dy, g, &dx, dw, db);
  kernels::reference::ConvTranspose2dBackward(x, wt, dy, g, &dxr, dwr, dbr);
  for (size_t i = 0; i < dx.size(); ++i) EXPECT_NEAR(dx[i], dxr[i], 1e-10);
  for (size_t i = 0; i < dw.size(); ++i) EXPECT_NEAR(dw[i], dwr[i], 1e-10);
}

// The transposed convolution is the adjoint of the strided convolution.
TEST(Kernels, TransposedConvIsAdjoint) {
  Rng rng(14);
  const ConvGeometry g{3, 2, 1, 1};
  const auto x = RandomTensor<double>({1, 3, 8, 8}, rng);
  const auto wt = RandomTensor<double>({4, 3, 3, 3}, rng);
  const Tensor<double> zero_b(1, 4, 1, 1), zero_bt(1, 3, 1, 1);
  Tensor<double> y;
  kernels::reference::Conv2dForward(x, wt, zero_b, g, y);
  const auto v = RandomTensor<double>(y.shape(), rng);
  Tensor<double> xt;
  kernels::reference::ConvTranspose2dForward(v, wt, zero_bt, g, xt);
  ASSERT_EQ(xt.shape(), x.shape());
  EXPECT_NEAR(Dot(y, v), Dot(x, xt), 1e-9);
}

TEST(Layers, ConvGradientCheck) {
  Rng rng(21);
  Conv2d<double> conv(3, 4, {3, 2, 1, 0});
  conv.Initialize(rng);
  auto x = RandomTensor<double>({2, 3, 6, 6}, rng);
  const auto probe = RandomTensor<double>({2, 4, 3, 3}, rng);
  auto loss = [&]() { return Dot(conv.Forward(x), probe); };
  loss();
  conv.weight().ZeroGrad();
  conv.bias().ZeroGrad();
  const auto dx = conv.Backward(probe);
  ExpectGradientMatches(x, dx, loss, rng);
  ExpectGradientMatches(conv.weight().value, conv.weight().grad, loss, rng);
  ExpectGradientMatches(conv.bias().value, conv.bias().grad, loss, rng);
}

TEST(Layers, TransposedConvAndEluGradientCheck) {
  Rng rng(22);
  Sequential<double> net;
  net.Add<ConvTranspose2d<double>>("up", 3, 2, ConvGeometry{3, 2, 1, 1});
  net.Add<Elu<double>>("act");
  net.Initialize(rng);
  ParameterList<double> params;
  net.CollectParameters("net", params);
  auto x = RandomTensor<double>({2, 3, 4, 4}, rng);
  const auto probe = RandomTensor<double>({2, 2, 8, 8}, rng);
  auto loss = [&]() { return Dot(net.Forward(x), probe); };
  loss();
  ZeroGrads(params);
  const auto dx = net.Backward(probe);
  ExpectGradientMatches(x, dx, loss, rng);
  for (const auto& p : params) ExpectGradientMatches(p.param->value, p.param->grad, loss, rng);
}

TEST(Layers, ResidualBottleneckGradientCheck) {
  Rng rng(23);
  ResidualBottleneck<double> block(4);
  block.Initialize(rng);
  ParameterList<double> params;
  block.CollectParameters("res", params);
  // Expand convs start at zero; perturb so every path carries gradient.
  for (const auto& p : params)
    for (size_t i = 0; i < p.param->value.size(); ++i) p.param->value[i] += rng.Uniform(-0.2, 0.2);
  auto x = RandomTensor<double>({1, 4, 5, 5}, rng);
  const auto probe = RandomTensor<double>({1, 4, 5, 5}, rng);
  auto loss = [&]() { return Dot(block.Forward(x), probe); };
  loss();
  ZeroGrads(params);
  const auto dx = block.Backward(probe);
  ExpectGradientMatches(x, dx, loss, rng);
  for (const auto& p : params) ExpectGradientMatches(p.param->value, p.param->grad, loss, rng);
}

TEST(Layers, SaturatingOutputClampsWithIdentityGradient) {
  SaturatingOutput<double> out(0.5, 0.0, 1.0);
  Tensor<double> x(1, 1, 1, 3);
  x[0] = -2.0;
  x[1] = 0.1;
  x[2] = 3.0;
  const auto y = out.Forward(x);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_DOUBLE_EQ(y[1], 0.6);
  EXPECT_EQ(y[2], 1.0);
  Tensor<double> dy(1, 1, 1, 3, 1.0);
  const auto dx = out.Backward(dy);
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(dx[i], 1.0);
}

TEST(Tensor, ConcatSplitRoundTrip) {
  Rng rng(31);
  const auto a = RandomTensor<float>({2, 3, 4, 4}, rng);
  const auto b = RandomTensor<float>({2, 5, 4, 4}, rng);
  const auto c = ConcatChannels(a, b);
  ASSERT_EQ(c.shape(), (Shape{2, 8, 4, 4}));
  const auto a2 = SplitChannels(c, 0, 3);
  const auto b2 = SplitChannels(c, 3, 8);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], a2[i]);
  for (size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b[i], b2[i]);
  EXPECT_THROW(ConcatChannels(a, Tensor<float>(2, 1, 3, 4)), ShapeError);
}

}  // namespace
}  // namespace taskcodec
