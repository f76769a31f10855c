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

// Parallel kernels against the serial reference loops, at the layer shapes
// of a 64x64 base model.

#include <benchmark/benchmark.h>

#include "taskcodec/kernels.h"
#include "taskcodec/rng.h"

namespace tc = taskcodec;

namespace {

tc::Tensor<float> Random(tc::Shape s, uint64_t seed) {
  tc::Rng rng(seed);
  tc::Tensor<float> t(s);
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.Normal(0.0, 1.0));
  return t;
}

// Args: batch, channels, spatial size.
void ConvArgs(benchmark::internal::Benchmark* b) {
  b->Args({16, 8, 32})->Args({16, 32, 16})->Args({16, 64, 4});
}

template <bool kReference>
void BM_Conv2dForward(benchmark::State& state) {
  const int n = state.range(0), c = state.range(1), s = state.range(2);
  const tc::ConvGeometry g{5, 2, 2, 0};
  const auto x = Random({n, c, s, s}, 1);
  const auto w = Random({c, c, 5, 5}, 2);
  const auto b = Random({1, c, 1, 1}, 3);
  tc::Tensor<float> y;
  for (auto _ : state) {
    if constexpr (kReference) {
      tc::kernels::reference::Conv2dForward(x, w, b, g, y);
    } else {
      tc::kernels::Conv2dForward(x, w, b, g, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool kReference>
void BM_Conv2dBackward(benchmark::State& state) {
  const int n = state.range(0), c = state.range(1), s = state.range(2);
  const tc::ConvGeometry g{5, 2, 2, 0};
  const auto x = Random({n, c, s, s}, 1);
  const auto w = Random({c, c, 5, 5}, 2);
  const auto dy = Random({n, c, g.ConvOut(s), g.ConvOut(s)}, 4);
  tc::Tensor<float> dx, dw(w.shape()), db(tc::Shape{1, c, 1, 1});
  for (auto _ : state) {
    if constexpr (kReference) {
      tc::kernels::reference::Conv2dBackward(x, w, dy, g, &dx, dw, db);
    } else {
      tc::kernels::Conv2dBackward(x, w, dy, g, &dx, dw, db);
    }
    benchmark::DoNotOptimize(dx.data());
  }
}

template <bool kReference>
void BM_ConvTranspose2dForward(benchmark::State& state) {
  const int n = state.range(0), c = state.range(1), s = state.range(2);
  const tc::ConvGeometry g{5, 2, 2, 1};
  const auto x = Random({n, c, s / 2, s / 2}, 1);
  const auto w = Random({c, c, 5, 5}, 2);
  const auto b = Random({1, c, 1, 1}, 3);
  tc::Tensor<float> y;
  for (auto _ : state) {
    if constexpr (kReference) {
      tc::kernels::reference::ConvTranspose2dForward(x, w, b, g, y);
    } else {
      tc::kernels::ConvTranspose2dForward(x, w, b, g, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

BENCHMARK(BM_Conv2dForward<false>)->Name("conv2d_forward/parallel")->Apply(ConvArgs);
BENCHMARK(BM_Conv2dForward<true>)->Name("conv2d_forward/reference")->Apply(ConvArgs);
BENCHMARK(BM_Conv2dBackward<false>)->Name("conv2d_backward/parallel")->Apply(ConvArgs);
BENCHMARK(BM_Conv2dBackward<true>)->Name("conv2d_backward/reference")->Apply(ConvArgs);
BENCHMARK(BM_ConvTranspose2dForward<false>)
    ->Name("conv_transpose2d_forward/parallel")
    ->Apply(ConvArgs);
BENCHMARK(BM_ConvTranspose2dForward<true>)
    ->Name("conv_transpose2d_forward/reference")
    ->Apply(ConvArgs);

}  // namespace

BENCHMARK_MAIN();
