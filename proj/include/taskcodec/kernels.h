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

#ifndef TASKCODEC_KERNELS_H_
#define TASKCODEC_KERNELS_H_

// Convolution kernels. The functions in `taskcodec::kernels` are the
// production path: im2col + GEMM per sample, parallelized over the batch
// with OpenMP. `taskcodec::kernels::reference` holds direct serial loops
// that are kept as the test oracle and benchmark baseline.
//
// Layouts follow the common convention:
//   conv2d weight:           (out_channels, in_channels, k, k)
//   conv_transpose2d weight: (in_channels, out_channels, k, k)
//   bias:                    (1, out_channels, 1, 1)
// Backward functions accumulate into the weight and bias gradients and
// overwrite the input gradient.

#include "taskcodec/tensor.h"

namespace taskcodec {

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int output_pad = 0;  // transposed convolution only

  int ConvOut(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  int TransposedOut(int in) const {
    return (in - 1) * stride - 2 * pad + kernel + output_pad;
  }
};

namespace kernels {

template <typename T>
void Conv2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                   const Tensor<T>& bias, const ConvGeometry& g, Tensor<T>& y);

template <typename T>
void Conv2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>* dx,
                    Tensor<T>& dweight, Tensor<T>& dbias);

template <typename T>
void ConvTranspose2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                            const Tensor<T>& bias, const ConvGeometry& g,
                            Tensor<T>& y);

template <typename T>
void ConvTranspose2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                             const Tensor<T>& dy, const ConvGeometry& g,
                             Tensor<T>* dx, Tensor<T>& dweight,
                             Tensor<T>& dbias);

// Number of OpenMP threads the kernels will use.
int MaxThreads();

namespace reference {

template <typename T>
void Conv2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                   const Tensor<T>& bias, const ConvGeometry& g, Tensor<T>& y);

template <typename T>
void Conv2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>* dx,
                    Tensor<T>& dweight, Tensor<T>& dbias);

template <typename T>
void ConvTranspose2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                            const Tensor<T>& bias, const ConvGeometry& g,
                            Tensor<T>& y);

template <typename T>
void ConvTranspose2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                             const Tensor<T>& dy, const ConvGeometry& g,
                             Tensor<T>* dx, Tensor<T>& dweight,
                             Tensor<T>& dbias);

}  // namespace reference
}  // namespace kernels
}  // namespace taskcodec

#endif  // TASKCODEC_KERNELS_H_
