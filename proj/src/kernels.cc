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

#include "taskcodec/kernels.h"

#include <omp.h>

#include <Eigen/Core>
#include <algorithm>
#include <vector>

namespace taskcodec {
namespace kernels {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// cols has shape (channels * k * k, out_h * out_w).
template <typename T>
void Im2Col(const T* src, int channels, int height, int width,
            const ConvGeometry& g, int out_h, int out_w, T* cols) {
  const int k = g.kernel;
  const size_t out_plane = static_cast<size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    const T* plane = src + static_cast<size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + (static_cast<size_t>(c) * k * k + ky * k + kx) * out_plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* dst = row + static_cast<size_t>(oy) * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* src_row = plane + static_cast<size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < width) ? src_row[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col; accumulates into dst.
template <typename T>
void Col2Im(const T* cols, int channels, int height, int width,
            const ConvGeometry& g, int out_h, int out_w, T* dst) {
  const int k = g.kernel;
  const size_t out_plane = static_cast<size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    T* plane = dst + static_cast<size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row =
            cols + (static_cast<size_t>(c) * k * k + ky * k + kx) * out_plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= height) continue;
          T* dst_row = plane + static_cast<size_t>(iy) * width;
          const T* src = row + static_cast<size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < width) dst_row[ix] += src[ox];
          }
        }
      }
    }
  }
}

bool IsPointwise(const ConvGeometry& g) {
  return g.kernel == 1 && g.stride == 1 && g.pad == 0;
}

// Sums per-thread partial gradients in thread order.
template <typename T>
void ReducePartials(const std::vector<AlignedVector<T>>& partials, T* out) {
  for (const auto& p : partials) {
    for (size_t i = 0; i < p.size(); ++i) out[i] += p[i];
  }
}

template <typename T>
void AddBias(const Tensor<T>& bias, Tensor<T>& y, int n) {
  const size_t plane = y.shape().plane();
  T* base = y.sample(n);
  for (int c = 0; c < y.c(); ++c) {
    const T b = bias[c];
    T* p = base + c * plane;
    for (size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

}  // namespace

int MaxThreads() { return omp_get_max_threads(); }

template <typename T>
void Conv2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                   const Tensor<T>& bias, const ConvGeometry& g, Tensor<T>& y) {
  const int out_c = weight.n();
  const int in_c = weight.c();
  if (x.c() != in_c) throw ShapeError("conv2d: input channels mismatch");
  const int oh = g.ConvOut(x.h());
  const int ow = g.ConvOut(x.w());
  if (!(y.shape() == Shape{x.n(), out_c, oh, ow})) y = Tensor<T>(x.n(), out_c, oh, ow);
  const int kdim = in_c * g.kernel * g.kernel;
  const int pdim = oh * ow;
  const bool pointwise = IsPointwise(g);
  ConstMatMap<T> wmat(weight.data(), out_c, kdim);
#pragma omp parallel
  {
    AlignedVector<T> cols(pointwise ? 0 : static_cast<size_t>(kdim) * pdim);
#pragma omp for schedule(static)
    for (int n = 0; n < x.n(); ++n) {
      const T* cptr = x.sample(n);
      if (!pointwise) {
        Im2Col(x.sample(n), in_c, x.h(), x.w(), g, oh, ow, cols.data());
        cptr = cols.data();
      }
      ConstMatMap<T> cmat(cptr, kdim, pdim);
      MatMap<T> ymat(y.sample(n), out_c, pdim);
      ymat.noalias() = wmat * cmat;
      AddBias(bias, y, n);
    }
  }
}

template <typename T>
void Conv2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>* dx,
                    Tensor<T>& dweight, Tensor<T>& dbias) {
  const int out_c = weight.n();
  const int in_c = weight.c();
  const int oh = dy.h();
  const int ow = dy.w();
  const int kdim = in_c * g.kernel * g.kernel;
  const int pdim = oh * ow;
  const bool pointwise = IsPointwise(g);
  if (dx != nullptr) {
    if (!(dx->shape() == x.shape())) *dx = Tensor<T>(x.shape());
    dx->Fill(T(0));
  }
  ConstMatMap<T> wmat(weight.data(), out_c, kdim);
  const int threads = MaxThreads();
  std::vector<AlignedVector<T>> dw_parts(threads), db_parts(threads);
#pragma omp parallel
  {
    const int tid = omp_get_thread_num();
    auto& dw = dw_parts[tid];
    auto& db = db_parts[tid];
    dw.assign(weight.size(), T(0));
    db.assign(out_c, T(0));
    AlignedVector<T> cols(pointwise ? 0 : static_cast<size_t>(kdim) * pdim);
    AlignedVector<T> dcols(pointwise ? 0 : static_cast<size_t>(kdim) * pdim);
    MatMap<T> dwmat(dw.data(), out_c, kdim);
#pragma omp for schedule(static)
    for (int n = 0; n < x.n(); ++n) {
      const T* cptr = x.sample(n);
      if (!pointwise) {
        Im2Col(x.sample(n), in_c, x.h(), x.w(), g, oh, ow, cols.data());
        cptr = cols.data();
      }
      ConstMatMap<T> cmat(cptr, kdim, pdim);
      ConstMatMap<T> dymat(dy.sample(n), out_c, pdim);
      dwmat.noalias() += dymat * cmat.transpose();
      for (int c = 0; c < out_c; ++c) db[c] += dymat.row(c).sum();
      if (dx != nullptr) {
        if (pointwise) {
          MatMap<T> dxmat(dx->sample(n), kdim, pdim);
          dxmat.noalias() = wmat.transpose() * dymat;
        } else {
          MatMap<T> dcmat(dcols.data(), kdim, pdim);
          dcmat.noalias() = wmat.transpose() * dymat;
          Col2Im(dcols.data(), in_c, x.h(), x.w(), g, oh, ow, dx->sample(n));
        }
      }
    }
  }
  ReducePartials(dw_parts, dweight.data());
  ReducePartials(db_parts, dbias.data());
}

template <typename T>
void ConvTranspose2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                            const Tensor<T>& bias, const ConvGeometry& g,
                            Tensor<T>& y) {
  const int in_c = weight.n();
  const int out_c = weight.c();
  if (x.c() != in_c) throw ShapeError("conv_transpose2d: input channels mismatch");
  const int oh = g.TransposedOut(x.h());
  const int ow = g.TransposedOut(x.w());
  if (!(y.shape() == Shape{x.n(), out_c, oh, ow})) y = Tensor<T>(x.n(), out_c, oh, ow);
  const int kdim = out_c * g.kernel * g.kernel;
  const int pdim = x.h() * x.w();
  ConstMatMap<T> wmat(weight.data(), in_c, kdim);
#pragma omp parallel
  {
    AlignedVector<T> cols(static_cast<size_t>(kdim) * pdim);
#pragma omp for schedule(static)
    for (int n = 0; n < x.n(); ++n) {
      ConstMatMap<T> xmat(x.sample(n), in_c, pdim);
      MatMap<T> cmat(cols.data(), kdim, pdim);
      cmat.noalias() = wmat.transpose() * xmat;
      std::fill(y.sample(n), y.sample(n) + static_cast<size_t>(out_c) * oh * ow, T(0));
      Col2Im(cols.data(), out_c, oh, ow, g, x.h(), x.w(), y.sample(n));
      AddBias(bias, y, n);
    }
  }
}

template <typename T>
void ConvTranspose2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                             const Tensor<T>& dy, const ConvGeometry& g,
                             Tensor<T>* dx, Tensor<T>& dweight,
                             Tensor<T>& dbias) {
  const int in_c = weight.n();
  const int out_c = weight.c();
  const int kdim = out_c * g.kernel * g.kernel;
  const int pdim = x.h() * x.w();
  const size_t out_plane = dy.shape().plane();
  if (dx != nullptr && !(dx->shape() == x.shape())) *dx = Tensor<T>(x.shape());
  ConstMatMap<T> wmat(weight.data(), in_c, kdim);
  const int threads = MaxThreads();
  std::vector<AlignedVector<T>> dw_parts(threads), db_parts(threads);
#pragma omp parallel
  {
    const int tid = omp_get_thread_num();
    auto& dw = dw_parts[tid];
    auto& db = db_parts[tid];
    dw.assign(weight.size(), T(0));
    db.assign(out_c, T(0));
    AlignedVector<T> dcols(static_cast<size_t>(kdim) * pdim);
    MatMap<T> dwmat(dw.data(), in_c, kdim);
#pragma omp for schedule(static)
    for (int n = 0; n < x.n(); ++n) {
      Im2Col(dy.sample(n), out_c, dy.h(), dy.w(), g, x.h(), x.w(), dcols.data());
      ConstMatMap<T> dcmat(dcols.data(), kdim, pdim);
      ConstMatMap<T> xmat(x.sample(n), in_c, pdim);
      dwmat.noalias() += xmat * dcmat.transpose();
      const T* dyn = dy.sample(n);
      for (int c = 0; c < out_c; ++c) {
        T s = 0;
        for (size_t i = 0; i < out_plane; ++i) s += dyn[c * out_plane + i];
        db[c] += s;
      }
      if (dx != nullptr) {
        MatMap<T> dxmat(dx->sample(n), in_c, pdim);
        dxmat.noalias() = wmat * dcmat;
      }
    }
  }
  ReducePartials(dw_parts, dweight.data());
  ReducePartials(db_parts, dbias.data());
}

namespace reference {

template <typename T>
void Conv2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                   const Tensor<T>& bias, const ConvGeometry& g, Tensor<T>& y) {
  const int out_c = weight.n();
  const int in_c = weight.c();
  const int k = g.kernel;
  const int oh = g.ConvOut(x.h());
  const int ow = g.ConvOut(x.w());
  y = Tensor<T>(x.n(), out_c, oh, ow);
  for (int n = 0; n < x.n(); ++n)
    for (int co = 0; co < out_c; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          T acc = bias[co];
          for (int ci = 0; ci < in_c; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                acc += weight.at(co, ci, ky, kx) * x.at(n, ci, iy, ix);
              }
          y.at(n, co, oy, ox) = acc;
        }
}

template <typename T>
void Conv2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                    const Tensor<T>& dy, const ConvGeometry& g, Tensor<T>* dx,
                    Tensor<T>& dweight, Tensor<T>& dbias) {
  const int out_c = weight.n();
  const int in_c = weight.c();
  const int k = g.kernel;
  if (dx != nullptr) *dx = Tensor<T>(x.shape());
  for (int n = 0; n < x.n(); ++n)
    for (int co = 0; co < out_c; ++co)
      for (int oy = 0; oy < dy.h(); ++oy)
        for (int ox = 0; ox < dy.w(); ++ox) {
          const T d = dy.at(n, co, oy, ox);
          dbias[co] += d;
          for (int ci = 0; ci < in_c; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                dweight.at(co, ci, ky, kx) += d * x.at(n, ci, iy, ix);
                if (dx != nullptr) dx->at(n, ci, iy, ix) += d * weight.at(co, ci, ky, kx);
              }
        }
}

template <typename T>
void ConvTranspose2dForward(const Tensor<T>& x, const Tensor<T>& weight,
                            const Tensor<T>& bias, const ConvGeometry& g,
                            Tensor<T>& y) {
  const int in_c = weight.n();
  const int out_c = weight.c();
  const int k = g.kernel;
  const int oh = g.TransposedOut(x.h());
  const int ow = g.TransposedOut(x.w());
  y = Tensor<T>(x.n(), out_c, oh, ow);
  for (int n = 0; n < x.n(); ++n) {
    for (int co = 0; co < out_c; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) y.at(n, co, oy, ox) = bias[co];
    for (int ci = 0; ci < in_c; ++ci)
      for (int iy = 0; iy < x.h(); ++iy)
        for (int ix = 0; ix < x.w(); ++ix) {
          const T v = x.at(n, ci, iy, ix);
          for (int co = 0; co < out_c; ++co)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int oy = iy * g.stride - g.pad + ky;
                const int ox = ix * g.stride - g.pad + kx;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                y.at(n, co, oy, ox) += v * weight.at(ci, co, ky, kx);
              }
        }
  }
}

template <typename T>
void ConvTranspose2dBackward(const Tensor<T>& x, const Tensor<T>& weight,
                             const Tensor<T>& dy, const ConvGeometry& g,
                             Tensor<T>* dx, Tensor<T>& dweight,
                             Tensor<T>& dbias) {
  const int in_c = weight.n();
  const int out_c = weight.c();
  const int k = g.kernel;
  if (dx != nullptr) *dx = Tensor<T>(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int co = 0; co < out_c; ++co)
      for (int oy = 0; oy < dy.h(); ++oy)
        for (int ox = 0; ox < dy.w(); ++ox) dbias[co] += dy.at(n, co, oy, ox);
    for (int ci = 0; ci < in_c; ++ci)
      for (int iy = 0; iy < x.h(); ++iy)
        for (int ix = 0; ix < x.w(); ++ix) {
          T acc = 0;
          for (int co = 0; co < out_c; ++co)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int oy = iy * g.stride - g.pad + ky;
                const int ox = ix * g.stride - g.pad + kx;
                if (oy < 0 || oy >= dy.h() || ox < 0 || ox >= dy.w()) continue;
                const T d = dy.at(n, co, oy, ox);
                dweight.at(ci, co, ky, kx) += x.at(n, ci, iy, ix) * d;
                acc += weight.at(ci, co, ky, kx) * d;
              }
          if (dx != nullptr) dx->at(n, ci, iy, ix) = acc;
        }
  }
}

}  // namespace reference

#define TASKCODEC_INSTANTIATE(NS, T)                                          \
  template void NS::Conv2dForward(const Tensor<T>&, const Tensor<T>&,         \
                                  const Tensor<T>&, const ConvGeometry&,      \
                                  Tensor<T>&);                                \
  template void NS::Conv2dBackward(const Tensor<T>&, const Tensor<T>&,        \
                                   const Tensor<T>&, const ConvGeometry&,     \
                                   Tensor<T>*, Tensor<T>&, Tensor<T>&);       \
  template void NS::ConvTranspose2dForward(const Tensor<T>&, const Tensor<T>&, \
                                           const Tensor<T>&,                  \
                                           const ConvGeometry&, Tensor<T>&);  \
  template void NS::ConvTranspose2dBackward(                                  \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                   \
      const ConvGeometry&, Tensor<T>*, Tensor<T>&, Tensor<T>&);

}  // namespace kernels

TASKCODEC_INSTANTIATE(kernels, float)
TASKCODEC_INSTANTIATE(kernels, double)
TASKCODEC_INSTANTIATE(kernels::reference, float)
TASKCODEC_INSTANTIATE(kernels::reference, double)

}  // namespace taskcodec
