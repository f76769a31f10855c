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

#include "taskcodec/tensor.h"

#include <algorithm>
#include <sstream>

namespace taskcodec {

std::string Shape::ToString() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

void RequireSameShape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": shape " + a.ToString() +
                     " != " + b.ToString());
  }
}

template <typename T>
Tensor<T> ConcatChannels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat: " + a.shape().ToString() + " vs " +
                     b.shape().ToString());
  }
  Tensor<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  const size_t pa = static_cast<size_t>(a.c()) * a.shape().plane();
  const size_t pb = static_cast<size_t>(b.c()) * b.shape().plane();
  for (int n = 0; n < a.n(); ++n) {
    std::copy(a.sample(n), a.sample(n) + pa, out.sample(n));
    std::copy(b.sample(n), b.sample(n) + pb, out.sample(n) + pa);
  }
  return out;
}

template <typename T>
Tensor<T> SplitChannels(const Tensor<T>& x, int begin, int end) {
  if (begin < 0 || end > x.c() || begin >= end) throw ShapeError("bad channel split");
  Tensor<T> out(x.n(), end - begin, x.h(), x.w());
  const size_t plane = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    std::copy(x.sample(n) + begin * plane, x.sample(n) + end * plane,
              out.sample(n));
  }
  return out;
}

template <typename T>
Tensor<T> Stack(std::span<const Tensor<T>> items) {
  if (items.empty()) throw ShapeError("stack of nothing");
  Shape s = items[0].shape();
  int total = 0;
  for (const auto& t : items) {
    if (t.c() != s.c || t.h() != s.h || t.w() != s.w) throw ShapeError("stack: ragged");
    total += t.n();
  }
  Tensor<T> out(total, s.c, s.h, s.w);
  size_t off = 0;
  for (const auto& t : items) {
    std::copy(t.data(), t.data() + t.size(), out.data() + off);
    off += t.size();
  }
  return out;
}

template Tensor<float> ConcatChannels(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> ConcatChannels(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> SplitChannels(const Tensor<float>&, int, int);
template Tensor<double> SplitChannels(const Tensor<double>&, int, int);
template Tensor<float> Stack(std::span<const Tensor<float>>);
template Tensor<double> Stack(std::span<const Tensor<double>>);

}  // namespace taskcodec
