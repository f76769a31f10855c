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

#ifndef TASKCODEC_TENSOR_H_
#define TASKCODEC_TENSOR_H_

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskcodec {

// Thrown for shape contract violations (mismatched or indivisible dims).
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for non-finite values where the contract requires finite ones.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for invalid configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for malformed, truncated or corrupted files and bitstreams.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a documented precondition of an operation does not hold.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Cache-line aligned storage.
inline constexpr size_t kTensorAlignment = 64;

template <typename T>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(size_t n) {
    return static_cast<T*>(
        ::operator new(n * sizeof(T), std::align_val_t(kTensorAlignment)));
  }
  void deallocate(T* p, size_t) {
    ::operator delete(p, std::align_val_t(kTensorAlignment));
  }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  size_t size() const {
    return static_cast<size_t>(n) * c * h * w;
  }
  size_t plane() const { return static_cast<size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string ToString() const;
};

// Dense NCHW tensor with owned storage.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  size_t Index(int n, int c, int y, int x) const {
    return ((static_cast<size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }
  T& at(int n, int c, int y, int x) { return data_[Index(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const {
    return data_[Index(n, c, y, x)];
  }

  // Pointer to the start of sample n.
  T* sample(int n) { return data_.data() + static_cast<size_t>(n) * shape_.c * shape_.plane(); }
  const T* sample(int n) const {
    return data_.data() + static_cast<size_t>(n) * shape_.c * shape_.plane();
  }

  void Fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void Reshape(Shape s) {
    if (s.size() != data_.size()) throw ShapeError("reshape changes size");
    shape_ = s;
  }

  template <typename U>
  Tensor<U> Cast() const {
    Tensor<U> out(shape_);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  // Copies samples [begin, end) into a new tensor.
  Tensor Slice(int begin, int end) const;

 private:
  Shape shape_;
  AlignedVector<T> data_;
};

template <typename T>
Tensor<T> Tensor<T>::Slice(int begin, int end) const {
  if (begin < 0 || end > shape_.n || begin > end) throw ShapeError("bad slice");
  Tensor out(end - begin, shape_.c, shape_.h, shape_.w);
  const size_t per = static_cast<size_t>(shape_.c) * shape_.plane();
  std::copy(data_.begin() + begin * per, data_.begin() + end * per,
            out.data_.begin());
  return out;
}

// Concatenates along the channel axis.
template <typename T>
Tensor<T> ConcatChannels(const Tensor<T>& a, const Tensor<T>& b);

// Inverse of ConcatChannels: returns the first `channels` channels or the rest.
template <typename T>
Tensor<T> SplitChannels(const Tensor<T>& x, int begin, int end);

// Stacks single-sample tensors along the batch axis.
template <typename T>
Tensor<T> Stack(std::span<const Tensor<T>> items);

void RequireSameShape(const Shape& a, const Shape& b, const char* what);

}  // namespace taskcodec

#endif  // TASKCODEC_TENSOR_H_
