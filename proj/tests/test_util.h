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

#ifndef TASKCODEC_TESTS_TEST_UTIL_H_
#define TASKCODEC_TESTS_TEST_UTIL_H_

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "taskcodec/layers.h"
#include "taskcodec/rng.h"
#include "taskcodec/tensor.h"

namespace taskcodec::testing {

template <typename T>
Tensor<T> RandomTensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(s);
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.Uniform(lo, hi));
  return t;
}

inline double Dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Central differences of `loss` at `samples` random entries of `value`
// against the analytic gradient `grad`.
inline void ExpectGradientMatches(Tensor<double>& value, const Tensor<double>& grad,
                                  const std::function<double()>& loss, Rng& rng,
                                  int samples = 12, double tol = 1e-6) {
  ASSERT_EQ(value.size(), grad.size());
  for (int k = 0; k < samples && value.size() > 0; ++k) {
    const size_t i = rng.Bits() % value.size();
    const double saved = value[i];
    const double h = 1e-6;
    value[i] = saved + h;
    const double up = loss();
    value[i] = saved - h;
    const double down = loss();
    value[i] = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_NEAR(grad[i], numeric, tol * std::max(1.0, std::abs(numeric))) << "entry " << i;
  }
}

}  // namespace taskcodec::testing

#endif  // TASKCODEC_TESTS_TEST_UTIL_H_
