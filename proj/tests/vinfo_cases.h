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

#ifndef TASKCODEC_TESTS_VINFO_CASES_H_
#define TASKCODEC_TESTS_VINFO_CASES_H_

// Synthetic (Y, Z) pairs with known predictive information.

#include "taskcodec/rng.h"
#include "taskcodec/vinfo.h"

namespace taskcodec::testing {

// One-hot Y over 4 symbols at a single position; Z equals the symbol.
inline VInfoData IdentityPairs(int n, uint64_t seed) {
  Rng rng(seed);
  VInfoData d;
  d.num_classes = 4;
  d.y = Tensor<float>(n, 4, 1, 1);
  for (int i = 0; i < n; ++i) {
    const int s = rng.UniformInt(0, 3);
    d.y.at(i, s, 0, 0) = 1.0f;
    d.z_labels.push_back(s);
  }
  return d;
}

// Y is uniform noise, Z a uniform 4-class label drawn independently.
inline VInfoData IndependentPairs(int n, uint64_t seed) {
  Rng rng(seed);
  VInfoData d;
  d.num_classes = 4;
  d.y = Tensor<float>(n, 4, 1, 1);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 4; ++c) d.y.at(i, c, 0, 0) = static_cast<float>(rng.Uniform(-1.0, 1.0));
    d.z_labels.push_back(rng.UniformInt(0, 3));
  }
  return d;
}

// Y holds two fair bits (as 0/1); Z is their XOR.
inline VInfoData XorPairs(int n, uint64_t seed) {
  Rng rng(seed);
  VInfoData d;
  d.num_classes = 2;
  d.y = Tensor<float>(n, 2, 1, 1);
  for (int i = 0; i < n; ++i) {
    const int a = rng.UniformInt(0, 1), b = rng.UniformInt(0, 1);
    d.y.at(i, 0, 0, 0) = static_cast<float>(a);
    d.y.at(i, 1, 0, 0) = static_cast<float>(b);
    d.z_labels.push_back(a ^ b);
  }
  return d;
}

inline VInfoData WithGaussianNoise(VInfoData d, double sigma, uint64_t seed) {
  Rng rng(seed);
  for (size_t i = 0; i < d.y.size(); ++i) d.y[i] += static_cast<float>(rng.Normal(0.0, sigma));
  return d;
}

inline PredictiveFamilySpec Family(FamilyKind kind) {
  PredictiveFamilySpec f;
  f.kind = kind;
  return f;
}

}  // namespace taskcodec::testing

#endif  // TASKCODEC_TESTS_VINFO_CASES_H_
