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

#ifndef TASKCODEC_VINFO_H_
#define TASKCODEC_VINFO_H_

// Empirical predictive V-entropy and V-information.
//
// H_V(Z|Y) is approximated by training the best predictor the family can
// reach within its budget on a train split and measuring the mean negative
// log-likelihood on a disjoint eval split. H_V(Z|empty) uses the constant
// predictors on the same split, and I_V is their difference. H_V values are
// upper bounds of the infimum.

#include <cstdint>
#include <string>
#include <vector>

#include "taskcodec/tensor.h"

namespace taskcodec {

enum class FamilyKind { kMarginalOnly, kLinearProbe, kShallowMlp, kConvProbe };

const char* FamilyKindName(FamilyKind kind);
FamilyKind ParseFamilyKind(const std::string& name);

struct PredictiveFamilySpec {
  FamilyKind kind = FamilyKind::kLinearProbe;
  int width = 32;
  int depth = 1;  // hidden layers (mlp) or conv layers (conv)
  int steps = 400;
  double learning_rate = 1e-2;
  int batch_size = 128;
  double eval_fraction = 0.3;
  // Share of the train split held out to pick the best step; step 0 is the
  // constant predictor, so the selection never does worse than it there.
  double validation_fraction = 0.2;
  int bootstrap_resamples = 20;

  void Validate() const;
};

// Pairs (y_i, z_i). Z is discrete when num_classes > 0 (labels in
// z_labels), otherwise continuous (z_values, one row of D values per
// sample, scored with a Gaussian likelihood).
struct VInfoData {
  Tensor<float> y;  // (N, C, H, W)
  std::vector<int32_t> z_labels;
  int num_classes = 0;
  Tensor<float> z_values;  // (N, D, 1, 1)

  bool discrete() const { return num_classes > 0; }
  int size() const { return y.n(); }
  void Validate() const;
};

struct VEntropyEstimate {
  double nats = 0.0;
  std::vector<double> eval_nll;  // per eval sample
  std::vector<int> eval_indices;
  int train_size = 0;
};

VEntropyEstimate EstimateConditionalVEntropy(const VInfoData& data,
                                             const PredictiveFamilySpec& family,
                                             uint64_t seed);

struct VInfoReport {
  double h_given_null = 0.0;  // nats
  double h_given_y = 0.0;     // nats
  double i_v = 0.0;           // nats
  double uncertainty = 0.0;   // bootstrap std of i_v, nats
  PredictiveFamilySpec family;
  uint64_t seed = 0;
  int train_size = 0;
  int eval_size = 0;

  static double ToBits(double nats);
  std::string ToJson() const;
};

VInfoReport EstimateVInformation(const VInfoData& data, const PredictiveFamilySpec& family,
                                 uint64_t seed);

struct RepresentationComparison {
  std::vector<uint64_t> seeds;
  std::vector<double> i_v_a;
  std::vector<double> i_v_b;
  int a_wins = 0;  // seeds with I_V(A) > I_V(B)
  int b_wins = 0;
  double sign_test_p = 1.0;  // two-sided, ties dropped

  std::string ToJson() const;
};

// `a` and `b` must carry the same targets. Requires at least 3 seeds.
RepresentationComparison CompareRepresentations(const VInfoData& a, const VInfoData& b,
                                                const PredictiveFamilySpec& family,
                                                const std::vector<uint64_t>& seeds);

// Two-sided exact binomial sign test with p = 1/2.
double SignTestPValue(int wins, int losses);

}  // namespace taskcodec

#endif  // TASKCODEC_VINFO_H_
