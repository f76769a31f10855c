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

#include <cmath>

#include <gtest/gtest.h>

#include "json.hpp"
#include "taskcodec/vinfo.h"
#include "vinfo_cases.h"

namespace taskcodec {
namespace {

using testing::Family;

TEST(VInfo, ConstantTargetCarriesNothing) {
  auto d = testing::IdentityPairs(600, 1);
  for (auto& z : d.z_labels) z = 2;
  for (auto kind : {FamilyKind::kMarginalOnly, FamilyKind::kLinearProbe, FamilyKind::kShallowMlp}) {
    const auto r = EstimateVInformation(d, Family(kind), 3);
    EXPECT_NEAR(r.h_given_y, 0.0, 0.01) << FamilyKindName(kind);
    EXPECT_NEAR(r.h_given_null, 0.0, 0.01);
  }
}

TEST(VInfo, MarginalOfUniformFourClasses) {
  const auto d = testing::IndependentPairs(4000, 2);
  const auto h = EstimateConditionalVEntropy(d, Family(FamilyKind::kMarginalOnly), 5);
  EXPECT_NEAR(h.nats, std::log(4.0), 0.05);
}

TEST(VInfo, IndependentPairsGiveNoInformation) {
  const auto r = EstimateVInformation(testing::IndependentPairs(2000, 3),
                                      Family(FamilyKind::kLinearProbe), 7);
  EXPECT_LE(std::abs(r.i_v), 0.05);
}

TEST(VInfo, IdentityRecoversEntropy) {
  const auto d = testing::IdentityPairs(2000, 4);
  const auto h = EstimateConditionalVEntropy(d, Family(FamilyKind::kConvProbe), 9);
  EXPECT_LE(h.nats, 0.05);
  const auto r = EstimateVInformation(d, Family(FamilyKind::kShallowMlp), 9);
  EXPECT_NEAR(r.i_v, std::log(4.0), 0.05);
}

TEST(VInfo, XorDependsOnFamily) {
  const auto d = testing::XorPairs(2000, 5);
  EXPECT_LE(EstimateVInformation(d, Family(FamilyKind::kLinearProbe), 11).i_v, 0.05);
  EXPECT_GE(EstimateVInformation(d, Family(FamilyKind::kShallowMlp), 11).i_v, 0.6);
}

TEST(VInfo, ReportArithmeticAndJson) {
  const auto r = EstimateVInformation(testing::IdentityPairs(500, 6),
                                      Family(FamilyKind::kLinearProbe), 13);
  EXPECT_EQ(r.i_v, r.h_given_null - r.h_given_y);
  EXPECT_GT(r.uncertainty, 0.0);
  EXPECT_EQ(r.train_size + r.eval_size, 500);
  const auto j = nlohmann::json::parse(r.ToJson());
  EXPECT_EQ(j.at("family").at("kind"), "linear_probe");
  EXPECT_NEAR(j.at("I_V_bits").get<double>(), r.i_v / std::log(2.0), 1e-12);
}

TEST(VInfo, ContinuousTargets) {
  Rng rng(7);
  VInfoData d;
  d.y = Tensor<float>(1500, 3, 1, 1);
  d.z_values = Tensor<float>(1500, 1, 1, 1);
  for (int i = 0; i < 1500; ++i) {
    for (int c = 0; c < 3; ++c) d.y.at(i, c, 0, 0) = static_cast<float>(rng.Normal());
    d.z_values[i] = 2.0f * d.y.at(i, 0, 0, 0) - d.y.at(i, 2, 0, 0) +
                    static_cast<float>(rng.Normal(0.0, 0.1));
  }
  // Gaussian target with residual std 0.1 out of total std sqrt(5):
  // I = ln(sqrt(5) / 0.1) ~ 3.1 nats.
  const auto r = EstimateVInformation(d, Family(FamilyKind::kLinearProbe), 17);
  EXPECT_NEAR(r.i_v, std::log(std::sqrt(5.0) / 0.1), 0.15);
}

TEST(VInfo, WideFeaturesDoNotOverstateConfidence) {
  // About as many feature dims as fit samples; the probe overfits its fit set.
  // z_k = y_k + noise(0.3), so I = 16 * ln(sqrt(1.09) / 0.3) ~ 20 nats.
  Rng rng(8);
  VInfoData d;
  d.y = Tensor<float>(600, 1024, 1, 1);
  d.z_values = Tensor<float>(600, 16, 1, 1);
  for (size_t i = 0; i < d.y.size(); ++i) d.y[i] = static_cast<float>(rng.Normal());
  for (int i = 0; i < 600; ++i)
    for (int k = 0; k < 16; ++k)
      d.z_values.at(i, k, 0, 0) = d.y.at(i, k, 0, 0) + static_cast<float>(rng.Normal(0.0, 0.3));
  auto f = Family(FamilyKind::kLinearProbe);
  f.learning_rate = 1e-4;
  const auto r = EstimateVInformation(d, f, 19);
  EXPECT_GE(r.i_v, 0.0);
  EXPECT_LE(r.i_v, 16.0 * std::log(std::sqrt(1.09) / 0.3));
}

TEST(VInfo, IsDeterministicForASeed) {
  const auto d = testing::XorPairs(400, 8);
  const auto a = EstimateVInformation(d, Family(FamilyKind::kShallowMlp), 21);
  const auto b = EstimateVInformation(d, Family(FamilyKind::kShallowMlp), 21);
  EXPECT_EQ(a.h_given_y, b.h_given_y);
  EXPECT_EQ(a.uncertainty, b.uncertainty);
}

TEST(VInfo, ZeroBudgetIsAConfigError) {
  auto f = Family(FamilyKind::kLinearProbe);
  f.steps = 0;
  EXPECT_THROW(EstimateVInformation(testing::XorPairs(100, 9), f, 1), ConfigError);
}

TEST(Comparison, NoiseDegradesRepresentation) {
  const auto a = testing::IdentityPairs(800, 10);
  const auto b = testing::WithGaussianNoise(a, 1.0, 11);
  const auto c = CompareRepresentations(a, b, Family(FamilyKind::kLinearProbe), {1, 2, 3, 4, 5});
  EXPECT_GE(c.a_wins, 4);
  EXPECT_THROW(CompareRepresentations(a, b, Family(FamilyKind::kLinearProbe), {1, 2}),
               ConfigError);
}

TEST(Comparison, IdenticalRepresentationsTie) {
  const auto a = testing::IdentityPairs(400, 12);
  const auto c = CompareRepresentations(a, a, Family(FamilyKind::kLinearProbe), {1, 2, 3});
  EXPECT_EQ(c.a_wins, 0);
  EXPECT_EQ(c.b_wins, 0);
  EXPECT_EQ(c.sign_test_p, 1.0);
}

TEST(SignTest, ExactBinomial) {
  EXPECT_DOUBLE_EQ(SignTestPValue(5, 0), 2.0 / 32.0);
  EXPECT_DOUBLE_EQ(SignTestPValue(4, 1), 12.0 / 32.0);
  EXPECT_DOUBLE_EQ(SignTestPValue(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(SignTestPValue(3, 3), 1.0);
}

}  // namespace
}  // namespace taskcodec
