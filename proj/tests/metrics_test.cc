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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "json.hpp"
#include "taskcodec/metrics.h"
#include "bd_oracle.h"
#include "test_util.h"

namespace taskcodec {
namespace {

using testing::OracleBdRate;

RDCurve Curve(const std::string& id, const std::vector<std::pair<double, double>>& pts,
              MetricKind kind = MetricKind::kPsnr) {
  RDCurve c;
  c.id = id;
  c.metric_kind = kind;
  for (auto [bpp, v] : pts) c.points.push_back({id, "base", 0.0, 1, bpp, kind, v});
  return c;
}

const std::vector<std::pair<double, double>> kAnchor = {{1, 30}, {2, 34}, {4, 38}, {8, 42}};

std::vector<std::pair<double, double>> ScaleRates(std::vector<std::pair<double, double>> pts,
                                                  double f) {
  for (auto& p : pts) p.first *= f;
  return pts;
}

TEST(BdRate, IdenticalCurvesGiveZero) {
  const auto r = BdRate(Curve("a", kAnchor), Curve("b", kAnchor));
  ASSERT_TRUE(r.overlap);
  EXPECT_NEAR(r.percent, 0.0, 1e-12);
}

TEST(BdRate, UniformRateScaling) {
  EXPECT_NEAR(BdRate(Curve("a", kAnchor), Curve("b", ScaleRates(kAnchor, 2.0))).percent, 100.0,
              0.1);
  EXPECT_NEAR(BdRate(Curve("a", kAnchor), Curve("b", ScaleRates(kAnchor, 0.8))).percent, -20.0,
              0.1);
}

TEST(BdRate, MatchesIndependentOracle) {
  const std::vector<std::vector<std::pair<double, double>>> tests = {
      ScaleRates(kAnchor, 0.8),
      {{0.9, 30.5}, {1.7, 33.1}, {3.9, 38.6}, {9.0, 42.7}},
      {{1.2, 29.0}, {2.2, 33.0}, {3.1, 36.4}, {6.5, 40.1}, {12.0, 43.0}},
      {{0.5, 31.0}, {1.1, 31.8}, {2.5, 37.0}, {4.0, 37.5}},
  };
  for (const auto& t : tests) {
    const double want = OracleBdRate(kAnchor, t);
    const double got = BdRate(Curve("a", kAnchor), Curve("t", t)).percent;
    EXPECT_NEAR(got, want, 0.01) << "oracle " << want;
  }
}

TEST(BdRate, InvariantToPointOrder) {
  auto shuffled = kAnchor;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[0], shuffled[2]);
  const std::vector<std::pair<double, double>> t = {{0.9, 30.5}, {1.7, 33.1}, {3.9, 38.6},
                                                    {9.0, 42.7}};
  auto t2 = t;
  std::reverse(t2.begin(), t2.end());
  const auto a = BdRate(Curve("a", kAnchor), Curve("t", t));
  const auto b = BdRate(Curve("a", shuffled), Curve("t", t2));
  EXPECT_EQ(a.percent, b.percent);
}

TEST(BdRate, ApproximatelyAntisymmetric) {
  const std::vector<std::pair<double, double>> t = {{0.9, 30.5}, {1.7, 33.1}, {3.9, 38.6},
                                                    {9.0, 42.7}};
  const double ab = BdRate(Curve("a", kAnchor), Curve("t", t)).percent;
  const double ba = BdRate(Curve("t", t), Curve("a", kAnchor)).percent;
  EXPECT_NEAR(ab, -ba / (1.0 + ba / 100.0), 0.1);
}

TEST(BdRate, NoOverlapAndTooFewPoints) {
  const auto r = BdRate(Curve("a", kAnchor),
                        Curve("b", {{1, 50}, {2, 51}, {3, 52}, {4, 53}}));
  EXPECT_FALSE(r.overlap);
  const auto j = nlohmann::json::parse(BdRateJson("a", "b", r));
  EXPECT_EQ(j.at("bd_rate_percent"), "no_overlap");
  EXPECT_THROW(BdRate(Curve("a", kAnchor), Curve("b", {{1, 30}, {2, 34}, {4, 38}})),
               ConfigError);
}

TEST(BdRate, RmseQualityIsNegated) {
  const std::vector<std::pair<double, double>> a = {{0.1, 0.20}, {0.2, 0.15}, {0.4, 0.11},
                                                    {0.8, 0.08}};
  const auto cheaper = ScaleRates(a, 0.5);
  const auto r = BdRate(Curve("a", a, MetricKind::kRmse), Curve("b", cheaper, MetricKind::kRmse));
  EXPECT_NEAR(r.percent, -50.0, 1e-9);
}

TEST(Psnr, ArithmeticAndCap) {
  EXPECT_NEAR(PsnrFromMse(1.0 / 100.0), 20.0, 1e-12);
  EXPECT_EQ(PsnrFromMse(0.0), kPsnrCapDb);
  Rng rng(1);
  const auto x = testing::RandomTensor<float>({1, 3, 8, 8}, rng, 0.0, 1.0);
  EXPECT_EQ(Psnr(x, x), kPsnrCapDb);
  const auto y = testing::RandomTensor<float>({1, 3, 8, 8}, rng, 0.0, 1.0);
  double mse = 0.0;
  for (size_t i = 0; i < x.size(); ++i) mse += (double(x[i]) - y[i]) * (double(x[i]) - y[i]);
  mse /= x.size();
  EXPECT_NEAR(Psnr(x, y), 10.0 * std::log10(1.0 / mse), 1e-9);
  EXPECT_GT(PsnrFromMse(0.01), PsnrFromMse(0.02));
}

TEST(Bpp, Arithmetic) { EXPECT_DOUBLE_EQ(Bpp(1000.0, 100, 100), 0.1); }

TEST(MeanIou, HandEnumeratedCases) {
  const std::vector<int32_t> target = {0, 0, 1, 1};
  const std::vector<int32_t> all_zero = {0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(MeanIou(all_zero, target, 2), 0.25);
  EXPECT_DOUBLE_EQ(MeanIou(target, target, 2), 1.0);
  // Class 2 is absent from both and excluded.
  EXPECT_DOUBLE_EQ(MeanIou(all_zero, target, 3), 0.25);
  EXPECT_THROW(MeanIou(std::vector<int32_t>{}, std::vector<int32_t>{}, 2), ShapeError);
  EXPECT_THROW(MeanIou(std::vector<int32_t>{3}, std::vector<int32_t>{0}, 2), ConfigError);
}

TEST(Curves, CsvRoundTripsExactly) {
  std::vector<RDPoint> pts = {
      {"beta_0.1", "scalable", 16.0, 3, 0.123456789012345678, MetricKind::kPsnr, 27.1},
      {"beta_0", "base", 1.0 / 3.0, 2, 1e-7, MetricKind::kRmse, 0.0812},
      {"beta_0", "scalable", 4, 1, 0.5, MetricKind::kMiou, 0.61}};
  const std::string csv = CurvesToCsv(pts);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,mode,lambda,seed,bpp,metric_kind,metric_value");
  const auto back = CurvesFromCsv(csv);
  ASSERT_EQ(back.size(), pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(back[i].method, pts[i].method);
    EXPECT_EQ(back[i].mode, pts[i].mode);
    EXPECT_EQ(back[i].lambda, pts[i].lambda);
    EXPECT_EQ(back[i].seed, pts[i].seed);
    EXPECT_EQ(back[i].bpp, pts[i].bpp);
    EXPECT_EQ(back[i].metric_kind, pts[i].metric_kind);
    EXPECT_EQ(back[i].metric_value, pts[i].metric_value);
  }
  EXPECT_EQ(CurvesToCsv(back), csv);
  EXPECT_THROW(CurvesFromCsv("bad,header\n"), ConfigError);
}

TEST(Curves, SelectCurveFiltersAndSorts) {
  std::vector<RDPoint> pts;
  for (int seed : {1, 2})
    for (double b : {0.4, 0.1, 0.2})
      pts.push_back({"m", "scalable", 1.0, seed, b * seed, MetricKind::kPsnr, 20 + 10 * b});
  pts.push_back({"m", "base", 1.0, 1, 0.3, MetricKind::kPsnr, 20});
  const auto c = SelectCurve(pts, "m", "scalable", 1);
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_LT(c.points[0].bpp, c.points[1].bpp);
  EXPECT_LT(c.points[1].bpp, c.points[2].bpp);
}

}  // namespace
}  // namespace taskcodec
