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

#include "taskcodec/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

// Boost 1.74's pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "json.hpp"

namespace taskcodec {

double PsnrFromMse(double mse, double max_value) {
  if (max_value <= 0.0) throw ConfigError("psnr: max_value must be positive");
  const double peak = max_value * max_value;
  if (mse < peak * 1e-10) return kPsnrCapDb;
  return 10.0 * std::log10(peak / mse);
}

template <typename T>
double Psnr(const Tensor<T>& x, const Tensor<T>& x_hat, double max_value) {
  RequireSameShape(x.shape(), x_hat.shape(), "psnr");
  if (x.size() == 0) throw ShapeError("psnr: empty input");
  double sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(x_hat[i]);
    sum += d * d;
  }
  return PsnrFromMse(sum / x.size(), max_value);
}

double Bpp(double total_bits, int height, int width) {
  if (height <= 0 || width <= 0) throw ConfigError("bpp: dimensions must be positive");
  return total_bits / (static_cast<double>(height) * width);
}

double MeanIou(std::span<const int32_t> prediction, std::span<const int32_t> target,
               int num_classes) {
  if (prediction.empty() || prediction.size() != target.size()) {
    throw ShapeError("miou: empty or mismatched label arrays");
  }
  std::vector<int64_t> inter(num_classes, 0), uni(num_classes, 0);
  for (size_t i = 0; i < prediction.size(); ++i) {
    const int p = prediction[i];
    const int t = target[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes) {
      throw ConfigError("miou: label outside [0, num_classes)");
    }
    if (p == t) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[t];
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (uni[c] == 0) continue;
    sum += static_cast<double>(inter[c]) / uni[c];
    ++present;
  }
  return sum / present;
}

template <typename T>
std::vector<int32_t> ArgmaxLabels(const Tensor<T>& scores) {
  const Shape s = scores.shape();
  std::vector<int32_t> out(static_cast<size_t>(s.n) * s.plane());
  for (int n = 0; n < s.n; ++n) {
    for (size_t p = 0; p < s.plane(); ++p) {
      const T* base = scores.sample(n) + p;
      int best = 0;
      for (int c = 1; c < s.c; ++c) {
        if (base[c * s.plane()] > base[best * s.plane()]) best = c;
      }
      out[n * s.plane() + p] = best;
    }
  }
  return out;
}

template <typename T>
std::vector<int32_t> LabelsFromTensor(const Tensor<T>& labels) {
  std::vector<int32_t> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    out[i] = static_cast<int32_t>(std::lround(labels[i]));
  }
  return out;
}

const char* MetricKindName(MetricKind kind) {
  switch (kind) {
    case MetricKind::kPsnr: return "psnr";
    case MetricKind::kRmse: return "rmse";
    case MetricKind::kMiou: return "miou";
  }
  return "?";
}

MetricKind ParseMetricKind(const std::string& name) {
  if (name == "psnr") return MetricKind::kPsnr;
  if (name == "rmse") return MetricKind::kRmse;
  if (name == "miou") return MetricKind::kMiou;
  throw ConfigError("unknown metric kind: " + name);
}

double QualityOf(MetricKind kind, double metric_value) {
  return kind == MetricKind::kRmse ? -metric_value : metric_value;
}

void RDCurve::Normalize() {
  std::sort(points.begin(), points.end(),
            [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  for (size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].bpp > 0.0)) throw ConfigError("rd curve " + id + ": bpp must be positive");
    if (points[i].metric_kind != metric_kind) {
      throw ConfigError("rd curve " + id + ": mixed metric kinds");
    }
    if (i > 0 && !(points[i].bpp > points[i - 1].bpp)) {
      throw ConfigError("rd curve " + id + ": bpp must be strictly increasing");
    }
  }
}

namespace {

struct LogRateFit {
  std::vector<double> q;
  std::vector<double> log_rate;
};

// Sorted by quality; equal qualities share the mean log-rate.
LogRateFit PrepareFit(const RDCurve& curve) {
  std::map<double, std::pair<double, int>> merged;
  for (const auto& p : curve.points) {
    if (!(p.bpp > 0.0) || !std::isfinite(p.bpp) || !std::isfinite(p.metric_value)) {
      throw ConfigError("bd_rate: curve " + curve.id + " has an invalid point");
    }
    if (p.metric_kind != curve.metric_kind) {
      throw ConfigError("bd_rate: curve " + curve.id + " mixes metric kinds");
    }
    auto& slot = merged[p.quality()];
    slot.first += std::log10(p.bpp);
    slot.second += 1;
  }
  LogRateFit fit;
  for (const auto& [q, acc] : merged) {
    fit.q.push_back(q);
    fit.log_rate.push_back(acc.first / acc.second);
  }
  if (fit.q.size() < 4) {
    throw ConfigError("bd_rate: curve " + curve.id + " needs at least 4 distinct qualities");
  }
  return fit;
}

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

// Three-point shape-preserving end slope, as in the usual pchip.
double EndSlope(double h0, double h1, double d0, double d1) {
  const double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (s * d0 <= 0) return 0.0;
  if (d0 * d1 <= 0 && std::abs(s) > std::abs(3 * d0)) return 3 * d0;
  return s;
}

Pchip MakePchip(std::vector<double> x, std::vector<double> y) {
  const size_t n = x.size();
  auto h = [&](size_t k) { return x[k + 1] - x[k]; };
  auto d = [&](size_t k) { return (y[k + 1] - y[k]) / h(k); };
  const double left = EndSlope(h(0), h(1), d(0), d(1));
  const double right = EndSlope(h(n - 2), h(n - 3), d(n - 2), d(n - 3));
  return Pchip(std::move(x), std::move(y), left, right);
}

// Integral of the interpolant over [a, b], which lies inside the knot range.
// Each Hermite piece is a cubic, so two-point Gauss-Legendre is exact.
double IntegratePchip(const Pchip& f, const std::vector<double>& knots, double a, double b) {
  const double g = 1.0 / std::sqrt(3.0);
  double total = 0.0;
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    const double lo = std::max(a, knots[k]);
    const double hi = std::min(b, knots[k + 1]);
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    total += half * (f(mid - half * g) + f(mid + half * g));
  }
  return total;
}

}  // namespace

BdRateResult BdRate(const RDCurve& anchor, const RDCurve& test) {
  if (anchor.metric_kind != test.metric_kind) {
    throw ConfigError("bd_rate: curves use different metrics");
  }
  LogRateFit fa = PrepareFit(anchor);
  LogRateFit ft = PrepareFit(test);
  const double lo = std::max(fa.q.front(), ft.q.front());
  const double hi = std::min(fa.q.back(), ft.q.back());
  BdRateResult result;
  if (!(hi > lo)) return result;
  const std::vector<double> knots_a = fa.q;
  const std::vector<double> knots_t = ft.q;
  const Pchip pa = MakePchip(std::move(fa.q), std::move(fa.log_rate));
  const Pchip pt = MakePchip(std::move(ft.q), std::move(ft.log_rate));
  const double diff =
      (IntegratePchip(pt, knots_t, lo, hi) - IntegratePchip(pa, knots_a, lo, hi)) / (hi - lo);
  result.overlap = true;
  result.percent = (std::pow(10.0, diff) - 1.0) * 100.0;
  return result;
}

std::string BdRateJson(const std::string& anchor_id, const std::string& test_id,
                       const BdRateResult& result) {
  nlohmann::ordered_json j;
  j["anchor_id"] = anchor_id;
  j["test_id"] = test_id;
  if (result.overlap) {
    j["bd_rate_percent"] = result.percent;
  } else {
    j["bd_rate_percent"] = "no_overlap";
  }
  return j.dump(2);
}

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kCsvHeader = "method,mode,lambda,seed,bpp,metric_kind,metric_value";

}  // namespace

std::string CurvesToCsv(std::span<const RDPoint> points) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& p : points) {
    if (p.method.find(',') != std::string::npos || p.mode.find(',') != std::string::npos) {
      throw ConfigError("curves csv: names must not contain commas");
    }
    out += p.method + "," + p.mode + "," + FormatDouble(p.lambda) + "," +
           std::to_string(p.seed) + "," + FormatDouble(p.bpp) + "," +
           MetricKindName(p.metric_kind) + "," + FormatDouble(p.metric_value) + "\n";
  }
  return out;
}

std::vector<RDPoint> CurvesFromCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("curves csv: unexpected header");
  }
  std::vector<RDPoint> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != 7) {
      throw ConfigError("curves csv: line " + std::to_string(line_no) + " has " +
                        std::to_string(f.size()) + " fields");
    }
    RDPoint p;
    try {
      p.method = f[0];
      p.mode = f[1];
      p.lambda = std::stod(f[2]);
      p.seed = std::stoll(f[3]);
      p.bpp = std::stod(f[4]);
      p.metric_kind = ParseMetricKind(f[5]);
      p.metric_value = std::stod(f[6]);
    } catch (const std::logic_error&) {
      throw ConfigError("curves csv: malformed number on line " + std::to_string(line_no));
    }
    out.push_back(p);
  }
  return out;
}

RDCurve SelectCurve(std::span<const RDPoint> points, const std::string& method,
                    const std::string& mode, std::optional<int64_t> seed) {
  RDCurve curve;
  curve.id = method + "/" + mode + (seed ? "/seed" + std::to_string(*seed) : "");
  bool first = true;
  for (const auto& p : points) {
    if (p.method != method || p.mode != mode) continue;
    if (seed && p.seed != *seed) continue;
    if (first) curve.metric_kind = p.metric_kind;
    first = false;
    curve.points.push_back(p);
  }
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  return curve;
}

template double Psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double Psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template std::vector<int32_t> ArgmaxLabels<float>(const Tensor<float>&);
template std::vector<int32_t> ArgmaxLabels<double>(const Tensor<double>&);
template std::vector<int32_t> LabelsFromTensor<float>(const Tensor<float>&);
template std::vector<int32_t> LabelsFromTensor<double>(const Tensor<double>&);

}  // namespace taskcodec
