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

#ifndef TASKCODEC_TESTS_BD_ORACLE_H_
#define TASKCODEC_TESTS_BD_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace taskcodec::testing {

// Independent BD-rate oracle: Fritsch-Carlson monotone cubic interpolation
// (harmonic-mean interior slopes, shape-preserving three-point end slopes),
// integrated with a fine trapezoid rule.

struct Hermite {
  std::vector<double> x, y, d;

  Hermite(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
    const size_t n = x.size();
    std::vector<double> h(n - 1), del(n - 1);
    for (size_t k = 0; k + 1 < n; ++k) {
      h[k] = x[k + 1] - x[k];
      del[k] = (y[k + 1] - y[k]) / h[k];
    }
    d.assign(n, 0.0);
    for (size_t k = 1; k + 1 < n; ++k) {
      if (del[k - 1] * del[k] > 0) {
        const double w1 = 2 * h[k] + h[k - 1];
        const double w2 = h[k] + 2 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
      }
    }
    auto end = [](double h0, double h1, double d0, double d1) {
      double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (s * d0 <= 0) return 0.0;
      if (d0 * d1 <= 0 && std::abs(s) > std::abs(3 * d0)) return 3 * d0;
      return s;
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  }

  double operator()(double t) const {
    size_t k = std::upper_bound(x.begin(), x.end(), t) - x.begin();
    k = std::clamp<size_t>(k, 1, x.size() - 1) - 1;
    const double hk = x[k + 1] - x[k];
    const double s = (t - x[k]) / hk;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * y[k] + h10 * hk * d[k] + h01 * y[k + 1] + h11 * hk * d[k + 1];
  }
};

inline double Trapezoid(const Hermite& f, double a, double b, int steps = 200000) {
  const double h = (b - a) / steps;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < steps; ++i) s += f(a + i * h);
  return s * h;
}

// Curves are given as (bpp, quality) with distinct qualities.
inline double OracleBdRate(const std::vector<std::pair<double, double>>& anchor,
                    const std::vector<std::pair<double, double>>& test) {
  auto fit = [](std::vector<std::pair<double, double>> pts) {
    std::sort(pts.begin(), pts.end(), [](auto a, auto b) { return a.second < b.second; });
    std::vector<double> q, r;
    for (auto [bpp, quality] : pts) {
      q.push_back(quality);
      r.push_back(std::log10(bpp));
    }
    return Hermite(q, r);
  };
  const Hermite a = fit(anchor), t = fit(test);
  const double lo = std::max(a.x.front(), t.x.front());
  const double hi = std::min(a.x.back(), t.x.back());
  const double diff = (Trapezoid(t, lo, hi) - Trapezoid(a, lo, hi)) / (hi - lo);
  return (std::pow(10.0, diff) - 1.0) * 100.0;
}

}  // namespace taskcodec::testing

#endif  // TASKCODEC_TESTS_BD_ORACLE_H_
