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

#include "taskcodec/entropy_model.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace taskcodec {

void EntropyModelSpec::Validate() const {
  if (latent_channels < 1 || context_channels < 1 || fusion_width < 1) {
    throw ConfigError("entropy model: channel counts must be positive");
  }
  if (context_kernel < 3 || context_kernel % 2 == 0) {
    throw ConfigError("entropy model: context_kernel must be odd and >= 3");
  }
  if (side_input_channels < 0 || (has_side() && side_channels < 1)) {
    throw ConfigError("entropy model: bad side-branch configuration");
  }
}

namespace {

template <typename T>
T Softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <typename T>
T Sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void UniformFill(Tensor<T>& t, double bound, Rng& rng) {
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.Uniform(-bound, bound));
}

}  // namespace

template <typename T>
EntropyModel<T>::EntropyModel(const EntropyModelSpec& spec)
    : spec_(spec),
      context_weight_(Shape{spec.causal_taps(), spec.latent_channels,
                            spec.context_channels, 1}),
      context_bias_(Shape{1, spec.context_channels, 1, 1}),
      fuse0_weight_(Shape{spec.context_channels +
                              (spec.has_side() ? spec.side_channels : 0),
                          spec.fusion_width, 1, 1}),
      fuse0_bias_(Shape{1, spec.fusion_width, 1, 1}),
      fuse1_weight_(Shape{spec.fusion_width, 2 * spec.latent_channels, 1, 1}),
      fuse1_bias_(Shape{1, 2 * spec.latent_channels, 1, 1}) {
  spec.Validate();
  if (spec.has_side()) {
    side_net_ = std::make_unique<Sequential<T>>();
    side_net_->template Add<Conv2d<T>>("in", spec.side_input_channels,
                                       spec.side_channels, ConvGeometry{3, 1, 1});
    side_net_->template Add<Elu<T>>("act");
    for (int b = 0; b < spec.side_blocks; ++b) {
      side_net_->template Add<ResidualBottleneck<T>>("block" + std::to_string(b),
                                                     spec.side_channels);
    }
  }
}

template <typename T>
void EntropyModel<T>::Initialize(Rng& rng) {
  UniformFill(context_weight_.value,
              std::sqrt(3.0 / (spec_.causal_taps() * spec_.latent_channels)), rng);
  context_bias_.value.Fill(T(0));
  if (side_net_) side_net_->Initialize(rng);
  UniformFill(fuse0_weight_.value, std::sqrt(3.0 / fuse0_weight_.value.n()), rng);
  fuse0_bias_.value.Fill(T(0));
  UniformFill(fuse1_weight_.value, 0.1 * std::sqrt(3.0 / spec_.fusion_width), rng);
  fuse1_bias_.value.Fill(T(0));
}

template <typename T>
void EntropyModel<T>::CollectParameters(const std::string& prefix,
                                        ParameterList<T>& out) {
  out.push_back({JoinName(prefix, "context.weight"), &context_weight_});
  out.push_back({JoinName(prefix, "context.bias"), &context_bias_});
  if (side_net_) side_net_->CollectParameters(JoinName(prefix, "side"), out);
  out.push_back({JoinName(prefix, "fuse0.weight"), &fuse0_weight_});
  out.push_back({JoinName(prefix, "fuse0.bias"), &fuse0_bias_});
  out.push_back({JoinName(prefix, "fuse1.weight"), &fuse1_weight_});
  out.push_back({JoinName(prefix, "fuse1.bias"), &fuse1_bias_});
}

template <typename T>
void EntropyModel<T>::ContextAt(const Tensor<T>& y_hat, int n, int y, int x,
                                T* out) const {
  const int k = spec_.context_kernel;
  const int r = k / 2;
  const int m = spec_.latent_channels;
  const int f = spec_.context_channels;
  const T* bias = context_bias_.value.data();
  for (int i = 0; i < f; ++i) out[i] = bias[i];
  // Taps t < k*k/2 are exactly the window positions before the centre in
  // raster order.
  for (int t = 0; t < spec_.causal_taps(); ++t) {
    const int iy = y + t / k - r;
    const int ix = x + t % k - r;
    if (iy < 0 || iy >= y_hat.h() || ix < 0 || ix >= y_hat.w()) continue;
    const T* wt = context_weight_.value.data() + static_cast<size_t>(t) * m * f;
    for (int c = 0; c < m; ++c) {
      const T v = y_hat.at(n, c, iy, ix);
      const T* w = wt + static_cast<size_t>(c) * f;
      for (int i = 0; i < f; ++i) out[i] += w[i] * v;
    }
  }
}

template <typename T>
void EntropyModel<T>::FuseAt(const T* context, const T* side, T* mu, T* sigma,
                             T* hidden, T* raw) const {
  const int fc = spec_.context_channels;
  const int fs = spec_.has_side() ? spec_.side_channels : 0;
  const int hw = spec_.fusion_width;
  const int m = spec_.latent_channels;
  std::vector<T> h(fuse0_bias_.value.data(), fuse0_bias_.value.data() + hw);
  const T* w0 = fuse0_weight_.value.data();
  for (int i = 0; i < fc; ++i) {
    const T v = context[i];
    const T* w = w0 + static_cast<size_t>(i) * hw;
    for (int j = 0; j < hw; ++j) h[j] += w[j] * v;
  }
  for (int i = 0; i < fs; ++i) {
    const T v = side[i];
    const T* w = w0 + static_cast<size_t>(fc + i) * hw;
    for (int j = 0; j < hw; ++j) h[j] += w[j] * v;
  }
  if (hidden != nullptr) std::copy(h.begin(), h.end(), hidden);
  std::vector<T> out(fuse1_bias_.value.data(), fuse1_bias_.value.data() + 2 * m);
  const T* w1 = fuse1_weight_.value.data();
  for (int j = 0; j < hw; ++j) {
    const T a = h[j] > T(0) ? h[j] : std::expm1(h[j]);
    const T* w = w1 + static_cast<size_t>(j) * 2 * m;
    for (int o = 0; o < 2 * m; ++o) out[o] += w[o] * a;
  }
  if (raw != nullptr) std::copy(out.begin(), out.end(), raw);
  for (int c = 0; c < m; ++c) {
    mu[c] = out[c];
    sigma[c] = static_cast<T>(kSigmaMin) + Softplus(out[m + c]);
  }
}

template <typename T>
void EntropyModel<T>::CheckSide(const Tensor<T>* side, int n, int h, int w) const {
  if (spec_.has_side() != (side != nullptr)) {
    throw ContractViolation(spec_.has_side()
                                ? "entropy model: side input required"
                                : "entropy model: base layer takes no side input");
  }
  if (side != nullptr && (side->n() != n || side->h() != h || side->w() != w)) {
    throw ShapeError("entropy model: side grid " + side->shape().ToString() +
                     " does not align with target latent");
  }
}

template <typename T>
Tensor<T> EntropyModel<T>::ContextFeatures(const Tensor<T>& y_hat) const {
  if (y_hat.c() != spec_.latent_channels) throw ShapeError("context: channel mismatch");
  const int fc = spec_.context_channels;
  Tensor<T> out(y_hat.n(), fc, y_hat.h(), y_hat.w());
  std::vector<T> buf(fc);
  for (int n = 0; n < y_hat.n(); ++n)
    for (int y = 0; y < y_hat.h(); ++y)
      for (int x = 0; x < y_hat.w(); ++x) {
        ContextAt(y_hat, n, y, x, buf.data());
        for (int i = 0; i < fc; ++i) out.at(n, i, y, x) = buf[i];
      }
  return out;
}

template <typename T>
Tensor<T> EntropyModel<T>::SideFeatures(const Tensor<T>& y_side) {
  if (!side_net_) throw ContractViolation("entropy model has no side branch");
  if (y_side.c() != spec_.side_input_channels) {
    throw ShapeError("side features: expected " +
                     std::to_string(spec_.side_input_channels) + " channels");
  }
  return side_net_->Forward(y_side);
}

template <typename T>
GaussianFieldParams<T> EntropyModel<T>::PredictParams(const Tensor<T>& context,
                                                      const Tensor<T>* side) const {
  CheckSide(side, context.n(), context.h(), context.w());
  const int m = spec_.latent_channels;
  const int fc = spec_.context_channels;
  const int fs = spec_.has_side() ? spec_.side_channels : 0;
  GaussianFieldParams<T> p{Tensor<T>(context.n(), m, context.h(), context.w()),
                           Tensor<T>(context.n(), m, context.h(), context.w())};
  std::vector<T> cv(fc), sv(fs), mu(m), sigma(m);
  for (int n = 0; n < context.n(); ++n)
    for (int y = 0; y < context.h(); ++y)
      for (int x = 0; x < context.w(); ++x) {
        for (int i = 0; i < fc; ++i) cv[i] = context.at(n, i, y, x);
        for (int i = 0; i < fs; ++i) sv[i] = side->at(n, i, y, x);
        FuseAt(cv.data(), sv.data(), mu.data(), sigma.data(), nullptr, nullptr);
        for (int c = 0; c < m; ++c) {
          p.mu.at(n, c, y, x) = mu[c];
          p.sigma.at(n, c, y, x) = sigma[c];
        }
      }
  return p;
}

template <typename T>
void EntropyModel<T>::ParamsAt(const Tensor<T>& y_hat,
                               const Tensor<T>* side_features, int n, int y,
                               int x, std::span<T> mu, std::span<T> sigma) const {
  const int m = spec_.latent_channels;
  if (static_cast<int>(mu.size()) != m || static_cast<int>(sigma.size()) != m) {
    throw ShapeError("ParamsAt: output span size mismatch");
  }
  const int fs = spec_.has_side() ? spec_.side_channels : 0;
  std::vector<T> cv(spec_.context_channels), sv(fs);
  ContextAt(y_hat, n, y, x, cv.data());
  for (int i = 0; i < fs; ++i) sv[i] = side_features->at(n, i, y, x);
  FuseAt(cv.data(), sv.data(), mu.data(), sigma.data(), nullptr, nullptr);
}

template <typename T>
GaussianFieldParams<T> EntropyModel<T>::Forward(const Tensor<T>& y_hat,
                                                const Tensor<T>* y_side) {
  if (y_hat.c() != spec_.latent_channels) throw ShapeError("entropy model: channel mismatch");
  CheckSide(y_side, y_hat.n(), y_hat.h(), y_hat.w());
  cached_y_hat_ = y_hat;
  if (y_side != nullptr) cached_side_ = SideFeatures(*y_side);
  const int n_pos = y_hat.h() * y_hat.w();
  const int m = spec_.latent_channels;
  const int fc = spec_.context_channels;
  const int fs = spec_.has_side() ? spec_.side_channels : 0;
  const int hw = spec_.fusion_width;
  const size_t slots = static_cast<size_t>(y_hat.n()) * n_pos;
  cached_context_.assign(slots * fc, T(0));
  cached_hidden_.assign(slots * hw, T(0));
  cached_raw_.assign(slots * 2 * m, T(0));
  GaussianFieldParams<T> p{Tensor<T>(y_hat.shape()), Tensor<T>(y_hat.shape())};
#pragma omp parallel
  {
    std::vector<T> sv(fs), mu(m), sigma(m);
#pragma omp for schedule(static)
    for (int n = 0; n < y_hat.n(); ++n) {
      for (int pos = 0; pos < n_pos; ++pos) {
        const int y = pos / y_hat.w();
        const int x = pos % y_hat.w();
        const size_t slot = static_cast<size_t>(n) * n_pos + pos;
        T* ctx = cached_context_.data() + slot * fc;
        ContextAt(y_hat, n, y, x, ctx);
        for (int i = 0; i < fs; ++i) sv[i] = cached_side_.at(n, i, y, x);
        FuseAt(ctx, sv.data(), mu.data(), sigma.data(),
               cached_hidden_.data() + slot * hw, cached_raw_.data() + slot * 2 * m);
        for (int c = 0; c < m; ++c) {
          p.mu.at(n, c, y, x) = mu[c];
          p.sigma.at(n, c, y, x) = sigma[c];
        }
      }
    }
  }
  return p;
}

template <typename T>
Tensor<T> EntropyModel<T>::Backward(const Tensor<T>& dmu, const Tensor<T>& dsigma) {
  const Tensor<T>& yh = cached_y_hat_;
  RequireSameShape(dmu.shape(), yh.shape(), "entropy backward (mu)");
  RequireSameShape(dsigma.shape(), yh.shape(), "entropy backward (sigma)");
  const int n_pos = yh.h() * yh.w();
  const int m = spec_.latent_channels;
  const int fc = spec_.context_channels;
  const int fs = spec_.has_side() ? spec_.side_channels : 0;
  const int fin = fc + fs;
  const int hw = spec_.fusion_width;
  const int k = spec_.context_kernel;
  const int r = k / 2;
  Tensor<T> dy(yh.shape());
  Tensor<T> dside;
  if (fs > 0) dside = Tensor<T>(yh.n(), fs, yh.h(), yh.w());

  const T* w0 = fuse0_weight_.value.data();
  const T* w1 = fuse1_weight_.value.data();
  const T* wc = context_weight_.value.data();
  T* gw0 = fuse0_weight_.grad.data();
  T* gb0 = fuse0_bias_.grad.data();
  T* gw1 = fuse1_weight_.grad.data();
  T* gb1 = fuse1_bias_.grad.data();
  T* gwc = context_weight_.grad.data();
  T* gbc = context_bias_.grad.data();

  std::vector<T> draw(2 * m), act(hw), dh(hw), in(fin), din(fin);
  // Serial over samples: the weight-gradient accumulation order is fixed.
  for (int n = 0; n < yh.n(); ++n) {
    for (int pos = 0; pos < n_pos; ++pos) {
      const int y = pos / yh.w();
      const int x = pos % yh.w();
      const size_t slot = static_cast<size_t>(n) * n_pos + pos;
      const T* raw = cached_raw_.data() + slot * 2 * m;
      const T* hpre = cached_hidden_.data() + slot * hw;
      const T* ctx = cached_context_.data() + slot * fc;
      for (int c = 0; c < m; ++c) {
        draw[c] = dmu.at(n, c, y, x);
        draw[m + c] = dsigma.at(n, c, y, x) * Sigmoid(raw[m + c]);
      }
      for (int o = 0; o < 2 * m; ++o) gb1[o] += draw[o];
      for (int j = 0; j < hw; ++j) {
        act[j] = hpre[j] > T(0) ? hpre[j] : std::expm1(hpre[j]);
        const T* w = w1 + static_cast<size_t>(j) * 2 * m;
        T* g = gw1 + static_cast<size_t>(j) * 2 * m;
        T s = 0;
        for (int o = 0; o < 2 * m; ++o) {
          g[o] += act[j] * draw[o];
          s += w[o] * draw[o];
        }
        dh[j] = hpre[j] > T(0) ? s : s * std::exp(hpre[j]);
      }
      for (int j = 0; j < hw; ++j) gb0[j] += dh[j];
      for (int i = 0; i < fc; ++i) in[i] = ctx[i];
      for (int i = 0; i < fs; ++i) in[fc + i] = cached_side_.at(n, i, y, x);
      for (int i = 0; i < fin; ++i) {
        const T* w = w0 + static_cast<size_t>(i) * hw;
        T* g = gw0 + static_cast<size_t>(i) * hw;
        T s = 0;
        for (int j = 0; j < hw; ++j) {
          g[j] += in[i] * dh[j];
          s += w[j] * dh[j];
        }
        din[i] = s;
      }
      for (int i = 0; i < fs; ++i) dside.at(n, i, y, x) = din[fc + i];
      const T* dctx = din.data();
      for (int i = 0; i < fc; ++i) gbc[i] += dctx[i];
      for (int t = 0; t < spec_.causal_taps(); ++t) {
        const int iy = y + t / k - r;
        const int ix = x + t % k - r;
        if (iy < 0 || iy >= yh.h() || ix < 0 || ix >= yh.w()) continue;
        for (int c = 0; c < m; ++c) {
          const size_t off = (static_cast<size_t>(t) * m + c) * fc;
          const T v = yh.at(n, c, iy, ix);
          const T* w = wc + off;
          T* g = gwc + off;
          T s = 0;
          for (int i = 0; i < fc; ++i) {
            g[i] += v * dctx[i];
            s += w[i] * dctx[i];
          }
          dy.at(n, c, iy, ix) += s;
        }
      }
    }
  }
  if (fs > 0) side_net_->Backward(dside);
  return dy;
}

template <typename T>
AutoregressiveDecoder<T>::AutoregressiveDecoder(const EntropyModel<T>& model,
                                                int height, int width,
                                                const Tensor<T>* side_features)
    : model_(model),
      side_(side_features),
      plane_(1, model.spec().latent_channels, height, width) {
  if (model.spec().has_side() != (side_features != nullptr)) {
    throw ContractViolation("autoregressive decoder: side features mismatch");
  }
  if (side_features != nullptr &&
      (side_features->n() != 1 || side_features->h() != height ||
       side_features->w() != width)) {
    throw ShapeError("autoregressive decoder: side grid misaligned");
  }
}

template <typename T>
void AutoregressiveDecoder<T>::NextParams(std::span<T> mu, std::span<T> sigma) const {
  if (done()) throw ContractViolation("autoregressive decoder: plane complete");
  model_.ParamsAt(plane_, side_, 0, position_ / plane_.w(), position_ % plane_.w(),
                  mu, sigma);
}

template <typename T>
void AutoregressiveDecoder<T>::Commit(std::span<const T> values) {
  if (done()) throw ContractViolation("autoregressive decoder: plane complete");
  if (static_cast<int>(values.size()) != plane_.c()) {
    throw ShapeError("autoregressive decoder: wrong channel count");
  }
  const int y = position_ / plane_.w();
  const int x = position_ % plane_.w();
  for (int c = 0; c < plane_.c(); ++c) plane_.at(0, c, y, x) = values[c];
  ++position_;
}

template <typename T>
void AutoregressiveDecodeParams(const EntropyModel<T>& model,
                                const Tensor<T>& decoded_prefix,
                                int decoded_positions,
                                const Tensor<T>* side_features, int position,
                                std::span<T> mu, std::span<T> sigma) {
  const int total = decoded_prefix.h() * decoded_prefix.w();
  if (position != decoded_positions) {
    throw ContractViolation("autoregressive decode: position " +
                            std::to_string(position) + " requested with " +
                            std::to_string(decoded_positions) +
                            " positions decoded");
  }
  if (position < 0 || position >= total) {
    throw ContractViolation("autoregressive decode: position out of range");
  }
  model.ParamsAt(decoded_prefix, side_features, 0, position / decoded_prefix.w(),
                 position % decoded_prefix.w(), mu, sigma);
}

// ---------------------------------------------------------------------------

namespace {

double StdNormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double StdNormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double DiscretizedGaussianProbability(double v, double mu, double sigma) {
  // Evaluate on the lower tail for accuracy far from the mean.
  const double d = std::abs(v - mu);
  return StdNormalCdf((0.5 - d) / sigma) - StdNormalCdf((-0.5 - d) / sigma);
}

ElementRate DiscretizedGaussianBits(double v, double mu, double sigma) {
  const double diff = v - mu;
  const double d = std::abs(diff);
  const double upper = (0.5 - d) / sigma;
  const double lower = (-0.5 - d) / sigma;
  const double p = StdNormalCdf(upper) - StdNormalCdf(lower);
  if (!(p > kProbabilityFloor)) {
    return {-std::log2(kProbabilityFloor), 0.0, 0.0, 0.0};
  }
  const double dbits_dp = -1.0 / (p * std::numbers::ln2);
  const double pu = StdNormalPdf(upper);
  const double pl = StdNormalPdf(lower);
  const double dp_dd = (pl - pu) / sigma;
  const double dp_dsigma = (lower * pl - upper * pu) / sigma;
  const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
  return {-std::log2(p), dbits_dp * dp_dd * sign, -dbits_dp * dp_dd * sign,
          dbits_dp * dp_dsigma};
}

template <typename T>
RateEstimate<T> EstimateRate(const Tensor<T>& y_hat,
                             const GaussianFieldParams<T>& params,
                             bool allow_fractional) {
  RequireSameShape(y_hat.shape(), params.mu.shape(), "rate estimate (mu)");
  RequireSameShape(y_hat.shape(), params.sigma.shape(), "rate estimate (sigma)");
  RateEstimate<T> r{0.0, Tensor<T>(y_hat.shape())};
  for (size_t i = 0; i < y_hat.size(); ++i) {
    const double v = y_hat[i];
    if (!allow_fractional && std::abs(v - std::round(v)) > 1e-9) {
      throw ContractViolation("rate estimate: latent is not integer-valued");
    }
    const double bits =
        DiscretizedGaussianBits(v, params.mu[i], params.sigma[i]).bits;
    r.bits[i] = static_cast<T>(bits);
    r.total_bits += bits;
  }
  return r;
}

template <typename T>
void EstimateRateBackward(const Tensor<T>& y_hat,
                          const GaussianFieldParams<T>& params, double scale,
                          Tensor<T>& dy_hat, Tensor<T>& dmu, Tensor<T>& dsigma) {
  dy_hat = Tensor<T>(y_hat.shape());
  dmu = Tensor<T>(y_hat.shape());
  dsigma = Tensor<T>(y_hat.shape());
  for (size_t i = 0; i < y_hat.size(); ++i) {
    const ElementRate e = DiscretizedGaussianBits(y_hat[i], params.mu[i], params.sigma[i]);
    dy_hat[i] = static_cast<T>(scale * e.dv);
    dmu[i] = static_cast<T>(scale * e.dmu);
    dsigma[i] = static_cast<T>(scale * e.dsigma);
  }
}

void AppendCdfRow(double mu, double sigma, int32_t s_min, int32_t s_max,
                  std::vector<uint32_t>& entries) {
  constexpr uint32_t kTotal = 1u << kCdfPrecision;
  const int n = s_max - s_min + 1;
  std::vector<double> p(n + 1);
  double mass = 0.0;
  for (int j = 0; j < n; ++j) {
    const double v = std::round(static_cast<double>(s_min + j) + mu);
    p[j] = DiscretizedGaussianProbability(v, mu, sigma);
    mass += p[j];
  }
  p[n] = std::max(0.0, 1.0 - mass);
  std::vector<int64_t> freq(n + 1);
  int64_t sum = 0;
  for (int j = 0; j <= n; ++j) {
    freq[j] = std::max<int64_t>(1, std::llround(p[j] * kTotal));
    sum += freq[j];
  }
  int64_t diff = static_cast<int64_t>(kTotal) - sum;
  while (diff != 0) {
    const auto it = std::max_element(freq.begin(), freq.end());
    if (diff > 0) {
      *it += diff;
      diff = 0;
    } else {
      const int64_t take = std::min<int64_t>(-diff, *it - 1);
      if (take == 0) throw ContractViolation("cdf row: symbol range too large");
      *it -= take;
      diff += take;
    }
  }
  uint32_t c = 0;
  entries.push_back(0);
  for (int j = 0; j <= n; ++j) {
    c += static_cast<uint32_t>(freq[j]);
    entries.push_back(c);
  }
}

template <typename T>
QuantizedCdfTable ExportCdfs(const GaussianFieldParams<T>& params,
                             int32_t s_min, int32_t s_max) {
  if (s_max < s_min) throw ConfigError("export_cdfs: empty symbol range");
  if (static_cast<int64_t>(s_max) - s_min + 2 > (1 << kCdfPrecision)) {
    throw ConfigError("export_cdfs: symbol range exceeds precision");
  }
  RequireSameShape(params.mu.shape(), params.sigma.shape(), "export_cdfs");
  QuantizedCdfTable table;
  table.s_min = s_min;
  table.s_max = s_max;
  table.entries.reserve(params.mu.size() * (s_max - s_min + 3));
  for (size_t i = 0; i < params.mu.size(); ++i) {
    AppendCdfRow(params.mu[i], params.sigma[i], s_min, s_max, table.entries);
  }
  return table;
}

void ValidateCdfTable(const QuantizedCdfTable& table) {
  if (table.precision != kCdfPrecision) throw ContractViolation("cdf table: precision must be 16");
  if (table.s_max < table.s_min) throw ContractViolation("cdf table: empty range");
  const size_t len = table.row_length();
  if (table.entries.size() % len != 0) throw ContractViolation("cdf table: ragged rows");
  for (size_t r = 0; r < table.rows(); ++r) {
    auto row = table.row(r);
    if (row.front() != 0 || row.back() != (1u << kCdfPrecision)) {
      throw ContractViolation("cdf table: row " + std::to_string(r) + " not normalized");
    }
    for (size_t i = 1; i < len; ++i) {
      if (row[i] <= row[i - 1]) {
        throw ContractViolation("cdf table: row " + std::to_string(r) +
                                " not strictly increasing");
      }
    }
  }
}

namespace {

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t GetU32(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) |
         (static_cast<uint32_t>(b[off + 3]) << 24);
}

}  // namespace

std::vector<uint8_t> SerializeCdfTable(const QuantizedCdfTable& table) {
  ValidateCdfTable(table);
  std::vector<uint8_t> out;
  out.reserve(9 + 2 * table.entries.size());
  PutU32(out, static_cast<uint32_t>(table.s_min));
  PutU32(out, static_cast<uint32_t>(table.s_max));
  out.push_back(table.precision);
  for (uint32_t e : table.entries) {
    const uint16_t v = static_cast<uint16_t>(e & 0xFFFF);
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
  }
  return out;
}

QuantizedCdfTable ParseCdfTable(std::span<const uint8_t> bytes) {
  if (bytes.size() < 9) throw FormatError("cdf table: truncated header");
  QuantizedCdfTable t;
  t.s_min = static_cast<int32_t>(GetU32(bytes, 0));
  t.s_max = static_cast<int32_t>(GetU32(bytes, 4));
  t.precision = bytes[8];
  if (t.s_max < t.s_min) throw FormatError("cdf table: empty range");
  if (static_cast<int64_t>(t.s_max) - t.s_min + 2 > (1 << kCdfPrecision)) {
    throw FormatError("cdf table: symbol range exceeds precision");
  }
  const size_t payload = bytes.size() - 9;
  if (payload % 2 != 0 || (payload / 2) % t.row_length() != 0) {
    throw FormatError("cdf table: payload is not a whole number of rows");
  }
  t.entries.resize(payload / 2);
  for (size_t i = 0; i < t.entries.size(); ++i) {
    t.entries[i] = static_cast<uint32_t>(bytes[9 + 2 * i]) |
                   (static_cast<uint32_t>(bytes[10 + 2 * i]) << 8);
    if ((i + 1) % t.row_length() == 0) {
      if (t.entries[i] != 0) throw FormatError("cdf table: bad row terminator");
      t.entries[i] = 1u << kCdfPrecision;
    }
  }
  ValidateCdfTable(t);
  return t;
}

template class EntropyModel<float>;
template class EntropyModel<double>;
template class AutoregressiveDecoder<float>;
template class AutoregressiveDecoder<double>;

#define TASKCODEC_EM_FUNCS(T)                                                   \
  template void AutoregressiveDecodeParams(const EntropyModel<T>&,              \
                                           const Tensor<T>&, int,               \
                                           const Tensor<T>*, int, std::span<T>, \
                                           std::span<T>);                       \
  template RateEstimate<T> EstimateRate(const Tensor<T>&,                       \
                                        const GaussianFieldParams<T>&, bool);   \
  template void EstimateRateBackward(const Tensor<T>&,                          \
                                     const GaussianFieldParams<T>&, double,     \
                                     Tensor<T>&, Tensor<T>&, Tensor<T>&);       \
  template QuantizedCdfTable ExportCdfs(const GaussianFieldParams<T>&, int32_t, \
                                        int32_t);

TASKCODEC_EM_FUNCS(float)
TASKCODEC_EM_FUNCS(double)

}  // namespace taskcodec
