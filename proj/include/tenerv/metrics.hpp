// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Quality and rate metrics: PSNR, differentiable MS-SSIM (usable as a loss),
// L1 loss, and Bjontegaard delta-rate for comparing rate-distortion curves.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tenerv/ops.hpp"
#include "tenerv/tensor.hpp"

namespace tenerv {

struct RDPoint {
  double rate = 0.0;     // bits per pixel
  double quality = 0.0;  // dB (PSNR) or unitless (MS-SSIM)
};

// 10*log10(1/MSE) over all entries, values expected in [0,1]; capped at 100 dB.
template <typename T>
double psnr(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size())
    throw ShapeError("psnr: frame sizes differ, " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  if (a.empty()) throw ShapeError("psnr: empty frames");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.size());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

// Mean absolute difference, differentiable with subgradient 0 at ties.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("l1_loss", a, b);
  return mean(abs_val(sub(a, b)));
}

namespace detail {

// 11x11 Gaussian window, sigma 1.5, normalized to unit sum.
template <typename T>
Tensor<T> ssim_window(int channels) {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  std::array<double, kSize> g;
  double norm = 0.0;
  for (int i = 0; i < kSize; ++i) {
    const double d = i - (kSize - 1) / 2.0;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    norm += g[static_cast<std::size_t>(i)];
  }
  std::vector<T> w(static_cast<std::size_t>(channels) * kSize * kSize);
  for (int c = 0; c < channels; ++c)
    for (int i = 0; i < kSize; ++i)
      for (int j = 0; j < kSize; ++j)
        w[(static_cast<std::size_t>(c) * kSize + i) * kSize + j] =
            static_cast<T>(g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)] /
                           (norm * norm));
  return Tensor<T>::from_data({channels, kSize, kSize}, std::move(w));
}

constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

}  // namespace detail

// Multi-scale SSIM on the channel-mean image: 11x11 Gaussian window (sigma
// 1.5, valid placement), C1 = 0.01^2, C2 = 0.03^2, contrast-structure terms at
// every scale and the luminance term at the coarsest, exponents from the
// standard 5-scale weights truncated to `scales` and renormalized to sum 1.
// Differentiable in both frames; the scale means are floored at a tiny
// positive value so the fractional powers stay defined.
template <typename T>
Tensor<T> ms_ssim(const Tensor<T>& a, const Tensor<T>& b, int scales = 3) {
  detail::check_same_shape("ms_ssim", a, b);
  detail::require_ndim("ms_ssim", a, 3, "frame");
  if (scales < 1 || scales > 5)
    throw ConfigError("ms_ssim: scales must be in 1..5, got " + std::to_string(scales));
  const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  const int min_side = 11 << (scales - 1);
  if (h < min_side || w < min_side)
    throw ConfigError("ms_ssim: " + std::to_string(scales) + " scales require min(H,W) >= " +
                      std::to_string(min_side) + ", got " + std::to_string(h) + "x" +
                      std::to_string(w));

  double weight_norm = 0.0;
  for (int s = 0; s < scales; ++s) weight_norm += detail::kMsSsimWeights[static_cast<std::size_t>(s)];

  const T c1 = T(0.01) * T(0.01);
  const T c2 = T(0.03) * T(0.03);
  const T floor = T(1e-12);
  auto window = detail::ssim_window<T>(1);

  auto x = channel_mean(reshape(a, {1, c, h, w}));
  auto y = channel_mean(reshape(b, {1, c, h, w}));

  Tensor<T> result;
  for (int s = 0; s < scales; ++s) {
    const T exponent =
        static_cast<T>(detail::kMsSsimWeights[static_cast<std::size_t>(s)] / weight_norm);
    auto mu_x = conv2d_depthwise_valid(x, window);
    auto mu_y = conv2d_depthwise_valid(y, window);
    auto sigma_x2 = sub(conv2d_depthwise_valid(mul(x, x), window), mul(mu_x, mu_x));
    auto sigma_y2 = sub(conv2d_depthwise_valid(mul(y, y), window), mul(mu_y, mu_y));
    auto sigma_xy = sub(conv2d_depthwise_valid(mul(x, y), window), mul(mu_x, mu_y));

    auto cs_map = div(add_scalar(mul_scalar(sigma_xy, T(2)), c2),
                      add_scalar(add(sigma_x2, sigma_y2), c2));
    auto factor = pow_scalar(clamp_min(mean(cs_map), floor), exponent);

    if (s == scales - 1) {
      auto l_map = div(add_scalar(mul_scalar(mul(mu_x, mu_y), T(2)), c1),
                       add_scalar(add(mul(mu_x, mu_x), mul(mu_y, mu_y)), c1));
      factor = mul(factor, pow_scalar(clamp_min(mean(l_map), floor), exponent));
    } else {
      x = avg_pool2(x);
      y = avg_pool2(y);
    }
    result = (s == 0) ? factor : mul(result, factor);
  }
  return result;
}

// Metric-only convenience: evaluates MS-SSIM in double without recording.
inline double ms_ssim_value(std::span<const float> a, std::span<const float> b, int channels,
                            int h, int w, int scales = 3) {
  NoGradGuard no_grad;
  std::vector<double> da(a.begin(), a.end());
  std::vector<double> db(b.begin(), b.end());
  auto ta = Tensor<double>::from_data({channels, h, w}, std::move(da));
  auto tb = Tensor<double>::from_data({channels, h, w}, std::move(db));
  return ms_ssim(ta, tb, scales).item();
}

namespace detail {

// Least-squares cubic fit of log10(rate) as a function of quality, on
// centered/scaled quality coordinates for conditioning.
struct CubicFit {
  double q_mid = 0.0, q_scale = 1.0;
  std::array<double, 4> coef{};

  double operator()(double q) const {
    const double u = (q - q_mid) / q_scale;
    return ((coef[3] * u + coef[2]) * u + coef[1]) * u + coef[0];
  }
};

inline CubicFit fit_log_rate(const std::vector<RDPoint>& points) {
  CubicFit fit;
  double lo = points.front().quality, hi = points.front().quality;
  for (const auto& p : points) {
    lo = std::min(lo, p.quality);
    hi = std::max(hi, p.quality);
  }
  fit.q_mid = 0.5 * (lo + hi);
  fit.q_scale = std::max(0.5 * (hi - lo), 1e-9);

  // Normal equations for a degree-3 polynomial.
  std::array<std::array<double, 5>, 4> m{};
  for (const auto& p : points) {
    const double u = (p.quality - fit.q_mid) / fit.q_scale;
    const double f = std::log10(p.rate);
    std::array<double, 4> basis = {1.0, u, u * u, u * u * u};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m[r][c] += basis[r] * basis[c];
      m[r][4] += basis[r] * f;
    }
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    if (std::abs(m[col][col]) < 1e-12)
      throw ComputationError("bd_rate: degenerate quality values, cubic fit is singular");
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 5; ++c) m[r][c] -= f * m[col][c];
    }
  }
  for (int r = 0; r < 4; ++r) fit.coef[static_cast<std::size_t>(r)] = m[r][4] / m[r][r];
  return fit;
}

}  // namespace detail

// Bjontegaard delta-rate of `test` against `anchor`, in percent: positive
// means the test curve spends more bits at equal quality. Integration uses
// 1000-sample trapezoids over the overlapping quality interval.
inline double bd_rate(const std::vector<RDPoint>& anchor, const std::vector<RDPoint>& test) {
  if (anchor.size() < 4 || test.size() < 4)
    throw ConfigError("bd_rate: need at least 4 rate-distortion points per curve");
  for (const auto* curve : {&anchor, &test})
    for (const auto& p : *curve)
      if (!(p.rate > 0.0)) throw DataError("bd_rate: rates must be positive");

  auto span_of = [](const std::vector<RDPoint>& pts) {
    double lo = pts.front().quality, hi = pts.front().quality;
    for (const auto& p : pts) {
      lo = std::min(lo, p.quality);
      hi = std::max(hi, p.quality);
    }
    return std::pair<double, double>{lo, hi};
  };
  const auto [a_lo, a_hi] = span_of(anchor);
  const auto [t_lo, t_hi] = span_of(test);
  const double lo = std::max(a_lo, t_lo);
  const double hi = std::min(a_hi, t_hi);
  if (!(hi > lo)) throw ComputationError("bd_rate: curves have no quality overlap");

  const auto fit_a = detail::fit_log_rate(anchor);
  const auto fit_t = detail::fit_log_rate(test);

  constexpr int kSamples = 1000;
  double integral = 0.0;
  double prev = fit_t(lo) - fit_a(lo);
  for (int i = 1; i <= kSamples; ++i) {
    const double q = lo + (hi - lo) * i / kSamples;
    const double cur = fit_t(q) - fit_a(q);
    integral += 0.5 * (prev + cur);
    prev = cur;
  }
  const double avg_log_diff = integral / kSamples;
  return (std::pow(10.0, avg_log_diff) - 1.0) * 100.0;
}

}  // namespace tenerv
