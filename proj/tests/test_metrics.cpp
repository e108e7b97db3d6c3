// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tenerv/metrics.hpp"
#include "tenerv/rng.hpp"

#include "support/gradcheck.hpp"
#include "support/reference_msssim.hpp"

using tenerv::RDPoint;
using tenerv::Tensor;

TEST_CASE("psnr: analytic cases") {
  std::vector<float> zeros(3 * 8 * 8, 0.0f);
  std::vector<float> ones(zeros.size(), 1.0f);
  std::vector<float> tenth(zeros.size(), 0.1f);

  REQUIRE(tenerv::psnr<float>(zeros, zeros) == 100.0);  // identical frames hit the cap
  REQUIRE_THAT(tenerv::psnr<float>(zeros, ones), Catch::Matchers::WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(tenerv::psnr<float>(zeros, tenth), Catch::Matchers::WithinAbs(20.0, 1e-6));
}

TEST_CASE("psnr: symmetric and monotone decreasing in MSE") {
  tenerv::Rng rng(17);
  std::vector<float> a(3 * 16 * 16), b(a.size()), c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<float>(rng.uniform());
    b[i] = std::clamp(a[i] + static_cast<float>(rng.uniform(-0.05, 0.05)), 0.0f, 1.0f);
    c[i] = std::clamp(a[i] + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
  }
  REQUIRE(tenerv::psnr<float>(a, b) == tenerv::psnr<float>(b, a));
  REQUIRE(tenerv::psnr<float>(a, b) > tenerv::psnr<float>(a, c));

  std::vector<float> short_frame(10);
  REQUIRE_THROWS_AS(tenerv::psnr<float>(a, short_frame), tenerv::ShapeError);
}

TEST_CASE("l1_loss: cases and gradient") {
  auto a = Tensor<double>::from_data({2, 2}, {0.1, 0.2, 0.3, 0.4}, true);
  auto same = Tensor<double>::from_data({2, 2}, {0.1, 0.2, 0.3, 0.4});
  REQUIRE(tenerv::l1_loss(a, same).item() == 0.0);

  auto offset = Tensor<double>::from_data({2, 2}, {0.35, 0.45, 0.55, 0.65});
  REQUIRE_THAT(tenerv::l1_loss(a, offset).item(), Catch::Matchers::WithinAbs(0.25, 1e-12));

  auto loss = tenerv::l1_loss(a, offset);
  loss.backward();
  for (double g : a.grad()) REQUIRE(g == -0.25);  // sign(a-b)/N with a < b everywhere
}

TEST_CASE("ms_ssim: identical frames give exactly one") {
  tenerv::Rng rng(23);
  auto a = Tensor<double>::uniform({3, 48, 48}, rng, 0.0, 1.0);
  auto b = Tensor<double>::from_data({3, 48, 48},
                                     std::vector<double>(a.data(), a.data() + a.size()));
  REQUIRE(tenerv::ms_ssim(a, b, 2).item() == 1.0);
  REQUIRE(tenerv::ms_ssim(a, a, 3).item() == 1.0);
}

TEST_CASE("ms_ssim: symmetric in its arguments") {
  tenerv::Rng rng(29);
  auto a = Tensor<double>::uniform({3, 48, 48}, rng, 0.0, 1.0);
  auto b = Tensor<double>::uniform({3, 48, 48}, rng, 0.0, 1.0);
  REQUIRE(tenerv::ms_ssim(a, b, 3).item() == tenerv::ms_ssim(b, a, 3).item());
}

TEST_CASE("ms_ssim: frame too small for the requested scales") {
  auto a = Tensor<double>::zeros({3, 40, 40});
  REQUIRE_THROWS_MATCHES(tenerv::ms_ssim(a, a, 3), tenerv::ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("44")));
  REQUIRE_NOTHROW(tenerv::ms_ssim(a, a, 2));
}

TEST_CASE("ms_ssim: matches the slow reference implementation") {
  tenerv::Rng rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<double> a(3 * 96 * 96), b(a.size());
    const bool correlated = trial % 2 == 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.uniform();
      b[i] = correlated ? std::clamp(a[i] + rng.uniform(-0.08, 0.08), 0.0, 1.0)
                        : rng.uniform();
    }
    auto ta = Tensor<double>::from_data({3, 96, 96}, a);
    auto tb = Tensor<double>::from_data({3, 96, 96}, b);
    const double got = tenerv::ms_ssim(ta, tb, 3).item();
    const double want = testsupport::reference_ms_ssim(a, b, 3, 96, 96, 3);
    REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-6));
  }
}

TEST_CASE("ms_ssim: gradients match finite differences") {
  tenerv::Rng rng(37);
  auto a = Tensor<double>::uniform({1, 14, 14}, rng, 0.2, 0.8, true);
  auto b = Tensor<double>::uniform({1, 14, 14}, rng, 0.2, 0.8, true);
  auto loss = [&] { return tenerv::ms_ssim(a, b, 1); };
  REQUIRE(testsupport::max_rel_grad_error({a, b}, loss) < 1e-3);
}

namespace {

std::vector<RDPoint> scaled_curve(double rate_factor) {
  return {{1.0 * rate_factor, 30.0},
          {2.0 * rate_factor, 33.0},
          {4.0 * rate_factor, 36.0},
          {8.0 * rate_factor, 39.0}};
}

}  // namespace

TEST_CASE("bd_rate: trivial curves") {
  auto anchor = scaled_curve(1.0);
  REQUIRE_THAT(tenerv::bd_rate(anchor, anchor), Catch::Matchers::WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(tenerv::bd_rate(anchor, scaled_curve(2.0)),
               Catch::Matchers::WithinAbs(100.0, 0.1));
  REQUIRE_THAT(tenerv::bd_rate(anchor, scaled_curve(0.5)),
               Catch::Matchers::WithinAbs(-50.0, 0.05));
}

TEST_CASE("bd_rate: approximate antisymmetry on smooth curves") {
  std::vector<RDPoint> a = {{0.8, 29.5}, {1.7, 32.8}, {3.9, 35.9}, {8.4, 39.2}};
  std::vector<RDPoint> b = {{1.0, 30.0}, {2.1, 33.1}, {4.4, 36.3}, {9.0, 39.0}};
  const double fwd = tenerv::bd_rate(a, b);
  const double rev = tenerv::bd_rate(b, a);
  REQUIRE_THAT(fwd, Catch::Matchers::WithinAbs(-rev / (1.0 + rev / 100.0), 0.5));
}

TEST_CASE("bd_rate: input validation") {
  std::vector<RDPoint> three = {{1, 30}, {2, 33}, {4, 36}};
  REQUIRE_THROWS_AS(tenerv::bd_rate(three, three), tenerv::ConfigError);

  auto anchor = scaled_curve(1.0);
  std::vector<RDPoint> disjoint = {{1, 50}, {2, 53}, {4, 56}, {8, 59}};
  REQUIRE_THROWS_AS(tenerv::bd_rate(anchor, disjoint), tenerv::ComputationError);

  std::vector<RDPoint> bad_rate = {{0.0, 30}, {2, 33}, {4, 36}, {8, 39}};
  REQUIRE_THROWS_AS(tenerv::bd_rate(bad_rate, anchor), tenerv::DataError);
}
