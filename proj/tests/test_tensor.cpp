// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "tenerv/adam.hpp"
#include "tenerv/ops.hpp"
#include "tenerv/tensor.hpp"

#include "support/gradcheck.hpp"

using tenerv::Tensor;

namespace {

Tensor<double> rand_tensor(tenerv::Shape shape, tenerv::Rng& rng, bool rg = true) {
  return Tensor<double>::uniform(std::move(shape), rng, -1.0, 1.0, rg);
}

}  // namespace

TEST_CASE("pointwise conv: identity weight reproduces the input") {
  tenerv::Rng rng(7);
  auto x = rand_tensor({1, 3, 4, 4}, rng, false);
  auto w = Tensor<double>::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto b = Tensor<double>::zeros({3});
  auto y = tenerv::conv2d_pointwise(x, w, b);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y.data()[i] == x.data()[i]);
}

TEST_CASE("pointwise conv: channel summation case") {
  auto x = Tensor<double>::full({1, 2, 3, 3}, 1.0);
  auto w = Tensor<double>::from_data({1, 2}, {1, 1});
  auto b = Tensor<double>::zeros({1});
  auto y = tenerv::conv2d_pointwise(x, w, b);
  REQUIRE(y.shape() == tenerv::Shape{1, 1, 3, 3});
  for (double v : y.value()) REQUIRE(v == 2.0);
}

TEST_CASE("pointwise conv: shape mismatch names the offending axis") {
  auto x = Tensor<double>::zeros({1, 3, 2, 2});
  auto w = Tensor<double>::zeros({4, 5});
  auto b = Tensor<double>::zeros({4});
  REQUIRE_THROWS_MATCHES(tenerv::conv2d_pointwise(x, w, b), tenerv::ShapeError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("axis 1")));
}

TEST_CASE("pointwise conv: gradients match finite differences") {
  tenerv::Rng rng(11);
  auto x = rand_tensor({2, 3, 4, 4}, rng);
  auto w = rand_tensor({5, 3}, rng);
  auto b = rand_tensor({5}, rng);
  auto probe = rand_tensor({2, 5, 4, 4}, rng, false);
  auto loss = [&] { return tenerv::sum(tenerv::mul(tenerv::conv2d_pointwise(x, w, b), probe)); };
  REQUIRE(testsupport::max_rel_grad_error({x, w, b}, loss) < 1e-4);
}

TEST_CASE("depthwise conv: centered delta kernel is the identity") {
  tenerv::Rng rng(3);
  auto x = rand_tensor({1, 2, 5, 5}, rng, false);
  std::vector<double> k(2 * 9, 0.0);
  k[4] = 1.0;
  k[9 + 4] = 1.0;
  auto kernel = Tensor<double>::from_data({2, 3, 3}, std::move(k));
  auto bias = Tensor<double>::zeros({2});
  auto y = tenerv::conv2d_depthwise(x, kernel, bias);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y.data()[i] == x.data()[i]);
}

TEST_CASE("depthwise conv: 1x1 input sees only the kernel center") {
  auto x = Tensor<double>::from_data({1, 1, 1, 1}, {0.75});
  auto kernel = Tensor<double>::full({1, 3, 3}, 1.0);
  auto bias = Tensor<double>::zeros({1});
  auto y = tenerv::conv2d_depthwise(x, kernel, bias);
  REQUIRE(y.item() == 0.75);
}

TEST_CASE("depthwise conv: even kernel size is rejected") {
  auto x = Tensor<double>::zeros({1, 1, 4, 4});
  auto kernel = Tensor<double>::zeros({1, 2, 2});
  auto bias = Tensor<double>::zeros({1});
  REQUIRE_THROWS_AS(tenerv::conv2d_depthwise(x, kernel, bias), tenerv::ConfigError);
}

TEST_CASE("depthwise conv: gradients match finite differences") {
  tenerv::Rng rng(13);
  auto x = rand_tensor({2, 3, 5, 4}, rng);
  auto k = rand_tensor({3, 3, 3}, rng);
  auto b = rand_tensor({3}, rng);
  auto probe = rand_tensor({2, 3, 5, 4}, rng, false);
  auto loss = [&] { return tenerv::sum(tenerv::mul(tenerv::conv2d_depthwise(x, k, b), probe)); };
  REQUIRE(testsupport::max_rel_grad_error({x, k, b}, loss) < 1e-4);
}

TEST_CASE("valid depthwise conv: gradients match finite differences") {
  tenerv::Rng rng(17);
  auto x = rand_tensor({1, 2, 6, 7}, rng);
  auto k = rand_tensor({2, 3, 5}, rng);
  auto probe = rand_tensor({1, 2, 4, 3}, rng, false);
  auto loss = [&] {
    return tenerv::sum(tenerv::mul(tenerv::conv2d_depthwise_valid(x, k), probe));
  };
  REQUIRE(testsupport::max_rel_grad_error({x, k}, loss) < 1e-4);
}

TEST_CASE("channel_to_space: r=1 is the identity") {
  tenerv::Rng rng(5);
  auto x = rand_tensor({2, 3, 4, 4}, rng, false);
  auto y = tenerv::channel_to_space(x, 1);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y.data()[i] == x.data()[i]);
}

TEST_CASE("channel_to_space: definition unrolled for a 2x2 factor") {
  auto x = Tensor<double>::from_data({1, 4, 1, 1}, {1.0, 2.0, 3.0, 4.0});
  auto y = tenerv::channel_to_space(x, 2);
  REQUIRE(y.shape() == tenerv::Shape{1, 1, 2, 2});
  REQUIRE(y.data()[0] == 1.0);
  REQUIRE(y.data()[1] == 2.0);
  REQUIRE(y.data()[2] == 3.0);
  REQUIRE(y.data()[3] == 4.0);
}

TEST_CASE("channel_to_space: round-trips through a manual inverse") {
  tenerv::Rng rng(23);
  for (auto [b, c, h, w, r] : {std::array<int, 5>{1, 8, 3, 2, 2}, std::array<int, 5>{2, 18, 2, 3, 3},
                               std::array<int, 5>{1, 16, 1, 1, 4}}) {
    auto x = rand_tensor({b, c, h, w}, rng, false);
    auto y = tenerv::channel_to_space(x, r);
    // Independent inverse straight from the index formula.
    std::vector<double> back(x.size());
    const int c_out = c / (r * r);
    for (int bb = 0; bb < b; ++bb)
      for (int co = 0; co < c_out; ++co)
        for (int yy = 0; yy < h * r; ++yy)
          for (int xx = 0; xx < w * r; ++xx) {
            const int q = co * r * r + (yy % r) * r + (xx % r);
            const std::size_t src =
                ((static_cast<std::size_t>(bb) * c_out + co) * (h * r) + yy) * (w * r) + xx;
            const std::size_t dst =
                ((static_cast<std::size_t>(bb) * c + q) * h + yy / r) * w + xx / r;
            back[dst] = y.data()[src];
          }
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(back[i] == x.data()[i]);
  }
}

TEST_CASE("channel_to_space: indivisible channel count is rejected") {
  auto x = Tensor<double>::zeros({1, 6, 2, 2});
  REQUIRE_THROWS_AS(tenerv::channel_to_space(x, 2), tenerv::ShapeError);
}

TEST_CASE("channel_to_space: gradient is the inverse rearrangement") {
  tenerv::Rng rng(29);
  auto x = rand_tensor({1, 8, 2, 3}, rng);
  auto probe = rand_tensor({1, 2, 4, 6}, rng, false);
  auto loss = [&] { return tenerv::sum(tenerv::mul(tenerv::channel_to_space(x, 2), probe)); };
  REQUIRE(testsupport::max_rel_grad_error({x}, loss) < 1e-4);
}

TEST_CASE("gelu: fixed points and asymptote") {
  auto x = Tensor<double>::from_data({4}, {0.0, 6.0, 8.0, 12.0});
  auto y = tenerv::gelu(x);
  REQUIRE(y.data()[0] == 0.0);
  for (int i = 1; i < 4; ++i) REQUIRE(std::abs(y.data()[i] - x.data()[i]) < 1e-6);
}

TEST_CASE("gelu: gradients match finite differences") {
  tenerv::Rng rng(31);
  auto x = rand_tensor({40}, rng);
  auto probe = rand_tensor({40}, rng, false);
  auto loss = [&] { return tenerv::sum(tenerv::mul(tenerv::gelu(x), probe)); };
  REQUIRE(testsupport::max_rel_grad_error({x}, loss) < 1e-4);
}

TEST_CASE("avg_pool2 and channel_mean: gradients match finite differences") {
  tenerv::Rng rng(37);
  auto x = rand_tensor({1, 3, 4, 6}, rng);
  auto probe = rand_tensor({1, 3, 2, 3}, rng, false);
  auto loss = [&] { return tenerv::sum(tenerv::mul(tenerv::avg_pool2(x), probe)); };
  REQUIRE(testsupport::max_rel_grad_error({x}, loss) < 1e-4);

  auto probe2 = rand_tensor({1, 1, 4, 6}, rng, false);
  auto loss2 = [&] { return tenerv::sum(tenerv::mul(tenerv::channel_mean(x), probe2)); };
  REQUIRE(testsupport::max_rel_grad_error({x}, loss2) < 1e-4);
}

TEST_CASE("elementwise ops: gradients match finite differences") {
  tenerv::Rng rng(41);
  auto a = rand_tensor({12}, rng);
  auto b = rand_tensor({12}, rng);
  // Keep b away from zero so div stays well conditioned.
  for (auto& v : b.value()) v = (v < 0 ? v - 0.5 : v + 0.5);
  auto probe = rand_tensor({12}, rng, false);
  auto loss = [&] {
    auto t = tenerv::add(tenerv::mul(a, b), tenerv::div(a, b));
    t = tenerv::sub(t, tenerv::mul_scalar(b, 0.3));
    t = tenerv::add_scalar(tenerv::abs_val(t), 1.5);
    t = tenerv::mul(t, probe);
    return tenerv::add(tenerv::mean(t), tenerv::pow_scalar(tenerv::mean(tenerv::mul(a, a)), 0.7));
  };
  REQUIRE(testsupport::max_rel_grad_error({a, b}, loss) < 1e-4);
}

TEST_CASE("abs has subgradient zero at ties") {
  auto x = Tensor<double>::from_data({3}, {0.0, 2.0, -2.0}, true);
  auto loss = tenerv::sum(tenerv::abs_val(x));
  loss.backward();
  REQUIRE(x.grad()[0] == 0.0);
  REQUIRE(x.grad()[1] == 1.0);
  REQUIRE(x.grad()[2] == -1.0);
}

TEST_CASE("backward: sum over parameters gives unit gradients") {
  auto p = Tensor<double>::from_data({5}, {1, 2, 3, 4, 5}, true);
  auto loss = tenerv::sum(p);
  loss.backward();
  for (double g : p.grad()) REQUIRE(g == 1.0);
}

TEST_CASE("backward: gradients accumulate across reuses of one tensor") {
  auto p = Tensor<double>::from_data({4}, {1, 1, 1, 1}, true);
  auto loss = tenerv::sum(tenerv::add(p, p));
  loss.backward();
  for (double g : p.grad()) REQUIRE(g == 2.0);
}

TEST_CASE("backward: rejected on non-scalar outputs") {
  auto p = Tensor<double>::from_data({2}, {1, 2}, true);
  auto y = tenerv::mul_scalar(p, 2.0);
  REQUIRE_THROWS_AS(y.backward(), tenerv::UsageError);
}

TEST_CASE("scale_entry and row_lerp: gradients match finite differences") {
  tenerv::Rng rng(43);
  auto table = rand_tensor({4, 2, 3}, rng);
  auto coeffs = rand_tensor({6}, rng);
  auto probe = rand_tensor({2, 3}, rng, false);
  auto loss = [&] {
    auto row = tenerv::row_lerp(table, 1, 2, 0.25);
    auto scaled = tenerv::scale_entry(row, coeffs, 3);
    return tenerv::sum(tenerv::mul(scaled, probe));
  };
  REQUIRE(testsupport::max_rel_grad_error({table, coeffs}, loss) < 1e-4);
}

TEST_CASE("adam: zero gradient leaves the parameter unchanged") {
  auto p = Tensor<float>::from_data({3}, {0.5f, -0.25f, 1.0f}, true);
  tenerv::Adam<float> opt({p});
  auto loss = tenerv::mul_scalar(tenerv::sum(p), 0.0f);
  loss.backward();
  opt.step();
  REQUIRE(p.data()[0] == 0.5f);
  REQUIRE(p.data()[1] == -0.25f);
  REQUIRE(p.data()[2] == 1.0f);
}

TEST_CASE("adam: first step with unit gradient moves by about -lr") {
  auto p = Tensor<double>::from_data({1}, {0.5}, true);
  tenerv::AdamOptions<double> opts;
  opts.lr = 0.1;
  tenerv::Adam<double> opt({p}, opts);
  auto loss = tenerv::sum(p);
  loss.backward();
  opt.step();
  REQUIRE(std::abs(p.item() - 0.4) < 1e-8);
}

TEST_CASE("adam: missing gradient is a usage error") {
  auto p = Tensor<double>::from_data({1}, {0.5}, true);
  tenerv::Adam<double> opt({p});
  REQUIRE_THROWS_AS(opt.step(), tenerv::UsageError);
}

TEST_CASE("adam: identical runs produce bit-identical parameters after 100 steps") {
  auto run = [] {
    tenerv::Rng rng(99);
    auto p = Tensor<float>::uniform({16}, rng, -1.0, 1.0, true);
    auto target = Tensor<float>::uniform({16}, rng, -1.0, 1.0, false);
    tenerv::Adam<float> opt({p});
    for (int i = 0; i < 100; ++i) {
      opt.zero_grad();
      auto d = tenerv::sub(p, target);
      auto loss = tenerv::mean(tenerv::mul(d, d));
      loss.backward();
      opt.step();
    }
    return std::vector<float>(p.value().begin(), p.value().end());
  };
  auto a = run();
  auto b = run();
  REQUIRE(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}
