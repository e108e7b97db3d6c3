// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "tenerv/bitstream.hpp"
#include "tenerv/model.hpp"
#include "tenerv/quant.hpp"
#include "tenerv/range_coder.hpp"

using tenerv::Tensor;

TEST_CASE("quantize: zeros, endpoints and the half-step bound") {
  auto zeros = Tensor<float>::zeros({8});
  auto qz = tenerv::quantize(zeros, 8);
  REQUIRE(qz.scale == 1.0f);
  for (auto v : qz.values) REQUIRE(v == 0);

  auto pm1 = Tensor<float>::from_data({3}, {-1.0f, 0.0f, 1.0f});
  auto q = tenerv::quantize(pm1, 8);
  REQUIRE(q.values == std::vector<std::int32_t>{-127, 0, 127});
  REQUIRE_THAT(q.scale, Catch::Matchers::WithinRel(1.0 / 127.0, 1e-6));

  tenerv::Rng rng(5);
  auto t = Tensor<float>::uniform({500}, rng, -3.0, 3.0);
  for (int bits : {2, 4, 8, 16}) {
    auto qt = tenerv::quantize(t, bits);
    auto back = tenerv::dequantize<float>(qt);
    // Half-step bound plus one rounding of the dequantized product.
    for (std::size_t i = 0; i < back.size(); ++i)
      REQUIRE(std::abs(back[i] - t.data()[i]) <=
              qt.scale * 0.5f + std::abs(t.data()[i]) * 1.2e-7f);
  }
}

TEST_CASE("quantize: bit range and finiteness are enforced") {
  auto t = Tensor<float>::from_data({2}, {0.5f, -0.5f});
  REQUIRE_THROWS_AS(tenerv::quantize(t, 1), tenerv::ConfigError);
  REQUIRE_THROWS_AS(tenerv::quantize(t, 17), tenerv::ConfigError);
  auto bad = Tensor<float>::from_data({2}, {0.5f, std::numeric_limits<float>::infinity()});
  REQUIRE_THROWS_AS(tenerv::quantize(bad, 8), tenerv::DataError);
}

TEST_CASE("quantize: canonical form is a fixed point of dequantize-requantize") {
  tenerv::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = Tensor<float>::uniform({64}, rng, -std::exp(rng.uniform(-8.0, 8.0)),
                                    std::exp(rng.uniform(-8.0, 8.0)));
    auto q1 = tenerv::quantize(t, 8);
    auto deq = Tensor<float>::from_data({64}, tenerv::dequantize<float>(q1));
    auto q2 = tenerv::quantize(deq, 8);
    REQUIRE(q2.scale == q1.scale);
    REQUIRE(q2.values == q1.values);
  }
}

TEST_CASE("fake_quantize: idempotent, exact on representables, straight-through gradient") {
  tenerv::Rng rng(11);
  auto t = Tensor<double>::uniform({64}, rng, -2.0, 2.0, true);
  auto once = tenerv::fake_quantize(t, 6);
  auto twice = tenerv::fake_quantize(once, 6);
  for (std::size_t i = 0; i < once.size(); ++i) REQUIRE(once.data()[i] == twice.data()[i]);

  auto probe = Tensor<double>::uniform({64}, rng, -1.0, 1.0);
  auto loss = tenerv::sum(tenerv::mul(tenerv::fake_quantize(t, 6), probe));
  loss.backward();
  for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(t.grad()[i] == probe.data()[i]);
}

TEST_CASE("entropy coder: empty sequence emits only the model header") {
  auto payload = tenerv::entropy_encode({}, -127, 127);
  REQUIRE(payload.size() == 1);  // varint zero distinct symbols
  auto back = tenerv::entropy_decode(payload, 0, -127, 127);
  REQUIRE(back.empty());
}

TEST_CASE("entropy coder: round-trips across lengths, alphabets and skews") {
  tenerv::Rng rng(13);
  for (int trial = 0; trial < 3000; ++trial) {
    const int mode = trial % 5;
    std::int32_t lo, hi;
    switch (trial % 3) {
      case 0: lo = -127, hi = 127; break;
      case 1: lo = 0, hi = 1; break;
      default: lo = -32767, hi = 32767; break;
    }
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(0, 400));
    std::vector<std::int32_t> symbols(n);
    for (auto& s : symbols) {
      switch (mode) {
        case 0: s = rng.uniform_int(lo, hi); break;                       // uniform
        case 1: s = lo; break;                                            // constant
        case 2: s = rng.uniform_int(0, 99) < 99 ? 0 : hi; break;          // heavy skew
        case 3: s = rng.uniform_int(std::max(lo, -3), std::min(hi, 3)); break;
        default: {
          int v = 0;  // geometric-ish around zero
          while (rng.uniform() < 0.7 && v < hi) ++v;
          s = rng.uniform() < 0.5 ? v : std::max(lo, -v);
        }
      }
    }
    auto payload = tenerv::entropy_encode(symbols, lo, hi);
    auto back = tenerv::entropy_decode(payload, symbols.size(), lo, hi);
    REQUIRE(back == symbols);
  }
}

TEST_CASE("entropy coder: skewed input compresses near its entropy") {
  tenerv::Rng rng(17);
  const std::size_t n = 100000;
  std::vector<std::int32_t> symbols(n);
  for (auto& s : symbols) s = rng.uniform_int(0, 99) < 99 ? 0 : 1;  // H ~ 0.08 bits
  auto payload = tenerv::entropy_encode(symbols, -127, 127);
  const double bits_per_symbol = payload.size() * 8.0 / n;
  REQUIRE(bits_per_symbol < 0.15);
}

TEST_CASE("entropy coder: input validation and truncation") {
  std::vector<std::int32_t> bad = {5, 200};
  REQUIRE_THROWS_AS(tenerv::entropy_encode(bad, -127, 127), tenerv::DataError);

  std::vector<std::int32_t> ok(50, 3);
  ok[10] = -7;
  auto payload = tenerv::entropy_encode(ok, -127, 127);
  auto truncated = std::vector<std::uint8_t>(payload.begin(), payload.begin() + payload.size() / 2);
  REQUIRE_THROWS_AS(tenerv::entropy_decode(truncated, ok.size(), -127, 127),
                    tenerv::StreamError);
  REQUIRE_THROWS_AS(tenerv::entropy_decode(payload, ok.size() + 5, -127, 127),
                    tenerv::StreamError);
}

namespace {

tenerv::TeNeRVModel<float> trained_like_model() {
  tenerv::ModelConfig cfg;
  cfg.frame_h = 16;
  cfg.frame_w = 16;
  cfg.upsample = {2, 2};
  cfg.channels = {6, 8, 5};
  cfg.kernel = 3;
  cfg.window = 2;
  auto model = tenerv::TeNeRVModel<float>::create(cfg, 5, 123);
  model.activate_gam(tenerv::GopPartition{5, {2}});
  // Nudge the GoP grids off zero so the payload is not degenerate.
  tenerv::Rng rng(321);
  for (auto& g : model.gop_grids().grids)
    for (auto& v : g.value()) v = static_cast<float>(rng.uniform(-0.05, 0.05));
  return model;
}

}  // namespace

TEST_CASE("bitstream: decoded render equals the encoder-side quantized render bitwise") {
  auto model = trained_like_model();
  auto bytes = tenerv::serialize(model, 8);
  auto decoded = tenerv::deserialize(bytes);

  model.set_qat_bits(8);  // encoder-side quantized forward
  for (int t = 0; t < model.frames(); ++t) {
    auto a = model.render(t);
    auto b = decoded.render(t);
    REQUIRE(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("bitstream: serialize-deserialize-serialize is byte-identical") {
  auto model = trained_like_model();
  for (int bits : {0, 5, 8}) {
    auto bytes = tenerv::serialize(model, bits);
    auto again = tenerv::serialize(tenerv::deserialize(bytes), bits);
    REQUIRE(again == bytes);
  }
}

TEST_CASE("bitstream: checkpoint variant restores exact float values") {
  auto model = trained_like_model();
  auto bytes = tenerv::serialize(model, 0);
  auto decoded = tenerv::deserialize(bytes);
  auto orig = model.named_params();
  auto back = decoded.named_params();
  REQUIRE(orig.size() == back.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    REQUIRE(orig[i].first == back[i].first);
    REQUIRE(orig[i].second.shape() == back[i].second.shape());
    REQUIRE(std::memcmp(orig[i].second.data(), back[i].second.data(),
                        orig[i].second.size() * sizeof(float)) == 0);
  }
  REQUIRE(decoded.partition()->boundaries == model.partition()->boundaries);

  // Parameter accounting equals the serialized element count.
  long long decoded_elements = 0;
  for (auto& [name, t] : back) decoded_elements += static_cast<long long>(t.size());
  REQUIRE(model.param_report().total == decoded_elements);
}

TEST_CASE("bitstream: container never expands far beyond the raw bit budget") {
  auto model = trained_like_model();
  for (int bits : {4, 8, 16}) {
    auto bytes = tenerv::serialize(model, bits);
    long long raw_bits = 0;
    std::size_t header_guess = 256;
    for (auto& [name, t] : model.named_params()) {
      raw_bits += static_cast<long long>(t.size()) * bits;
      header_guess += name.size() + 64 + 2048;  // record header + frequency table bound
    }
    REQUIRE(bytes.size() * 8.0 <= raw_bits * 1.01 + header_guess * 8.0);
  }
}

TEST_CASE("bitstream: every single-byte corruption is detected") {
  auto model = trained_like_model();
  auto bytes = tenerv::serialize(model, 8);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto corrupt = bytes;
    corrupt[i] ^= 0x40;
    REQUIRE_THROWS_AS(tenerv::deserialize(corrupt), tenerv::FormatError);
  }
}

TEST_CASE("bitstream: version mismatch is reported explicitly") {
  auto model = trained_like_model();
  auto bytes = tenerv::serialize(model, 8);
  bytes[4] = 9;  // bump version, then fix the checksum so only the version differs
  const auto crc = tenerv::detail::crc32(
      std::span<const std::uint8_t>(bytes.data(), bytes.size() - 4));
  for (int i = 0; i < 4; ++i)
    bytes[bytes.size() - 4 + static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(crc >> (8 * i));
  REQUIRE_THROWS_MATCHES(tenerv::deserialize(bytes), tenerv::FormatError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("unsupported")));
}

TEST_CASE("crc32: known test vector") {
  const char* s = "123456789";
  REQUIRE(tenerv::detail::crc32(std::span<const std::uint8_t>(
              reinterpret_cast<const std::uint8_t*>(s), 9)) == 0xCBF43926u);
}
