// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace tenerv {

// Seeded generator with explicit float construction. std::mt19937 output is
// pinned by the standard, and building floats from raw bits (instead of
// std::uniform_real_distribution) keeps sequences identical across standard
// library implementations, which the reproducibility tests rely on.
class Rng {
 public:
  explicit Rng(std::uint32_t seed) : gen_(seed) {}

  std::uint32_t next_u32() { return gen_(); }

  // Uniform in [0,1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = gen_() >> 5;   // 27 bits
    const std::uint64_t lo = gen_() >> 6;   // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] via rejection-free scaling (bias is
  // negligible for the small ranges used here).
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>((static_cast<std::uint64_t>(gen_()) * span) >> 32);
  }

  std::mt19937& engine() { return gen_; }

 private:
  std::mt19937 gen_;
};

}  // namespace tenerv
