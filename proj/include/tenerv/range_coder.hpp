// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Lossless entropy coding of bounded integer sequences: a 32-bit renormalizing
// range coder (carry handled through a cached byte chain) driven by a static
// frequency model. The model is the symbol histogram, transmitted up front as
// (index-delta, count) varint pairs for the nonzero bins; both sides then
// rescale it identically so the total stays within the coder's precision.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tenerv/error.hpp"

namespace tenerv {
namespace detail {

constexpr std::uint32_t kRangeTop = 1u << 24;
constexpr std::uint64_t kMaxTotalFreq = 1u << 16;

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v) | 0x80);
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint64_t get_varint(std::span<const std::uint8_t> in, std::size_t* pos) {
  std::uint64_t v = 0;
  int shift = 0;
  for (;;) {
    if (*pos >= in.size()) throw StreamError("entropy payload truncated inside a varint");
    const std::uint8_t b = in[(*pos)++];
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if (!(b & 0x80)) return v;
    shift += 7;
    if (shift > 63) throw StreamError("entropy payload varint overflow");
  }
}

// Deterministic halving until the total fits the coder precision; nonzero
// counts never drop to zero.
inline void rescale_freqs(std::vector<std::uint32_t>* freqs) {
  for (;;) {
    std::uint64_t total = 0;
    for (std::uint32_t f : *freqs) total += f;
    if (total <= kMaxTotalFreq) return;
    for (auto& f : *freqs)
      if (f) f = (f + 1) >> 1;
  }
}

class RangeEncoder {
 public:
  explicit RangeEncoder(std::vector<std::uint8_t>* out) : out_(out) {}

  void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
    range_ /= total;
    low_ += static_cast<std::uint64_t>(cum) * range_;
    range_ *= freq;
    while (range_ < kRangeTop) {
      shift_low();
      range_ <<= 8;
    }
  }

  void flush() {
    for (int i = 0; i < 5; ++i) shift_low();
  }

 private:
  void shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      std::uint8_t byte = cache_;
      const auto carry = static_cast<std::uint8_t>(low_ >> 32);
      do {
        out_->push_back(static_cast<std::uint8_t>(byte + carry));
        byte = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = static_cast<std::uint8_t>(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFull) << 8;
  }

  std::vector<std::uint8_t>* out_;
  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
};

class RangeDecoder {
 public:
  RangeDecoder(std::span<const std::uint8_t> in, std::size_t* pos) : in_(in), pos_(pos) {
    read_byte();  // leading cache byte, always zero
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | read_byte();
  }

  std::uint32_t decode_threshold(std::uint32_t total) {
    range_ /= total;
    return static_cast<std::uint32_t>(code_ / range_);
  }

  void decode_consume(std::uint32_t cum, std::uint32_t freq) {
    code_ -= cum * range_;
    range_ *= freq;
    while (range_ < kRangeTop) {
      code_ = (code_ << 8) | read_byte();
      range_ <<= 8;
    }
  }

 private:
  std::uint32_t read_byte() {
    if (*pos_ >= in_.size()) throw StreamError("entropy payload truncated at offset " +
                                               std::to_string(*pos_));
    return in_[(*pos_)++];
  }

  std::span<const std::uint8_t> in_;
  std::size_t* pos_;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

inline void check_alphabet(std::int32_t lo, std::int32_t hi) {
  if (lo > hi) throw ConfigError("entropy coder: empty alphabet, lo > hi");
  const std::int64_t size = static_cast<std::int64_t>(hi) - lo + 1;
  if (size > static_cast<std::int64_t>(kMaxTotalFreq))
    throw ConfigError("entropy coder: alphabet of " + std::to_string(size) +
                      " symbols exceeds the coder limit");
}

}  // namespace detail

// Encodes `symbols` (each within [lo, hi]) into a self-contained payload:
// frequency model first, then the range-coded body. An empty input produces
// just the (empty) model header.
inline std::vector<std::uint8_t> entropy_encode(std::span<const std::int32_t> symbols,
                                                std::int32_t lo, std::int32_t hi) {
  detail::check_alphabet(lo, hi);
  const std::size_t alphabet = static_cast<std::size_t>(hi - lo + 1);
  std::vector<std::uint64_t> counts(alphabet, 0);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] < lo || symbols[i] > hi)
      throw DataError("entropy coder: symbol " + std::to_string(symbols[i]) + " at index " +
                      std::to_string(i) + " outside [" + std::to_string(lo) + "," +
                      std::to_string(hi) + "]");
    ++counts[static_cast<std::size_t>(symbols[i] - lo)];
  }

  std::vector<std::uint8_t> out;
  std::size_t distinct = 0;
  for (auto c : counts) distinct += (c != 0);
  detail::put_varint(out, distinct);
  std::size_t prev = 0;
  for (std::size_t s = 0; s < alphabet; ++s) {
    if (!counts[s]) continue;
    detail::put_varint(out, s - prev);
    detail::put_varint(out, counts[s]);
    prev = s;
  }
  if (symbols.empty()) return out;

  std::vector<std::uint32_t> freqs(alphabet);
  for (std::size_t s = 0; s < alphabet; ++s)
    freqs[s] = static_cast<std::uint32_t>(std::min<std::uint64_t>(counts[s], 0xFFFFFFFFu));
  detail::rescale_freqs(&freqs);
  std::vector<std::uint32_t> cum(alphabet + 1, 0);
  for (std::size_t s = 0; s < alphabet; ++s) cum[s + 1] = cum[s] + freqs[s];
  const std::uint32_t total = cum[alphabet];

  detail::RangeEncoder coder(&out);
  for (const std::int32_t sym : symbols) {
    const auto s = static_cast<std::size_t>(sym - lo);
    coder.encode(cum[s], freqs[s], total);
  }
  coder.flush();
  return out;
}

// Exact inverse of entropy_encode; `count` symbols are expected.
inline std::vector<std::int32_t> entropy_decode(std::span<const std::uint8_t> payload,
                                                std::size_t count, std::int32_t lo,
                                                std::int32_t hi) {
  detail::check_alphabet(lo, hi);
  const std::size_t alphabet = static_cast<std::size_t>(hi - lo + 1);
  std::size_t pos = 0;
  const std::uint64_t distinct = detail::get_varint(payload, &pos);
  if (distinct > alphabet) throw StreamError("entropy payload: model lists more symbols than the alphabet");
  std::vector<std::uint64_t> counts(alphabet, 0);
  std::size_t index = 0;
  std::uint64_t model_total = 0;
  for (std::uint64_t i = 0; i < distinct; ++i) {
    const std::uint64_t delta = detail::get_varint(payload, &pos);
    const std::uint64_t c = detail::get_varint(payload, &pos);
    index = (i == 0) ? delta : index + delta;
    if (index >= alphabet) throw StreamError("entropy payload: model symbol index out of range");
    if (c == 0) throw StreamError("entropy payload: zero count in model");
    counts[index] = c;
    model_total += c;
  }
  if (model_total != count)
    throw StreamError("entropy payload: model total " + std::to_string(model_total) +
                      " does not match expected symbol count " + std::to_string(count));
  std::vector<std::int32_t> symbols;
  if (count == 0) return symbols;

  std::vector<std::uint32_t> freqs(alphabet);
  for (std::size_t s = 0; s < alphabet; ++s)
    freqs[s] = static_cast<std::uint32_t>(std::min<std::uint64_t>(counts[s], 0xFFFFFFFFu));
  detail::rescale_freqs(&freqs);
  std::vector<std::uint32_t> cum(alphabet + 1, 0);
  for (std::size_t s = 0; s < alphabet; ++s) cum[s + 1] = cum[s] + freqs[s];
  const std::uint32_t total = cum[alphabet];

  detail::RangeDecoder coder(payload, &pos);
  symbols.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t t = coder.decode_threshold(total);
    if (t >= total) throw StreamError("entropy payload: corrupt body at symbol " +
                                      std::to_string(i));
    // cum[s] <= t < cum[s+1]
    const auto it = std::upper_bound(cum.begin() + 1, cum.end(), t);
    const auto s = static_cast<std::size_t>(it - cum.begin() - 1);
    if (freqs[s] == 0) throw StreamError("entropy payload: decoded a zero-frequency symbol");
    coder.decode_consume(cum[s], freqs[s]);
    symbols.push_back(static_cast<std::int32_t>(s) + lo);
  }
  return symbols;
}

}  // namespace tenerv
