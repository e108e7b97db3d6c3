// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Symmetric per-tensor uniform quantization with round-half-away-from-zero,
// plus the straight-through fake-quantization used during QAT. The scale is
// snapped to a fixed point of the float32 round-trip map so that quantizing
// an already-dequantized tensor reproduces the same scale and integers; that
// is what makes the serialized container a canonical form.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tenerv/tensor.hpp"

namespace tenerv {

struct QuantizedTensor {
  std::string name;
  Shape shape;
  int bits = 8;
  float scale = 1.0f;
  std::vector<std::int32_t> values;  // in [-(2^(b-1)-1), 2^(b-1)-1]
};

namespace detail {

inline void check_bits(int bits) {
  if (bits < 2 || bits > 16)
    throw ConfigError("quantize: bits must be in 2..16, got " + std::to_string(bits));
}

// Fixed point of s -> float(double(float(s*qmax))/qmax). Two-element cycles
// are possible at ulp level; they resolve deterministically to the minimum.
inline float canonical_scale(double maxabs, int qmax) {
  if (!(maxabs > 0.0)) return 1.0f;
  float scale = static_cast<float>(maxabs / qmax);
  float seen[8];
  int n = 0;
  for (int iter = 0; iter < 8; ++iter) {
    const float daq_max = static_cast<float>(static_cast<double>(scale) * qmax);
    const float next = static_cast<float>(static_cast<double>(daq_max) / qmax);
    if (next == scale) return scale;
    seen[n++] = scale;
    for (int i = 0; i < n; ++i) {
      if (seen[i] == next) {
        float best = next;
        for (int j = i; j < n; ++j) best = std::min(best, seen[j]);
        return best;
      }
    }
    scale = next;
  }
  return scale;
}

template <typename T>
void quantize_span(const T* v, std::size_t n, int bits, float* scale_out,
                   std::vector<std::int32_t>* q_out) {
  check_bits(bits);
  const int qmax = (1 << (bits - 1)) - 1;
  double maxabs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(v[i])))
      throw DataError("quantize: non-finite value at index " + std::to_string(i));
    maxabs = std::max(maxabs, std::abs(static_cast<double>(v[i])));
  }
  const float scale = canonical_scale(maxabs, qmax);
  q_out->resize(n);
  const double inv = static_cast<double>(scale);
  for (std::size_t i = 0; i < n; ++i) {
    long long q = std::llround(static_cast<double>(v[i]) / inv);
    if (q > qmax) q = qmax;
    if (q < -qmax) q = -qmax;
    (*q_out)[i] = static_cast<std::int32_t>(q);
  }
  *scale_out = scale;
}

template <typename T>
inline T dequant_value(float scale, std::int32_t q) {
  return static_cast<T>(scale) * static_cast<T>(q);
}

}  // namespace detail

template <typename T>
QuantizedTensor quantize(const Tensor<T>& t, int bits, std::string name = {}) {
  QuantizedTensor q;
  q.name = std::move(name);
  q.shape = t.shape();
  q.bits = bits;
  detail::quantize_span(t.data(), t.size(), bits, &q.scale, &q.values);
  return q;
}

template <typename T>
std::vector<T> dequantize(const QuantizedTensor& q) {
  std::vector<T> v(q.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::dequant_value<T>(q.scale, q.values[i]);
  return v;
}

// quantize-then-dequantize in the forward pass; the backward pass treats the
// quantizer as the identity (straight-through estimator).
template <typename T>
Tensor<T> fake_quantize(const Tensor<T>& t, int bits) {
  float scale = 1.0f;
  std::vector<std::int32_t> q;
  detail::quantize_span(t.data(), t.size(), bits, &scale, &q);
  std::vector<T> v(q.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::dequant_value<T>(scale, q[i]);
  auto* tn = t.node().get();
  return detail::make_result<T>(t.shape(), std::move(v), {t}, [tn](detail::NodeT<T>& self) {
    Tensor<T>::ensure_grad(*tn);
    for (std::size_t i = 0; i < self.grad.size(); ++i) tn->grad[i] += self.grad[i];
  });
}

}  // namespace tenerv
