// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Network building blocks on top of the autodiff tensor: pointwise and
// depthwise convolutions (cross-correlation convention, stride 1), sub-pixel
// channel-to-space rearrangement, exact-erf GELU and 2x2 average pooling.
// Parallel loops only ever split over independent output elements, so results
// are bit-identical for any thread count.

#pragma once

#include <cmath>
#include <vector>

#include "tenerv/tensor.hpp"

namespace tenerv {

namespace detail {

template <typename T>
void require_ndim(const char* op, const Tensor<T>& t, int nd, const char* role) {
  if (t.ndim() != nd)
    throw ShapeError(std::string(op) + ": " + role + " must have " + std::to_string(nd) +
                     " dimensions, got " + shape_str(t.shape()));
}

}  // namespace detail

// 1x1 convolution mixing channels: out[b,o,h,w] = bias[o] + sum_c w[o,c] * in[b,c,h,w].
template <typename T>
Tensor<T> conv2d_pointwise(const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias) {
  detail::require_ndim("conv2d_pointwise", input, 4, "input");
  detail::require_ndim("conv2d_pointwise", weight, 2, "weight");
  detail::require_ndim("conv2d_pointwise", bias, 1, "bias");
  const int b_n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int c_out = weight.dim(0);
  if (weight.dim(1) != c_in)
    throw ShapeError("conv2d_pointwise: input channels (axis 1) = " + std::to_string(c_in) +
                     " but weight expects Cin = " + std::to_string(weight.dim(1)));
  if (bias.dim(0) != c_out)
    throw ShapeError("conv2d_pointwise: weight Cout (axis 0) = " + std::to_string(c_out) +
                     " but bias has " + std::to_string(bias.dim(0)) + " entries");

  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<T> out(static_cast<std::size_t>(b_n) * c_out * hw);
  const T* in_p = input.data();
  const T* w_p = weight.data();
  const T* bias_p = bias.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < b_n; ++b) {
    for (int o = 0; o < c_out; ++o) {
      T* dst = out.data() + (static_cast<std::size_t>(b) * c_out + o) * hw;
      const T bv = bias_p[o];
      for (std::size_t i = 0; i < hw; ++i) dst[i] = bv;
      const T* wrow = w_p + static_cast<std::size_t>(o) * c_in;
      for (int c = 0; c < c_in; ++c) {
        const T wc = wrow[c];
        const T* src = in_p + (static_cast<std::size_t>(b) * c_in + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) dst[i] += wc * src[i];
      }
    }
  }

  auto* in_n = input.node().get();
  auto* w_n = weight.node().get();
  auto* bias_n = bias.node().get();
  return detail::make_result<T>(
      {b_n, c_out, h, w}, std::move(out), {input, weight, bias},
      [in_n, w_n, bias_n, b_n, c_in, c_out, hw](detail::NodeT<T>& self) {
        const T* g = self.grad.data();
        if (bias_n->requires_grad) {
          Tensor<T>::ensure_grad(*bias_n);
#pragma omp parallel for schedule(static)
          for (int o = 0; o < c_out; ++o) {
            T acc = 0;
            for (int b = 0; b < b_n; ++b) {
              const T* gp = g + (static_cast<std::size_t>(b) * c_out + o) * hw;
              for (std::size_t i = 0; i < hw; ++i) acc += gp[i];
            }
            bias_n->grad[o] += acc;
          }
        }
        if (w_n->requires_grad) {
          Tensor<T>::ensure_grad(*w_n);
#pragma omp parallel for collapse(2) schedule(static)
          for (int o = 0; o < c_out; ++o) {
            for (int c = 0; c < c_in; ++c) {
              T acc = 0;
              for (int b = 0; b < b_n; ++b) {
                const T* gp = g + (static_cast<std::size_t>(b) * c_out + o) * hw;
                const T* xp = in_n->value.data() + (static_cast<std::size_t>(b) * c_in + c) * hw;
                for (std::size_t i = 0; i < hw; ++i) acc += gp[i] * xp[i];
              }
              w_n->grad[static_cast<std::size_t>(o) * c_in + c] += acc;
            }
          }
        }
        if (in_n->requires_grad) {
          Tensor<T>::ensure_grad(*in_n);
#pragma omp parallel for collapse(2) schedule(static)
          for (int b = 0; b < b_n; ++b) {
            for (int c = 0; c < c_in; ++c) {
              T* dst = in_n->grad.data() + (static_cast<std::size_t>(b) * c_in + c) * hw;
              for (int o = 0; o < c_out; ++o) {
                const T wc = w_n->value[static_cast<std::size_t>(o) * c_in + c];
                const T* gp = g + (static_cast<std::size_t>(b) * c_out + o) * hw;
                for (std::size_t i = 0; i < hw; ++i) dst[i] += wc * gp[i];
              }
            }
          }
        }
      });
}

namespace detail {

// Shift-accumulate kernels shared by the padded and valid depthwise paths.
// dst[y,x] += w * src[y+dy, x+dx] over the in-bounds intersection.
template <typename T>
inline void shifted_axpy(T* dst, int dst_h, int dst_w, const T* src, int src_h, int src_w,
                         int dy, int dx, T w) {
  const int y0 = std::max(0, -dy), y1 = std::min(dst_h, src_h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(dst_w, src_w - dx);
  for (int y = y0; y < y1; ++y) {
    T* d = dst + static_cast<std::size_t>(y) * dst_w;
    const T* s = src + static_cast<std::size_t>(y + dy) * src_w + dx;
    for (int x = x0; x < x1; ++x) d[x] += w * s[x];
  }
}

template <typename T>
inline T shifted_dot(const T* a, int a_h, int a_w, const T* b, int b_h, int b_w, int dy, int dx) {
  const int y0 = std::max(0, -dy), y1 = std::min(a_h, b_h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(a_w, b_w - dx);
  T acc = 0;
  for (int y = y0; y < y1; ++y) {
    const T* pa = a + static_cast<std::size_t>(y) * a_w;
    const T* pb = b + static_cast<std::size_t>(y + dy) * b_w + dx;
    for (int x = x0; x < x1; ++x) acc += pa[x] * pb[x];
  }
  return acc;
}

}  // namespace detail

// Per-channel spatial convolution, zero same-padding, stride 1.
// kernel [C,k,k] with odd k; bias [C].
template <typename T>
Tensor<T> conv2d_depthwise(const Tensor<T>& input, const Tensor<T>& kernel,
                           const Tensor<T>& bias) {
  detail::require_ndim("conv2d_depthwise", input, 4, "input");
  detail::require_ndim("conv2d_depthwise", kernel, 3, "kernel");
  detail::require_ndim("conv2d_depthwise", bias, 1, "bias");
  const int b_n = input.dim(0), c_n = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int k = kernel.dim(1);
  if (kernel.dim(2) != k)
    throw ShapeError("conv2d_depthwise: kernel must be square, got " + shape_str(kernel.shape()));
  if (k % 2 == 0)
    throw ConfigError("conv2d_depthwise: kernel size must be odd for same-padding, got " +
                      std::to_string(k));
  if (kernel.dim(0) != c_n)
    throw ShapeError("conv2d_depthwise: input channels (axis 1) = " + std::to_string(c_n) +
                     " but kernel covers " + std::to_string(kernel.dim(0)) + " channels");
  if (bias.dim(0) != c_n)
    throw ShapeError("conv2d_depthwise: bias has " + std::to_string(bias.dim(0)) +
                     " entries for " + std::to_string(c_n) + " channels");

  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<T> out(static_cast<std::size_t>(b_n) * c_n * hw);
  const T* in_p = input.data();
  const T* k_p = kernel.data();
  const T* bias_p = bias.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < b_n; ++b) {
    for (int c = 0; c < c_n; ++c) {
      T* dst = out.data() + (static_cast<std::size_t>(b) * c_n + c) * hw;
      const T* src = in_p + (static_cast<std::size_t>(b) * c_n + c) * hw;
      const T bv = bias_p[c];
      for (std::size_t i = 0; i < hw; ++i) dst[i] = bv;
      const T* kc = k_p + static_cast<std::size_t>(c) * k * k;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          detail::shifted_axpy(dst, h, w, src, h, w, i - pad, j - pad, kc[i * k + j]);
    }
  }

  auto* in_n = input.node().get();
  auto* k_n = kernel.node().get();
  auto* bias_n = bias.node().get();
  return detail::make_result<T>(
      {b_n, c_n, h, w}, std::move(out), {input, kernel, bias},
      [in_n, k_n, bias_n, b_n, c_n, h, w, k, pad, hw](detail::NodeT<T>& self) {
        const T* g = self.grad.data();
        if (bias_n->requires_grad) {
          Tensor<T>::ensure_grad(*bias_n);
#pragma omp parallel for schedule(static)
          for (int c = 0; c < c_n; ++c) {
            T acc = 0;
            for (int b = 0; b < b_n; ++b) {
              const T* gp = g + (static_cast<std::size_t>(b) * c_n + c) * hw;
              for (std::size_t i = 0; i < hw; ++i) acc += gp[i];
            }
            bias_n->grad[c] += acc;
          }
        }
        if (k_n->requires_grad) {
          Tensor<T>::ensure_grad(*k_n);
#pragma omp parallel for schedule(static)
          for (int c = 0; c < c_n; ++c) {
            for (int i = 0; i < k; ++i) {
              for (int j = 0; j < k; ++j) {
                T acc = 0;
                for (int b = 0; b < b_n; ++b) {
                  const std::size_t plane = (static_cast<std::size_t>(b) * c_n + c) * hw;
                  acc += detail::shifted_dot(g + plane, h, w, in_n->value.data() + plane, h, w,
                                             i - pad, j - pad);
                }
                k_n->grad[(static_cast<std::size_t>(c) * k + i) * k + j] += acc;
              }
            }
          }
        }
        if (in_n->requires_grad) {
          Tensor<T>::ensure_grad(*in_n);
#pragma omp parallel for collapse(2) schedule(static)
          for (int b = 0; b < b_n; ++b) {
            for (int c = 0; c < c_n; ++c) {
              const std::size_t plane = (static_cast<std::size_t>(b) * c_n + c) * hw;
              T* dst = in_n->grad.data() + plane;
              const T* kc = k_n->value.data() + static_cast<std::size_t>(c) * k * k;
              for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                  detail::shifted_axpy(dst, h, w, g + plane, h, w, pad - i, pad - j,
                                       kc[i * k + j]);
            }
          }
        }
      });
}

// Depthwise correlation without padding: out is [B,C,H-kh+1,W-kw+1].
// Used by the SSIM window; kernels here are usually constants.
template <typename T>
Tensor<T> conv2d_depthwise_valid(const Tensor<T>& input, const Tensor<T>& kernel) {
  detail::require_ndim("conv2d_depthwise_valid", input, 4, "input");
  detail::require_ndim("conv2d_depthwise_valid", kernel, 3, "kernel");
  const int b_n = input.dim(0), c_n = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int kh = kernel.dim(1), kw = kernel.dim(2);
  if (kernel.dim(0) != c_n)
    throw ShapeError("conv2d_depthwise_valid: channel mismatch, input " +
                     shape_str(input.shape()) + " vs kernel " + shape_str(kernel.shape()));
  if (h < kh || w < kw)
    throw ShapeError("conv2d_depthwise_valid: input " + shape_str(input.shape()) +
                     " smaller than kernel window " + std::to_string(kh) + "x" +
                     std::to_string(kw));
  const int ho = h - kh + 1, wo = w - kw + 1;
  const std::size_t hw_in = static_cast<std::size_t>(h) * w;
  const std::size_t hw_out = static_cast<std::size_t>(ho) * wo;
  std::vector<T> out(static_cast<std::size_t>(b_n) * c_n * hw_out, T(0));
  const T* in_p = input.data();
  const T* k_p = kernel.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < b_n; ++b) {
    for (int c = 0; c < c_n; ++c) {
      T* dst = out.data() + (static_cast<std::size_t>(b) * c_n + c) * hw_out;
      const T* src = in_p + (static_cast<std::size_t>(b) * c_n + c) * hw_in;
      const T* kc = k_p + static_cast<std::size_t>(c) * kh * kw;
      for (int i = 0; i < kh; ++i)
        for (int j = 0; j < kw; ++j)
          detail::shifted_axpy(dst, ho, wo, src, h, w, i, j, kc[i * kw + j]);
    }
  }

  auto* in_n = input.node().get();
  auto* k_n = kernel.node().get();
  return detail::make_result<T>(
      {b_n, c_n, ho, wo}, std::move(out), {input, kernel},
      [in_n, k_n, b_n, c_n, h, w, kh, kw, ho, wo, hw_in, hw_out](detail::NodeT<T>& self) {
        const T* g = self.grad.data();
        if (k_n->requires_grad) {
          Tensor<T>::ensure_grad(*k_n);
#pragma omp parallel for schedule(static)
          for (int c = 0; c < c_n; ++c) {
            for (int i = 0; i < kh; ++i) {
              for (int j = 0; j < kw; ++j) {
                T acc = 0;
                for (int b = 0; b < b_n; ++b) {
                  const T* gp = g + (static_cast<std::size_t>(b) * c_n + c) * hw_out;
                  const T* xp = in_n->value.data() + (static_cast<std::size_t>(b) * c_n + c) * hw_in;
                  acc += detail::shifted_dot(gp, ho, wo, xp, h, w, i, j);
                }
                k_n->grad[(static_cast<std::size_t>(c) * kh + i) * kw + j] += acc;
              }
            }
          }
        }
        if (in_n->requires_grad) {
          Tensor<T>::ensure_grad(*in_n);
#pragma omp parallel for collapse(2) schedule(static)
          for (int b = 0; b < b_n; ++b) {
            for (int c = 0; c < c_n; ++c) {
              T* dst = in_n->grad.data() + (static_cast<std::size_t>(b) * c_n + c) * hw_in;
              const T* gp = g + (static_cast<std::size_t>(b) * c_n + c) * hw_out;
              const T* kc = k_n->value.data() + static_cast<std::size_t>(c) * kh * kw;
              for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j)
                  detail::shifted_axpy(dst, h, w, gp, ho, wo, -i, -j, kc[i * kw + j]);
            }
          }
        }
      });
}

// Sub-pixel rearrangement: [B, C*r*r, H, W] -> [B, C, H*r, W*r] with
// out[b,c,h*r+i,w*r+j] = in[b, c*r*r + i*r + j, h, w]. Bijective, so the
// gradient is the inverse rearrangement.
template <typename T>
Tensor<T> channel_to_space(const Tensor<T>& input, int r) {
  detail::require_ndim("channel_to_space", input, 4, "input");
  if (r < 1) throw ConfigError("channel_to_space: factor must be >= 1, got " + std::to_string(r));
  const int b_n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (c_in % (r * r) != 0)
    throw ShapeError("channel_to_space: channel count (axis 1) = " + std::to_string(c_in) +
                     " not divisible by r^2 = " + std::to_string(r * r));
  const int c_out = c_in / (r * r);
  const int ho = h * r, wo = w * r;
  const std::size_t hw_in = static_cast<std::size_t>(h) * w;
  const std::size_t hw_out = static_cast<std::size_t>(ho) * wo;
  std::vector<T> out(static_cast<std::size_t>(b_n) * c_out * hw_out);
  const T* in_p = input.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < b_n; ++b) {
    for (int c = 0; c < c_out; ++c) {
      T* dst = out.data() + (static_cast<std::size_t>(b) * c_out + c) * hw_out;
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
          const int q = c * r * r + i * r + j;
          const T* src = in_p + (static_cast<std::size_t>(b) * c_in + q) * hw_in;
          for (int y = 0; y < h; ++y) {
            T* drow = dst + static_cast<std::size_t>(y * r + i) * wo + j;
            const T* srow = src + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) drow[static_cast<std::size_t>(x) * r] = srow[x];
          }
        }
      }
    }
  }

  auto* in_n = input.node().get();
  return detail::make_result<T>(
      {b_n, c_out, ho, wo}, std::move(out), {input},
      [in_n, b_n, c_in, c_out, h, w, r, wo, hw_in, hw_out](detail::NodeT<T>& self) {
        Tensor<T>::ensure_grad(*in_n);
        const T* g = self.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < b_n; ++b) {
          for (int c = 0; c < c_out; ++c) {
            const T* gsrc = g + (static_cast<std::size_t>(b) * c_out + c) * hw_out;
            for (int i = 0; i < r; ++i) {
              for (int j = 0; j < r; ++j) {
                const int q = c * r * r + i * r + j;
                T* dst = in_n->grad.data() + (static_cast<std::size_t>(b) * c_in + q) * hw_in;
                for (int y = 0; y < h; ++y) {
                  const T* grow = gsrc + static_cast<std::size_t>(y * r + i) * wo + j;
                  T* drow = dst + static_cast<std::size_t>(y) * w;
                  for (int x = 0; x < w; ++x) drow[x] += grow[static_cast<std::size_t>(x) * r];
                }
              }
            }
          }
        }
      });
}

// Exact-erf GELU: x * Phi(x); gradient Phi(x) + x * phi(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& input) {
  constexpr T kInvSqrt2 = T(0.7071067811865475244L);
  constexpr T kInvSqrt2Pi = T(0.3989422804014326779L);
  std::vector<T> out(input.size());
  const T* in_p = input.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(out.size()); ++i) {
    const T x = in_p[i];
    out[static_cast<std::size_t>(i)] = T(0.5) * x * (T(1) + std::erf(x * kInvSqrt2));
  }
  auto* in_n = input.node().get();
  return detail::make_result<T>(
      input.shape(), std::move(out), {input}, [in_n](detail::NodeT<T>& self) {
        Tensor<T>::ensure_grad(*in_n);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(self.grad.size()); ++i) {
          const T x = in_n->value[static_cast<std::size_t>(i)];
          const T cdf = T(0.5) * (T(1) + std::erf(x * kInvSqrt2));
          const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * x * x);
          in_n->grad[static_cast<std::size_t>(i)] += self.grad[static_cast<std::size_t>(i)] *
                                                     (cdf + x * pdf);
        }
      });
}

// 2x2 average pooling with stride 2; odd trailing row/column is dropped.
template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& input) {
  detail::require_ndim("avg_pool2", input, 4, "input");
  const int b_n = input.dim(0), c_n = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < 2 || w < 2)
    throw ShapeError("avg_pool2: spatial dims must be >= 2, got " + shape_str(input.shape()));
  const int ho = h / 2, wo = w / 2;
  const std::size_t hw_in = static_cast<std::size_t>(h) * w;
  const std::size_t hw_out = static_cast<std::size_t>(ho) * wo;
  std::vector<T> out(static_cast<std::size_t>(b_n) * c_n * hw_out);
  const T* in_p = input.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < b_n; ++b) {
    for (int c = 0; c < c_n; ++c) {
      const T* src = in_p + (static_cast<std::size_t>(b) * c_n + c) * hw_in;
      T* dst = out.data() + (static_cast<std::size_t>(b) * c_n + c) * hw_out;
      for (int y = 0; y < ho; ++y) {
        const T* r0 = src + static_cast<std::size_t>(2 * y) * w;
        const T* r1 = r0 + w;
        for (int x = 0; x < wo; ++x)
          dst[static_cast<std::size_t>(y) * wo + x] =
              T(0.25) * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
      }
    }
  }
  auto* in_n = input.node().get();
  return detail::make_result<T>(
      {b_n, c_n, ho, wo}, std::move(out), {input},
      [in_n, b_n, c_n, w, ho, wo, hw_in, hw_out](detail::NodeT<T>& self) {
        Tensor<T>::ensure_grad(*in_n);
        const T* g = self.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < b_n; ++b) {
          for (int c = 0; c < c_n; ++c) {
            const T* gp = g + (static_cast<std::size_t>(b) * c_n + c) * hw_out;
            T* dst = in_n->grad.data() + (static_cast<std::size_t>(b) * c_n + c) * hw_in;
            for (int y = 0; y < ho; ++y) {
              T* r0 = dst + static_cast<std::size_t>(2 * y) * w;
              T* r1 = r0 + w;
              for (int x = 0; x < wo; ++x) {
                const T q = T(0.25) * gp[static_cast<std::size_t>(y) * wo + x];
                r0[2 * x] += q;
                r0[2 * x + 1] += q;
                r1[2 * x] += q;
                r1[2 * x + 1] += q;
              }
            }
          }
        }
      });
}

// Mean over the channel axis: [B,C,H,W] -> [B,1,H,W].
template <typename T>
Tensor<T> channel_mean(const Tensor<T>& input) {
  detail::require_ndim("channel_mean", input, 4, "input");
  const int b_n = input.dim(0), c_n = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<T> out(static_cast<std::size_t>(b_n) * hw, T(0));
  const T* in_p = input.data();
  const T inv_c = T(1) / static_cast<T>(c_n);
  for (int b = 0; b < b_n; ++b) {
    T* dst = out.data() + static_cast<std::size_t>(b) * hw;
    for (int c = 0; c < c_n; ++c) {
      const T* src = in_p + (static_cast<std::size_t>(b) * c_n + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] += src[i];
    }
    for (std::size_t i = 0; i < hw; ++i) dst[i] *= inv_c;
  }
  auto* in_n = input.node().get();
  return detail::make_result<T>(
      {b_n, 1, h, w}, std::move(out), {input},
      [in_n, b_n, c_n, hw, inv_c](detail::NodeT<T>& self) {
        Tensor<T>::ensure_grad(*in_n);
        const T* g = self.grad.data();
        for (int b = 0; b < b_n; ++b) {
          const T* gp = g + static_cast<std::size_t>(b) * hw;
          for (int c = 0; c < c_n; ++c) {
            T* dst = in_n->grad.data() + (static_cast<std::size_t>(b) * c_n + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[i] += inv_c * gp[i];
          }
        }
      });
}

}  // namespace tenerv
