// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tenerv/tensor.hpp"

namespace tenerv {

template <typename T>
struct AdamOptions {
  T lr = T(5e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

// Adam with bias correction. Moment buffers live here in full precision;
// the step counter increases by exactly one per step().
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamOptions<T> opts = {})
      : params_(std::move(params)), opts_(opts) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].size(), T(0));
      v_[i].assign(params_[i].size(), T(0));
    }
  }

  void set_lr(T lr) { opts_.lr = lr; }
  T lr() const { return opts_.lr; }
  std::int64_t step_count() const { return step_; }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++step_;
    const T bc1 = T(1) - std::pow(opts_.beta1, static_cast<T>(step_));
    const T bc2 = T(1) - std::pow(opts_.beta2, static_cast<T>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (!p.has_grad())
        throw UsageError("adam step " + std::to_string(step_) + ": parameter " +
                         std::to_string(i) + " has no gradient");
      T* pv = p.data();
      const T* g = p.grad().data();
      T* m = m_[i].data();
      T* v = v_[i].data();
      const std::size_t n = p.size();
      for (std::size_t j = 0; j < n; ++j) {
        m[j] = opts_.beta1 * m[j] + (T(1) - opts_.beta1) * g[j];
        v[j] = opts_.beta2 * v[j] + (T(1) - opts_.beta2) * g[j] * g[j];
        const T m_hat = m[j] / bc1;
        const T v_hat = v[j] / bc2;
        pv[j] -= opts_.lr * m_hat / (std::sqrt(v_hat) + opts_.eps);
      }
    }
  }

 private:
  std::vector<Tensor<T>> params_;
  AdamOptions<T> opts_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::int64_t step_ = 0;
};

}  // namespace tenerv
