// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical temporal embedding. Base grids store learnable per-timestamp
// feature maps at one or more temporal resolutions; a learnable window blends
// the base grids of adjacent timestamps into the fused embedding; an optional
// per-GoP grid is added on top once GoP-adaptive training starts.
//
// Indexing is 0-based: frames are t in [0, T-1] and the base grids span
// [0, T+l-2] so that a window of size l starting at any frame stays in range.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tenerv/tensor.hpp"

namespace tenerv {

struct GridLevelSpec {
  int temporal_stride = 1;
  int channels = 0;
};

template <typename T>
struct BaseGridSet {
  struct Level {
    int stride = 1;
    Tensor<T> grid;  // [rows, channels, H0, W0], row j sits at time j*stride
  };

  int frames = 0;    // T
  int window = 1;    // l
  int h0 = 0, w0 = 0;
  std::vector<Level> levels;

  int expanded_length() const { return frames + window - 1; }

  int total_channels() const {
    int c = 0;
    for (const auto& lv : levels) c += lv.grid.dim(1);
    return c;
  }

  static BaseGridSet create(int frames, int window, int h0, int w0,
                            const std::vector<GridLevelSpec>& specs, Rng& rng) {
    if (frames < 1 || window < 1 || h0 < 1 || w0 < 1)
      throw ConfigError("base grids: frames, window and spatial dims must be positive");
    if (specs.empty()) throw ConfigError("base grids: at least one level required");
    BaseGridSet set;
    set.frames = frames;
    set.window = window;
    set.h0 = h0;
    set.w0 = w0;
    const int expanded = frames + window - 1;
    for (const auto& spec : specs) {
      if (spec.temporal_stride < 1 || spec.channels < 1)
        throw ConfigError("base grids: level stride and channels must be positive");
      const int rows = (expanded + spec.temporal_stride - 1) / spec.temporal_stride;
      Level lv;
      lv.stride = spec.temporal_stride;
      lv.grid = Tensor<T>::uniform({rows, spec.channels, h0, w0}, rng, -1e-2, 1e-2, true);
      set.levels.push_back(std::move(lv));
    }
    return set;
  }
};

// Evaluates the expanded base grid at index i: each level is linearly
// interpolated along time (exact row when i is a multiple of the stride, with
// the last row extended past its position), then levels are concatenated
// along channels.
template <typename T>
Tensor<T> base_lookup(const BaseGridSet<T>& set, int i) {
  const int expanded = set.expanded_length();
  if (i < 0 || i >= expanded)
    throw IndexError("base_lookup: index " + std::to_string(i) + " outside expanded range 0.." +
                     std::to_string(expanded - 1));
  std::vector<Tensor<T>> parts;
  parts.reserve(set.levels.size());
  for (const auto& lv : set.levels) {
    const int rows = lv.grid.dim(0);
    if (i % lv.stride == 0) {
      const int j = std::min(i / lv.stride, rows - 1);
      parts.push_back(row_lerp(lv.grid, j, j, T(0)));
    } else {
      const double pos = static_cast<double>(i) / lv.stride;
      int j0 = static_cast<int>(pos);
      int j1 = j0 + 1;
      if (j1 > rows - 1) {
        j0 = rows - 1;
        j1 = rows - 1;
      }
      const T f = (j0 == j1) ? T(0) : static_cast<T>(pos - j0);
      parts.push_back(row_lerp(lv.grid, j0, j1, f));
    }
  }
  return parts.size() == 1 ? parts[0] : concat0(parts);
}

template <typename T>
struct WindowWeights {
  Tensor<T> weights;  // [T, l], row t = fusion coefficients for frame t

  // One-hot at the first window position, so fusion starts as the identity.
  static WindowWeights one_hot(int frames, int window) {
    std::vector<T> w(static_cast<std::size_t>(frames) * window, T(0));
    for (int t = 0; t < frames; ++t) w[static_cast<std::size_t>(t) * window] = T(1);
    WindowWeights ww;
    ww.weights = Tensor<T>::from_data({frames, window}, std::move(w), true);
    return ww;
  }
};

// Fused temporal embedding for frame t: sum over window offsets i of
// weights[t,i] * base(t+i). Total for every t in [0, T-1] because the base
// grid spans T+l-1 indices.
template <typename T>
Tensor<T> fuse_window(const BaseGridSet<T>& set, const WindowWeights<T>& ww, int t) {
  if (t < 0 || t >= set.frames)
    throw IndexError("fuse_window: frame " + std::to_string(t) + " outside 0.." +
                     std::to_string(set.frames - 1));
  const int l = set.window;
  Tensor<T> acc;
  for (int i = 0; i < l; ++i) {
    auto term = scale_entry(base_lookup(set, t + i), ww.weights,
                            static_cast<std::size_t>(t) * l + i);
    acc = i == 0 ? term : add(acc, term);
  }
  return acc;
}

template <typename T>
struct GopGridSet {
  std::vector<Tensor<T>> grids;  // one [C,H0,W0] grid per GoP
  bool active = false;

  // Zero-initialized so activation preserves the pretrained function.
  static GopGridSet zeros(int gop_count, int channels, int h0, int w0) {
    GopGridSet set;
    set.grids.reserve(gop_count);
    for (int k = 0; k < gop_count; ++k)
      set.grids.push_back(Tensor<T>::zeros({channels, h0, w0}, true));
    set.active = true;
    return set;
  }
};

// Adds the GoP grid for segment k on top of the fused temporal embedding.
// Inactive (pretraining) sets pass the embedding through untouched.
template <typename T>
Tensor<T> fuse_gop(const Tensor<T>& x_tem, const GopGridSet<T>& set, int k) {
  if (!set.active) return x_tem;
  if (k < 0 || k >= static_cast<int>(set.grids.size()))
    throw IndexError("fuse_gop: GoP index " + std::to_string(k) + " outside 0.." +
                     std::to_string(set.grids.size() - 1));
  return add(x_tem, set.grids[static_cast<std::size_t>(k)]);
}

// Row-major flattening; the divergence metric consumes these vectors.
template <typename T>
std::vector<T> flatten_embedding(const Tensor<T>& x) {
  return std::vector<T>(x.data(), x.data() + x.size());
}

}  // namespace tenerv
