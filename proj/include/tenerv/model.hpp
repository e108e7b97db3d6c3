// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// The TeNeRV network. Each block expands channels with a shared pointwise
// convolution, rearranges them into space (sub-pixel upsampling), then refines
// with a depthwise separable pair where the depthwise kernel is GoP-specific
// after activation and the pointwise projection stays shared. Activating the
// GoP-adaptive configuration duplicates the depthwise kernels and adds
// zero-initialized GoP grids, so the transition preserves the function
// exactly.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tenerv/gop.hpp"
#include "tenerv/grids.hpp"
#include "tenerv/ops.hpp"
#include "tenerv/quant.hpp"
#include "tenerv/tensor.hpp"

namespace tenerv {

struct ModelConfig {
  int frame_h = 96;
  int frame_w = 96;
  std::vector<int> upsample = {4, 2, 2};
  // channels[0] is the grid channel budget, channels[i] the output of block i.
  std::vector<int> channels = {32, 48, 24, 12};
  int kernel = 3;  // depthwise kernel size
  int window = 2;  // fusion window l
  std::vector<GridLevelSpec> grid_levels;  // empty: default levels from channels[0]

  int total_upsample() const {
    int f = 1;
    for (int r : upsample) f *= r;
    return f;
  }
};

// Two levels with temporal strides {1, 4} and a 3:1 channel split.
inline std::vector<GridLevelSpec> default_grid_levels(int c_total) {
  if (c_total < 2) return {{1, c_total}};
  const int fine = std::max(1, (3 * c_total) / 4);
  return {{1, fine}, {4, c_total - fine}};
}

inline void validate_model_config(const ModelConfig& cfg) {
  if (cfg.upsample.empty()) throw ConfigError("model: need at least one block");
  if (cfg.channels.size() != cfg.upsample.size() + 1)
    throw ConfigError("model: channels must list the grid budget plus one width per block (" +
                      std::to_string(cfg.upsample.size() + 1) + " entries), got " +
                      std::to_string(cfg.channels.size()));
  for (int r : cfg.upsample)
    if (r < 1) throw ConfigError("model: upsample factors must be >= 1");
  for (int c : cfg.channels)
    if (c < 1) throw ConfigError("model: channel counts must be >= 1");
  if (cfg.kernel < 1 || cfg.kernel % 2 == 0)
    throw ConfigError("model: depthwise kernel must be odd, got " + std::to_string(cfg.kernel));
  if (cfg.window < 1) throw ConfigError("model: fusion window must be >= 1");
  const int factor = cfg.total_upsample();
  if (cfg.frame_h % factor != 0 || cfg.frame_w % factor != 0)
    throw ConfigError("model: frame " + std::to_string(cfg.frame_w) + "x" +
                      std::to_string(cfg.frame_h) + " not divisible by total upsample factor " +
                      std::to_string(factor));
}

template <typename T>
struct PointwiseLayer {
  Tensor<T> weight;  // [Cout, Cin]
  Tensor<T> bias;    // [Cout]
};

template <typename T>
struct DepthwiseLayer {
  Tensor<T> weight;  // [C, k, k]
  Tensor<T> bias;    // [C]
};

template <typename T>
struct TeNeRVBlock {
  int factor = 1;
  PointwiseLayer<T> expand;                   // shared: Cin -> Cout*r^2
  std::vector<DepthwiseLayer<T>> depthwise;   // one slice per active GoP
  PointwiseLayer<T> project;                  // shared: Cout -> Cout
};

// expand -> channel_to_space -> gelu -> depthwise(slice) -> gelu -> project.
template <typename T>
Tensor<T> block_forward(const TeNeRVBlock<T>& block, const Tensor<T>& x, int gop_index,
                        std::optional<int> qat_bits = std::nullopt) {
  if (gop_index < 0 || gop_index >= static_cast<int>(block.depthwise.size()))
    throw IndexError("block_forward: GoP index " + std::to_string(gop_index) +
                     " beyond active slices 0.." + std::to_string(block.depthwise.size() - 1));
  const auto p = [&](const Tensor<T>& t) { return qat_bits ? fake_quantize(t, *qat_bits) : t; };
  const auto& dw = block.depthwise[static_cast<std::size_t>(gop_index)];
  auto y = conv2d_pointwise(x, p(block.expand.weight), p(block.expand.bias));
  y = channel_to_space(y, block.factor);
  y = gelu(y);
  y = conv2d_depthwise(y, p(dw.weight), p(dw.bias));
  y = gelu(y);
  return conv2d_pointwise(y, p(block.project.weight), p(block.project.bias));
}

struct ParamReport {
  std::vector<std::pair<std::string, long long>> components;
  long long total = 0;

  long long count(const std::string& name) const {
    for (const auto& [n, c] : components)
      if (n == name) return c;
    return 0;
  }
};

template <typename T>
class TeNeRVModel {
 public:
  using NamedParam = std::pair<std::string, Tensor<T>>;

  static TeNeRVModel create(ModelConfig cfg, int frames, std::uint32_t seed,
                            bool use_gop_grids = true, bool shared_depthwise = false) {
    if (cfg.grid_levels.empty()) cfg.grid_levels = default_grid_levels(cfg.channels[0]);
    validate_model_config(cfg);
    int level_channels = 0;
    for (const auto& lv : cfg.grid_levels) level_channels += lv.channels;
    if (level_channels != cfg.channels[0])
      throw ConfigError("model: grid level channels sum to " + std::to_string(level_channels) +
                        " but the grid budget is " + std::to_string(cfg.channels[0]));
    if (frames < 1) throw ConfigError("model: need at least one frame");

    TeNeRVModel m;
    m.cfg_ = cfg;
    m.frames_ = frames;
    m.use_gop_grids_ = use_gop_grids;
    m.shared_depthwise_ = shared_depthwise;
    m.h0_ = cfg.frame_h / cfg.total_upsample();
    m.w0_ = cfg.frame_w / cfg.total_upsample();

    Rng rng(seed);
    m.grids_ = BaseGridSet<T>::create(frames, cfg.window, m.h0_, m.w0_, cfg.grid_levels, rng);
    m.window_ = WindowWeights<T>::one_hot(frames, cfg.window);

    const int n_blocks = static_cast<int>(cfg.upsample.size());
    int c_in = cfg.channels[0];
    for (int i = 0; i < n_blocks; ++i) {
      const int r = cfg.upsample[static_cast<std::size_t>(i)];
      const int c_out = cfg.channels[static_cast<std::size_t>(i) + 1];
      TeNeRVBlock<T> block;
      block.factor = r;
      block.expand.weight = kaiming({c_out * r * r, c_in}, c_in, rng);
      block.expand.bias = Tensor<T>::zeros({c_out * r * r}, true);
      DepthwiseLayer<T> dw;
      dw.weight = kaiming({c_out, cfg.kernel, cfg.kernel}, cfg.kernel * cfg.kernel, rng);
      dw.bias = Tensor<T>::zeros({c_out}, true);
      block.depthwise.push_back(std::move(dw));
      block.project.weight = kaiming({c_out, c_out}, c_out, rng);
      block.project.bias = Tensor<T>::zeros({c_out}, true);
      m.blocks_.push_back(std::move(block));
      c_in = c_out;
    }
    m.head_.weight = kaiming({3, c_in}, c_in, rng);
    m.head_.bias = Tensor<T>::zeros({3}, true);
    return m;
  }

  const ModelConfig& config() const { return cfg_; }
  int frames() const { return frames_; }
  int frame_h() const { return cfg_.frame_h; }
  int frame_w() const { return cfg_.frame_w; }
  int h0() const { return h0_; }
  int w0() const { return w0_; }
  bool gam_active() const { return partition_.has_value(); }
  const std::optional<GopPartition>& partition() const { return partition_; }
  int active_slices() const { return static_cast<int>(blocks_.front().depthwise.size()); }
  bool uses_gop_grids() const { return use_gop_grids_; }
  bool shared_depthwise() const { return shared_depthwise_; }

  BaseGridSet<T>& grids() { return grids_; }
  WindowWeights<T>& window() { return window_; }
  GopGridSet<T>& gop_grids() { return gop_; }
  std::vector<TeNeRVBlock<T>>& blocks() { return blocks_; }
  PointwiseLayer<T>& head() { return head_; }

  void set_qat_bits(std::optional<int> bits) {
    if (bits && *bits < 2)
      throw ConfigError("qat: bits must be >= 2, got " + std::to_string(*bits));
    qat_bits_ = bits;
  }
  std::optional<int> qat_bits() const { return qat_bits_; }

  // V1 ablation: the fusion window stays one-hot and is excluded from training.
  void freeze_window() { window_frozen_ = true; window_.weights.set_requires_grad(false); }
  bool window_frozen() const { return window_frozen_; }

  // Fused temporal embedding for frame t (includes the GoP grid when active).
  Tensor<T> embedding(int t) const {
    const auto p = [&](const Tensor<T>& x) { return qat_bits_ ? fake_quantize(x, *qat_bits_) : x; };
    BaseGridSet<T> g = grids_;
    if (qat_bits_)
      for (auto& lv : g.levels) lv.grid = p(lv.grid);
    WindowWeights<T> w{p(window_.weights)};
    auto x = fuse_window(g, w, t);
    if (gop_.active) {
      GopGridSet<T> gg = gop_;
      if (qat_bits_)
        for (auto& grid : gg.grids) grid = p(grid);
      const int k = frame_to_gop(*partition_, t);
      x = fuse_gop(x, gg, k);
    }
    return x;
  }

  // Full decode of frame t; linear (unclamped) output for training.
  Tensor<T> forward(int t) const {
    if (t < 0 || t >= frames_)
      throw IndexError("forward: frame " + std::to_string(t) + " outside 0.." +
                       std::to_string(frames_ - 1));
    const int k = partition_ ? frame_to_gop(*partition_, t) : 0;
    auto x = reshape(embedding(t), {1, cfg_.channels[0], h0_, w0_});
    for (const auto& block : blocks_)
      x = block_forward(block, x, shared_depthwise_ ? 0 : k, qat_bits_);
    const auto p = [&](const Tensor<T>& v) { return qat_bits_ ? fake_quantize(v, *qat_bits_) : v; };
    x = conv2d_pointwise(x, p(head_.weight), p(head_.bias));
    return reshape(x, {3, cfg_.frame_h, cfg_.frame_w});
  }

  // Evaluation path: clamped to [0,1], no graph recording.
  std::vector<T> render(int t) const {
    NoGradGuard no_grad;
    auto out = forward(t);
    std::vector<T> v(out.data(), out.data() + out.size());
    for (auto& x : v) x = std::clamp(x, T(0), T(1));
    return v;
  }

  // Switches to the GoP-adaptive configuration: depthwise kernels duplicated
  // per GoP (bitwise), GoP grids allocated at zero. Callable exactly once.
  void activate_gam(const GopPartition& p) {
    if (partition_) throw UsageError("activate_gam: model is already in adaptive configuration");
    if (p.total_frames != frames_)
      throw ConfigError("activate_gam: partition covers " + std::to_string(p.total_frames) +
                        " frames, model has " + std::to_string(frames_));
    partition_ = p;
    const int k = p.num_gops();
    if (!shared_depthwise_) {
      for (auto& block : blocks_) {
        const DepthwiseLayer<T> proto = block.depthwise.front();  // copy: vector reallocates
        for (int i = 1; i < k; ++i) {
          DepthwiseLayer<T> dw;
          dw.weight = Tensor<T>::from_data(
              proto.weight.shape(),
              std::vector<T>(proto.weight.data(), proto.weight.data() + proto.weight.size()),
              true);
          dw.bias = Tensor<T>::from_data(
              proto.bias.shape(),
              std::vector<T>(proto.bias.data(), proto.bias.data() + proto.bias.size()), true);
          block.depthwise.push_back(std::move(dw));
        }
      }
    }
    if (use_gop_grids_) gop_ = GopGridSet<T>::zeros(k, cfg_.channels[0], h0_, w0_);
  }

  std::vector<NamedParam> named_params() const {
    std::vector<NamedParam> out;
    for (std::size_t m = 0; m < grids_.levels.size(); ++m)
      out.emplace_back("grid.l" + std::to_string(m), grids_.levels[m].grid);
    out.emplace_back("window", window_.weights);
    for (std::size_t g = 0; g < gop_.grids.size(); ++g)
      out.emplace_back("gop.g" + std::to_string(g), gop_.grids[g]);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      const std::string prefix = "block" + std::to_string(i);
      out.emplace_back(prefix + ".expand.weight", b.expand.weight);
      out.emplace_back(prefix + ".expand.bias", b.expand.bias);
      for (std::size_t s = 0; s < b.depthwise.size(); ++s) {
        out.emplace_back(prefix + ".dw" + std::to_string(s) + ".weight", b.depthwise[s].weight);
        out.emplace_back(prefix + ".dw" + std::to_string(s) + ".bias", b.depthwise[s].bias);
      }
      out.emplace_back(prefix + ".project.weight", b.project.weight);
      out.emplace_back(prefix + ".project.bias", b.project.bias);
    }
    out.emplace_back("head.weight", head_.weight);
    out.emplace_back("head.bias", head_.bias);
    return out;
  }

  std::vector<Tensor<T>> trainable_params() const {
    std::vector<Tensor<T>> out;
    for (auto& [name, t] : named_params())
      if (t.requires_grad()) out.push_back(t);
    return out;
  }

  ParamReport param_report() const {
    ParamReport report;
    auto add = [&](const std::string& name, long long n) {
      report.components.emplace_back(name, n);
      report.total += n;
    };
    long long grids = 0;
    for (const auto& lv : grids_.levels) grids += static_cast<long long>(lv.grid.size());
    add("grids", grids);
    add("window", static_cast<long long>(window_.weights.size()));
    long long gop = 0;
    for (const auto& g : gop_.grids) gop += static_cast<long long>(g.size());
    add("gop_grids", gop);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      const std::string prefix = "block" + std::to_string(i);
      add(prefix + ".expand",
          static_cast<long long>(b.expand.weight.size() + b.expand.bias.size()));
      long long dw = 0;
      for (const auto& s : b.depthwise)
        dw += static_cast<long long>(s.weight.size() + s.bias.size());
      add(prefix + ".depthwise", dw);
      add(prefix + ".project",
          static_cast<long long>(b.project.weight.size() + b.project.bias.size()));
    }
    add("head", static_cast<long long>(head_.weight.size() + head_.bias.size()));
    return report;
  }

 private:
  static Tensor<T> kaiming(Shape shape, int fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / fan_in);
    return Tensor<T>::uniform(std::move(shape), rng, -bound, bound, true);
  }

  ModelConfig cfg_;
  int frames_ = 0;
  int h0_ = 0, w0_ = 0;
  bool use_gop_grids_ = true;
  bool shared_depthwise_ = false;
  bool window_frozen_ = false;
  std::optional<int> qat_bits_;
  std::optional<GopPartition> partition_;

  BaseGridSet<T> grids_;
  WindowWeights<T> window_;
  GopGridSet<T> gop_;
  std::vector<TeNeRVBlock<T>> blocks_;
  PointwiseLayer<T> head_;
};

// Closed-form parameter count for a configuration, assuming `gops` segments
// after activation. Used by the benchmark harness to match budgets across
// ablation variants before any training happens.
inline long long estimate_param_count(const ModelConfig& cfg_in, int frames, int gops,
                                      bool use_gop_grids, bool shared_depthwise) {
  ModelConfig cfg = cfg_in;
  if (cfg.grid_levels.empty()) cfg.grid_levels = default_grid_levels(cfg.channels[0]);
  const int factor = cfg.total_upsample();
  const long long h0 = cfg.frame_h / factor, w0 = cfg.frame_w / factor;
  const int expanded = frames + cfg.window - 1;
  long long total = 0;
  for (const auto& lv : cfg.grid_levels) {
    const long long rows = (expanded + lv.temporal_stride - 1) / lv.temporal_stride;
    total += rows * lv.channels * h0 * w0;
  }
  total += static_cast<long long>(frames) * cfg.window;  // fusion window
  if (use_gop_grids) total += static_cast<long long>(gops) * cfg.channels[0] * h0 * w0;
  long long c_in = cfg.channels[0];
  for (std::size_t i = 0; i < cfg.upsample.size(); ++i) {
    const long long r = cfg.upsample[i];
    const long long c_out = cfg.channels[i + 1];
    total += c_out * r * r * c_in + c_out * r * r;                       // expand
    const long long slices = shared_depthwise ? 1 : gops;
    total += slices * (c_out * cfg.kernel * cfg.kernel + c_out);        // depthwise
    total += c_out * c_out + c_out;                                     // project
    c_in = c_out;
  }
  total += 3 * c_in + 3;  // head
  return total;
}

}  // namespace tenerv
