// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training pipeline: holistic pretraining on L1, content-aware partitioning
// from the pretrained embeddings, GoP-adaptive training on the hybrid
// MS-SSIM + L1 loss, and a quantization-aware fine-tuning stage. Every source
// of randomness is seeded from the config, and frame batches are reduced in a
// fixed order, so identical configs reproduce bit-identical trajectories.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "tenerv/adam.hpp"
#include "tenerv/bitstream.hpp"
#include "tenerv/gop.hpp"
#include "tenerv/metrics.hpp"
#include "tenerv/model.hpp"
#include "tenerv/video.hpp"

namespace tenerv {

struct TrainConfig {
  // Schedule: pretrain + adaptive + qat = total, with adaptive implied.
  int total_epochs = 330;
  int pretrain_epochs = 30;
  int qat_epochs = 30;
  double lr = 5e-3;
  int warmup_epochs = 1;
  double alpha = 0.7;  // hybrid loss: alpha*(1-msssim) + (1-alpha)*l1
  int batch_size = 1;
  std::uint32_t seed = 1;
  int quant_bits = 8;
  int msssim_scales = 3;

  // Partition controls; content-aware unless one of the variant modes is set.
  int gop_count = 0;  // 0: ceil(T / l_target)
  int l_min = 4;
  int l_target = 8;

  // Ablation variants (Table-3 style).
  bool disable_iff = false;        // V1: window frozen one-hot
  bool disable_gop_grids = false;  // V2: no GoP-level grids
  bool shared_depthwise = false;   // V3: one depthwise copy for all GoPs
  int fixed_gop_length = 0;        // V4: fixed-length GoPs when > 0
  bool uniform_gop = false;        // V5: length-only uniform split

  ModelConfig model;  // frame dims are overwritten from the video

  int adaptive_epochs() const { return total_epochs - pretrain_epochs - qat_epochs; }
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.total_epochs < 0 || cfg.pretrain_epochs < 0 || cfg.qat_epochs < 0 ||
      cfg.adaptive_epochs() < 0)
    throw ConfigError("train config: stage epochs must be non-negative and sum to total_epochs");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw ConfigError("train config: loss mix alpha must be in [0,1], got " +
                      std::to_string(cfg.alpha));
  if (cfg.batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("train config: learning rate must be positive");
  if (cfg.fixed_gop_length > 0 && cfg.uniform_gop)
    throw ConfigError("train config: fixed_gop_length and uniform_gop are mutually exclusive");
  if (cfg.quant_bits < 2 || cfg.quant_bits > 16)
    throw ConfigError("train config: quant_bits must be in 2..16");
  if (cfg.msssim_scales < 1 || cfg.msssim_scales > 5)
    throw ConfigError("train config: msssim_scales must be in 1..5");
  if (cfg.warmup_epochs < 0) throw ConfigError("train config: warmup_epochs must be >= 0");
}

// alpha*(1 - ms_ssim) + (1-alpha)*l1; the degenerate mixes skip the unused term.
template <typename T>
Tensor<T> hybrid_loss(const Tensor<T>& pred, const Tensor<T>& target, double alpha,
                      int msssim_scales = 3) {
  if (alpha < 0.0 || alpha > 1.0)
    throw ConfigError("hybrid_loss: alpha must be in [0,1], got " + std::to_string(alpha));
  if (alpha == 0.0) return l1_loss(pred, target);
  auto ssim_term = add_scalar(mul_scalar(ms_ssim(pred, target, msssim_scales), T(-1)), T(1));
  if (alpha == 1.0) return ssim_term;
  return add(mul_scalar(ssim_term, static_cast<T>(alpha)),
             mul_scalar(l1_loss(pred, target), static_cast<T>(1.0 - alpha)));
}

// Linear warmup then cosine decay over the whole schedule.
inline double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (cfg.warmup_epochs > 0 && epoch < cfg.warmup_epochs)
    return cfg.lr * (epoch + 1) / cfg.warmup_epochs;
  const int span = std::max(1, cfg.total_epochs - cfg.warmup_epochs);
  const double progress = static_cast<double>(epoch - cfg.warmup_epochs) / span;
  return cfg.lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

// Planar u8 rendering shared by the evaluator and the decode path.
template <typename T>
std::vector<std::uint8_t> frame_to_rgb8_planar(const std::vector<T>& frame) {
  std::vector<std::uint8_t> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i)
    out[i] = detail::to_byte01(static_cast<float>(frame[i]));
  return out;
}

// Deliverable-frame quality: renders, rounds to 8-bit RGB (what the decoder
// ships), and compares against the source. Mean of per-frame PSNR in dB.
template <typename T>
double eval_psnr(const TeNeRVModel<T>& model, const VideoBuffer& video) {
  double acc = 0.0;
  std::vector<float> shipped(video.frame_size());
  for (int t = 0; t < video.frames; ++t) {
    auto bytes = frame_to_rgb8_planar(model.render(t));
    for (std::size_t i = 0; i < shipped.size(); ++i)
      shipped[i] = static_cast<float>(bytes[i]) / 255.0f;
    acc += psnr<float>(shipped, video.frame(t));
  }
  return acc / video.frames;
}

template <typename T>
double eval_msssim(const TeNeRVModel<T>& model, const VideoBuffer& video, int scales) {
  double acc = 0.0;
  for (int t = 0; t < video.frames; ++t) {
    auto rendered = model.render(t);
    std::vector<float> pred(rendered.begin(), rendered.end());
    acc += ms_ssim_value(pred, video.frame(t), 3, video.h, video.w, scales);
  }
  return acc / video.frames;
}

struct EpochLog {
  int epoch = 0;
  std::string stage;
  double seconds = 0.0;  // wall time since training start
  double loss = 0.0;
  double psnr = 0.0;
};

inline std::string history_csv(const std::vector<EpochLog>& rows) {
  std::ostringstream os;
  os << "epoch,stage,seconds,loss,psnr\n";
  os.precision(9);
  for (const auto& r : rows)
    os << r.epoch << ',' << r.stage << ',' << r.seconds << ',' << r.loss << ',' << r.psnr << '\n';
  return os.str();
}

// Drives one model through the staged schedule. The stages are exposed
// separately so tests can observe the transition points.
template <typename T = float>
class TrainingRun {
 public:
  TrainingRun(const VideoBuffer& video, TrainConfig cfg)
      : video_(video), cfg_(std::move(cfg)), shuffle_rng_(cfg_.seed ^ 0x51f15eedu) {
    validate_train_config(cfg_);
    cfg_.model.frame_h = video.h;
    cfg_.model.frame_w = video.w;
    model_ = TeNeRVModel<T>::create(cfg_.model, video.frames, cfg_.seed,
                                    !cfg_.disable_gop_grids, cfg_.shared_depthwise);
    if (cfg_.disable_iff) model_.freeze_window();
    targets_.reserve(static_cast<std::size_t>(video.frames));
    for (int t = 0; t < video.frames; ++t) {
      auto frame = video.frame(t);
      targets_.push_back(Tensor<T>::from_data({3, video.h, video.w},
                                              std::vector<T>(frame.begin(), frame.end())));
    }
    start_ = std::chrono::steady_clock::now();
  }

  TeNeRVModel<T>& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<EpochLog>& history() const { return history_; }
  const DivergenceSeries& divergence_series() const { return divergence_; }

  // Stage 1: all weights shared across timestamps, plain L1.
  void pretrain() { train_epochs(cfg_.pretrain_epochs, "pretrain", false); }

  // Computes the divergence of the pretrained embeddings and switches the
  // model into its GoP-adaptive configuration (function-preserving).
  const GopPartition& partition_and_activate() {
    const int t_total = video_.frames;
    const int k_target =
        cfg_.gop_count > 0 ? cfg_.gop_count : (t_total + cfg_.l_target - 1) / cfg_.l_target;
    GopPartition p;
    if (cfg_.fixed_gop_length > 0) {
      p = fixed_length_partition(t_total, cfg_.fixed_gop_length);
    } else if (cfg_.uniform_gop) {
      p = uniform_partition(t_total, k_target);
    } else {
      std::vector<std::vector<double>> embeddings;
      embeddings.reserve(static_cast<std::size_t>(t_total));
      {
        NoGradGuard no_grad;
        for (int t = 0; t < t_total; ++t) {
          auto flat = flatten_embedding(model_.embedding(t));
          embeddings.emplace_back(flat.begin(), flat.end());
        }
      }
      divergence_ = divergence(embeddings);
      p = partition(divergence_, k_target, cfg_.l_min);
    }
    model_.activate_gam(p);
    return *model_.partition();
  }

  // Stage 2: remaining non-QAT epochs on the hybrid loss.
  void adaptive_epochs() { train_epochs(cfg_.adaptive_epochs(), "adaptive", true); }

  void adaptive() {
    partition_and_activate();
    adaptive_epochs();
  }

  // Stage 3: fake-quantized forward with straight-through gradients.
  void qat() {
    if (cfg_.qat_epochs == 0) return;
    model_.set_qat_bits(cfg_.quant_bits);
    train_epochs(cfg_.qat_epochs, "qat", true);
  }

  void run_all() {
    pretrain();
    adaptive();
    qat();
  }

 private:
  void train_epochs(int count, const char* stage, bool hybrid) {
    if (count == 0) return;
    auto params = model_.trainable_params();
    Adam<T> opt(params, AdamOptions<T>{static_cast<T>(cfg_.lr)});
    std::vector<int> order(static_cast<std::size_t>(video_.frames));
    for (int t = 0; t < video_.frames; ++t) order[static_cast<std::size_t>(t)] = t;

    for (int e = 0; e < count; ++e) {
      const int epoch = epoch_cursor_++;
      opt.set_lr(static_cast<T>(lr_at_epoch(cfg_, epoch)));
      // Fisher-Yates with the seeded generator; std::shuffle is not pinned
      // across standard libraries.
      for (int i = video_.frames - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(shuffle_rng_.uniform_int(0, i))]);

      double loss_acc = 0.0;
      std::size_t cursor = 0;
      while (cursor < order.size()) {
        const std::size_t batch_end =
            std::min(order.size(), cursor + static_cast<std::size_t>(cfg_.batch_size));
        const auto batch_n = static_cast<T>(batch_end - cursor);
        opt.zero_grad();
        for (; cursor < batch_end; ++cursor) {
          const int t = order[cursor];
          auto pred = model_.forward(t);
          auto loss = hybrid ? hybrid_loss(pred, targets_[static_cast<std::size_t>(t)],
                                           cfg_.alpha, cfg_.msssim_scales)
                             : l1_loss(pred, targets_[static_cast<std::size_t>(t)]);
          loss_acc += static_cast<double>(loss.item());
          if (batch_n != T(1)) loss = mul_scalar(loss, T(1) / batch_n);
          loss.backward();
        }
        // GoP-specific parameters outside this batch saw zero gradient.
        for (auto& p : params) p.materialize_grad();
        opt.step();
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      history_.push_back(EpochLog{epoch, stage, seconds, loss_acc / video_.frames,
                                  eval_psnr(model_, video_)});
    }
  }

  const VideoBuffer& video_;
  TrainConfig cfg_;
  Rng shuffle_rng_;
  TeNeRVModel<T> model_;
  std::vector<Tensor<T>> targets_;
  std::vector<EpochLog> history_;
  DivergenceSeries divergence_;
  int epoch_cursor_ = 0;
  std::chrono::steady_clock::time_point start_;
};

struct RateQuality {
  double bpp = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
};

struct TrainResult {
  TeNeRVModel<float> model;    // master weights (QAT bits set when QAT ran)
  TeNeRVModel<float> decoded;  // deserialize(serialize(model)): the shipped decoder state
  std::vector<std::uint8_t> bitstream;
  RateQuality rd;
  std::vector<EpochLog> history;
  GopPartition partition;
  double train_seconds = 0.0;
};

// All stages in order, then compression; the reported rate-distortion point
// is measured on the decoded bitstream, so encoder and decoder agree exactly.
inline TrainResult train_full(const VideoBuffer& video, const TrainConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  TrainingRun<float> run(video, cfg);
  run.run_all();

  TrainResult result{std::move(run.model()), TeNeRVModel<float>(), {}, {}, run.history(),
                     {}, 0.0};
  result.partition = result.model.partition() ? *result.model.partition()
                                              : GopPartition{video.frames, {}};
  result.bitstream = serialize(result.model, cfg.quant_bits);
  result.decoded = deserialize(result.bitstream);
  result.rd.bpp = static_cast<double>(result.bitstream.size()) * 8.0 /
                  (static_cast<double>(video.frames) * video.h * video.w);
  result.rd.psnr = eval_psnr(result.decoded, video);
  result.rd.msssim = eval_msssim(result.decoded, video, cfg.msssim_scales);
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace tenerv
