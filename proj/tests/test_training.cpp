// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "tenerv/config_json.hpp"
#include "tenerv/training.hpp"

using tenerv::TrainConfig;
using tenerv::TrainingRun;

namespace {

// Small-but-real setup: 32x32 frames, two blocks, two-scale MS-SSIM.
TrainConfig smoke_config() {
  TrainConfig cfg;
  cfg.total_epochs = 8;
  cfg.pretrain_epochs = 2;
  cfg.qat_epochs = 2;
  cfg.lr = 5e-3;
  cfg.msssim_scales = 2;
  cfg.l_min = 2;
  cfg.l_target = 4;
  cfg.model.upsample = {4, 2};
  cfg.model.channels = {8, 12, 6};
  cfg.model.window = 2;
  return cfg;
}

template <typename T>
std::vector<T> snapshot_params(tenerv::TeNeRVModel<T>& model) {
  std::vector<T> out;
  for (auto& [name, t] : model.named_params())
    out.insert(out.end(), t.data(), t.data() + t.size());
  return out;
}

}  // namespace

TEST_CASE("hybrid_loss: mixes L1 and the MS-SSIM complement") {
  tenerv::Rng rng(3);
  auto a = tenerv::Tensor<double>::uniform({3, 32, 32}, rng, 0.0, 1.0, true);
  auto b = tenerv::Tensor<double>::uniform({3, 32, 32}, rng, 0.0, 1.0);

  const double l1 = tenerv::l1_loss(a, b).item();
  const double ms = tenerv::ms_ssim(a, b, 2).item();
  const double mixed = tenerv::hybrid_loss(a, b, 0.7, 2).item();
  REQUIRE_THAT(mixed, Catch::Matchers::WithinRel(0.7 * (1.0 - ms) + 0.3 * l1, 1e-12));

  REQUIRE(tenerv::hybrid_loss(a, b, 0.0, 2).item() == l1);
  REQUIRE(tenerv::hybrid_loss(a, a, 1.0, 2).item() == 0.0);  // identical frames, pure SSIM term
  REQUIRE_THROWS_AS(tenerv::hybrid_loss(a, b, 1.5, 2), tenerv::ConfigError);
}

TEST_CASE("train config: stage budget and mode validation") {
  auto cfg = smoke_config();
  cfg.pretrain_epochs = 7;
  cfg.qat_epochs = 2;  // 7 + 2 > 8
  REQUIRE_THROWS_AS(tenerv::validate_train_config(cfg), tenerv::ConfigError);

  cfg = smoke_config();
  cfg.fixed_gop_length = 4;
  cfg.uniform_gop = true;
  REQUIRE_THROWS_AS(tenerv::validate_train_config(cfg), tenerv::ConfigError);

  cfg = smoke_config();
  cfg.alpha = -0.1;
  REQUIRE_THROWS_AS(tenerv::validate_train_config(cfg), tenerv::ConfigError);
}

TEST_CASE("pretrain: zero epochs leave the model untouched") {
  auto video = tenerv::gen_synthetic("moving-square", 4, 32, 32, 1);
  auto cfg = smoke_config();
  cfg.total_epochs = 0;
  cfg.pretrain_epochs = 0;
  cfg.qat_epochs = 0;
  TrainingRun<float> run(video, cfg);
  auto before = snapshot_params(run.model());
  run.pretrain();
  auto after = snapshot_params(run.model());
  REQUIRE(before == after);
  REQUIRE(run.history().empty());
}

TEST_CASE("pretrain: loss decreases on the moving-square toy (3-seed majority)") {
  int improved = 0;
  for (std::uint32_t seed : {1u, 2u, 3u}) {
    auto video = tenerv::gen_synthetic("moving-square", 4, 32, 32, seed);
    auto cfg = smoke_config();
    cfg.total_epochs = 11;
    cfg.pretrain_epochs = 11;
    cfg.qat_epochs = 0;
    cfg.seed = seed;
    TrainingRun<float> run(video, cfg);
    run.pretrain();
    if (run.history().back().loss < run.history().front().loss) ++improved;
  }
  REQUIRE(improved >= 2);
}

TEST_CASE("stage transition: evaluation is preserved exactly") {
  auto video = tenerv::gen_synthetic("two-scene", 8, 32, 32, 5);
  auto cfg = smoke_config();
  cfg.seed = 5;
  TrainingRun<float> run(video, cfg);
  run.pretrain();
  const double before = tenerv::eval_psnr(run.model(), video);
  run.partition_and_activate();
  const double after = tenerv::eval_psnr(run.model(), video);
  REQUIRE(before == after);
  REQUIRE(run.model().partition().has_value());
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  auto once = [] {
    auto video = tenerv::gen_synthetic("moving-square", 4, 32, 32, 2);
    auto cfg = smoke_config();
    cfg.seed = 7;
    TrainingRun<float> run(video, cfg);
    run.run_all();
    return snapshot_params(run.model());
  };
  auto a = once();
  auto b = once();
  REQUIRE(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("history: one row per epoch with the configured stage budget") {
  auto video = tenerv::gen_synthetic("noise-pan", 4, 32, 32, 3);
  auto cfg = smoke_config();
  TrainingRun<float> run(video, cfg);
  run.run_all();
  const auto& rows = run.history();
  REQUIRE(static_cast<int>(rows.size()) == cfg.total_epochs);
  int pretrain = 0, adaptive = 0, qat = 0;
  for (const auto& r : rows) {
    if (r.stage == "pretrain") ++pretrain;
    if (r.stage == "adaptive") ++adaptive;
    if (r.stage == "qat") ++qat;
  }
  REQUIRE(pretrain == cfg.pretrain_epochs);
  REQUIRE(adaptive == cfg.adaptive_epochs());
  REQUIRE(qat == cfg.qat_epochs);

  const auto csv = tenerv::history_csv(rows);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == cfg.total_epochs + 1);
}

TEST_CASE("V3 config: depthwise parameter count independent of the GoP count") {
  auto video = tenerv::gen_synthetic("two-scene", 8, 32, 32, 9);
  auto cfg = smoke_config();
  cfg.shared_depthwise = true;
  TrainingRun<float> run(video, cfg);
  run.pretrain();
  const auto before = run.model().param_report();
  run.partition_and_activate();
  const auto after = run.model().param_report();
  REQUIRE(after.count("block0.depthwise") == before.count("block0.depthwise"));
  REQUIRE(run.model().active_slices() == 1);
}

TEST_CASE("V1 config: window stays one-hot and untrained") {
  auto video = tenerv::gen_synthetic("moving-square", 4, 32, 32, 4);
  auto cfg = smoke_config();
  cfg.disable_iff = true;
  TrainingRun<float> run(video, cfg);
  run.pretrain();
  auto w = run.model().window().weights;
  for (int t = 0; t < 4; ++t) {
    REQUIRE(w.data()[t * 2] == 1.0f);
    REQUIRE(w.data()[t * 2 + 1] == 0.0f);
  }
}

TEST_CASE("qat: decoded forward equals the final fake-quantized forward bitwise") {
  auto video = tenerv::gen_synthetic("moving-square", 4, 32, 32, 6);
  auto cfg = smoke_config();
  cfg.seed = 6;
  TrainingRun<float> run(video, cfg);
  run.run_all();
  REQUIRE(run.model().qat_bits() == 8);

  auto bytes = tenerv::serialize(run.model(), cfg.quant_bits);
  auto decoded = tenerv::deserialize(bytes);
  for (int t = 0; t < video.frames; ++t) {
    auto a = run.model().render(t);
    auto b = decoded.render(t);
    REQUIRE(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("qat: 16-bit fake quantization barely moves a trained model") {
  auto video = tenerv::gen_synthetic("moving-square", 4, 32, 32, 8);
  auto cfg = smoke_config();
  cfg.total_epochs = 30;
  cfg.pretrain_epochs = 5;
  cfg.qat_epochs = 0;
  cfg.seed = 8;
  TrainingRun<float> run(video, cfg);
  run.run_all();
  const double full = tenerv::eval_psnr(run.model(), video);
  run.model().set_qat_bits(16);
  const double quantized = tenerv::eval_psnr(run.model(), video);
  REQUIRE(std::abs(full - quantized) < 0.1);
}

TEST_CASE("train_full: RD accounting matches the bitstream size") {
  auto video = tenerv::gen_synthetic("two-scene", 8, 32, 32, 10);
  auto cfg = smoke_config();
  cfg.seed = 10;
  auto result = tenerv::train_full(video, cfg);
  REQUIRE(static_cast<int>(result.history.size()) == cfg.total_epochs);
  const double expect_bpp =
      result.bitstream.size() * 8.0 / (static_cast<double>(video.frames) * video.h * video.w);
  REQUIRE(result.rd.bpp == expect_bpp);
  REQUIRE(result.rd.psnr == tenerv::eval_psnr(result.decoded, video));
  REQUIRE(result.partition.total_frames == video.frames);
}

TEST_CASE("train config: JSON round trip and unknown-key rejection") {
  auto cfg = smoke_config();
  cfg.disable_gop_grids = true;
  cfg.model.grid_levels = {{1, 6}, {4, 2}};
  auto j = tenerv::train_config_to_json(cfg);
  auto back = tenerv::train_config_from_json(j);
  REQUIRE(back.total_epochs == cfg.total_epochs);
  REQUIRE(back.disable_gop_grids);
  REQUIRE(back.model.upsample == cfg.model.upsample);
  REQUIRE(back.model.grid_levels.size() == 2);
  REQUIRE(back.model.grid_levels[1].temporal_stride == 4);

  auto bad = j;
  bad["not_a_field"] = 1;
  REQUIRE_THROWS_AS(tenerv::train_config_from_json(bad), tenerv::ConfigError);
}
