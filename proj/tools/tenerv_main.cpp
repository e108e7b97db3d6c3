// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// tenerv command-line tool: gen | encode | decode | partition | metrics | bench.
// Exit codes: 0 success, 1 usage/config, 2 data/parse, 3 internal.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tenerv/bench.hpp"
#include "tenerv/config_json.hpp"
#include "tenerv/tenerv.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_divergence_csv(const std::string& path) {
  const auto bytes = tenerv::detail::read_file(path);
  std::string text(bytes.begin(), bytes.end());
  for (auto& c : text)
    if (c == ',' || c == '\n' || c == '\r' || c == '\t') c = ' ';
  std::istringstream is(text);
  std::vector<double> scores;
  double v = 0.0;
  while (is >> v) scores.push_back(v);
  if (scores.empty()) throw tenerv::ParseError("divergence file '" + path + "' has no values");
  return scores;
}

tenerv::VideoBuffer load_video_any(const std::string& path, int max_frames, int crop_w,
                                   int crop_h, int raw_w, int raw_h) {
  if (fs::is_directory(path)) {
    std::vector<std::string> frames;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.path().extension() == ".rgb") frames.push_back(entry.path().string());
    std::sort(frames.begin(), frames.end());
    if (frames.empty())
      throw tenerv::DataError("directory '" + path + "' contains no .rgb frames");
    return tenerv::load_raw_frames(frames, raw_w, raw_h);
  }
  return tenerv::load_y4m(path, max_frames, crop_w, crop_h);
}

void write_text(const std::string& path, const std::string& text) {
  tenerv::detail::write_file(path,
                             std::vector<std::uint8_t>(text.begin(), text.end()));
}

int run(int argc, char** argv) {
  CLI::App app{"TeNeRV: hierarchical temporal neural video codec"};
  app.require_subcommand(1);

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a synthetic test video");
  std::string gen_kind, gen_out;
  int gen_frames = 24, gen_w = 96, gen_h = 96;
  std::uint32_t gen_seed = 1;
  gen->add_option("--kind", gen_kind, "moving-square | two-scene | noise-pan")->required();
  gen->add_option("--out", gen_out, "output .y4m path")->required();
  gen->add_option("--frames", gen_frames, "frame count");
  gen->add_option("--width", gen_w, "frame width");
  gen->add_option("--height", gen_h, "frame height");
  gen->add_option("--seed", gen_seed, "generator seed");

  // ---- encode ---------------------------------------------------------------
  auto* enc = app.add_subcommand("encode", "train on a video and emit a bitstream");
  std::string enc_in, enc_out, enc_config, enc_history, enc_checkpoint;
  int enc_max_frames = -1, enc_crop_w = 0, enc_crop_h = 0;
  enc->add_option("--input", enc_in, "source video (.y4m)")->required();
  enc->add_option("--out", enc_out, "output bitstream (.tnrv)")->required();
  enc->add_option("--config", enc_config, "flat JSON training config");
  enc->add_option("--history", enc_history, "per-epoch CSV log path");
  enc->add_option("--checkpoint", enc_checkpoint, "also save an unquantized checkpoint");
  enc->add_option("--max-frames", enc_max_frames, "limit input frames (-1 = all)");
  enc->add_option("--crop-width", enc_crop_w, "center-crop width");
  enc->add_option("--crop-height", enc_crop_h, "center-crop height");
  int enc_epochs = -1, enc_pre = -1, enc_qat = -1, enc_bits = -1, enc_batch = -1;
  int enc_gops = -1, enc_lmin = -1, enc_ltarget = -1, enc_scales = -1;
  double enc_lr = -1.0, enc_alpha = -1.0;
  std::uint32_t enc_seed = 0;
  bool enc_seed_set = false;
  enc->add_option("--epochs", enc_epochs, "override total epochs");
  enc->add_option("--pretrain-epochs", enc_pre, "override pretrain epochs");
  enc->add_option("--qat-epochs", enc_qat, "override QAT epochs");
  enc->add_option("--bits", enc_bits, "override quantization bits");
  enc->add_option("--batch", enc_batch, "override batch size");
  enc->add_option("--gops", enc_gops, "override target GoP count (0 = auto)");
  enc->add_option("--l-min", enc_lmin, "override minimum GoP length");
  enc->add_option("--l-target", enc_ltarget, "override target GoP length");
  enc->add_option("--lr", enc_lr, "override learning rate");
  enc->add_option("--alpha", enc_alpha, "override hybrid loss mix");
  enc->add_option("--msssim-scales", enc_scales, "override MS-SSIM scale count");
  enc->add_option("--seed", enc_seed, "override seed")->each([&](const std::string&) {
    enc_seed_set = true;
  });

  // ---- decode ---------------------------------------------------------------
  auto* dec = app.add_subcommand("decode", "render frames from a bitstream");
  std::string dec_in, dec_out_dir, dec_y4m;
  dec->add_option("--input", dec_in, "bitstream (.tnrv)")->required();
  dec->add_option("--out", dec_out_dir, "directory for raw interleaved RGB frames");
  dec->add_option("--y4m", dec_y4m, "also write a .y4m of the decoded video");

  // ---- partition ------------------------------------------------------------
  auto* part = app.add_subcommand("partition", "run content-aware GoP partitioning");
  std::string part_csv, part_ckpt;
  int part_gops = 0, part_lmin = 4, part_ltarget = 8;
  part->add_option("--divergence", part_csv, "divergence scores CSV (T-1 values)");
  part->add_option("--checkpoint", part_ckpt, "trained checkpoint (.tnrv)");
  part->add_option("--gops", part_gops, "target GoP count (0 = auto from --l-target)");
  part->add_option("--l-min", part_lmin, "minimum GoP length");
  part->add_option("--l-target", part_ltarget, "target GoP length for auto count");

  // ---- metrics --------------------------------------------------------------
  auto* met = app.add_subcommand("metrics", "frame-by-frame PSNR / MS-SSIM");
  std::string met_ref, met_test, met_out;
  int met_w = 0, met_h = 0, met_scales = 3;
  met->add_option("--ref", met_ref, "reference video (.y4m)")->required();
  met->add_option("--test", met_test, "test video (.y4m or directory of .rgb)")->required();
  met->add_option("--width", met_w, "width for raw .rgb input");
  met->add_option("--height", met_h, "height for raw .rgb input");
  met->add_option("--scales", met_scales, "MS-SSIM scales");
  met->add_option("--out", met_out, "CSV output path (default: stdout)");

  // ---- bench ----------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "toy-suite RD benchmark and ablations");
  std::string bench_dir, bench_config, bench_kinds, bench_variants, bench_seeds, bench_bits;
  int bench_frames = 24, bench_w = 96, bench_h = 96;
  bool bench_ablation = false;
  bench->add_option("--out-dir", bench_dir, "output directory for rd.csv / bdrate.csv")
      ->required();
  bench->add_option("--config", bench_config, "base training config JSON");
  bench->add_flag("--ablation", bench_ablation, "run variants V1..V5 against the full model");
  bench->add_option("--kinds", bench_kinds, "comma list of synthetic kinds");
  bench->add_option("--variants", bench_variants, "comma list of variants");
  bench->add_option("--seeds", bench_seeds, "comma list of seeds");
  bench->add_option("--bits-sweep", bench_bits, "comma list of quantization widths");
  bench->add_option("--frames", bench_frames, "frames per toy video");
  bench->add_option("--width", bench_w, "toy video width");
  bench->add_option("--height", bench_h, "toy video height");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage/help text
    return code == 0 ? 0 : 1;
  }

  if (*gen) {
    auto video = tenerv::gen_synthetic(gen_kind, gen_frames, gen_h, gen_w, gen_seed);
    tenerv::save_y4m(video, gen_out);
    std::cout << "wrote " << gen_out << " (" << video.frames << " frames, " << video.w << "x"
              << video.h << ")\n";
    return 0;
  }

  if (*enc) {
    tenerv::TrainConfig cfg;
    if (!enc_config.empty()) cfg = tenerv::load_train_config(enc_config);
    if (enc_epochs >= 0) cfg.total_epochs = enc_epochs;
    if (enc_pre >= 0) cfg.pretrain_epochs = enc_pre;
    if (enc_qat >= 0) cfg.qat_epochs = enc_qat;
    if (enc_bits > 0) cfg.quant_bits = enc_bits;
    if (enc_batch > 0) cfg.batch_size = enc_batch;
    if (enc_gops >= 0) cfg.gop_count = enc_gops;
    if (enc_lmin > 0) cfg.l_min = enc_lmin;
    if (enc_ltarget > 0) cfg.l_target = enc_ltarget;
    if (enc_lr > 0) cfg.lr = enc_lr;
    if (enc_alpha >= 0) cfg.alpha = enc_alpha;
    if (enc_scales > 0) cfg.msssim_scales = enc_scales;
    if (enc_seed_set) cfg.seed = enc_seed;

    auto video = tenerv::load_y4m(enc_in, enc_max_frames, enc_crop_w, enc_crop_h);
    auto result = tenerv::train_full(video, cfg);
    tenerv::detail::write_file(enc_out, result.bitstream);
    if (!enc_history.empty()) write_text(enc_history, tenerv::history_csv(result.history));
    if (!enc_checkpoint.empty()) {
      auto ckpt = tenerv::serialize(result.model, 0);
      tenerv::detail::write_file(enc_checkpoint, ckpt);
    }
    std::ostringstream b;
    for (std::size_t i = 0; i < result.partition.boundaries.size(); ++i)
      b << (i ? "," : "") << result.partition.boundaries[i];
    std::cout << std::setprecision(10) << "bitstream=" << enc_out << " bytes="
              << result.bitstream.size() << "\nbpp=" << result.rd.bpp
              << "\npsnr=" << result.rd.psnr << "\nmsssim=" << result.rd.msssim
              << "\nboundaries=" << b.str() << "\ntrain_seconds=" << result.train_seconds
              << "\n";
    return 0;
  }

  if (*dec) {
    if (dec_out_dir.empty() && dec_y4m.empty())
      throw tenerv::UsageError("decode: need --out and/or --y4m");
    const auto bytes = tenerv::detail::read_file(dec_in);
    auto model = tenerv::deserialize(bytes);
    tenerv::VideoBuffer video;
    video.frames = model.frames();
    video.h = model.frame_h();
    video.w = model.frame_w();
    video.data.resize(static_cast<std::size_t>(video.frames) * video.frame_size());
    for (int t = 0; t < model.frames(); ++t) {
      auto rendered = model.render(t);
      auto bytes8 = tenerv::frame_to_rgb8_planar(rendered);
      auto dst = video.frame(t);
      for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = static_cast<float>(bytes8[i]) / 255.0f;
    }
    if (!dec_out_dir.empty()) {
      fs::create_directories(dec_out_dir);
      for (int t = 0; t < video.frames; ++t) {
        std::ostringstream name;
        name << "frame_" << std::setw(5) << std::setfill('0') << t << ".rgb";
        tenerv::detail::write_file((fs::path(dec_out_dir) / name.str()).string(),
                                   tenerv::frame_to_rgb8(video.frame(t), video.h, video.w));
      }
    }
    if (!dec_y4m.empty()) tenerv::save_y4m(video, dec_y4m);
    std::cout << "decoded " << video.frames << " frames at " << video.w << "x" << video.h
              << "\n";
    return 0;
  }

  if (*part) {
    if (part_csv.empty() == part_ckpt.empty())
      throw tenerv::UsageError("partition: need exactly one of --divergence or --checkpoint");
    tenerv::DivergenceSeries series;
    if (!part_csv.empty()) {
      series.scores = parse_divergence_csv(part_csv);
      series.total_frames = static_cast<int>(series.scores.size()) + 1;
    } else {
      const auto bytes = tenerv::detail::read_file(part_ckpt);
      auto model = tenerv::deserialize(bytes);
      std::vector<std::vector<double>> embeddings;
      tenerv::NoGradGuard no_grad;
      for (int t = 0; t < model.frames(); ++t) {
        auto x = tenerv::fuse_window(model.grids(), model.window(), t);
        auto flat = tenerv::flatten_embedding(x);
        embeddings.emplace_back(flat.begin(), flat.end());
      }
      series = tenerv::divergence(embeddings);
    }
    const int k = part_gops > 0
                      ? part_gops
                      : (series.total_frames + part_ltarget - 1) / part_ltarget;
    auto partition = tenerv::partition(series, k, part_lmin);
    for (std::size_t i = 0; i < partition.boundaries.size(); ++i)
      std::cout << (i ? "," : "") << partition.boundaries[i];
    std::cout << "\n";
    return 0;
  }

  if (*met) {
    auto ref = load_video_any(met_ref, -1, 0, 0, met_w, met_h);
    auto test = load_video_any(met_test, -1, 0, 0, ref.w, ref.h);
    if (ref.frames != test.frames || ref.w != test.w || ref.h != test.h)
      throw tenerv::DataError("metrics: videos disagree, ref " + std::to_string(ref.frames) +
                              "x" + std::to_string(ref.w) + "x" + std::to_string(ref.h) +
                              " vs test " + std::to_string(test.frames) + "x" +
                              std::to_string(test.w) + "x" + std::to_string(test.h));
    std::ostringstream os;
    os.precision(10);
    os << "frame,psnr,msssim\n";
    double psnr_acc = 0.0, ms_acc = 0.0;
    for (int t = 0; t < ref.frames; ++t) {
      const double p = tenerv::psnr<float>(test.frame(t), ref.frame(t));
      const double m =
          tenerv::ms_ssim_value(test.frame(t), ref.frame(t), 3, ref.h, ref.w, met_scales);
      psnr_acc += p;
      ms_acc += m;
      os << t << ',' << p << ',' << m << '\n';
    }
    os << "mean," << psnr_acc / ref.frames << ',' << ms_acc / ref.frames << '\n';
    if (met_out.empty())
      std::cout << os.str();
    else
      write_text(met_out, os.str());
    return 0;
  }

  if (*bench) {
    tenerv::BenchOptions opts;
    if (!bench_config.empty()) opts.base = tenerv::load_train_config(bench_config);
    const auto split_list = [](const std::string& s) {
      std::vector<std::string> out;
      std::istringstream is(s);
      std::string item;
      while (std::getline(is, item, ','))
        if (!item.empty()) out.push_back(item);
      return out;
    };
    if (!bench_kinds.empty()) opts.kinds = split_list(bench_kinds);
    if (!bench_variants.empty()) opts.variants = split_list(bench_variants);
    else if (!bench_ablation) opts.variants = {"full"};
    if (!bench_seeds.empty()) {
      opts.seeds.clear();
      for (const auto& s : split_list(bench_seeds))
        opts.seeds.push_back(static_cast<std::uint32_t>(std::stoul(s)));
    }
    if (!bench_bits.empty()) {
      opts.bits_sweep.clear();
      for (const auto& s : split_list(bench_bits)) opts.bits_sweep.push_back(std::stoi(s));
    }
    opts.frames = bench_frames;
    opts.width = bench_w;
    opts.height = bench_h;
    opts.progress = [](const std::string& line) { std::cerr << line << "\n"; };

    auto out = tenerv::run_bench(opts);
    fs::create_directories(bench_dir);
    write_text((fs::path(bench_dir) / "rd.csv").string(), tenerv::rd_csv(out.results));
    if (!out.bd_rows.empty())
      write_text((fs::path(bench_dir) / "bdrate.csv").string(), tenerv::bd_csv(out.bd_rows));
    for (const auto& row : out.bd_rows)
      if (row.seed == "median")
        std::cout << row.variant << " bd-rate vs full (median): " << row.bd_rate_psnr << "%\n";
    std::cout << "wrote " << (fs::path(bench_dir) / "rd.csv").string() << "\n";
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tenerv::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tenerv::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tenerv::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tenerv::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tenerv::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tenerv::StreamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tenerv::ComputationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
