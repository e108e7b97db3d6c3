// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark harness over the synthetic toy suite: trains the full model and
// the ablation variants at a matched parameter budget, sweeps quantization
// widths into rate-distortion curves, and reduces them to BD-rate rows
// against the full model (per seed: mean across videos; summary: median
// across seeds).

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tenerv/bitstream.hpp"
#include "tenerv/metrics.hpp"
#include "tenerv/training.hpp"
#include "tenerv/video.hpp"

namespace tenerv {

struct BenchResult {
  std::string video;
  std::string variant;
  std::uint32_t seed = 0;
  double bpp = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
  double train_seconds = 0.0;
};

// Stable order: (video, variant, seed, bpp).
inline std::string rd_csv(std::vector<BenchResult> results) {
  if (results.empty()) throw UsageError("rd_csv: no results");
  std::sort(results.begin(), results.end(), [](const BenchResult& a, const BenchResult& b) {
    return std::tie(a.video, a.variant, a.seed, a.bpp) <
           std::tie(b.video, b.variant, b.seed, b.bpp);
  });
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "video,variant,seed,bpp,psnr,msssim,train_seconds\n";
  for (const auto& r : results)
    os << r.video << ',' << r.variant << ',' << r.seed << ',' << r.bpp << ',' << r.psnr << ','
       << r.msssim << ',' << r.train_seconds << '\n';
  return os.str();
}

// Applies one Table-3 variant to a base config.
inline TrainConfig variant_config(TrainConfig cfg, const std::string& variant) {
  if (variant == "full") return cfg;
  if (variant == "V1") cfg.disable_iff = true;
  else if (variant == "V2") cfg.disable_gop_grids = true;
  else if (variant == "V3") cfg.shared_depthwise = true;
  else if (variant == "V4") cfg.fixed_gop_length = cfg.l_target;
  else if (variant == "V5") cfg.uniform_gop = true;
  else throw ConfigError("unknown variant '" + variant + "' (full, V1..V5)");
  return cfg;
}

inline int target_gop_count(const TrainConfig& cfg, int frames) {
  return cfg.gop_count > 0 ? cfg.gop_count : (frames + cfg.l_target - 1) / cfg.l_target;
}

inline long long estimate_params_for(const TrainConfig& cfg, int frames) {
  return estimate_param_count(cfg.model, frames, target_gop_count(cfg, frames),
                              !cfg.disable_gop_grids, cfg.shared_depthwise);
}

// Widens the block channel widths until the variant's estimated parameter
// count matches the target within 2% (or as close as a uniform integer
// scaling allows). Comparisons at fixed rate need fixed budgets.
inline TrainConfig match_budget(TrainConfig cfg, long long target_params, int frames) {
  const auto count_at = [&](double mu) {
    TrainConfig scaled = cfg;
    for (std::size_t i = 1; i < scaled.model.channels.size(); ++i)
      scaled.model.channels[i] = std::max(
          1, static_cast<int>(std::lround(cfg.model.channels[i] * mu)));
    return std::pair<long long, TrainConfig>{estimate_params_for(scaled, frames), scaled};
  };
  double best_mu = 1.0;
  long long best_diff = std::llabs(count_at(1.0).first - target_params);
  for (double mu = 1.0; mu <= 2.0; mu += 0.001) {
    const auto [count, scaled] = count_at(mu);
    const long long diff = std::llabs(count - target_params);
    if (diff < best_diff) {
      best_diff = diff;
      best_mu = mu;
    }
    if (count > target_params) break;  // counts grow with mu; passed the target
  }
  return count_at(best_mu).second;
}

struct BdRow {
  std::string variant;
  std::string seed;  // seed number, or "median" for the summary row
  double bd_rate_psnr = 0.0;
};

inline std::string bd_csv(const std::vector<BdRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << "variant,seed,bd_rate_psnr\n";
  for (const auto& r : rows) os << r.variant << ',' << r.seed << ',' << r.bd_rate_psnr << '\n';
  return os.str();
}

struct BenchOptions {
  std::vector<std::string> kinds = {"moving-square", "two-scene", "noise-pan"};
  std::vector<std::uint32_t> seeds = {1, 2, 3};
  std::vector<std::string> variants = {"full", "V1", "V2", "V3", "V4", "V5"};
  std::vector<int> bits_sweep = {5, 6, 7, 8};
  int frames = 24;
  int width = 96;
  int height = 96;
  TrainConfig base;
  std::function<void(const std::string&)> progress;  // optional status lines
};

struct BenchOutput {
  std::vector<BenchResult> results;
  std::vector<BdRow> bd_rows;  // per (variant, seed) + median summary rows
};

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline BenchOutput run_bench(const BenchOptions& opts) {
  if (opts.kinds.empty() || opts.seeds.empty() || opts.variants.empty())
    throw ConfigError("bench: kinds, seeds and variants must be non-empty");
  if (opts.bits_sweep.size() < 4)
    throw ConfigError("bench: need at least 4 quantization widths for BD-rate curves");

  BenchOutput out;
  const auto note = [&](const std::string& line) {
    if (opts.progress) opts.progress(line);
  };

  // curves[(video,variant,seed)] -> RD points over the bits sweep
  std::map<std::tuple<std::string, std::string, std::uint32_t>, std::vector<RDPoint>> curves;

  const long long full_budget = estimate_params_for(opts.base, opts.frames);
  for (const auto& kind : opts.kinds) {
    for (const auto seed : opts.seeds) {
      auto video = gen_synthetic(kind, opts.frames, opts.height, opts.width, seed);
      for (const auto& variant : opts.variants) {
        TrainConfig cfg = variant_config(opts.base, variant);
        cfg.seed = seed;
        if (variant != "full") cfg = match_budget(cfg, full_budget, opts.frames);
        note("train " + kind + " seed " + std::to_string(seed) + " " + variant + " (" +
             std::to_string(estimate_params_for(cfg, opts.frames)) + " params)");
        auto trained = train_full(video, cfg);
        for (const int bits : opts.bits_sweep) {
          auto bytes = serialize(trained.model, bits);
          auto decoded = deserialize(bytes);
          BenchResult row;
          row.video = kind;
          row.variant = variant;
          row.seed = seed;
          row.bpp = bytes.size() * 8.0 /
                    (static_cast<double>(video.frames) * video.h * video.w);
          row.psnr = eval_psnr(decoded, video);
          row.msssim = eval_msssim(decoded, video, cfg.msssim_scales);
          row.train_seconds = trained.train_seconds;
          out.results.push_back(row);
          curves[{kind, variant, seed}].push_back(RDPoint{row.bpp, row.psnr});
        }
      }
    }
  }

  // BD-rate per (variant, seed): mean across videos, then median across seeds.
  for (const auto& variant : opts.variants) {
    if (variant == "full") continue;
    std::vector<double> per_seed;
    for (const auto seed : opts.seeds) {
      double acc = 0.0;
      int n = 0;
      for (const auto& kind : opts.kinds) {
        const auto& anchor = curves[{kind, "full", seed}];
        const auto& test = curves[{kind, variant, seed}];
        acc += bd_rate(anchor, test);
        ++n;
      }
      const double seed_bd = acc / n;
      per_seed.push_back(seed_bd);
      out.bd_rows.push_back(BdRow{variant, std::to_string(seed), seed_bd});
    }
    out.bd_rows.push_back(BdRow{variant, "median", median_of(per_seed)});
  }
  return out;
}

}  // namespace tenerv
