// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat JSON <-> TrainConfig. Unknown keys are rejected so config typos fail
// loudly instead of silently training with defaults.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tenerv/training.hpp"
#include "tenerv/video.hpp"

namespace tenerv {

inline nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["total_epochs"] = cfg.total_epochs;
  j["pretrain_epochs"] = cfg.pretrain_epochs;
  j["qat_epochs"] = cfg.qat_epochs;
  j["lr"] = cfg.lr;
  j["warmup_epochs"] = cfg.warmup_epochs;
  j["alpha"] = cfg.alpha;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["quant_bits"] = cfg.quant_bits;
  j["msssim_scales"] = cfg.msssim_scales;
  j["gop_count"] = cfg.gop_count;
  j["l_min"] = cfg.l_min;
  j["l_target"] = cfg.l_target;
  j["disable_iff"] = cfg.disable_iff;
  j["disable_gop_grids"] = cfg.disable_gop_grids;
  j["shared_depthwise"] = cfg.shared_depthwise;
  j["fixed_gop_length"] = cfg.fixed_gop_length;
  j["uniform_gop"] = cfg.uniform_gop;
  j["upsample"] = cfg.model.upsample;
  j["channels"] = cfg.model.channels;
  j["kernel"] = cfg.model.kernel;
  j["window"] = cfg.model.window;
  std::vector<int> strides, grid_channels;
  for (const auto& lv : cfg.model.grid_levels) {
    strides.push_back(lv.temporal_stride);
    grid_channels.push_back(lv.channels);
  }
  j["grid_strides"] = strides;
  j["grid_channels"] = grid_channels;
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  std::vector<int> strides, grid_channels;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "total_epochs") cfg.total_epochs = value.get<int>();
      else if (key == "pretrain_epochs") cfg.pretrain_epochs = value.get<int>();
      else if (key == "qat_epochs") cfg.qat_epochs = value.get<int>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "warmup_epochs") cfg.warmup_epochs = value.get<int>();
      else if (key == "alpha") cfg.alpha = value.get<double>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint32_t>();
      else if (key == "quant_bits") cfg.quant_bits = value.get<int>();
      else if (key == "msssim_scales") cfg.msssim_scales = value.get<int>();
      else if (key == "gop_count") cfg.gop_count = value.get<int>();
      else if (key == "l_min") cfg.l_min = value.get<int>();
      else if (key == "l_target") cfg.l_target = value.get<int>();
      else if (key == "disable_iff") cfg.disable_iff = value.get<bool>();
      else if (key == "disable_gop_grids") cfg.disable_gop_grids = value.get<bool>();
      else if (key == "shared_depthwise") cfg.shared_depthwise = value.get<bool>();
      else if (key == "fixed_gop_length") cfg.fixed_gop_length = value.get<int>();
      else if (key == "uniform_gop") cfg.uniform_gop = value.get<bool>();
      else if (key == "upsample") cfg.model.upsample = value.get<std::vector<int>>();
      else if (key == "channels") cfg.model.channels = value.get<std::vector<int>>();
      else if (key == "kernel") cfg.model.kernel = value.get<int>();
      else if (key == "window") cfg.model.window = value.get<int>();
      else if (key == "grid_strides") strides = value.get<std::vector<int>>();
      else if (key == "grid_channels") grid_channels = value.get<std::vector<int>>();
      else throw ConfigError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (strides.size() != grid_channels.size())
    throw ConfigError("config: grid_strides and grid_channels must have equal length");
  cfg.model.grid_levels.clear();
  for (std::size_t i = 0; i < strides.size(); ++i)
    cfg.model.grid_levels.push_back({strides[i], grid_channels[i]});
  return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
  const auto bytes = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  return train_config_from_json(j);
}

inline void save_train_config(const TrainConfig& cfg, const std::string& path) {
  const auto text = train_config_to_json(cfg).dump(2) + "\n";
  detail::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace tenerv
