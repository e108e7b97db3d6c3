// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Drives the installed binary end to end through a tiny encode/decode cycle.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TENERV_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Last comma-separated value of the row starting with `key`.
double csv_value(const std::string& text, const std::string& key, int column) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind(key + ",", 0) == 0) {
      std::istringstream row(line);
      std::string cell;
      for (int c = 0; c <= column; ++c) std::getline(row, cell, ',');
      return std::stod(cell);
    }
  }
  FAIL("row '" + key + "' not found");
  return 0.0;
}

double report_value(const std::string& text, const std::string& key) {
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (line.rfind(key + "=", 0) == 0) return std::stod(line.substr(key.size() + 1));
  FAIL("report key '" + key + "' not found");
  return 0.0;
}

}  // namespace

TEST_CASE("cli: gen-encode-decode-metrics pipeline is self-consistent") {
  const fs::path dir = fs::temp_directory_path() / "tenerv_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto in = [&](const std::string& name) { return (dir / name).string(); };

  REQUIRE(run_cli("gen --kind two-scene --frames 8 --width 32 --height 32 --seed 3 --out " +
                  in("v.y4m")) == 0);
  REQUIRE(run_cli("encode --input " + in("v.y4m") + " --out " + in("v.tnrv") +
                  " --epochs 8 --pretrain-epochs 2 --qat-epochs 2 --l-min 2 --l-target 4"
                  " --msssim-scales 2 --seed 3 --history " + in("h.csv") +
                  " --checkpoint " + in("c.tnrv") + " > " + in("report.txt")) == 0);
  REQUIRE(run_cli("decode --input " + in("v.tnrv") + " --out " + in("frames")) == 0);
  REQUIRE(run_cli("metrics --ref " + in("v.y4m") + " --test " + in("frames") +
                  " --scales 2 --out " + in("m.csv")) == 0);

  const double reported = report_value(slurp(dir / "report.txt"), "psnr");
  const double measured = csv_value(slurp(dir / "m.csv"), "mean", 1);
  REQUIRE_THAT(measured, Catch::Matchers::WithinAbs(reported, 1e-6));

  // History CSV has one row per epoch plus the header.
  const auto history = slurp(dir / "h.csv");
  REQUIRE(std::count(history.begin(), history.end(), '\n') == 8 + 1);

  // The checkpoint drives the partition subcommand.
  REQUIRE(run_cli("partition --checkpoint " + in("c.tnrv") + " --gops 2 --l-min 2 > " +
                  in("b.txt")) == 0);
  REQUIRE(!slurp(dir / "b.txt").empty());

  fs::remove_all(dir);
}

TEST_CASE("cli: bench writes RD and BD-rate tables") {
  const fs::path dir = fs::temp_directory_path() / "tenerv_bench_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg_path = (dir / "cfg.json").string();
  std::ofstream(cfg_path) << R"({"total_epochs": 6, "pretrain_epochs": 2, "qat_epochs": 1,
      "msssim_scales": 2, "l_min": 2, "l_target": 4,
      "upsample": [4, 2], "channels": [8, 12, 6]})";

  REQUIRE(run_cli("bench --out-dir " + (dir / "out").string() + " --config " + cfg_path +
                  " --kinds two-scene --seeds 1 --variants full,V3 --bits-sweep 2,4,6,8"
                  " --frames 8 --width 32 --height 32 2>/dev/null") == 0);
  const auto rd = slurp(dir / "out" / "rd.csv");
  REQUIRE(rd.rfind("video,variant,seed,bpp,psnr,msssim,train_seconds\n", 0) == 0);
  REQUIRE(std::count(rd.begin(), rd.end(), '\n') == 1 + 2 * 4);  // 2 variants x 4 widths
  const auto bd = slurp(dir / "out" / "bdrate.csv");
  REQUIRE(bd.rfind("variant,seed,bd_rate_psnr\n", 0) == 0);
  REQUIRE(bd.find("V3,median,") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli: exit codes follow the usage/data/internal convention") {
  REQUIRE(run_cli("definitely-not-a-subcommand >/dev/null 2>&1") == 1);
  REQUIRE(run_cli("gen --kind nope --out /tmp/tenerv_x.y4m >/dev/null 2>&1") == 1);
  REQUIRE(run_cli("decode --input /nonexistent.tnrv --out /tmp/q >/dev/null 2>&1") == 2);
  REQUIRE(run_cli("--help >/dev/null 2>&1") == 0);
}
