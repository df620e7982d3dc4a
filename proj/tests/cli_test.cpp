// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Drives the prunelaw binary end to end through the shell.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "prunelaw/dataset.hpp"
#include "prunelaw/report_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("prunelaw_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const auto err_path = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" PRUNELAW_CLI "' " + args + " >/dev/null 2>'" +
                            err_path.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = prunelaw::read_text_file(err_path);
    return r;
  }

  std::string read(const std::string& rel) const { return prunelaw::read_text_file(dir_ / rel); }
  json read_json(const std::string& rel) const { return json::parse(read(rel)); }
  void write(const std::string& rel, const std::string& text) const { prunelaw::write_text_file(dir_ / rel, text); }

  // Small noisy surface plus its table, written under `out`.
  void synth(const std::string& out, const std::string& extra = "") const {
    ASSERT_EQ(run("--seed 3 --out " + out + " synth --depths 2,4,8 --widths 0.5,1,2 --subsample-sizes 50000 "
                  "--noise 0.02 " + extra)
                  .code,
              0);
  }

  fs::path dir_;
};

TEST_F(Cli, FitRecoversSyntheticTruth) {
  ASSERT_EQ(run("--seed 1 --out s synth --depths 2,4,8 --widths 0.5,1,2 --subsample-sizes 50000 --eps-high 0.9 "
                "--gamma 2 --p-prime 1 --phi 1.2 --psi 0.8")
                .code,
            0);
  ASSERT_EQ(run("--seed 1 --out f fit --measurements s/measurements.csv --np-table s/np_table.json").code, 0);
  const auto fit = read_json("f/fit.json");
  EXPECT_NEAR(fit["eps_high"].get<double>(), 0.9, 1e-3 * 0.9);
  EXPECT_NEAR(fit["gamma"].get<double>(), 2.0, 2e-3);
  EXPECT_NEAR(fit["p_prime"].get<double>(), 1.0, 1e-3);
  EXPECT_NEAR(fit["phi"].get<double>(), 1.2, 1.2e-3);
  EXPECT_NEAR(fit["psi"].get<double>(), 0.8, 0.8e-3);
  EXPECT_EQ(fit["manifest"], "manifest.json");
  const auto manifest = read_json("f/manifest.json");
  EXPECT_EQ(manifest["command"], "fit");
  EXPECT_EQ(manifest["rng_seed"], 1);
  EXPECT_EQ(manifest["exit_code"], 0);
  EXPECT_FALSE(manifest["inputs"].empty());
  const auto dev = read("f/deviations.csv");
  EXPECT_EQ(dev.substr(0, prunelaw::kDeviationsHeader.size()), prunelaw::kDeviationsHeader);
}

TEST_F(Cli, MissingNpKeyIsNamed) {
  synth("s");
  write("partial.json", R"({"entries": [{"family": "synth", "depth": 2, "width_scale": 0.5,
                                        "subsample_size": 50000, "eps_np": 0.2}]})");
  const auto r = run("--seed 1 --out f fit --measurements s/measurements.csv --np-table partial.json");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("l=4"), std::string::npos) << r.err;
}

TEST_F(Cli, NoPsiWithVaryingWidthIsInconsistent) {
  synth("s");
  const auto r = run("--seed 1 --out f fit --measurements s/measurements.csv --np-table s/np_table.json --no-psi");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("psi"), std::string::npos) << r.err;
}

TEST_F(Cli, InputErrorsExitOne) {
  write("bad.csv", "family,depth\nx,1\n");
  EXPECT_EQ(run("--seed 1 fit --measurements bad.csv").code, 1);
  EXPECT_EQ(run("--seed 1 fit --measurements nope.csv").code, 1);
  EXPECT_EQ(run("--seed 1 fit --measurements bad.csv --bogus-flag").code, 1);
  EXPECT_EQ(run("").code, 1);
  synth("s");
  // Randomized commands refuse to run unseeded.
  const auto r = run("fit --measurements s/measurements.csv");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
}

TEST_F(Cli, InvertAndOptimizeExitCodes) {
  synth("s");
  ASSERT_EQ(run("--seed 1 --out f fit --measurements s/measurements.csv --np-table s/np_table.json").code, 0);
  EXPECT_EQ(run("--out i invert --fit f/fit.json --target 0.3 --eps-np 0.1 --depth 4 --width 1").code, 0);
  EXPECT_EQ(run("--out i2 invert --fit f/fit.json --target 0.05 --eps-np 0.1 --depth 4 --width 1").code, 3);
  write("cat.csv", std::string(prunelaw::kCatalogHeader) + "\n2,1,0.3\n4,1,0.2\n");
  EXPECT_EQ(run("--out o optimize --fit f/fit.json --catalog cat.csv --eps-k 0.1").code, 3);
  EXPECT_EQ(run("--out o2 optimize --fit f/fit.json --catalog cat.csv --eps-k 0.4").code, 0);
  const auto o = read_json("o2/optimize.json");
  EXPECT_LE(o["predicted_error"].get<double>(), 0.4 + 1e-9);
}

TEST_F(Cli, ImpWithOneIterationEmitsOneRow) {
  const auto r = run("--seed 2 --out m imp --iterations 1 --epochs 4 --rewind 1 --n-total 400 --input-dim 8 "
                     "--classes 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto set = prunelaw::parse_measurements(read("m/measurements.csv"));
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set[0].cfg.density, 1.0);
  EXPECT_EQ(set[0].family, "toy-mlp");
}

TEST_F(Cli, FrontierIsSortedAndNonIncreasing) {
  synth("s");
  ASSERT_EQ(run("--seed 1 --out f fit --measurements s/measurements.csv --np-table s/np_table.json").code, 0);
  ASSERT_EQ(run("--out fr --format csv frontier --fit f/fit.json --eps-min 0.02 --eps-max 0.95 --levels 40 "
                "--family synth --subsample-size 50000")
                .code,
            0);
  std::istringstream in(read("fr/frontier.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, prunelaw::kFrontierHeader);
  double prev_eps = 0.0, prev_m = INFINITY;
  int rows = 0, feasible = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    const double eps = std::stod(f[0]);
    EXPECT_GT(eps, prev_eps);
    prev_eps = eps;
    if (f.size() > 4 && !f[4].empty()) {
      const double m = std::stod(f[4]);
      EXPECT_LE(m, prev_m);
      prev_m = m;
      ++feasible;
    }
  }
  EXPECT_EQ(rows, 40);
  EXPECT_GT(feasible, 10);
}

TEST_F(Cli, SynthFitOptimizeShowsLargerPrunedNetworkWins) {
  ASSERT_EQ(run("--seed 3 --out s synth --noise 0.02").code, 0);
  ASSERT_EQ(run("--seed 3 --out f fit --measurements s/measurements.csv --np-table s/np_table.json").code, 0);
  const double eps_k = 0.3;
  ASSERT_EQ(run("--out o optimize --fit f/fit.json --eps-k 0.3 --family synth --subsample-size 50000").code, 0);
  const auto o = read_json("o/optimize.json");
  EXPECT_EQ(o["binding"], "interior");
  const double chosen = o["depth"].get<int>() * std::pow(o["width_scale"].get<double>(), 2);
  // The smallest network that reaches the budget without pruning.
  double smallest_dense = INFINITY;
  const auto table = read_json("s/np_table.json");
  for (const auto& e : table["entries"]) {
    if (e["subsample_size"].get<std::int64_t>() != 50000 || e["eps_np"].get<double>() > eps_k) continue;
    smallest_dense = std::min(smallest_dense, e["depth"].get<int>() * std::pow(e["width_scale"].get<double>(), 2));
  }
  EXPECT_GT(chosen, smallest_dense);
  EXPECT_LT(o["param_count"].get<double>(), smallest_dense);
}

// Every command twice with the same inputs and seed: primary outputs match byte for byte.
TEST_F(Cli, OutputsAreByteIdenticalAcrossRuns) {
  synth("s");
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
      {"fit --measurements s/measurements.csv --np-table s/np_table.json --restarts 2", {"fit.json", "deviations.csv"}},
      {"synth --depths 2,4 --widths 1,2 --subsample-sizes 100 --noise 0.03", {"measurements.csv", "np_table.json"}},
      {"stability --measurements s/measurements.csv --np-table s/np_table.json --t 60,120 --trials 3 --restarts 2",
       {"stability.json"}},
      {"extrapolate --measurements s/measurements.csv --np-table s/np_table.json --restarts 2",
       {"extrapolation.json"}},
      {"imp --iterations 3 --epochs 4 --rewind 1 --n-total 400 --input-dim 8 --classes 2", {"measurements.csv",
                                                                                            "run_log.json"}},
      {"compare --measurements s/measurements.csv --np-table s/np_table.json --depth 4 --width 1",
       {"compare.json"}},
  };
  for (const auto& [args, files] : commands) {
    ASSERT_EQ(run("--seed 9 --out a " + args).code, 0) << args;
    ASSERT_EQ(run("--seed 9 --out b " + args).code, 0) << args;
    for (const auto& f : files) EXPECT_EQ(read("a/" + f), read("b/" + f)) << args << " " << f;
  }
  ASSERT_EQ(run("--seed 9 --out f fit --measurements s/measurements.csv --np-table s/np_table.json").code, 0);
  const std::vector<std::pair<std::string, std::string>> det{
      {"eval --fit f/fit.json --measurements s/measurements.csv --np-table s/np_table.json", "eval.json"},
      {"invert --fit f/fit.json --target 0.4 --eps-np 0.1 --depth 4 --width 1", "invert.json"},
      {"optimize --fit f/fit.json --eps-k 0.3 --family synth --subsample-size 50000", "optimize.json"},
      {"frontier --fit f/fit.json --eps-grid 0.1,0.2,0.4 --family synth --subsample-size 50000", "frontier.json"},
  };
  for (const auto& [args, file] : det) {
    ASSERT_EQ(run("--out a " + args).code, 0) << args;
    ASSERT_EQ(run("--out b " + args).code, 0) << args;
    EXPECT_EQ(read("a/" + file), read("b/" + file)) << args;
  }
}

TEST_F(Cli, CsvFormatSwitchesTabularOutput) {
  synth("s");
  ASSERT_EQ(run("--seed 1 --out f fit --measurements s/measurements.csv --np-table s/np_table.json").code, 0);
  ASSERT_EQ(run("--out c --format csv optimize --fit f/fit.json --eps-k 0.3 --family synth --subsample-size 50000")
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir_ / "c/optimize.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "c/optimize.json"));
  EXPECT_EQ(read("c/optimize.csv").substr(0, prunelaw::kFrontierHeader.size()), prunelaw::kFrontierHeader);
}

TEST_F(Cli, HelpListsEveryFlag) {
  const auto err_path = dir_ / "help.txt";
  const std::string cmd = "'" PRUNELAW_CLI "' fit --help > '" + err_path.string() + "' 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const auto help = prunelaw::read_text_file(err_path);
  for (const char* flag : {"--measurements", "--np-table", "--no-phi", "--no-psi", "--restarts", "--optimizer"}) {
    EXPECT_NE(help.find(flag), std::string::npos) << flag;
  }
}

}  // namespace
