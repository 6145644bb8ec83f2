#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status = -1;
  std::string stderr_text;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hedgebench_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = dir_ / "run.cfg";
    std::ofstream(config_) << "S0 = 1\nmu = 0.05\nsigma = 0.2\nT = 0.25\nsteps = 10\nnum_paths = 32\n"
                              "seed_value = 3\ntc = 0.01\nr = 0\nepochs = 2\nbatch_size = 16\nalphas = 0, 0.01\n"
                              "n_list = 10, 20\ndiverge_paths = 50\n";
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult invoke(const std::string& args) {
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string(HEDGEBENCH_CLI) + " " + args + " >" + (dir_ / "stdout.txt").string() +
                            " 2>" + err.string();
    CliResult r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.stderr_text = slurp(err);
    return r;
  }

  std::string common(const std::string& out) const {
    return "--config " + config_.string() + " --out " + (dir_ / out).string();
  }

  fs::path dir_;
  fs::path config_;
};

}  // namespace

TEST_F(Cli, SimulateWritesPathsAndManifest) {
  const auto r = invoke(common("sim") + " simulate");
  ASSERT_EQ(r.status, 0) << r.stderr_text;
  EXPECT_TRUE(fs::exists(dir_ / "sim" / "paths.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "sim" / "manifest.json"));
  EXPECT_EQ(manifest.at("command"), "simulate");
  EXPECT_EQ(manifest.at("seeds").at("train"), 3);
  EXPECT_EQ(manifest.at("seeds").at("test"), 4);
}

TEST_F(Cli, TrainThenEvaluateAndSurface) {
  ASSERT_EQ(invoke(common("t") + " train").status, 0);
  const auto params = (dir_ / "t" / "params.json").string();
  ASSERT_TRUE(fs::exists(params));
  EXPECT_TRUE(fs::exists(dir_ / "t" / "loss_history.csv"));
  const auto ev = invoke(common("e") + " evaluate --strategy nn --params " + params);
  ASSERT_EQ(ev.status, 0) << ev.stderr_text;
  const auto report = nlohmann::json::parse(slurp(dir_ / "e" / "report.json"));
  EXPECT_EQ(report.at("n_paths"), 32);
  const auto sf = invoke(common("s") + " surface --params " + params);
  ASSERT_EQ(sf.status, 0) << sf.stderr_text;
  EXPECT_TRUE(fs::exists(dir_ / "s" / "delta_surface.csv"));
}

TEST_F(Cli, BenchAndDivergeOutputs) {
  ASSERT_EQ(invoke(common("b") + " bench").status, 0);
  for (const char* f : {"tables.csv", "loss_history.csv", "histogram.csv", "delta_surface.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / "b" / f)) << f;
  const auto tables = slurp(dir_ / "b" / "tables.csv");
  EXPECT_EQ(tables.rfind("alpha,set,strategy,mean_pct,std_pct\n", 0), 0u);
  ASSERT_EQ(invoke(common("d") + " diverge").status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "d" / "divergence.csv"));
}

TEST_F(Cli, UsageErrorIsStructured) {
  const auto r = invoke(common("u") + " bench --no-such-flag");
  EXPECT_EQ(r.status, 2);
  const auto err = nlohmann::json::parse(r.stderr_text);
  EXPECT_EQ(err.at("kind"), "usage");
}

TEST_F(Cli, ConfigErrorIsStructured) {
  std::ofstream(config_, std::ios::app) << "bogus = 1\n";
  const auto r = invoke(common("c") + " simulate");
  EXPECT_EQ(r.status, 1);
  const auto err = nlohmann::json::parse(r.stderr_text);
  EXPECT_EQ(err.at("kind"), "config");
  EXPECT_NE(err.at("error").get<std::string>().find("bogus"), std::string::npos);
}

TEST_F(Cli, IngestShortSeriesFails) {
  const auto csv = dir_ / "prices.csv";
  {
    std::ofstream out(csv);
    out << "date,close\n";
    for (int i = 0; i < 20; ++i) out << i << "," << 100 + i << "\n";
  }
  const auto r = invoke(common("i") + " ingest --csv " + csv.string());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.stderr_text.find("42"), std::string::npos) << r.stderr_text;
}
