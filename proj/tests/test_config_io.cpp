#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "hedgebench/config.hpp"
#include "hedgebench/io.hpp"

using namespace hedgebench;

namespace {

const char* kBase =
    "S0 = 1          # Initial stock price\n"
    "mu = 0.05\n"
    "sigma = 0.2\n"
    "T = 0.25\n"
    "steps = 30\n"
    "num_paths = 256\n"
    "seed_value = 42\n"
    "tc = 0.02\n"
    "r = 0\n";

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  auto rc = parse_run_config(in);
  rc.resolve();
  return rc;
}

}  // namespace

TEST(RunConfig, ParsesRequiredKeysAndDerivesSeeds) {
  const auto rc = parse(kBase);
  EXPECT_EQ(rc.experiment.steps, 30u);
  EXPECT_EQ(rc.experiment.n_paths, 256u);
  EXPECT_EQ(rc.tc, 0.02);
  EXPECT_EQ(rc.experiment.train_seed, 42u);
  EXPECT_EQ(rc.experiment.test_seed, 43u);
  EXPECT_EQ(rc.experiment.init_seed, 42u);
  EXPECT_EQ(rc.fixed_nu(), 0.2);
}

TEST(RunConfig, OptionalKeys) {
  const auto rc = parse(std::string(kBase) +
                        "alphas = 0, 0.01\nmode = overlapping\nepochs = 7\ntest_seed = 9\nn_list = 30,60\nnu = 0.25\n");
  EXPECT_EQ(rc.experiment.alphas, (std::vector<double>{0.0, 0.01}));
  EXPECT_EQ(rc.experiment.mode, SampleMode::overlapping);
  EXPECT_EQ(rc.experiment.epochs, 7u);
  EXPECT_EQ(rc.experiment.test_seed, 9u);
  EXPECT_EQ(rc.n_list, (std::vector<std::size_t>{30, 60}));
  EXPECT_EQ(rc.fixed_nu(), 0.25);
}

TEST(RunConfig, UnknownKeyIsAnError) {
  EXPECT_THROW(parse(std::string(kBase) + "learning_rate = 0.1\n"), ConfigError);
}

TEST(RunConfig, MissingKeyIsNamed) {
  std::string text = kBase;
  text.erase(text.find("tc = 0.02\n"), 10);
  try {
    parse(text);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'tc'"), std::string::npos);
  }
}

TEST(RunConfig, BadValuesAndDuplicates) {
  EXPECT_THROW(parse(std::string(kBase) + "epochs = -3\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kBase) + "tc = 0.01\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kBase) + "mode = sideways\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kBase) + "test_seed = 42\n"), ConfigError);
}

TEST(RunConfig, CostRateOutOfRange) {
  std::string text = kBase;
  text.replace(text.find("tc = 0.02"), 9, "tc = 1.50");
  EXPECT_THROW(parse(text), ConfigError);
}

TEST(ParamsJson, RoundTrip) {
  const auto p = kaiming_init(5);
  const auto doc = params_to_json(p, 5, "abc");
  EXPECT_EQ(doc.at("layers").at("fc2").at("shape"), json({32, 64}));
  const auto q = params_from_json(json::parse(doc.dump()));
  EXPECT_EQ(p, q);
}

TEST(ParamsJson, RejectsWrongShape) {
  auto doc = params_to_json(kaiming_init(5), 5, "abc");
  doc["layers"]["fc3"]["bias"] = {1.0, 2.0};
  EXPECT_THROW(params_from_json(doc), std::runtime_error);
}

TEST(Csv, TablesHeaderAndRow) {
  std::ostringstream out;
  write_tables_csv(out, {TableRow{0.02, "test", StrategyKind::leland, 7.1, 0.98}});
  EXPECT_EQ(out.str(), "alpha,set,strategy,mean_pct,std_pct\n0.02,test,Leland,7.0999999999999996,0.97999999999999998\n");
}

TEST(ConfigHash, ChangesWithConfig) {
  ExperimentConfig a, b;
  b.steps = 90;
  EXPECT_EQ(config_hash(a), config_hash(a));
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}
