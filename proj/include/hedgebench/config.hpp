#pragma once

// Flat `key = value` run configuration. Lines starting with '#' and trailing
// `# ...` comments are ignored; unknown keys are errors.
//
//   S0 = 1          # Initial stock price
//   mu = 0.05
//   sigma = 0.2
//   T = 0.25
//   steps = 30
//   num_paths = 256
//   seed_value = 42
//   tc = 0.02
//   r = 0

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hedgebench/experiments.hpp"
#include "hedgebench/format.hpp"

namespace hedgebench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ExperimentConfig experiment;
  double tc = 0.0;
  std::string out;
  std::size_t jobs = 1;
  // Divergence study.
  std::optional<double> nu;
  std::vector<std::size_t> n_list{30, 120, 480};
  std::vector<double> diverge_alphas{0.01};
  std::size_t diverge_paths = 2000;
  // Seeds not given explicitly are derived from seed_value at resolve().
  std::optional<std::uint64_t> test_seed;
  std::optional<std::uint64_t> init_seed;

  double fixed_nu() const { return nu.value_or(experiment.market.sigma); }

  /// Fills derived seeds and validates.
  void resolve() {
    experiment.test_seed = test_seed.value_or(experiment.train_seed + 1);
    experiment.init_seed = init_seed.value_or(experiment.train_seed);
    try {
      experiment.validate();
      CostModel{tc}.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (jobs == 0) throw ConfigError("config: jobs must be >= 1");
  }
};

namespace detail {

inline const std::set<std::string>& required_keys() {
  static const std::set<std::string> keys{"S0", "mu", "sigma", "T", "steps", "num_paths", "seed_value", "tc", "r"};
  return keys;
}

inline const std::set<std::string>& optional_keys() {
  static const std::set<std::string> keys{
      "strike", "alphas",     "test_seed", "init_seed", "epochs",    "batch_size",    "lr",
      "mode",   "source",     "csv_file",  "csv_column", "bins",     "out",           "jobs",
      "nu",     "n_list",     "diverge_alphas", "diverge_paths"};
  return keys;
}

inline double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  if (!parse_double(v, x)) throw ConfigError("config: key '" + key + "': '" + v + "' is not a number");
  return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("config: key '" + key + "': '" + v + "' is not a non-negative integer");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "': '" + v + "' is out of range");
  }
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// Parses the key/value text. Later duplicates are errors.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw ConfigError("config: line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return kv;
}

inline RunConfig run_config_from(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv)
    if (!detail::required_keys().count(k) && !detail::optional_keys().count(k))
      throw ConfigError("config: unknown key '" + k + "'");
  for (const auto& k : detail::required_keys())
    if (!kv.count(k)) throw ConfigError("config: missing required key '" + k + "'");

  using detail::to_real;
  using detail::to_uint;
  RunConfig rc;
  auto& e = rc.experiment;
  e.market.s0 = to_real("S0", kv.at("S0"));
  e.market.mu = to_real("mu", kv.at("mu"));
  e.market.sigma = to_real("sigma", kv.at("sigma"));
  e.market.maturity_T = to_real("T", kv.at("T"));
  e.market.r = to_real("r", kv.at("r"));
  e.steps = to_uint("steps", kv.at("steps"));
  e.n_paths = to_uint("num_paths", kv.at("num_paths"));
  e.train_seed = to_uint("seed_value", kv.at("seed_value"));
  rc.tc = to_real("tc", kv.at("tc"));

  auto get = [&](const char* key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("strike")) e.strike = to_real("strike", *v);
  if (auto v = get("alphas")) {
    e.alphas.clear();
    for (const auto& a : detail::split_list(*v)) e.alphas.push_back(to_real("alphas", a));
  }
  if (auto v = get("test_seed")) rc.test_seed = to_uint("test_seed", *v);
  if (auto v = get("init_seed")) rc.init_seed = to_uint("init_seed", *v);
  if (auto v = get("epochs")) e.epochs = to_uint("epochs", *v);
  if (auto v = get("batch_size")) e.batch_size = to_uint("batch_size", *v);
  if (auto v = get("lr")) e.lr = to_real("lr", *v);
  if (auto v = get("mode")) {
    if (*v == "independent") e.mode = SampleMode::independent;
    else if (*v == "overlapping") e.mode = SampleMode::overlapping;
    else throw ConfigError("config: mode must be 'independent' or 'overlapping', got '" + *v + "'");
  }
  if (auto v = get("source")) {
    if (*v == "simulated") e.source = DataSource::simulated;
    else if (*v == "csv") e.source = DataSource::csv;
    else throw ConfigError("config: source must be 'simulated' or 'csv', got '" + *v + "'");
  }
  if (auto v = get("csv_file")) e.csv_file = *v;
  if (auto v = get("csv_column")) e.csv_column = *v;
  if (auto v = get("bins")) e.bins = to_uint("bins", *v);
  if (auto v = get("out")) rc.out = *v;
  if (auto v = get("jobs")) rc.jobs = to_uint("jobs", *v);
  if (auto v = get("nu")) rc.nu = to_real("nu", *v);
  if (auto v = get("n_list")) {
    rc.n_list.clear();
    for (const auto& a : detail::split_list(*v)) rc.n_list.push_back(to_uint("n_list", a));
  }
  if (auto v = get("diverge_alphas")) {
    rc.diverge_alphas.clear();
    for (const auto& a : detail::split_list(*v)) rc.diverge_alphas.push_back(to_real("diverge_alphas", a));
  }
  if (auto v = get("diverge_paths")) rc.diverge_paths = to_uint("diverge_paths", *v);
  if (e.bins == 0) throw ConfigError("config: bins must be >= 1");
  return rc;
}

inline RunConfig parse_run_config(std::istream& in) { return run_config_from(parse_key_values(in)); }

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_run_config(in);
}

}  // namespace hedgebench
