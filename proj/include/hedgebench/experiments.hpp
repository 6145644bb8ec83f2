#pragma once

// Table regeneration (BS / NN / Leland on train and test sets per cost rate),
// the fixed-volatility transaction-cost divergence study, the discrete-hedging
// approximation check, and the delta-surface comparison.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hedgebench/analytic.hpp"
#include "hedgebench/hedging.hpp"
#include "hedgebench/random.hpp"
#include "hedgebench/simulation.hpp"
#include "hedgebench/training.hpp"

namespace hedgebench {

enum class SampleMode { independent, overlapping };
enum class DataSource { simulated, csv };

inline const char* to_string(SampleMode m) { return m == SampleMode::independent ? "independent" : "overlapping"; }
inline const char* to_string(DataSource s) { return s == DataSource::simulated ? "simulated" : "csv"; }

struct ExperimentConfig {
  MarketParams market;
  double strike = 1.0;
  std::size_t steps = 30;
  std::size_t n_paths = 256;
  std::vector<double> alphas{0.0, 0.002, 0.005, 0.01, 0.02};
  std::uint64_t train_seed = 42;
  std::uint64_t test_seed = 4242;
  std::uint64_t init_seed = 42;
  std::size_t epochs = 500;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  SampleMode mode = SampleMode::independent;
  DataSource source = DataSource::simulated;
  std::string csv_file;
  std::string csv_column = "close";
  std::size_t bins = 30;

  OptionSpec option() const { return {strike, market.maturity_T}; }
  double dt() const { return market.maturity_T / static_cast<double>(steps); }

  void validate() const {
    market.validate();
    option().validate();
    if (steps < 2) throw std::invalid_argument("config: steps must be >= 2");
    if (n_paths < 2) throw std::invalid_argument("config: num_paths must be >= 2");
    if (alphas.empty()) throw std::invalid_argument("config: alphas must not be empty");
    for (double a : alphas) CostModel{a}.validate();
    if (train_seed == test_seed)
      throw std::invalid_argument("config: train and test seeds must differ (both " + std::to_string(train_seed) + ")");
    if (source == DataSource::csv && mode != SampleMode::overlapping)
      throw std::invalid_argument("config: a csv source requires mode = overlapping");
    if (source == DataSource::csv && csv_file.empty())
      throw std::invalid_argument("config: csv source needs csv_file");
  }
};

enum class StrategyKind { bs, nn, leland };
inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::bs: return "BS";
    case StrategyKind::nn: return "NN";
    case StrategyKind::leland: return "Leland";
  }
  return "?";
}

struct TableRow {
  double alpha = 0.0;
  std::string set;  // "train" | "test"
  StrategyKind strategy = StrategyKind::bs;
  double mean = 0.0;  // percent
  double std = 0.0;   // percent
};

struct Datasets {
  PathSet train;
  PathSet test;
  std::optional<VolStats> train_vols;
  std::optional<VolStats> test_vols;
};

/// Source series for overlapping windows: one simulated path of
/// steps + n_paths - 1 steps, or the configured CSV column.
inline std::vector<double> overlapping_source(const ExperimentConfig& c) {
  if (c.source == DataSource::csv) return ingest_csv(c.csv_file, c.csv_column);
  const std::size_t series_steps = c.steps + c.n_paths - 1;
  MarketParams long_run = c.market;
  long_run.maturity_T = c.dt() * static_cast<double>(series_steps);
  auto one = simulate_gbm(long_run, series_steps, 1, RngSeed{c.train_seed});
  auto r = one.row(0);
  return {r.begin(), r.end()};
}

/// Train and test sets, both t0-normalized. The test set is always an
/// independent simulation from `test_seed`.
inline Datasets build_datasets(const ExperimentConfig& c) {
  c.validate();
  Datasets d;
  if (c.mode == SampleMode::independent) {
    d.train = simulate_gbm(c.market, c.steps, c.n_paths, RngSeed{c.train_seed});
    d.train.normalize();
  } else {
    const auto series = overlapping_source(c);
    d.train = overlapping_paths(series, c.steps, c.n_paths, c.dt());
  }
  d.test = simulate_gbm(c.market, c.steps, c.n_paths, RngSeed{c.test_seed});
  d.test.normalize();
  if (c.steps >= 2) {
    d.train_vols = vol_stats(d.train);
    d.test_vols = vol_stats(d.test);
  }
  return d;
}

/// Everything produced for one cost rate.
struct CellResult {
  double alpha = 0.0;
  std::vector<TableRow> rows;
  // reports[set][strategy], set 0 = train, 1 = test; strategy in StrategyKind order.
  HedgeReport reports[2][3];
  TrainResult trained;
};

inline TrainConfig train_config_for(const ExperimentConfig& c, double alpha) {
  TrainConfig t;
  t.batch_size = c.batch_size;
  t.epochs = c.epochs;
  t.seed = c.init_seed;
  t.options = {c.option()};
  t.cost = CostModel{alpha};
  t.r = c.market.r;
  t.lr = c.lr;
  return t;
}

inline CellResult run_cell(const ExperimentConfig& c, const Datasets& data, double alpha,
                           std::size_t eval_jobs = 1) {
  const OptionSpec spec = c.option();
  const CostModel cost{alpha};
  const double r = c.market.r;
  CellResult cell;
  cell.alpha = alpha;
  cell.trained = train(train_config_for(c, alpha), data.train);
  const Strategy strategies[3] = {
      bs_strategy(c.market.sigma, spec, r),
      nn_strategy(cell.trained.params),
      leland_strategy(c.market.sigma, alpha, c.dt(), spec, r),
  };
  const PathSet* sets[2] = {&data.train, &data.test};
  const char* names[2] = {"train", "test"};
  for (int s = 0; s < 2; ++s) {
    for (int k = 0; k < 3; ++k) {
      cell.reports[s][k] = evaluate(*sets[s], strategies[k], spec, r, cost, c.bins, eval_jobs);
      cell.rows.push_back({alpha, names[s], static_cast<StrategyKind>(k), 100.0 * cell.reports[s][k].mean,
                           100.0 * cell.reports[s][k].std});
    }
  }
  return cell;
}

struct TablesResult {
  Datasets data;
  std::vector<CellResult> cells;  // in alpha order

  std::vector<TableRow> rows() const {
    std::vector<TableRow> out;
    for (const auto& c : cells) out.insert(out.end(), c.rows.begin(), c.rows.end());
    return out;
  }
};

/// One cell per alpha. With jobs > 1 cells run on separate threads; each cell
/// is deterministic and results are kept in alpha order.
inline TablesResult run_tables(const ExperimentConfig& c, std::size_t jobs = 1) {
  TablesResult res;
  res.data = build_datasets(c);
  res.cells.resize(c.alphas.size());
  jobs = std::clamp<std::size_t>(jobs, 1, c.alphas.size());
  if (jobs == 1) {
    for (std::size_t i = 0; i < c.alphas.size(); ++i) res.cells[i] = run_cell(c, res.data, c.alphas[i]);
    return res;
  }
  std::vector<std::exception_ptr> errors(c.alphas.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= c.alphas.size()) return;
        i = next++;
      }
      try {
        res.cells[i] = run_cell(c, res.data, c.alphas[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return res;
}

/// Table regeneration with the train set cut from one long series.
inline TablesResult run_overlapping(ExperimentConfig c, std::size_t jobs = 1) {
  c.mode = SampleMode::overlapping;
  return run_tables(c, jobs);
}

// ---------------------------------------------------------------------------
// Divergence of transaction costs for a fixed hedging volatility

struct DivergenceRow {
  double alpha = 0.0;
  std::size_t n = 0;
  double mean_tc = 0.0;    // mean PV of proportional costs paid
  double se_tc = 0.0;      // standard error of that mean
  double ratio = 0.0;      // mean_tc / mean_tc at the smallest n (0 if that is 0)
  double mean_cost = 0.0;  // mean Z_T
};

/// For each n, fresh paths (seed substream n) hedged with Black-Scholes deltas
/// at the fixed volatility `nu_fixed`.
inline std::vector<DivergenceRow> divergence_study(const MarketParams& market, double nu_fixed,
                                                   const std::vector<double>& alphas,
                                                   const std::vector<std::size_t>& n_list, std::size_t n_paths,
                                                   std::uint64_t seed, double strike = 1.0, std::size_t jobs = 1) {
  if (n_list.empty()) throw std::invalid_argument("divergence_study: empty n list");
  const OptionSpec spec{strike, market.maturity_T};
  std::vector<std::size_t> ns = n_list;
  std::sort(ns.begin(), ns.end());
  std::vector<DivergenceRow> rows;
  for (double alpha : alphas) {
    double base = 0.0;
    for (std::size_t k = 0; k < ns.size(); ++k) {
      auto paths = simulate_gbm(market, ns[k], n_paths, RngSeed{substream_seed(seed, ns[k])});
      paths.normalize();
      const auto rep = evaluate(paths, bs_strategy(nu_fixed, spec, market.r), spec, market.r, CostModel{alpha}, 30, jobs);
      DivergenceRow row;
      row.alpha = alpha;
      row.n = ns[k];
      row.mean_tc = mean_of(rep.tc_costs);
      row.se_tc = sample_std(rep.tc_costs) / std::sqrt(static_cast<double>(n_paths));
      row.mean_cost = rep.mean;
      if (k == 0) base = row.mean_tc;
      row.ratio = base > 0.0 ? row.mean_tc / base : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Discrete-hedging approximation check (no transaction costs)

struct ApproxRow {
  std::size_t n = 0;
  double mean_abs_residual = 0.0;
  double se = 0.0;
  double shrink = 0.0;  // previous row's mean / this mean (0 for the first row)
};

/// Residual per path: approximate wealth minus exact wealth (-Z_T) of a
/// nu-delta hedge at zero cost.
inline std::vector<double> approx_residuals(const PathSet& paths, const OptionSpec& spec, double r, double nu) {
  if (!paths.t0_normalized()) throw std::invalid_argument("approx_residuals: paths must be t0-normalized");
  const Strategy hedge = bs_strategy(nu, spec, r);
  std::vector<double> out(paths.n_paths());
  for (std::size_t i = 0; i < paths.n_paths(); ++i) {
    const auto row = paths.row(i);
    const double approx = leland_pnl_approx(row, paths.dt(), spec, r, nu);
    const double exact = -compute_zt(row, paths.dt(), hedge, spec, r, CostModel{0.0});
    out[i] = approx - exact;
  }
  return out;
}

inline std::vector<ApproxRow> leland_approx_check(const MarketParams& market, double nu,
                                                  const std::vector<std::size_t>& n_list, std::size_t n_paths,
                                                  std::uint64_t seed, double strike = 1.0) {
  const OptionSpec spec{strike, market.maturity_T};
  std::vector<ApproxRow> rows;
  for (std::size_t n : n_list) {
    auto paths = simulate_gbm(market, n, n_paths, RngSeed{substream_seed(seed, n)});
    paths.normalize();
    auto res = approx_residuals(paths, spec, market.r, nu);
    for (double& x : res) x = std::abs(x);
    ApproxRow row;
    row.n = n;
    row.mean_abs_residual = mean_of(res);
    row.se = sample_std(res) / std::sqrt(static_cast<double>(n_paths));
    row.shrink = rows.empty() ? 0.0 : rows.back().mean_abs_residual / row.mean_abs_residual;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Delta surface

struct SurfacePoint {
  std::size_t path = 0;
  std::size_t step = 0;
  double moneyness = 0.0;
  double ttm = 0.0;
  double prev_hedge = 0.0;
  double bs_delta = 0.0;
  double nn_delta = 0.0;
  double difference() const { return nn_delta - bs_delta; }
};

/// Every hedging point visited by the network's own trajectory (its previous
/// hedge feeds back), with the Black-Scholes delta at the same point.
inline std::vector<SurfacePoint> delta_surface_dump(const MlpParams& trained, const PathSet& paths,
                                                    const OptionSpec& spec, double sigma, double r) {
  if (!paths.t0_normalized()) throw std::invalid_argument("delta_surface_dump: paths must be t0-normalized");
  std::vector<SurfacePoint> out;
  out.reserve(paths.n_paths() * paths.n_steps());
  for (std::size_t i = 0; i < paths.n_paths(); ++i) {
    const auto row = paths.row(i);
    double prev = 0.0;
    for (std::size_t j = 0; j < paths.n_steps(); ++j) {
      SurfacePoint p;
      p.path = i;
      p.step = j;
      p.moneyness = spec.strike_K / row[j];
      p.ttm = spec.maturity_T - static_cast<double>(j) * paths.dt();
      p.prev_hedge = prev;
      p.bs_delta = bs_delta(row[j], spec, p.ttm, r, sigma);
      p.nn_delta = mlp_forward(trained, std::array<double, 3>{p.moneyness, p.ttm, prev});
      prev = p.nn_delta;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace hedgebench
