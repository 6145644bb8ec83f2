#pragma once

// Randomized small hedging problems on which the taped gradient of the
// batch-std loss is compared with central differences of the oracle loss.
// Perturbations that change any branch decision (relu sign, trade sign,
// exercise) are skipped.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hedgebench/random.hpp"
#include "hedgebench/simulation.hpp"
#include "hedgebench/training.hpp"
#include "support/oracles.hpp"

namespace oracle {

struct GradientSuiteResult {
  std::size_t problems = 0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
  double max_rel_error = 0.0;
  std::string worst;
};

inline GradientSuiteResult gradient_suite(std::size_t n_problems = 24, double h = 1e-6) {
  using namespace hedgebench;
  GradientSuiteResult res;
  for (std::size_t prob = 0; prob < n_problems; ++prob) {
    NormalStream rng(substream_seed(20240501, prob));
    const std::size_t hidden1 = 2 + rng.below(4);
    std::vector<std::size_t> widths{3, hidden1};
    if (rng.below(2) == 1) widths.push_back(2 + rng.below(3));
    widths.push_back(1);
    MlpParams params = kaiming_init(rng.below(1u << 30), widths);
    // Lift the output so hedges are not all near zero.
    params.bias(params.n_layers() - 1)[0] += 0.4 * rng.uniform();

    MarketParams market;
    market.sigma = 0.1 + 0.3 * rng.uniform();
    const std::size_t steps = 2 + rng.below(4);
    const std::size_t n_paths = 3 + rng.below(3);
    auto paths = simulate_gbm(market, steps, n_paths, RngSeed{rng.below(1u << 30)});
    const double strike = 0.95 + 0.1 * rng.uniform();
    const double tc = std::vector<double>{0.0, 0.01, 0.05}[rng.below(3)];
    const double r = 0.05 * rng.uniform();

    std::vector<std::size_t> rows(n_paths);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const std::vector<OptionSpec> options{{strike, market.maturity_T}};
    const auto taped = batch_loss_and_grad(params, paths, rows, options, r, CostModel{tc});

    std::vector<std::vector<double>> raw;
    for (std::size_t i = 0; i < n_paths; ++i) raw.emplace_back(paths.row(i).begin(), paths.row(i).end());
    auto loss = [&](const MlpParams& p, Trace* t) {
      return network_loss(p, raw, paths.dt(), strike, market.maturity_T, r, tc, t);
    };
    Trace base;
    loss(params, &base);
    ++res.problems;
    for (std::size_t k = 0; k < params.size(); ++k) {
      MlpParams up = params, down = params;
      up.values()[k] += h;
      down.values()[k] -= h;
      Trace tu, td;
      const double fu = loss(up, &tu), fd_ = loss(down, &td);
      if (tu != base || td != base) {
        ++res.skipped;
        continue;
      }
      const double fd = (fu - fd_) / (2 * h);
      const double ad = taped.grad[k];
      const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-6});
      ++res.compared;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = "problem " + std::to_string(prob) + " param " + std::to_string(k) + " ad=" + std::to_string(ad) +
                    " fd=" + std::to_string(fd);
      }
    }
  }
  return res;
}

}  // namespace oracle
