#pragma once

// Discounted terminal hedging cost Z_T of a short call hedged discretely
// under proportional transaction costs, with physical settlement at expiry.
//
// Z_T is a COST: positive values are money the hedger paid, and its mean over
// paths approximates the option premium for a good hedge.

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hedgebench/analytic.hpp"
#include "hedgebench/mlp.hpp"
#include "hedgebench/simulation.hpp"
#include "hedgebench/tape.hpp"

namespace hedgebench {

/// Network inputs at one rebalancing date.
struct HedgeState {
  double moneyness = 1.0;  // K / X_t
  double ttm = 0.0;        // T - t, years
  double prev_hedge = 0.0;
};

/// State -> number of shares to hold. Must be deterministic and thread-safe.
using Strategy = std::function<double(const HedgeState&)>;

template <class Num>
struct Ledger {
  Num total;
  /// Present value of all proportional costs paid (rebalances and settlement trades).
  double tc_paid = 0.0;
};

/// The hedging ledger for one t0-normalized path.
///
/// `policy(moneyness, ttm, prev)` returns the hedge at each of the dates
/// 0..n-1; the position before date 0 is `flat`. The hedge bought at
/// inception is charged at cost without fees, each later adjustment at date i
/// is discounted by e^{-r dt i} and pays tc per unit traded, and at date n
/// only settlement happens: out of the money the position is unwound, in the
/// money the strike is received and the holding is brought to one share.
///
/// Works for Num = double and Num = Scalar (tape); `flat` fixes the type.
template <class Num, class Policy>
Ledger<Num> hedge_ledger(std::span<const double> path, double dt, Policy&& policy, const OptionSpec& spec,
                         double r, const CostModel& cost, const Num& flat) {
  using std::abs;
  if (path.size() < 2) throw std::invalid_argument("compute_zt: path needs at least 2 points (n >= 1)");
  if (path[0] != 1.0) throw std::invalid_argument("compute_zt: path is not t0-normalized (path[0] != 1)");
  if (!(dt > 0.0)) throw std::invalid_argument("compute_zt: dt must be > 0");
  const std::size_t n = path.size() - 1;
  const double K = spec.strike_K;
  const double T = spec.maturity_T;
  const double tc = cost.tc_alpha;
  if (!(T - static_cast<double>(n - 1) * dt > 0.0))
    throw std::invalid_argument("compute_zt: last rebalance date falls at or after maturity");
  const double gamma = std::exp(-r * dt);

  Num delta = policy(K / path[0], T, flat);
  Num total = delta;
  double tc_paid = 0.0;
  double disc = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    disc *= gamma;
    const double x = path[i];
    Num next = policy(K / x, T - static_cast<double>(i) * dt, delta);
    Num trade = next - delta;
    total = total + disc * x * (trade + tc * abs(trade));
    tc_paid += disc * tc * std::abs(value_of(trade)) * x;
    delta = next;
  }
  disc *= gamma;
  const double xn = path[n];
  const double held = value_of(delta);
  if (xn < K) {
    total = total - (disc * (1.0 - tc) * xn) * relu(delta);
    total = total + (disc * (1.0 + tc) * xn) * relu(-delta);
    tc_paid += disc * tc * xn * std::abs(held);
  } else {
    total = total - disc * K;
    total = total + (disc * (1.0 + tc) * xn) * relu(1.0 - delta);
    total = total - (disc * (1.0 - tc) * xn) * relu(delta - 1.0);
    tc_paid += disc * tc * xn * std::abs(1.0 - held);
  }
  return {total, tc_paid};
}

inline Ledger<double> ledger_for(std::span<const double> path, double dt, const Strategy& strategy,
                                 const OptionSpec& spec, double r, const CostModel& cost) {
  auto policy = [&](double m, double ttm, double prev) { return strategy(HedgeState{m, ttm, prev}); };
  return hedge_ledger(path, dt, policy, spec, r, cost, 0.0);
}

/// Z_T of one path.
inline double compute_zt(std::span<const double> path, double dt, const Strategy& strategy,
                         const OptionSpec& spec, double r, const CostModel& cost) {
  return ledger_for(path, dt, strategy, spec, r, cost).total;
}

// ---------------------------------------------------------------------------
// Strategies

inline Strategy bs_strategy(double vol, const OptionSpec& spec, double r) {
  if (!(vol > 0.0)) throw std::invalid_argument("bs_strategy: vol must be > 0");
  return [vol, spec, r](const HedgeState& s) {
    return bs_delta(spec.strike_K / s.moneyness, spec, s.ttm, r, vol);
  };
}

inline Strategy leland_strategy(double sigma, double tc_alpha, double dt, const OptionSpec& spec, double r) {
  return bs_strategy(leland_vol(sigma, tc_alpha, dt), spec, r);
}

/// Raw network output, no clamping.
inline Strategy nn_strategy(MlpParams params) {
  if (params.fan_in(0) != 3) throw std::invalid_argument("nn_strategy: network must take 3 inputs");
  auto shared = std::make_shared<const MlpParams>(std::move(params));
  return [shared](const HedgeState& s) {
    return mlp_forward(*shared, std::array<double, 3>{s.moneyness, s.ttm, s.prev_hedge});
  };
}

inline Strategy constant_strategy(double hedge) {
  return [hedge](const HedgeState&) { return hedge; };
}

// ---------------------------------------------------------------------------
// Reports

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

/// Uniform bins over [min, max]; the last bin is closed.
inline Histogram make_histogram(std::span<const double> xs, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram: bins must be >= 1");
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  if (xs.empty()) {
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = static_cast<double>(b);
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) hi = lo + 1e-12 * std::max(1.0, std::abs(lo));
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges[bins] = hi;
  for (double x : xs) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

struct HedgeReport {
  std::vector<double> costs;
  std::vector<double> tc_costs;
  double mean = 0.0;
  double std = 0.0;
  Histogram histogram;
};

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample (n-1) standard deviation; 0 for fewer than two values.
inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Z_T of every row. Rows may be split across `jobs` threads; results are
/// stored by row index and reduced in row order, so the report does not
/// depend on the thread count.
inline HedgeReport evaluate(const PathSet& paths, const Strategy& strategy, const OptionSpec& spec, double r,
                            const CostModel& cost, std::size_t bins = 30, std::size_t jobs = 1) {
  if (!paths.t0_normalized()) throw std::invalid_argument("evaluate: paths must be t0-normalized");
  spec.validate();
  cost.validate();
  const std::size_t n = paths.n_paths();
  HedgeReport rep;
  rep.costs.assign(n, 0.0);
  rep.tc_costs.assign(n, 0.0);

  std::mutex err_mu;
  std::size_t err_row = n;
  std::string err_msg;
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const auto l = ledger_for(paths.row(i), paths.dt(), strategy, spec, r, cost);
        rep.costs[i] = l.total;
        rep.tc_costs[i] = l.tc_paid;
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (i < err_row) {
          err_row = i;
          err_msg = e.what();
        }
        return;
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (n + jobs - 1) / jobs;
    for (std::size_t j = 0; j < jobs; ++j) {
      const std::size_t b = j * chunk, e = std::min(n, b + chunk);
      if (b < e) threads.emplace_back(work, b, e);
    }
    for (auto& t : threads) t.join();
  }
  if (err_row < n) throw std::runtime_error("evaluate: row " + std::to_string(err_row) + ": " + err_msg);

  rep.mean = mean_of(rep.costs);
  rep.std = sample_std(rep.costs);
  rep.histogram = make_histogram(rep.costs, bins);
  return rep;
}

}  // namespace hedgebench
