#pragma once

// Closed-form Black-Scholes quantities for a European call, the Leland
// volatility adjustment for proportional transaction costs, and the
// leading-order wealth of a discretely rebalanced delta hedge.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hedgebench {

struct MarketParams {
  double s0 = 1.0;
  double mu = 0.05;
  double sigma = 0.2;
  double r = 0.0;
  double maturity_T = 0.25;

  void validate() const {
    if (!(s0 > 0.0)) throw std::invalid_argument("MarketParams: s0 must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("MarketParams: sigma must be >= 0");
    if (!(maturity_T > 0.0)) throw std::invalid_argument("MarketParams: maturity_T must be > 0");
  }
};

/// Call option on a t0-normalized underlying: strike is expressed as moneyness.
struct OptionSpec {
  double strike_K = 1.0;
  double maturity_T = 0.25;

  void validate() const {
    if (!(strike_K > 0.0)) throw std::invalid_argument("OptionSpec: strike_K must be > 0");
    if (!(maturity_T > 0.0)) throw std::invalid_argument("OptionSpec: maturity_T must be > 0");
  }
};

struct CostModel {
  double tc_alpha = 0.0;

  void validate() const {
    if (!(tc_alpha >= 0.0 && tc_alpha < 1.0))
      throw std::invalid_argument("CostModel: tc_alpha must lie in [0, 1)");
  }
};

/// Standard normal CDF through the C library's erfc. glibc's erfc is accurate
/// to a few ulp, so the absolute error stays far below 1e-12 on the whole line.
inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double norm_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

namespace detail {

inline void check_spot_vol(double spot, double vol) {
  if (!(spot > 0.0)) throw std::invalid_argument("spot must be > 0, got " + std::to_string(spot));
  if (!(vol > 0.0)) throw std::invalid_argument("vol must be > 0, got " + std::to_string(vol));
}

inline double d1(double spot, double strike, double ttm, double r, double vol) {
  return (std::log(spot / strike) + (r + 0.5 * vol * vol) * ttm) / (vol * std::sqrt(ttm));
}

}  // namespace detail

/// Call price at time-to-maturity `ttm`. At ttm == 0 this is the payoff.
inline double bs_price(double spot, const OptionSpec& spec, double ttm, double r, double vol) {
  detail::check_spot_vol(spot, vol);
  if (ttm < 0.0) throw std::invalid_argument("bs_price: ttm must be >= 0");
  const double K = spec.strike_K;
  if (ttm == 0.0) return std::max(spot - K, 0.0);
  const double d1 = detail::d1(spot, K, ttm, r, vol);
  const double d2 = d1 - vol * std::sqrt(ttm);
  return spot * norm_cdf(d1) - K * std::exp(-r * ttm) * norm_cdf(d2);
}

/// Delta is undefined at expiry; settlement is the hedging engine's job.
inline double bs_delta(double spot, const OptionSpec& spec, double ttm, double r, double vol) {
  detail::check_spot_vol(spot, vol);
  if (!(ttm > 0.0)) throw std::invalid_argument("bs_delta: ttm must be > 0");
  return norm_cdf(detail::d1(spot, spec.strike_K, ttm, r, vol));
}

inline double bs_gamma(double spot, const OptionSpec& spec, double ttm, double r, double vol) {
  detail::check_spot_vol(spot, vol);
  if (!(ttm > 0.0)) throw std::invalid_argument("bs_gamma: ttm must be > 0");
  const double d1 = detail::d1(spot, spec.strike_K, ttm, r, vol);
  return norm_pdf(d1) / (spot * vol * std::sqrt(ttm));
}

/// Leland's adjusted volatility: nu*^2 = sigma^2 + alpha * sigma * sqrt(2 / (pi * dt)).
inline double leland_vol(double sigma, double tc_alpha, double dt) {
  if (!(sigma > 0.0)) throw std::invalid_argument("leland_vol: sigma must be > 0");
  if (!(tc_alpha >= 0.0)) throw std::invalid_argument("leland_vol: tc_alpha must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("leland_vol: dt must be > 0");
  return std::sqrt(sigma * sigma + tc_alpha * sigma * std::sqrt(2.0 / (std::numbers::pi * dt)));
}

/// Leading-order trader wealth of a nu-delta hedge along one path, premium
/// excluded: 1/2 sum_i e^{-r t_{i+1}} Gamma_nu(X_i, t_i) X_i^2 [nu^2 dt - R_i^2] - C_0^nu,
/// with R_i the simple return over step i. This is WEALTH; the hedging engine
/// reports COST, which is its negative up to O(sqrt(dt)).
///
/// `times` must be a uniform grid starting at 0 with the same length as `prices`.
inline double leland_pnl_approx(std::span<const double> prices, std::span<const double> times,
                                const OptionSpec& spec, double r, double nu) {
  if (prices.size() < 2) throw std::invalid_argument("leland_pnl_approx: need at least 2 prices");
  if (times.size() != prices.size())
    throw std::invalid_argument("leland_pnl_approx: times and prices differ in length");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw std::invalid_argument("leland_pnl_approx: grid must be increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * dt)
      throw std::invalid_argument("leland_pnl_approx: non-uniform grid at index " + std::to_string(i));
  }
  const std::size_t n = prices.size() - 1;
  const double T = spec.maturity_T;
  double gamma_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = prices[i];
    const double ttm = T - times[i];
    const double ret = (prices[i + 1] - x) / x;
    const double g = bs_gamma(x, spec, ttm, r, nu);
    gamma_sum += std::exp(-r * times[i + 1]) * g * x * x * (nu * nu * dt - ret * ret);
  }
  return 0.5 * gamma_sum - bs_price(prices[0], spec, T - times[0], r, nu);
}

inline double leland_pnl_approx(std::span<const double> prices, double dt, const OptionSpec& spec,
                                double r, double nu) {
  std::vector<double> times(prices.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i) * dt;
  return leland_pnl_approx(prices, times, spec, r, nu);
}

}  // namespace hedgebench
