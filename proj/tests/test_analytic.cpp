#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hedgebench/analytic.hpp"
#include "hedgebench/hedging.hpp"
#include "hedgebench/simulation.hpp"

using namespace hedgebench;

namespace {

const OptionSpec kAtm{1.0, 0.25};

// Reference values from 50-digit mpmath evaluations of 1/2 erfc(-x / sqrt 2).
struct CdfPoint {
  double x;
  double cdf;
};
const CdfPoint kCdfTable[] = {
    {0.0, 0.5},
    {0.05, 0.519938805838372},
    {-0.05, 0.480061194161628},
    {-3.0, 0.00134989803163009},
    {-1.5, 0.0668072012688581},
    {-0.3, 0.382088577811047},
    {0.7, 0.758036347776927},
    {2.2, 0.986096552486501},
    {4.5, 0.999996602326875},
    {-8.0, 6.22096057427178e-16},
};

}  // namespace

TEST(NormCdf, MatchesHighPrecisionTable) {
  for (const auto& p : kCdfTable) EXPECT_NEAR(norm_cdf(p.x), p.cdf, 1e-14) << "x = " << p.x;
}

TEST(NormCdf, SymmetricAndMonotone) {
  double prev = 0.0;
  for (double x = -10.0; x <= 10.0; x += 0.01) {
    EXPECT_NEAR(norm_cdf(x) + norm_cdf(-x), 1.0, 1e-15);
    EXPECT_GE(norm_cdf(x), prev);
    prev = norm_cdf(x);
  }
}

TEST(BsPrice, AtTheMoneyReference) {
  EXPECT_NEAR(bs_price(1.0, kAtm, 0.25, 0.0, 0.2), 0.0398776116767449, 1e-13);
}

TEST(BsPrice, PayoffAtExpiry) {
  EXPECT_EQ(bs_price(2.0, kAtm, 0.0, 0.03, 0.5), 1.0);
  EXPECT_EQ(bs_price(0.5, kAtm, 0.0, 0.0, 0.2), 0.0);
}

TEST(BsPrice, RejectsBadInputs) {
  EXPECT_THROW(bs_price(0.0, kAtm, 0.25, 0.0, 0.2), std::invalid_argument);
  EXPECT_THROW(bs_price(1.0, kAtm, 0.25, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(bs_price(1.0, kAtm, -0.1, 0.0, 0.2), std::invalid_argument);
}

TEST(BsPrice, NoArbitrageBounds) {
  for (double spot : {0.5, 0.9, 1.0, 1.1, 2.0})
    for (double ttm : {0.01, 0.1, 0.25, 1.0})
      for (double r : {0.0, 0.05})
        for (double vol : {0.05, 0.1, 0.2, 0.4, 0.8}) {
          const double c = bs_price(spot, kAtm, ttm, r, vol);
          EXPECT_GE(c, std::max(spot - std::exp(-r * ttm), 0.0) - 1e-15);
          EXPECT_LE(c, spot);
        }
}

TEST(BsPrice, IncreasingInVol) {
  for (double spot : {0.9, 1.0, 1.1})
    for (double ttm : {0.1, 0.25, 1.0}) {
      double prev = 0.0;
      for (double vol : {0.05, 0.1, 0.2, 0.4, 0.8}) {
        const double c = bs_price(spot, kAtm, ttm, 0.0, vol);
        EXPECT_GT(c, prev);
        prev = c;
      }
    }
}

TEST(BsDelta, AtTheMoneyReference) {
  EXPECT_NEAR(bs_delta(1.0, kAtm, 0.25, 0.0, 0.2), 0.519938805838372, 1e-14);
}

TEST(BsDelta, Limits) {
  EXPECT_LT(bs_delta(0.01, kAtm, 0.25, 0.0, 0.2), 1e-6);
  EXPECT_GT(bs_delta(1.5, kAtm, 0.01, 0.0, 0.2), 0.9999);
  EXPECT_THROW(bs_delta(1.0, kAtm, 0.0, 0.0, 0.2), std::invalid_argument);
}

TEST(BsDelta, IsSpotDerivativeOfPrice) {
  for (double spot : {0.8, 0.95, 1.0, 1.07, 1.3}) {
    for (double ttm : {0.02, 0.25, 1.0}) {
      const double h = 1e-5 * spot;
      const double fd = (bs_price(spot + h, kAtm, ttm, 0.01, 0.25) - bs_price(spot - h, kAtm, ttm, 0.01, 0.25)) / (2 * h);
      const double d = bs_delta(spot, kAtm, ttm, 0.01, 0.25);
      EXPECT_LE(std::abs(fd - d), 1e-6 * std::abs(d)) << spot << " " << ttm;
    }
  }
}

TEST(BsGamma, AtTheMoneyReference) {
  EXPECT_NEAR(bs_gamma(1.0, kAtm, 0.25, 0.0, 0.2), 3.98443914094764, 1e-12);
  EXPECT_LT(bs_gamma(0.2, kAtm, 0.25, 0.0, 0.2), 1e-8);
}

TEST(BsGamma, IsSpotDerivativeOfDelta) {
  for (double spot : {0.8, 0.95, 1.0, 1.07, 1.3}) {
    for (double ttm : {0.02, 0.25, 1.0}) {
      const double h = 1e-5 * spot;
      const double fd = (bs_delta(spot + h, kAtm, ttm, 0.0, 0.2) - bs_delta(spot - h, kAtm, ttm, 0.0, 0.2)) / (2 * h);
      const double g = bs_gamma(spot, kAtm, ttm, 0.0, 0.2);
      if (g < 1e-8) continue;  // below finite-difference resolution
      EXPECT_LE(std::abs(fd - g), 1e-5 * g) << spot << " " << ttm;
    }
  }
}

TEST(BsGamma, SymmetricInLogMoneyness) {
  // With r = 0 and vol^2 ttm / 2 removed, d1 = +x and d1 = -x give equal phi(d1).
  const double vol = 0.2, ttm = 0.25;
  const double shift = 0.5 * vol * vol * ttm;
  for (double x : {0.1, 0.3, 0.7}) {
    const double up = std::exp(x * vol * std::sqrt(ttm) - shift);
    const double down = std::exp(-x * vol * std::sqrt(ttm) - shift);
    EXPECT_NEAR(bs_gamma(up, kAtm, ttm, 0.0, vol) * up, bs_gamma(down, kAtm, ttm, 0.0, vol) * down, 1e-12);
  }
}

TEST(LelandVol, ZeroCostIsSigma) { EXPECT_EQ(leland_vol(0.2, 0.0, 0.25 / 30), 0.2); }

TEST(LelandVol, ReferenceValues) {
  EXPECT_NEAR(leland_vol(0.2, 0.02, 0.25 / 30), 0.273791069574861, 1e-13);
  EXPECT_NEAR(leland_vol(0.2, 0.02, 0.25 / 90), 0.317104368510564, 1e-13);
  EXPECT_NEAR(bs_delta(1.0, kAtm, 0.25, 0.0, leland_vol(0.2, 0.02, 0.25 / 30)), 0.527285400959750, 1e-13);
  EXPECT_NEAR(bs_price(1.0, kAtm, 0.25, 0.0, leland_vol(0.2, 0.02, 0.25 / 30)), 0.0545708019194996, 1e-13);
}

TEST(LelandVol, MonotoneInCostAndStep) {
  double prev = 0.0;
  for (double a : {0.0, 0.001, 0.005, 0.01, 0.02, 0.05}) {
    const double v = leland_vol(0.2, a, 0.01);
    EXPECT_GT(v, prev);
    prev = v;
  }
  prev = 1e9;
  for (double dt : {1e-4, 1e-3, 0.01, 0.1}) {
    EXPECT_LT(leland_vol(0.2, 0.01, dt), prev);
    prev = leland_vol(0.2, 0.01, dt);
  }
  EXPECT_THROW(leland_vol(0.2, 0.01, 0.0), std::invalid_argument);
}

TEST(LelandPnlApprox, ConstantDeepOutOfTheMoneyPath) {
  const std::vector<double> path(31, 1.0);
  const OptionSpec far{2.0, 0.25};
  const double c0 = bs_price(1.0, far, 0.25, 0.0, 0.2);
  EXPECT_NEAR(leland_pnl_approx(path, 0.25 / 30, far, 0.0, 0.2), -c0, 1e-6);
}

TEST(LelandPnlApprox, LargeNuMakesGammaSumPositive) {
  const std::vector<double> path{1.0, 1.01, 0.995, 1.0, 1.02};
  const double nu = 3.0;
  const double c0 = bs_price(1.0, kAtm, 0.25, 0.0, nu);
  EXPECT_GT(leland_pnl_approx(path, 0.25 / 4, kAtm, 0.0, nu), -c0);
}

TEST(LelandPnlApprox, RejectsNonUniformGrid) {
  const std::vector<double> prices{1.0, 1.01, 1.02};
  const std::vector<double> times{0.0, 0.01, 0.03};
  EXPECT_THROW(leland_pnl_approx(prices, times, kAtm, 0.0, 0.2), std::invalid_argument);
}

TEST(LelandPnlApprox, TracksExactWealthOnThirtySteps) {
  MarketParams m;
  auto paths = simulate_gbm(m, 30, 200, RngSeed{7});
  const auto hedge = bs_strategy(0.2, kAtm, 0.0);
  for (std::size_t i = 0; i < paths.n_paths(); ++i) {
    const double approx = leland_pnl_approx(paths.row(i), paths.dt(), kAtm, 0.0, 0.2);
    const double exact = -compute_zt(paths.row(i), paths.dt(), hedge, kAtm, 0.0, CostModel{});
    EXPECT_LT(std::abs(approx - exact), 0.02) << "row " << i;
  }
}

TEST(LelandPnlApprox, SpreadShrinksWithFinerGrid) {
  MarketParams m;
  m.mu = 0.0;
  std::vector<double> spread;
  for (std::size_t n : {30, 120, 480}) {
    auto paths = simulate_gbm(m, n, 400, RngSeed{11});
    std::vector<double> w;
    for (std::size_t i = 0; i < paths.n_paths(); ++i)
      w.push_back(leland_pnl_approx(paths.row(i), paths.dt(), kAtm, 0.0, 0.2));
    spread.push_back(sample_std(w));
  }
  EXPECT_GT(spread[0], spread[1]);
  EXPECT_GT(spread[1], spread[2]);
}
