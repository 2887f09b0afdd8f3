#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dhl/errors.hpp"
#include "dhl/rfunction.hpp"

using namespace dhl;

namespace {

double rel(long double a, long double b) { return static_cast<double>(std::fabs(a - b) / std::fabs(b)); }

// Least-squares slope of log|y| against log(-r).
double loglog_slope(const std::vector<long double>& r, const std::vector<long double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = std::log(static_cast<double>(-r[i]));
    const double v = std::log(std::fabs(static_cast<double>(y[i])));
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<long double> dyadic(int lo, int hi) {
  std::vector<long double> r;
  for (int k = lo; k <= hi; ++k) r.push_back(-std::ldexp(1.0L, k));
  return r;
}

}  // namespace

TEST(RFunction, ProfileConstants) {
  EXPECT_EQ(VarianceProfile(2).kappa_sq, 2.0L);
  EXPECT_EQ(VarianceProfile(3).kappa_sq, 1.0L);
  EXPECT_NEAR(static_cast<double>(VarianceProfile(3).eta), 4.0 / 6.0, 1e-15);
}

TEST(RFunction, Psi) {
  EXPECT_EQ(psi(2, 0.0L), 0.0L);
  EXPECT_NEAR(static_cast<double>(psi(2, 0.5L)), 0.625, 1e-15);
  EXPECT_NEAR(static_cast<double>(psi(3, 1e-9L)), 1e-9 + 1e-18, 1e-24);
  EXPECT_THROW(psi(2, -0.1L), DomainError);
}

// Reference values from tests/oracle/rfunction_oracle.py (50-digit mpmath).
TEST(RFunction, OracleValues) {
  const VarianceProfile b2(2), b3(3);
  EXPECT_LT(rel(evaluate_R(b2, -8), 0.32706003679918727801L), 1e-12);
  EXPECT_LT(rel(evaluate_R(b2, 0), 5.4119590955078238015L), 1e-12);
  EXPECT_LT(rel(evaluate_R(b2, 1), 20.056609721232754955L), 1e-12);
  EXPECT_LT(rel(evaluate_R(b2, 2), 221.19040647615687917L), 1e-12);
  EXPECT_LT(rel(evaluate_R(b3, -8), 0.14924053253104454439L), 1e-12);
  EXPECT_LT(rel(evaluate_R(b3, 0), 2.8293819940780805841L), 1e-12);
  EXPECT_LT(rel(evaluate_R(b3, 1), 18.384898328983564799L), 1e-12);
  EXPECT_LT(rel(evaluate_R(b3, 2), 2427.7820916546256765L), 1e-12);
  EXPECT_LT(rel(evaluate_R_prime(b2, 0), 5.3732624603141259931L), 1e-10);
}

TEST(RFunction, RecursionResiduals) {
  for (int b : {2, 3}) {
    const VarianceProfile profile(b);
    for (long double r = -8; r <= 8; r += 0.5L) {
      // log form: R(9) for b=3 is past the long double range
      const long double gap = log_psi(b, evaluate_log_R(profile, r).log_R) - evaluate_log_R(profile, r + 1).log_R;
      EXPECT_LT(std::fabs(std::expm1(gap)), 1e-10) << "b=" << b << " r=" << static_cast<double>(r);
    }
  }
}

TEST(RFunction, LogFormMatchesLinear) {
  const VarianceProfile profile(2);
  for (long double r : {-8.0L, 0.0L, 3.5L}) {
    EXPECT_LT(std::fabs(evaluate_log_R(profile, r).log_R - std::log(evaluate_R(profile, r))), 1e-12);
  }
  const VarianceProfile b3(3);
  EXPECT_THROW(evaluate_R(b3, 9.0L), OverflowError);
  EXPECT_TRUE(std::isfinite(evaluate_log_R(b3, 9.0L).log_R));
}

TEST(RFunction, MonotoneOnGrid) {
  const VarianceProfile profile(2);
  long double prev = 0.0L;
  for (long double r = -40; r <= 4; r += 0.25L) {
    const long double v = evaluate_R(profile, r);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(RFunction, DerivativeMatchesFiniteDifference) {
  const VarianceProfile profile(2);
  for (long double r : {-50.0L, -3.0L, 0.0L, 1.5L}) {
    const long double h = 1e-4L;
    const long double fd = (evaluate_R(profile, r + h) - evaluate_R(profile, r - h)) / (2 * h);
    EXPECT_LT(rel(evaluate_R_prime(profile, r), fd), 1e-7);
    const RValue joint = evaluate_R_joint(profile, r);
    EXPECT_EQ(joint.R, evaluate_R(profile, r));
  }
}

TEST(RFunction, AsymptoticSandwich) {
  const VarianceProfile profile(2);
  for (long double r : {-1e3L, -1e4L, -1e5L, -1e6L}) {
    const long double u = -r;
    const long double excess = std::fabs(evaluate_R(profile, r) * u / profile.kappa_sq - 1.0L);
    EXPECT_LE(excess, 1.1L * profile.eta * std::log(u) / u);
    EXPECT_LT(rel(evaluate_R(profile, r), asymptotic_R(profile, r)), 10 * std::pow(std::log(u), 2) / (u * u));
    EXPECT_LT(rel(evaluate_R_prime(profile, r), asymptotic_R_prime(profile, r)), 1e-3);
  }
}

TEST(RFunction, MomentStepExamples) {
  const std::vector<long double> ones{1, 1, 1, 1};
  const auto fixed = moment_recursion_step(2, ones);
  for (auto m : fixed) EXPECT_NEAR(static_cast<double>(m), 1.0, 1e-15);
  const std::vector<long double> m{1, 1, 1.5L};
  EXPECT_NEAR(static_cast<double>(moment_recursion_step(2, m)[2]), 1.625, 1e-15);
}

TEST(RFunction, MomentStepInvariants) {
  for (int b : {2, 3}) {
    for (long double v : {0.01L, 0.3L, 2.0L}) {
      std::vector<long double> m(7);
      for (int k = 0; k <= 6; ++k) m[k] = seed_raw_moment(SeedKind::kLognormal, v, k);
      const auto next = moment_recursion_step(b, m);
      EXPECT_NEAR(static_cast<double>(next[1]), 1.0, 1e-14);
      EXPECT_LT(rel(next[2] - 1, psi(b, m[2] - 1)), 1e-12);
    }
  }
  std::vector<long double> too_many(kMomentOrderBudget + 2, 1.0L);
  EXPECT_THROW(moment_recursion_step(2, too_many), UsageError);
}

TEST(RFunction, CenteredFromRaw) {
  // Two-point 1 +- 0.5: central moments 0, 0.25, 0, 0.0625
  std::vector<long double> raw(5);
  for (int k = 0; k <= 4; ++k) raw[k] = seed_raw_moment(SeedKind::kTwoPoint, 0.25L, k);
  const auto c = centered_from_raw(raw);
  EXPECT_NEAR(static_cast<double>(c[1]), 0.0, 1e-15);
  EXPECT_NEAR(static_cast<double>(c[2]), 0.25, 1e-15);
  EXPECT_NEAR(static_cast<double>(c[3]), 0.0, 1e-15);
  EXPECT_NEAR(static_cast<double>(c[4]), 0.0625, 1e-15);
}

TEST(RFunction, MomentTable) {
  const VarianceProfile profile(2);
  const long double grid[] = {-8.0L, 0.0L};
  const auto t = centered_moment_table(profile, grid, 4);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LT(rel(t.centered[i][2], evaluate_R(profile, grid[i])), 1e-9);
  // Oracle (explicit compositions, mpmath) for the two-point seed at depth 24.
  EXPECT_LT(rel(t.centered[0][3], 0.4669078046047384311L), 1e-9);
  EXPECT_LT(rel(t.centered[0][4], 2.184799286257317093L), 1e-9);
  EXPECT_LT(rel(t.centered[1][3], 115389.69535566564532L), 1e-9);
  EXPECT_LT(rel(t.centered[1][4], 6.2610747584800376941e+26L), 1e-8);
}

TEST(RFunction, MomentsIncreaseInR) {
  const VarianceProfile profile(2);
  std::vector<long double> grid;
  for (int r = -30; r <= 0; ++r) grid.push_back(r);
  const auto t = centered_moment_table(profile, grid, 6);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    for (int k = 2; k <= 6; ++k) EXPECT_GE(t.raw[i][k], t.raw[i - 1][k]);
  }
}

// Far window: slopes settle at -2 for both orders.
TEST(RFunction, CenteredMomentDecayFarWindow) {
  const VarianceProfile profile(2);
  const auto r = dyadic(8, 16);
  const auto t = centered_moment_table(profile, r, 4);
  std::vector<long double> c3, c4;
  for (std::size_t i = 0; i < r.size(); ++i) {
    c3.push_back(t.centered[i][3]);
    c4.push_back(t.centered[i][4]);
  }
  EXPECT_NEAR(loglog_slope(r, c4), -2.0, 0.15);
  EXPECT_NEAR(loglog_slope(r, c3), -2.0, 0.2);
}

// On [-2^10, -2^4] the fourth moment still carries its preasymptotic
// correction and the fitted slope is steeper than -2.
TEST(RFunction, CenteredMomentDecayNearWindow) {
  const VarianceProfile profile(2);
  const auto r = dyadic(4, 10);
  const auto t = centered_moment_table(profile, r, 4);
  std::vector<long double> c3, c4;
  for (std::size_t i = 0; i < r.size(); ++i) {
    c3.push_back(t.centered[i][3]);
    c4.push_back(t.centered[i][4]);
  }
  const double s4 = loglog_slope(r, c4);
  const double s3 = loglog_slope(r, c3);
  RecordProperty("slope_c4", std::to_string(s4));
  RecordProperty("slope_c3", std::to_string(s3));
  EXPECT_NEAR(s3, -2.0, 0.2);
  EXPECT_LT(s4, -2.0);
  EXPECT_GT(s4, -2.5);
}
