#pragma once

// Variance profile R(r) = Var[M_r(Gamma)] of the critical total mass, its
// r-derivative, and the moment ladder m_k(r) = E[M_r(Gamma)^k].
//
// R is fixed by R(r+1) = psi_b(R(r)) together with
//   R(r) = kappa^2/(-r) + kappa^2 eta log(-r)/r^2 + O(log^2(-r)/|r|^3),  r -> -inf.
// We start far to the left and iterate forward. The start value is the inverse
// of a truncated Abel function Phi (Phi(psi(x)) = Phi(x) + 1), normalized so
// that Phi(R(r)) = r matches the expansion above with no constant/r^2 term.

#include <span>
#include <vector>

#include "dhl/seed_spec.hpp"

namespace dhl {

struct VarianceProfile {
  int b = 2;
  long double kappa_sq = 2.0L;  // 2/(b-1)
  long double eta = 1.0L;       // (b+1)/(3(b-1))
  int seed_depth = 512;         // initial m; doubled until stable
  long double tolerance = 1e-12L;
  int max_depth = 1 << 16;

  explicit VarianceProfile(int branching = 2);
};

// ((1+x)^b - 1)/b as the binomial polynomial sum_{k>=1} C(b,k) x^k / b.
long double psi(int b, long double x);

long double evaluate_R(const VarianceProfile& profile, long double r);
long double evaluate_R_prime(const VarianceProfile& profile, long double r);

struct RValue {
  long double R = 0.0L;
  long double R_prime = 0.0L;
  int depth = 0;  // m at which the doubling check passed
};
// Joint iteration (R, R') -> (psi(R), (1+R)^{b-1} R').
RValue evaluate_R_joint(const VarianceProfile& profile, long double r);

struct LogRValue {
  long double log_R = 0.0L;
  long double log_R_prime = 0.0L;
  int depth = 0;
};
// Same iteration carried in log space past the long double range (large r,
// where R itself overflows).
LogRValue evaluate_log_R(const VarianceProfile& profile, long double r);
// log psi_b(exp(log_x)) without forming psi_b.
long double log_psi(int b, long double log_x);

// Two-term expansion kappa^2/(-r) + kappa^2 eta log(-r)/r^2 (r < 0) and its
// r-derivative.
long double asymptotic_R(const VarianceProfile& profile, long double r);
long double asymptotic_R_prime(const VarianceProfile& profile, long double r);

inline constexpr int kMomentOrderBudget = 32;

// Pushes m_0..m_K at r to m_0..m_K at r+1. If X' = (1/b) sum_i prod_j X_ij with
// all X_ij iid copies of X, then Y_i = prod_j X_ij has E[Y_i^k] = m_k^b and
//   E[X'^k] = b^{-k} sum_{k_1+..+k_b=k} k!/(k_1!..k_b!) prod_i m_{k_i}^b
//           = b^{-k} k! [t^k] (sum_j m_j^b t^j / j!)^b,
// which is what gets evaluated (b-fold power of the exponential generating
// function instead of explicit compositions).
std::vector<long double> moment_recursion_step(int b, std::span<const long double> moments);

// Central moments E[(X-1)^k] from raw moments of a mean-one variable.
std::vector<long double> centered_from_raw(std::span<const long double> raw);

struct MomentTable {
  int b = 2;
  int k_max = 6;
  int depth = 24;  // iterations from the seed
  SeedKind seed = SeedKind::kTwoPoint;
  std::vector<long double> r_grid;
  std::vector<std::vector<long double>> raw;       // raw[i][k], k = 0..k_max
  std::vector<std::vector<long double>> centered;  // centered[i][k]; [2] is R
};

inline constexpr int kDefaultMomentDepth = 24;

// Seeds moments at r - depth from the given seed kind with variance
// R(r - depth) and iterates moment_recursion_step depth times.
MomentTable centered_moment_table(const VarianceProfile& profile, std::span<const long double> r_grid,
                                  int k_max = 6, SeedKind seed = SeedKind::kTwoPoint,
                                  int depth = kDefaultMomentDepth);

}  // namespace dhl
