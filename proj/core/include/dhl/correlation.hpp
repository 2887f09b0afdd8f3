#pragma once

// Discrete correlation measure on cylinder pairs,
//   upsilon_r(p x q) = (1 + R(r-n))^{N_n(p,q)} / |Gamma_n|^2,
// evaluated through exact histograms of N_n instead of pair enumeration.

#include <gmpxx.h>

#include <vector>

#include "dhl/lattice.hpp"
#include "dhl/rfunction.hpp"

namespace dhl {

struct PairCountHistogram {
  LatticeParams params;
  int generation = 0;
  // counts[k] = #{(p,q) in Gamma_n^2 : N_n(p,q) = k}, k = 0..b^n.
  std::vector<mpz_class> counts;

  mpz_class total() const;
  // sum_k k^j counts[k]
  mpz_class power_sum(int j) const;
};

// h_0 = {1: 1}; h_{n+1} = b (h_n)^{*b} + b(b-1) |Gamma_n|^{2b} [N = 0].
PairCountHistogram pair_count_histogram(const LatticeParams& params, int generation);

// counts[k] = #{q : N_n(p,q) = k} for the fixed path p. Follows p's own
// sub-paths: g_p = (g_{p_1} * ... * g_{p_s}) + (b-1)|Gamma_{n-1}|^s [N = 0].
std::vector<mpz_class> conditional_histogram(const CylinderPath& p);

// Brute force over Gamma_n^2 (tests and small-n audits).
PairCountHistogram enumerate_pair_counts(const LatticeParams& params, int generation);

struct CorrelationTable {
  PairCountHistogram histogram;
  long double r = 0.0L;
  long double R_r = 0.0L;        // R(r)
  long double R_shifted = 0.0L;  // R(r - n)
  long double log_paths = 0.0L;  // log |Gamma_n|

  int generation() const { return histogram.generation; }
  // log w(k) = k log(1 + R(r-n)) - 2 log |Gamma_n|
  long double weight_log(int k) const;
  // h(k) / |Gamma_n|^2
  long double pair_fraction(int k) const;
};

CorrelationTable make_correlation_table(const VarianceProfile& profile, long double r, int generation);
CorrelationTable make_correlation_table(const VarianceProfile& profile, long double r,
                                        PairCountHistogram histogram);

// sum_k h(k) w(k); equals 1 + R(r) for every n.
long double upsilon_total_mass(const CorrelationTable& table);

// sum_q upsilon_r(p x q); equals (1 + R(r)) / |Gamma_n|.
long double marginal_check(const CorrelationTable& table, const CylinderPath& p);

// N log[(1 + R(r+a-n)) / (1 + R(r-n))]: log d upsilon_{r+a} / d upsilon_r on a
// pair with N shared edges (exact at generation n).
long double rn_log_kernel(const VarianceProfile& profile, long double r, long double a, int generation, long double N);
// Per-edge weight of the same kernel: log[(1 + R(r+a-n)) / (1 + R(r-n))].
long double rn_edge_weight(const VarianceProfile& profile, long double r, long double a, int generation);
// a kappa^2 / n^2: the large-n form of the per-edge weight.
long double asymptotic_edge_weight(const VarianceProfile& profile, long double a, int generation);

// sum_k h(k) w_r(k) exp(K(k)) with K at parameter shift a; equals 1 + R(r+a).
long double rn_reweighted_mass(const VarianceProfile& profile, const CorrelationTable& table, long double a);

struct LebesgueWeights {
  long double product_weight = 0.0L;  // 1/|Gamma_n|^2 on every pair
  std::vector<long double> rho;       // rho[k]: per-pair weight at N = k
  long double rho_total = 0.0L;       // sum_k h(k) rho[k]
};
// upsilon_r = mu x mu + R(r) rho_r on cylinder pairs.
LebesgueWeights lebesgue_decomposition_weights(const CorrelationTable& table);

struct IdentityCheck {
  long double lhs = 0.0L;
  long double rhs = 0.0L;
  long double abs_err() const;
  long double rel_err() const;
};

// lhs = sum_q N (1 + R(r-n))^{N-1} R'(r-n) / |Gamma_n|^2, rhs = R'(r) / |Gamma_n|.
IdentityCheck kernel_marginal_identity_check(const VarianceProfile& profile, long double r, const CylinderPath& p);

}  // namespace dhl
