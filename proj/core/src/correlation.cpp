#include "dhl/correlation.hpp"

#include <cmath>
#include <string>

#include "dhl/errors.hpp"

namespace dhl {

namespace {

using Counts = std::vector<mpz_class>;

Counts convolve(const Counts& a, const Counts& b, std::size_t length) {
  Counts out(length, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size() && i + j < length; ++j) {
      if (b[j] == 0) continue;
      out[i + j] += a[i] * b[j];
    }
  }
  return out;
}

// a / b as a long double without forming either in floating point.
long double ratio(const mpz_class& a, const mpz_class& b) {
  if (a == 0) return 0.0L;
  long ea = 0;
  long eb = 0;
  const double ma = mpz_get_d_2exp(&ea, a.get_mpz_t());
  const double mb = mpz_get_d_2exp(&eb, b.get_mpz_t());
  return std::ldexp(static_cast<long double>(ma) / mb, static_cast<int>(ea - eb));
}

std::size_t histogram_length(const LatticeParams& params, int generation) {
  return static_cast<std::size_t>(slot_count(params, generation)) + 1;
}

Counts conditional_counts(const CylinderPath& p) {
  const LatticeParams& params = p.params();
  const int n = p.generation();
  if (n == 0) return {0, 1};
  const std::size_t length = histogram_length(params, n);
  Counts same{1};
  for (int j = 0; j < params.s; ++j) same = convolve(same, conditional_counts(p.subpath(j)), length);
  same.resize(length, 0);
  mpz_class sub_total;
  mpz_pow_ui(sub_total.get_mpz_t(), exact_path_count(params, n - 1).get_mpz_t(), params.s);
  same[0] += (params.b - 1) * sub_total;
  return same;
}

}  // namespace

mpz_class PairCountHistogram::total() const {
  mpz_class sum = 0;
  for (const auto& c : counts) sum += c;
  return sum;
}

mpz_class PairCountHistogram::power_sum(int j) const {
  mpz_class sum = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    mpz_class kj;
    mpz_ui_pow_ui(kj.get_mpz_t(), k, j);
    sum += kj * counts[k];
  }
  return sum;
}

PairCountHistogram pair_count_histogram(const LatticeParams& params, int generation) {
  require_critical(params, "pair_count_histogram");
  if (generation < 0) throw UsageError("generation must be nonnegative");
  Counts h{0, 1};
  mpz_class paths = 1;  // |Gamma_k|
  for (int k = 0; k < generation; ++k) {
    const std::size_t length = histogram_length(params, k + 1);
    Counts power{1};
    for (int i = 0; i < params.b; ++i) power = convolve(power, h, length);
    power.resize(length, 0);
    for (auto& c : power) c *= params.b;
    mpz_class free_pairs;
    mpz_pow_ui(free_pairs.get_mpz_t(), paths.get_mpz_t(), 2 * params.b);
    power[0] += params.b * (params.b - 1) * free_pairs;
    h = std::move(power);
    mpz_class next;
    mpz_pow_ui(next.get_mpz_t(), paths.get_mpz_t(), params.s);
    paths = next * params.b;
  }
  return {params, generation, std::move(h)};
}

std::vector<mpz_class> conditional_histogram(const CylinderPath& p) {
  require_critical(p.params(), "conditional_histogram");
  return conditional_counts(p);
}

PairCountHistogram enumerate_pair_counts(const LatticeParams& params, int generation) {
  const auto paths = enumerate_paths(params, generation);
  Counts counts(histogram_length(params, generation), 0);
  for (const auto& p : paths) {
    for (const auto& q : paths) counts[shared_edge_count(p, q)] += 1;
  }
  return {params, generation, std::move(counts)};
}

long double CorrelationTable::weight_log(int k) const {
  return k * std::log1p(R_shifted) - 2.0L * log_paths;
}

long double CorrelationTable::pair_fraction(int k) const {
  const mpz_class paths = exact_path_count(histogram.params, histogram.generation);
  return ratio(histogram.counts.at(k), paths * paths);
}

CorrelationTable make_correlation_table(const VarianceProfile& profile, long double r, int generation) {
  return make_correlation_table(profile, r, pair_count_histogram(LatticeParams(profile.b, profile.b), generation));
}

CorrelationTable make_correlation_table(const VarianceProfile& profile, long double r,
                                        PairCountHistogram histogram) {
  if (histogram.params.b != profile.b) throw UsageError("histogram and profile disagree on b");
  CorrelationTable table;
  table.r = r;
  table.R_r = evaluate_R(profile, r);
  table.R_shifted = evaluate_R(profile, r - histogram.generation);
  table.log_paths = log_of(exact_path_count(histogram.params, histogram.generation));
  table.histogram = std::move(histogram);
  return table;
}

namespace {

// sum_k counts[k] / |Gamma_n|^2 * f(k)
template <typename F>
long double weighted_pair_sum(const Counts& counts, const mpz_class& denominator, F f) {
  long double sum = 0.0L;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) continue;
    sum += ratio(counts[k], denominator) * f(static_cast<int>(k));
  }
  return sum;
}

mpz_class paths_squared(const PairCountHistogram& h) {
  const mpz_class paths = exact_path_count(h.params, h.generation);
  return paths * paths;
}

}  // namespace

long double upsilon_total_mass(const CorrelationTable& table) {
  const long double log_growth = std::log1p(table.R_shifted);
  return weighted_pair_sum(table.histogram.counts, paths_squared(table.histogram),
                           [&](int k) { return std::exp(k * log_growth); });
}

long double marginal_check(const CorrelationTable& table, const CylinderPath& p) {
  if (!(p.params() == table.histogram.params) || p.generation() != table.generation()) {
    throw UsageError("path does not belong to the table's generation");
  }
  const long double log_growth = std::log1p(table.R_shifted);
  return weighted_pair_sum(conditional_histogram(p), paths_squared(table.histogram),
                           [&](int k) { return std::exp(k * log_growth); });
}

long double rn_edge_weight(const VarianceProfile& profile, long double r, long double a, int generation) {
  if (a < 0.0L) throw DomainError("parameter shift a must be >= 0");
  if (a == 0.0L) return 0.0L;
  return std::log1p(evaluate_R(profile, r + a - generation)) - std::log1p(evaluate_R(profile, r - generation));
}

long double rn_log_kernel(const VarianceProfile& profile, long double r, long double a, int generation,
                          long double N) {
  if (N == 0.0L) return 0.0L;
  return N * rn_edge_weight(profile, r, a, generation);
}

long double asymptotic_edge_weight(const VarianceProfile& profile, long double a, int generation) {
  if (a < 0.0L) throw DomainError("parameter shift a must be >= 0");
  if (generation < 1) throw UsageError("asymptotic kernel needs generation >= 1");
  return a * profile.kappa_sq / (static_cast<long double>(generation) * generation);
}

long double rn_reweighted_mass(const VarianceProfile& profile, const CorrelationTable& table, long double a) {
  const long double log_growth = std::log1p(table.R_shifted);
  const long double lambda = rn_edge_weight(profile, table.r, a, table.generation());
  return weighted_pair_sum(table.histogram.counts, paths_squared(table.histogram),
                           [&](int k) { return std::exp(k * log_growth + k * lambda); });
}

LebesgueWeights lebesgue_decomposition_weights(const CorrelationTable& table) {
  if (!(table.R_r > 0.0L)) throw DomainError("Lebesgue decomposition needs R(r) > 0");
  LebesgueWeights out;
  const mpz_class denominator = paths_squared(table.histogram);
  out.product_weight = ratio(mpz_class(1), denominator);
  const long double log_growth = std::log1p(table.R_shifted);
  out.rho.resize(table.histogram.counts.size());
  for (std::size_t k = 0; k < out.rho.size(); ++k) {
    out.rho[k] = std::expm1(k * log_growth) / table.R_r * out.product_weight;
  }
  out.rho_total = weighted_pair_sum(table.histogram.counts, denominator,
                                    [&](int k) { return std::expm1(k * log_growth) / table.R_r; });
  return out;
}

long double IdentityCheck::abs_err() const { return std::fabs(lhs - rhs); }

long double IdentityCheck::rel_err() const {
  const long double scale = std::max(std::fabs(lhs), std::fabs(rhs));
  return scale == 0.0L ? 0.0L : abs_err() / scale;
}

IdentityCheck kernel_marginal_identity_check(const VarianceProfile& profile, long double r, const CylinderPath& p) {
  require_critical(p.params(), "kernel_marginal_identity_check");
  if (p.params().b != profile.b) throw UsageError("path and profile disagree on b");
  const int n = p.generation();
  const RValue shifted = evaluate_R_joint(profile, r - n);
  const RValue here = evaluate_R_joint(profile, r);
  const mpz_class paths = exact_path_count(p.params(), n);
  const Counts g = conditional_histogram(p);
  const long double log_growth = std::log1p(shifted.R);
  long double lhs = 0.0L;
  for (std::size_t k = 1; k < g.size(); ++k) {
    if (g[k] == 0) continue;
    lhs += ratio(g[k], paths * paths) * k * std::exp((k - 1.0L) * log_growth) * shifted.R_prime;
  }
  return {lhs, here.R_prime * ratio(mpz_class(1), paths)};
}

}  // namespace dhl
