#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dhl::stats {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

Estimate mean(std::span<const double> xs);
// Unbiased sample variance with the delta-method SE sqrt((mu4 - mu2^2)/n).
Estimate variance(std::span<const double> xs);
// k-th sample central moment (k >= 2) with its asymptotic SE
// sqrt((mu_2k - mu_k^2 - 2k mu_{k-1} mu_{k+1} + k^2 mu_2 mu_{k-1}^2) / n).
Estimate central_moment(std::span<const double> xs, int k);
// Sample mean of x^k with SE.
Estimate raw_moment(std::span<const double> xs, int k);

// Mean of per-cluster values with SE from their spread; use when draws within a
// cluster share a common random input.
Estimate cluster_mean(std::span<const double> cluster_values);

// |a - b| / sqrt(se_a^2 + se_b^2); +inf if both SEs vanish and a != b, 0 if equal.
double z_score(const Estimate& a, const Estimate& b);
double z_score(const Estimate& a, double target);

struct KsResult {
  double statistic = 0.0;  // sup |F_a - F_b|
  double p_value = 1.0;    // asymptotic Kolmogorov distribution
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

// Pearson statistic of observed counts against equal expected counts.
double chi_square_uniform(std::span<const std::uint64_t> counts);

}  // namespace dhl::stats
