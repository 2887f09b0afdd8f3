#include "dhl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dhl/errors.hpp"

namespace dhl::stats {

namespace {

long double mean_ld(std::span<const double> xs) {
  long double sum = 0.0L;
  for (double x : xs) sum += x;
  return sum / static_cast<long double>(xs.size());
}

// mu[j] = (1/n) sum (x - mean)^j for j = 0..order.
std::vector<long double> central_sums(std::span<const double> xs, int order) {
  const long double m = mean_ld(xs);
  std::vector<long double> mu(order + 1, 0.0L);
  for (double x : xs) {
    const long double d = x - m;
    long double p = 1.0L;
    for (int j = 0; j <= order; ++j) {
      mu[j] += p;
      p *= d;
    }
  }
  for (auto& v : mu) v /= static_cast<long double>(xs.size());
  return mu;
}

void require_size(std::span<const double> xs, std::size_t at_least) {
  if (xs.size() < at_least) throw UsageError("not enough samples for the requested statistic");
}

}  // namespace

Estimate mean(std::span<const double> xs) {
  require_size(xs, 2);
  const auto mu = central_sums(xs, 2);
  const long double n = xs.size();
  return {static_cast<double>(mean_ld(xs)), static_cast<double>(std::sqrt(mu[2] * n / (n - 1) / n))};
}

Estimate variance(std::span<const double> xs) {
  require_size(xs, 2);
  const auto mu = central_sums(xs, 4);
  const long double n = xs.size();
  const long double var = mu[2] * n / (n - 1);
  const long double v4 = std::max(0.0L, mu[4] - mu[2] * mu[2]);
  return {static_cast<double>(var), static_cast<double>(std::sqrt(v4 / n))};
}

Estimate central_moment(std::span<const double> xs, int k) {
  if (k < 2) throw UsageError("central_moment needs k >= 2");
  if (k == 2) return variance(xs);
  require_size(xs, 2);
  const auto mu = central_sums(xs, 2 * k);
  const long double n = xs.size();
  long double v = mu[2 * k] - mu[k] * mu[k] - 2.0L * k * mu[k - 1] * mu[k + 1] +
                  static_cast<long double>(k) * k * mu[2] * mu[k - 1] * mu[k - 1];
  v = std::max(0.0L, v);
  return {static_cast<double>(mu[k]), static_cast<double>(std::sqrt(v / n))};
}

Estimate raw_moment(std::span<const double> xs, int k) {
  require_size(xs, 2);
  std::vector<double> powered(xs.size());
  std::transform(xs.begin(), xs.end(), powered.begin(), [k](double x) { return std::pow(x, k); });
  return mean(powered);
}

Estimate cluster_mean(std::span<const double> cluster_values) { return mean(cluster_values); }

double z_score(const Estimate& a, const Estimate& b) {
  const double diff = std::fabs(a.value - b.value);
  const double se = std::hypot(a.se, b.se);
  if (diff == 0.0) return 0.0;
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return diff / se;
}

double z_score(const Estimate& a, double target) { return z_score(a, Estimate{target, 0.0}); }

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // Small-x form: sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2)), as a CDF.
    const double pi = 3.14159265358979323846;
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double t = (2.0 * k - 1.0) * pi / x;
      cdf += std::exp(-t * t / 8.0);
    }
    return 1.0 - std::sqrt(2.0 * pi) / x * cdf;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw UsageError("KS test needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size();
  const double nb = b.size();
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  // Stephens' small-sample correction to the asymptotic argument.
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  return {d, kolmogorov_survival(lambda)};
}

double chi_square_uniform(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw UsageError("chi-square needs at least one cell");
  long double total = 0.0L;
  for (auto c : counts) total += c;
  const long double expected = total / counts.size();
  long double chi = 0.0L;
  for (auto c : counts) chi += (c - expected) * (c - expected) / expected;
  return static_cast<double>(chi);
}

}  // namespace dhl::stats
