#include "dhl/rfunction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dhl/errors.hpp"

namespace dhl {

namespace {

constexpr int kAbelTerms = 10;
constexpr long double kMaxSeedLevel = -64.0L;

long double binomial(int n, int k) {
  long double c = 1.0L;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

using Series = std::vector<long double>;

Series multiply(const Series& p, const Series& q) {
  Series out(p.size(), 0.0L);
  for (std::size_t m = 0; m < out.size(); ++m) {
    for (std::size_t i = 0; i <= m; ++i) out[m] += p[i] * q[m - i];
  }
  return out;
}

// Truncated Abel function Phi(x) = -A/x + B log(x/A) + sum_j d_j x^j of psi_b,
// with A = kappa^2 and B = eta. The d_j solve Phi(psi(x)) - Phi(x) = 1 order by
// order in x.
struct AbelSeries {
  long double A = 0.0L;
  long double B = 0.0L;
  Series d;  // d[j-1] = d_j

  explicit AbelSeries(int b) {
    const int order = kAbelTerms + 4;
    Series c(order, 0.0L);  // psi(x)/x
    for (int k = 1; k <= b && k - 1 < order; ++k) c[k - 1] = binomial(b, k) / b;

    Series inv(order, 0.0L);  // x/psi(x)
    inv[0] = 1.0L;
    for (int m = 1; m < order; ++m) {
      for (int i = 1; i <= m; ++i) inv[m] -= c[i] * inv[m - i];
    }
    Series dc(order, 0.0L);
    for (int i = 0; i + 1 < order; ++i) dc[i] = (i + 1) * c[i + 1];
    const Series q = multiply(dc, inv);
    Series log_c(order, 0.0L);  // log(psi(x)/x)
    for (int m = 1; m < order; ++m) log_c[m] = q[m - 1] / m;

    A = 1.0L / c[1];
    B = A * inv[2] / log_c[1];

    std::vector<Series> powers{Series(order, 0.0L)};
    powers[0][0] = 1.0L;
    for (int j = 1; j <= kAbelTerms; ++j) powers.push_back(multiply(powers.back(), c));

    for (int j = 1; j <= kAbelTerms; ++j) {
      const int m = j + 1;
      long double rhs = A * inv[m + 1] - B * log_c[m];
      for (int i = 1; i < j; ++i) rhs -= d[i - 1] * powers[i][m - i];
      d.push_back(rhs / powers[j][m - j]);
    }
  }

  long double value(long double x) const {
    long double poly = 0.0L;
    for (int j = kAbelTerms; j >= 1; --j) poly = (poly + d[j - 1]) * x;
    return -A / x + B * std::log(x / A) + poly;
  }

  long double derivative(long double x) const {
    long double poly = 0.0L;
    for (int j = kAbelTerms; j >= 1; --j) poly = poly * x + j * d[j - 1];
    return A / (x * x) + B / x + poly;
  }

  long double inverse(long double level) const {
    long double x = A / -level;
    for (int it = 0; it < 100; ++it) {
      const long double step = (value(x) - level) / derivative(x);
      long double next = x - step;
      if (next <= 0.0L) next = 0.5L * x;
      const bool done = std::fabs(next - x) <= 1e-19L * x;
      x = next;
      if (done) break;
    }
    return x;
  }
};

RValue iterate_from_seed(const VarianceProfile& profile, const AbelSeries& abel, long double r, int depth) {
  const long double r0 = r - depth;
  long double R = abel.inverse(r0);
  long double Rp = 1.0L / abel.derivative(R);
  for (int i = 0; i < depth; ++i) {
    Rp *= std::pow(1.0L + R, profile.b - 1);
    R = psi(profile.b, R);
    if (!std::isfinite(R) || !std::isfinite(Rp)) {
      throw OverflowError("R(" + std::to_string(static_cast<double>(r)) +
                          ") overflows extended precision");
    }
  }
  return {R, Rp, depth};
}

// As iterate_from_seed, switching to log R once psi would leave the long
// double range.
LogRValue iterate_log_from_seed(const VarianceProfile& profile, const AbelSeries& abel, long double r, int depth) {
  const long double r0 = r - depth;
  const long double switch_at = std::log(std::numeric_limits<long double>::max()) / profile.b - 2.0L;
  long double R = abel.inverse(r0);
  long double Rp = 1.0L / abel.derivative(R);
  int i = 0;
  for (; i < depth && std::log(R) < switch_at && std::log(Rp) < switch_at; ++i) {
    Rp *= std::pow(1.0L + R, profile.b - 1);
    R = psi(profile.b, R);
  }
  long double log_R = std::log(R);
  long double log_Rp = std::log(Rp);
  for (; i < depth; ++i) {
    const long double log_1p = log_R + std::log1p(std::exp(-log_R));  // log(1 + R)
    log_Rp += (profile.b - 1) * log_1p;
    log_R = log_psi(profile.b, log_R);
  }
  return {log_R, log_Rp, depth};
}

bool close(long double a, long double b, long double tol) {
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

VarianceProfile::VarianceProfile(int branching)
    : b(branching),
      kappa_sq(2.0L / (branching - 1)),
      eta((branching + 1.0L) / (3.0L * (branching - 1))) {
  if (branching < 2) throw UsageError("branching number must be >= 2");
}

long double psi(int b, long double x) {
  if (!(x >= 0.0L)) throw DomainError("psi_b needs x >= 0");
  long double acc = 0.0L;
  for (int k = b; k >= 1; --k) acc = (acc + binomial(b, k) / b) * x;
  return acc;
}

RValue evaluate_R_joint(const VarianceProfile& profile, long double r) {
  if (!std::isfinite(r)) throw DomainError("r must be finite");
  const AbelSeries abel(profile.b);
  int depth = std::max<long double>(profile.seed_depth, std::ceil(r - kMaxSeedLevel));
  RValue previous = iterate_from_seed(profile, abel, r, depth);
  while (2 * static_cast<long long>(depth) <= profile.max_depth) {
    depth *= 2;
    const RValue current = iterate_from_seed(profile, abel, r, depth);
    // Seed rounding moves the effective level by ~eps |r0|; R then moves by
    // that times d log R / dr, so the tolerance scales with it.
    const long double tol = profile.tolerance * std::max(1.0L, current.R_prime / current.R);
    if (close(current.R, previous.R, tol) && close(current.R_prime, previous.R_prime, tol)) {
      return current;
    }
    if (2 * static_cast<long long>(depth) > profile.max_depth) {
      throw ConvergenceError("R(" + std::to_string(static_cast<double>(r)) + ") did not stabilize by depth " +
                                 std::to_string(depth),
                             current.R, previous.R);
    }
    previous = current;
  }
  throw ConvergenceError("max_depth too small to run the doubling check", previous.R, previous.R);
}

LogRValue evaluate_log_R(const VarianceProfile& profile, long double r) {
  if (!std::isfinite(r)) throw DomainError("r must be finite");
  const AbelSeries abel(profile.b);
  int depth = std::max<long double>(profile.seed_depth, std::ceil(r - kMaxSeedLevel));
  LogRValue previous = iterate_log_from_seed(profile, abel, r, depth);
  while (2 * static_cast<long long>(depth) <= profile.max_depth) {
    depth *= 2;
    const LogRValue current = iterate_log_from_seed(profile, abel, r, depth);
    const long double tol = profile.tolerance * std::max(1.0L, std::exp(current.log_R_prime - current.log_R));
    if (std::fabs(current.log_R - previous.log_R) <= tol &&
        std::fabs(current.log_R_prime - previous.log_R_prime) <= tol) {
      return current;
    }
    previous = current;
  }
  throw ConvergenceError("log R(" + std::to_string(static_cast<double>(r)) + ") did not stabilize by depth " +
                             std::to_string(depth),
                         previous.log_R, previous.log_R);
}

long double log_psi(int b, long double log_x) {
  if (log_x < 0.0L) return std::log(psi(b, std::exp(log_x)));
  // log(((1+x)^b - 1)/b) = b log(1+x) + log1p(-(1+x)^-b) - log b
  const long double log_1p = log_x + std::log1p(std::exp(-log_x));
  return b * log_1p + std::log1p(-std::exp(-b * log_1p)) - std::log(static_cast<long double>(b));
}

long double evaluate_R(const VarianceProfile& profile, long double r) { return evaluate_R_joint(profile, r).R; }

long double evaluate_R_prime(const VarianceProfile& profile, long double r) {
  return evaluate_R_joint(profile, r).R_prime;
}

long double asymptotic_R(const VarianceProfile& profile, long double r) {
  if (!(r < 0.0L)) throw DomainError("asymptotic expansion needs r < 0");
  const long double u = -r;
  return profile.kappa_sq / u + profile.kappa_sq * profile.eta * std::log(u) / (u * u);
}

long double asymptotic_R_prime(const VarianceProfile& profile, long double r) {
  if (!(r < 0.0L)) throw DomainError("asymptotic expansion needs r < 0");
  const long double u = -r;
  return profile.kappa_sq / (u * u) - profile.kappa_sq * profile.eta * (1.0L - 2.0L * std::log(u)) / (u * u * u);
}

std::vector<long double> moment_recursion_step(int b, std::span<const long double> moments) {
  if (b < 2) throw UsageError("branching number must be >= 2");
  if (moments.empty() || moments[0] != 1.0L) throw UsageError("moment vector must start with m_0 = 1");
  const int K = static_cast<int>(moments.size()) - 1;
  if (K > kMomentOrderBudget) {
    throw UsageError("moment order " + std::to_string(K) + " exceeds budget " +
                     std::to_string(kMomentOrderBudget));
  }
  Series egf(K + 1);
  long double factorial = 1.0L;
  for (int j = 0; j <= K; ++j) {
    if (j > 0) factorial *= j;
    egf[j] = std::pow(moments[j], b) / factorial;
  }
  Series power(K + 1, 0.0L);
  power[0] = 1.0L;
  for (int i = 0; i < b; ++i) power = multiply(power, egf);

  std::vector<long double> next(K + 1);
  factorial = 1.0L;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) factorial *= k;
    next[k] = factorial * power[k] / std::pow(static_cast<long double>(b), k);
    if (!std::isfinite(next[k])) throw OverflowError("moment m_" + std::to_string(k) + " overflows");
  }
  return next;
}

std::vector<long double> centered_from_raw(std::span<const long double> raw) {
  std::vector<long double> centered(raw.size(), 0.0L);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      const long double sign = (k - j) % 2 ? -1.0L : 1.0L;
      centered[k] += sign * binomial(static_cast<int>(k), static_cast<int>(j)) * raw[j];
    }
  }
  return centered;
}

MomentTable centered_moment_table(const VarianceProfile& profile, std::span<const long double> r_grid, int k_max,
                                  SeedKind seed, int depth) {
  if (k_max < 2 || k_max > kMomentOrderBudget) {
    throw UsageError("k_max must lie in [2, " + std::to_string(kMomentOrderBudget) + "]");
  }
  if (depth < 1) throw UsageError("moment depth must be >= 1");
  MomentTable table;
  table.b = profile.b;
  table.k_max = k_max;
  table.depth = depth;
  table.seed = seed;
  table.r_grid.assign(r_grid.begin(), r_grid.end());
  for (long double r : r_grid) {
    const long double v = evaluate_R(profile, r - depth);
    std::vector<long double> m(k_max + 1);
    for (int k = 0; k <= k_max; ++k) m[k] = seed_raw_moment(seed, v, k);
    for (int i = 0; i < depth; ++i) m = moment_recursion_step(profile.b, m);
    table.centered.push_back(centered_from_raw(m));
    table.raw.push_back(std::move(m));
  }
  return table;
}

}  // namespace dhl
