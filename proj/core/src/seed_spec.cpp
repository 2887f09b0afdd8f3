#include "dhl/seed_spec.hpp"

#include <cmath>

#include "dhl/errors.hpp"

namespace dhl {

SeedSpec::SeedSpec(SeedKind k, double v) : kind(k), variance(v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("seed variance must be finite and >= 0");
  if (k == SeedKind::kTwoPoint && v > 1.0) {
    throw UsageError("two-point seed needs variance <= 1 to stay nonnegative; seed deeper");
  }
}

double SeedSpec::sample(rng::Stream& rng) const {
  switch (kind) {
    case SeedKind::kDeterministicOne:
      return 1.0;
    case SeedKind::kTwoPoint: {
      const double half_width = std::sqrt(variance);
      return (rng() >> 63) ? 1.0 + half_width : 1.0 - half_width;
    }
    case SeedKind::kLognormal: {
      const double sigma_sq = std::log1p(variance);
      return std::exp(std::sqrt(sigma_sq) * rng.normal() - 0.5 * sigma_sq);
    }
  }
  return 1.0;
}

long double SeedSpec::raw_moment(int k) const { return seed_raw_moment(kind, variance, k); }

long double seed_raw_moment(SeedKind kind, long double v, int k) {
  if (k < 0) throw UsageError("moment order must be >= 0");
  switch (kind) {
    case SeedKind::kDeterministicOne:
      return 1.0L;
    case SeedKind::kTwoPoint: {
      const long double h = std::sqrt(v);
      return 0.5L * (std::pow(1.0L + h, k) + std::pow(1.0L - h, k));
    }
    case SeedKind::kLognormal:
      return std::pow(1.0L + v, 0.5L * k * (k - 1));
  }
  return 1.0L;
}

std::string_view to_string(SeedKind kind) {
  switch (kind) {
    case SeedKind::kDeterministicOne:
      return "deterministic-one";
    case SeedKind::kLognormal:
      return "lognormal";
    case SeedKind::kTwoPoint:
      return "two-point";
  }
  return "?";
}

SeedKind parse_seed_kind(std::string_view name) {
  if (name == "deterministic-one") return SeedKind::kDeterministicOne;
  if (name == "lognormal") return SeedKind::kLognormal;
  if (name == "two-point") return SeedKind::kTwoPoint;
  throw UsageError("unknown seed spec '" + std::string(name) +
                   "' (expected deterministic-one, lognormal or two-point)");
}

}  // namespace dhl
