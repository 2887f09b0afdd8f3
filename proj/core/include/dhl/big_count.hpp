#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace dhl {

// Nonnegative count carried exactly (when feasible) and as a natural log.
// The two representations agree to 1e-12 relative whenever both exist.
class BigCount {
 public:
  static BigCount exact(mpz_class value);
  static BigCount log_only(double log_value);

  bool has_exact() const { return exact_.has_value(); }
  const mpz_class& value() const;  // throws UsageError if log-only
  double log() const { return log_; }
  long double as_long_double() const;
  std::string to_string() const;

 private:
  BigCount(std::optional<mpz_class> exact, double log_value)
      : exact_(std::move(exact)), log_(log_value) {}

  std::optional<mpz_class> exact_;
  double log_;
};

// log(|x|) of an arbitrary-precision integer without overflowing a double.
double log_of(const mpz_class& x);

// x as a long double; x87 extended range covers |x| < 2^16384.
long double to_long_double(const mpz_class& x);

}  // namespace dhl
