#include "dhl/big_count.hpp"

#include <cmath>
#include <limits>

#include "dhl/errors.hpp"

namespace dhl {

double log_of(const mpz_class& x) {
  if (sgn(x) == 0) return -std::numeric_limits<double>::infinity();
  long exponent = 0;
  const double mantissa = mpz_get_d_2exp(&exponent, x.get_mpz_t());
  return std::log(std::fabs(mantissa)) + static_cast<double>(exponent) * std::log(2.0);
}

long double to_long_double(const mpz_class& x) {
  long exponent = 0;
  const double mantissa = mpz_get_d_2exp(&exponent, x.get_mpz_t());
  return std::ldexp(static_cast<long double>(mantissa), static_cast<int>(exponent));
}

BigCount BigCount::exact(mpz_class value) {
  if (sgn(value) < 0) throw UsageError("BigCount must be nonnegative");
  const double lg = log_of(value);
  return BigCount(std::move(value), lg);
}

BigCount BigCount::log_only(double log_value) { return BigCount(std::nullopt, log_value); }

const mpz_class& BigCount::value() const {
  if (!exact_) throw UsageError("BigCount has no exact representation at this generation");
  return *exact_;
}

long double BigCount::as_long_double() const {
  if (exact_) return to_long_double(*exact_);
  return std::exp(static_cast<long double>(log_));
}

std::string BigCount::to_string() const {
  if (exact_) return exact_->get_str();
  return "exp(" + std::to_string(log_) + ")";
}

}  // namespace dhl
