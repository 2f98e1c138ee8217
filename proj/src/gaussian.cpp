#include "remage/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace remage {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kCutoff = 8.0;

// exp(-x^2/2) without losing the low bits of x^2 to rounding.
double exp_half_square(double x) {
  const double hi = x * x;
  const double lo = std::fma(x, x, -hi);
  return std::exp(-0.5 * hi) * std::exp(-0.5 * lo);
}

// Continued fraction for the Mills ratio, x > 0, evaluated bottom-up.
// R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))). At x >= 8 the depth below
// gives well under one ulp.
double mills_cf(double x) {
  const int depth = x > 20.0 ? 40 : 120;
  double t = x;
  for (int k = depth; k >= 1; --k) t = x + k / t;
  return 1.0 / t;
}

}  // namespace

double gaussian_density(double x) {
  return exp_half_square(x) / std::sqrt(2.0 * std::numbers::pi);
}

double log_gaussian_density(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double gaussian_tail(double x) {
  if (std::isnan(x)) return x;
  if (x > kCutoff) return gaussian_density(x) * mills_cf(x);
  if (x < -kCutoff) return 1.0 - gaussian_density(-x) * mills_cf(-x);
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double log_gaussian_tail(double x) {
  if (std::isnan(x)) return x;
  if (x > kCutoff) return log_gaussian_density(x) + std::log(mills_cf(x));
  if (x < -kCutoff) return std::log1p(-gaussian_density(-x) * mills_cf(-x));
  return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
}

double mills_ratio(double x) {
  if (x > kCutoff) return mills_cf(x);
  return std::exp(log_gaussian_tail(x) - log_gaussian_density(x));
}

double inverse_gaussian_tail(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    if (p == 1.0) return -std::numeric_limits<double>::infinity();
    throw std::domain_error("inverse_gaussian_tail: p outside [0,1]");
  }
  return inverse_log_gaussian_tail(std::log(p));
}

double inverse_log_gaussian_tail(double log_p) {
  if (std::isnan(log_p) || log_p > 0.0)
    throw std::domain_error("inverse_log_gaussian_tail: log p must be <= 0");
  if (log_p == 0.0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(log_p)) return std::numeric_limits<double>::infinity();

  // Upper half: use the symmetric lower tail, which is representable.
  if (log_p > -std::numbers::ln2) {
    const double q = -std::expm1(log_p);  // 1 - p, small
    return -inverse_log_gaussian_tail(std::log(q));
  }

  double x;
  if (log_p > -700.0) {
    x = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * std::exp(log_p));
  } else {
    // Leading asymptotics of the tail: log p ~ -x^2/2 - log(x sqrt(2 pi)).
    const double y = -2.0 * log_p;
    x = std::sqrt(y - std::log(2.0 * std::numbers::pi * y));
  }

  // Newton polish on the log tail, which is concave, so iterates from a good
  // start converge monotonically.
  for (int it = 0; it < 50; ++it) {
    const double f = log_gaussian_tail(x) - log_p;
    const double slope = -1.0 / mills_ratio(x);
    const double dx = -f / slope;
    x += dx;
    if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace remage
