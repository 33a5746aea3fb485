#include "qsa/special.hpp"

#include <cmath>
#include <numbers>

namespace qsa {

namespace {

// Below the switchover the positive-term series for erf is used; above it the
// Laplace continued fraction for erfc, which needs fewer than ~120 terms there.
constexpr double kSwitchover = 2.0;

// erf(z) = 2/sqrt(pi) exp(-z^2) sum_n 2^n z^(2n+1) / (1*3*...*(2n+1)); all terms
// positive, so no cancellation.
double erf_series(double z) {
  const double z2 = z * z;
  double term = z;
  double sum = z;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * z2 / (2.0 * n + 1.0);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return 2.0 * std::numbers::inv_sqrtpi * std::exp(-z2) * sum;
}

// erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))),
// evaluated with the modified Lentz algorithm.
double erfc_continued_fraction(double z) {
  constexpr double tiny = 1e-300;
  double f = z;
  double c = z;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = z + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = z + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::numbers::inv_sqrtpi * std::exp(-z * z) / f;
}

double erfc_nonnegative(double z) {
  if (z < kSwitchover) return 1.0 - erf_series(z);
  if (z > 27.3) return 0.0;  // exp(-z^2) underflows
  return erfc_continued_fraction(z);
}

}  // namespace

double erfc(double z) {
  if (std::isnan(z)) return z;
  if (z < 0.0) return 2.0 - erfc_nonnegative(-z);
  return erfc_nonnegative(z);
}

}  // namespace qsa
