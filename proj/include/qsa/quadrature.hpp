#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <string>
#include <vector>

#include "qsa/error.hpp"

namespace qsa::quad {

/// Composite Simpson rule; `panels` is rounded up to the next even number.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t panels) {
  require(panels >= 2, ErrorCode::InvalidArgument, "simpson needs at least two panels");
  if (panels % 2 != 0) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i < panels; ++i) {
    const double v = f(a + h * static_cast<double>(i));
    (i % 2 == 1 ? odd : even) += v;
  }
  return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

template <typename T>
struct Result {
  T value{};
  double error = 0.0;
  std::size_t intervals = 0;
  bool converged = false;
};

struct AdaptiveOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::size_t max_intervals = 20000;
  /// Initial uniform subdivision; oscillatory integrands should start with at
  /// least one interval per oscillation.
  std::size_t initial_intervals = 1;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <typename T, typename F>
std::pair<T, double> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T kron = fc * kWgk[7];
  T gauss = fc * kWg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const T s = f(c - dx) + f(c + dx);
    kron += s * kWgk[j];
    if (j % 2 == 1) gauss += s * kWg[j / 2];
  }
  return {kron * h, magnitude((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss–Kronrod (7/15) quadrature: the interval with the
/// largest error estimate is bisected until the summed estimate meets the
/// tolerance. Works for real and complex integrands.
template <typename T, typename F>
Result<T> adaptive(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
  struct Piece {
    double a, b;
    T value;
    double error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  std::priority_queue<Piece> heap;
  T total{};
  double err = 0.0;
  const std::size_t n0 = std::max<std::size_t>(1, opt.initial_intervals);
  for (std::size_t i = 0; i < n0; ++i) {
    const double lo = a + (b - a) * static_cast<double>(i) / static_cast<double>(n0);
    const double hi = i + 1 == n0 ? b : a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(n0);
    auto [v, e] = detail::gk15<T>(f, lo, hi);
    heap.push({lo, hi, v, e});
    total += v;
    err += e;
  }
  Result<T> r;
  while (true) {
    const double target = std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
    if (err <= target) {
      r.converged = true;
      break;
    }
    if (heap.size() >= opt.max_intervals) break;
    Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    auto [v1, e1] = detail::gk15<T>(f, worst.a, mid);
    auto [v2, e2] = detail::gk15<T>(f, mid, worst.b);
    total += v1 + v2 - worst.value;
    err += e1 + e2 - worst.error;
    heap.push({worst.a, mid, v1, e1});
    heap.push({mid, worst.b, v2, e2});
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  T sum{};
  double esum = 0.0;
  r.intervals = heap.size();
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  r.value = sum;
  r.error = esum;
  if (!r.converged) {
    r.converged = esum <= std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(sum));
  }
  return r;
}

/// As adaptive() but throws QuadratureNonConvergence, quoting the achieved
/// error estimate, when the tolerance is not met.
template <typename T, typename F>
T integrate(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
  auto r = adaptive<T>(std::forward<F>(f), a, b, opt);
  if (!r.converged) {
    fail(ErrorCode::QuadratureNonConvergence,
         "achieved error estimate " + std::to_string(r.error) + " over " + std::to_string(r.intervals) +
             " intervals");
  }
  return r.value;
}

}  // namespace qsa::quad
