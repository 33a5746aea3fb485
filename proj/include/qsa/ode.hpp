#pragma once

// Dormand–Prince 5(4) integrator with the 4th-order continuous extension.
// Header-only because it is templated on the state dimension.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qsa/error.hpp"

namespace qsa::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects a step from the local derivative
  std::size_t max_steps = 2'000'000;
};

/// A piece of the integration span with its own step-size cap. The integrator
/// lands exactly on every segment end, so forcing localized inside a segment
/// can never be stepped over.
struct Segment {
  double t_end;
  double max_step = std::numeric_limits<double>::infinity();
};

/// Continuous solution over [t_first, t_last] (either direction). Step
/// endpoints are stored exactly; in between, the Hairer contd5 polynomial is
/// evaluated.
template <std::size_t N>
class DenseSolution {
 public:
  const std::vector<double>& times() const noexcept { return t_; }
  const std::vector<Vec<N>>& values() const noexcept { return y_; }
  std::size_t steps() const noexcept { return coeff_.size(); }
  double t_first() const noexcept { return t_.front(); }
  double t_last() const noexcept { return t_.back(); }
  bool forward() const noexcept { return t_.back() >= t_.front(); }

  bool contains(double t) const noexcept {
    const double lo = std::min(t_first(), t_last());
    const double hi = std::max(t_first(), t_last());
    return t >= lo && t <= hi;
  }

  Vec<N> operator()(double t) const {
    if (!contains(t)) {
      fail(ErrorCode::OutOfSpan, "dense output requested at t=" + std::to_string(t) + " outside [" +
                                     std::to_string(std::min(t_first(), t_last())) + ", " +
                                     std::to_string(std::max(t_first(), t_last())) + "]");
    }
    // Index of the step [t_i, t_{i+1}] containing t.
    std::size_t i;
    if (forward()) {
      auto it = std::upper_bound(t_.begin(), t_.end(), t);
      i = static_cast<std::size_t>(it - t_.begin());
    } else {
      auto it = std::upper_bound(t_.begin(), t_.end(), t, [](double a, double b) { return a > b; });
      i = static_cast<std::size_t>(it - t_.begin());
    }
    if (i > 0 && t_[i - 1] == t) return y_[i - 1];
    if (i >= t_.size()) return y_.back();
    const std::size_t s = i - 1;
    const double h = t_[s + 1] - t_[s];
    const double theta = (t - t_[s]) / h;
    const double theta1 = 1.0 - theta;
    const auto& c = coeff_[s];
    Vec<N> out;
    for (std::size_t k = 0; k < N; ++k) {
      out[k] = y_[s][k] +
               theta * (c[0][k] + theta1 * (c[1][k] + theta * (c[2][k] + theta1 * c[3][k])));
    }
    return out;
  }

 private:
  template <std::size_t M, typename Rhs>
  friend DenseSolution<M> integrate(Rhs&&, double, const Vec<M>&, std::span<const Segment>,
                                    const Options&);

  std::vector<double> t_;
  std::vector<Vec<N>> y_;
  std::vector<std::array<Vec<N>, 4>> coeff_;
};

namespace detail {

// Butcher tableau (Hairer, Nørsett & Wanner, DOPRI5).
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

template <std::size_t N>
bool finite(const Vec<N>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

template <std::size_t N>
double scaled_norm(const Vec<N>& v, const Vec<N>& y0, const Vec<N>& y1, const Options& o) {
  double acc = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[k]), std::abs(y1[k]));
    const double r = v[k] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(N));
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from (t0, y0) through each segment in turn.
/// Segment ends must be monotone in the integration direction.
template <std::size_t N, typename Rhs>
DenseSolution<N> integrate(Rhs&& rhs, double t0, const Vec<N>& y0, std::span<const Segment> segments,
                           const Options& opt) {
  using namespace detail;
  require(!segments.empty(), ErrorCode::InvalidArgument, "no integration segments");
  require(opt.rtol > 0 && opt.atol > 0, ErrorCode::InvalidArgument, "tolerances must be positive");
  require(std::isfinite(t0) && finite(y0), ErrorCode::NonFinite, "non-finite initial condition");

  const double t_final = segments.back().t_end;
  const double dir = t_final >= t0 ? 1.0 : -1.0;

  DenseSolution<N> sol;
  sol.t_.push_back(t0);
  sol.y_.push_back(y0);

  double t = t0;
  Vec<N> y = y0;
  Vec<N> k1 = rhs(t, y);
  double h = 0.0;
  std::size_t nsteps = 0;

  for (const Segment& seg : segments) {
    require(std::isfinite(seg.t_end) && dir * (seg.t_end - t) >= 0.0, ErrorCode::InvalidArgument,
            "segment ends must be finite and monotone");
    const double hmax = seg.max_step;
    // Fresh step-size estimate at every segment boundary.
    if (opt.initial_step > 0.0) {
      h = opt.initial_step;
    } else {
      const double d0 = scaled_norm(y, y, y, opt);
      const double d1n = scaled_norm(k1, y, y, opt);
      h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    }
    h = std::min({h, hmax, std::abs(seg.t_end - t)});

    while (dir * (seg.t_end - t) > 0.0) {
      if (++nsteps > opt.max_steps) fail(ErrorCode::StepLimit, "integrator exceeded max_steps");
      bool last = false;
      if (h >= std::abs(seg.t_end - t) * (1.0 - 1e-12)) {
        h = std::abs(seg.t_end - t);
        last = true;
      }
      const double hs = dir * h;

      Vec<N> tmp;
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
      const Vec<N> k2 = rhs(t + c2 * hs, tmp);
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
      const Vec<N> k3 = rhs(t + c3 * hs, tmp);
      for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      const Vec<N> k4 = rhs(t + c4 * hs, tmp);
      for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      const Vec<N> k5 = rhs(t + c5 * hs, tmp);
      for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      const double t_new = last ? seg.t_end : t + hs;
      const Vec<N> k6 = rhs(t + hs, tmp);
      Vec<N> y_new;
      for (std::size_t i = 0; i < N; ++i)
        y_new[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      const Vec<N> k7 = rhs(t_new, y_new);

      Vec<N> err;
      for (std::size_t i = 0; i < N; ++i)
        err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double en = finite(y_new) ? scaled_norm(err, y, y_new, opt)
                                      : std::numeric_limits<double>::infinity();

      if (en <= 1.0) {
        std::array<Vec<N>, 4> c;
        for (std::size_t i = 0; i < N; ++i) {
          const double ydiff = y_new[i] - y[i];
          const double bspl = hs * k1[i] - ydiff;
          c[0][i] = ydiff;
          c[1][i] = bspl;
          c[2][i] = ydiff - hs * k7[i] - bspl;
          c[3][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                          d7 * k7[i]);
        }
        sol.coeff_.push_back(c);
        sol.t_.push_back(t_new);
        sol.y_.push_back(y_new);
        t = t_new;
        y = y_new;
        k1 = k7;
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = std::min(h * fac, hmax);
      } else {
        if (!std::isfinite(en)) {
          h *= 0.1;
        } else {
          h *= std::max(0.9 * std::pow(en, -0.2), 0.1);
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
          fail(ErrorCode::StepLimit, "step size underflow at t=" + std::to_string(t));
        }
      }
    }
  }
  return sol;
}

template <std::size_t N, typename Rhs>
DenseSolution<N> integrate(Rhs&& rhs, double t0, const Vec<N>& y0, double t_end, const Options& opt) {
  const Segment seg{t_end};
  return integrate<N>(std::forward<Rhs>(rhs), t0, y0, std::span<const Segment>(&seg, 1), opt);
}

}  // namespace qsa::ode
