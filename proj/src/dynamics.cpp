#include "qsa/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace qsa {

namespace {

bool all_finite(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

// Window half-width in units of 1/sqrt(g): exp(-81) is far below double resolution
// relative to the peak.
constexpr double kWindowHalfWidth = 9.0;
constexpr double kWindowStepFraction = 0.25;

using State5 = ode::Vec<5>;

DynamicalState to_state(double t, const State5& y) { return {t, y[0], y[1], y[2], y[3], y[4]}; }

}  // namespace

void PhysicalParams::validate() const {
  require(all_finite({m, hbar, q0, p0, alpha0_sq, t0}), ErrorCode::NonFinite,
          "physical parameters must be finite");
  require(m > 0, ErrorCode::InvalidArgument, "mass must be positive");
  require(hbar > 0, ErrorCode::InvalidArgument, "hbar must be positive");
  require(alpha0_sq > 0, ErrorCode::InvalidArgument, "alpha0_sq must be positive");
}

double PhysicalParams::sigma0() const { return std::sqrt(alpha0_sq) / (2.0 * std::sqrt(m)); }

void BarrierParams::validate() const {
  require(all_finite({k, g, t_b}), ErrorCode::NonFinite, "barrier parameters must be finite");
  require(k >= 0, ErrorCode::InvalidArgument, "barrier strength must be non-negative");
  require(g > 0, ErrorCode::InvalidArgument, "window parameter g must be positive");
}

void QuadraticTerm::validate() const {
  require(all_finite({k, g, t_peak, center}), ErrorCode::NonFinite,
          "quadratic term parameters must be finite");
  require(k >= 0, ErrorCode::InvalidArgument, "term strength must be non-negative");
  require(g > 0, ErrorCode::InvalidArgument, "term window parameter must be positive");
}

double window(double t, const BarrierParams& barrier) {
  const double d = t - barrier.t_b;
  return std::exp(-barrier.g * d * d);
}

double omega_sq(double t, const BarrierParams& barrier) { return barrier.k * window(t, barrier); }

Forcing forcing(std::span<const QuadraticTerm> terms, double t) {
  Forcing f;
  for (const auto& term : terms) {
    if (term.k == 0.0) continue;
    const double d = t - term.t_peak;
    const double w2 = term.k * std::exp(-term.g * d * d);
    f.w2 += w2;
    f.w2c += w2 * term.center;
  }
  return f;
}

DynamicalState initial_state(const PhysicalParams& params) {
  return {params.t0, params.q0, params.p0, std::sqrt(params.alpha0_sq), 0.0, 0.0};
}

DynamicalState evolve_free(const PhysicalParams& params, double t) {
  params.validate();
  require(t >= params.t0, ErrorCode::InvalidArgument, "evolve_free requires t >= t0");
  const double s = t - params.t0;
  const double h = params.hbar;
  DynamicalState st;
  st.t = t;
  st.q = params.q0 + params.p0 * s / params.m;
  st.p = params.p0;
  const double a2 = params.alpha0_sq + 4.0 * h * h * s * s / params.alpha0_sq;
  st.alpha = std::sqrt(a2);
  st.alpha_prime = 4.0 * h * h * s / (params.alpha0_sq * st.alpha);
  st.phi = 0.5 * std::atan(2.0 * h * s / params.alpha0_sq);
  return st;
}

double ermakov_invariant(const DynamicalState& s, const PhysicalParams& params) {
  require(s.alpha > 0, ErrorCode::InvalidArgument, "alpha must be positive");
  const double a = s.q / s.alpha;
  const double b = (s.alpha * s.p / params.m - s.alpha_prime * s.q) / (2.0 * params.hbar);
  return 0.5 * (a * a + b * b);
}

std::vector<ode::Segment> window_segments(std::span<const QuadraticTerm> terms, double t_start,
                                          double t_end) {
  struct Interval {
    double lo, hi, max_step;
  };
  std::vector<Interval> windows;
  for (const auto& term : terms) {
    if (term.k == 0.0) continue;
    const double w = 1.0 / std::sqrt(term.g);
    windows.push_back({term.t_peak - kWindowHalfWidth * w, term.t_peak + kWindowHalfWidth * w,
                       kWindowStepFraction * w});
  }
  std::sort(windows.begin(), windows.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& iv : windows) {
    if (!merged.empty() && iv.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, iv.hi);
      merged.back().max_step = std::min(merged.back().max_step, iv.max_step);
    } else {
      merged.push_back(iv);
    }
  }

  const double lo = std::min(t_start, t_end);
  const double hi = std::max(t_start, t_end);
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Ascending breakpoints with the step cap that applies up to each one.
  std::vector<ode::Segment> asc;
  double cursor = lo;
  for (const auto& iv : merged) {
    const double a = std::max(iv.lo, lo);
    const double b = std::min(iv.hi, hi);
    if (a >= b) continue;
    if (a > cursor) asc.push_back({a, inf});
    asc.push_back({b, iv.max_step});
    cursor = b;
  }
  if (cursor < hi || asc.empty()) asc.push_back({hi, inf});

  if (t_end >= t_start) return asc;
  // Backward: walk the same pieces from hi down to lo. The cap of piece i
  // covers (end_{i-1}, end_i].
  std::vector<ode::Segment> desc;
  for (std::size_t i = asc.size(); i-- > 0;) {
    const double end = i == 0 ? lo : asc[i - 1].t_end;
    desc.push_back({end, asc[i].max_step});
  }
  return desc;
}

TrajectorySolution::TrajectorySolution(PhysicalParams params, std::vector<QuadraticTerm> terms,
                                       std::shared_ptr<const Dense> dense)
    : params_(params), terms_(std::move(terms)), dense_(std::move(dense)) {
  const auto& ts = dense_->times();
  const auto& ys = dense_->values();
  samples_.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) samples_.push_back(to_state(ts[i], ys[i]));
}

std::optional<BarrierParams> TrajectorySolution::barrier() const {
  if (terms_.size() != 1 || terms_[0].center != 0.0) return std::nullopt;
  return BarrierParams{terms_[0].k, terms_[0].g, terms_[0].t_peak};
}

DynamicalState TrajectorySolution::evaluate(double t) const { return to_state(t, (*dense_)(t)); }

TrajectorySolution evolve_from(const DynamicalState& start, const PhysicalParams& params,
                               std::span<const QuadraticTerm> terms, double t_end,
                               IntegratorTolerance tol) {
  params.validate();
  for (const auto& term : terms) term.validate();
  require(all_finite({start.t, start.q, start.p, start.alpha, start.alpha_prime, start.phi, t_end}),
          ErrorCode::NonFinite, "start state and t_end must be finite");
  require(start.alpha > 0, ErrorCode::InvalidArgument, "alpha must be positive");
  require(t_end != start.t, ErrorCode::InvalidArgument, "empty integration span");
  require(tol.rtol > 0 && tol.atol > 0, ErrorCode::InvalidArgument, "tolerances must be positive");

  const double m = params.m;
  const double four_h2 = 4.0 * params.hbar * params.hbar;
  const double hbar = params.hbar;
  std::vector<QuadraticTerm> active(terms.begin(), terms.end());
  auto rhs = [&active, m, four_h2, hbar](double t, const State5& y) -> State5 {
    const Forcing f = forcing(active, t);
    const double a = y[2];
    const double inv_a2 = 1.0 / (a * a);
    return {y[1] / m, m * (f.w2 * y[0] - f.w2c), y[3], f.w2 * a + four_h2 * inv_a2 / a,
            hbar * inv_a2};
  };

  const auto segments = window_segments(active, start.t, t_end);
  ode::Options opt;
  opt.rtol = tol.rtol;
  opt.atol = tol.atol;
  const State5 y0{start.q, start.p, start.alpha, start.alpha_prime, start.phi};
  auto dense = std::make_shared<const TrajectorySolution::Dense>(
      ode::integrate<5>(rhs, start.t, y0, std::span<const ode::Segment>(segments), opt));

  // The width never approaches zero for a positive start; guard anyway since
  // every downstream formula divides by alpha.
  const double floor = 1e-12 * start.alpha;
  for (const auto& y : dense->values()) {
    if (!(y[2] > floor)) fail(ErrorCode::PositivityLost, "alpha fell below its positivity floor");
  }
  return TrajectorySolution(params, std::move(active), std::move(dense));
}

TrajectorySolution evolve_quadratic(const PhysicalParams& params, std::span<const QuadraticTerm> terms,
                                    double t_end, IntegratorTolerance tol) {
  params.validate();
  require(std::isfinite(t_end), ErrorCode::NonFinite, "t_end must be finite");
  require(t_end > params.t0, ErrorCode::InvalidArgument, "t_end must exceed t0");
  return evolve_from(initial_state(params), params, terms, t_end, tol);
}

TrajectorySolution evolve_barrier(const PhysicalParams& params, const BarrierParams& barrier,
                                  double t_end, IntegratorTolerance tol) {
  barrier.validate();
  const QuadraticTerm term = QuadraticTerm::from(barrier);
  return evolve_quadratic(params, std::span<const QuadraticTerm>(&term, 1), t_end, tol);
}

}  // namespace qsa
