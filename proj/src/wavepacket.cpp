#include "qsa/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "qsa/special.hpp"

namespace qsa {

ComplexAmplitude psi(double x, const DynamicalState& s, const PhysicalParams& params) {
  require(s.alpha > 0, ErrorCode::InvalidArgument, "alpha must be positive");
  const double m = params.m;
  const double hbar = params.hbar;
  const double a2 = s.alpha * s.alpha;
  const double d = x - s.q;
  const double pref = std::pow(2.0 * m / (std::numbers::pi * a2), 0.25);
  const double re = -m * d * d / a2;
  const double im = m * s.alpha_prime * d * d / (2.0 * hbar * s.alpha) + s.p * d / hbar +
                    (s.p * s.q - params.p0 * params.q0) / (2.0 * hbar) - s.phi;
  return std::polar(pref * std::exp(re), im);
}

double density(double x, const DynamicalState& s, const PhysicalParams& params) {
  require(s.alpha > 0, ErrorCode::InvalidArgument, "alpha must be positive");
  const double a2 = s.alpha * s.alpha;
  const double d = x - s.q;
  return std::sqrt(2.0 * params.m / (std::numbers::pi * a2)) * std::exp(-2.0 * params.m * d * d / a2);
}

double transmission(const DynamicalState& s, const PhysicalParams& params, const DetectorParams& det) {
  require(s.alpha > 0, ErrorCode::InvalidArgument, "alpha must be positive");
  return 0.5 * qsa::erfc(std::sqrt(2.0 * params.m) * (det.x_T - s.q) / s.alpha);
}

TransmissionCurve::TransmissionCurve(DetectorParams det, CurveSource source, double k, std::vector<double> times,
                                     std::vector<double> values, Evaluator evaluator)
    : det_(det), source_(source), k_(k), times_(std::move(times)), values_(std::move(values)),
      eval_(std::move(evaluator)) {
  require(times_.size() >= 2 && times_.size() == values_.size(), ErrorCode::InvalidArgument,
          "curve needs at least two samples and matching value count");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    require(times_[i] > times_[i - 1], ErrorCode::InvalidArgument, "curve times must be strictly increasing");
  }
  for (double v : values_) {
    require(v >= 0.0 && v <= 1.0, ErrorCode::InvalidArgument, "curve values must lie in [0,1]");
  }
  require(static_cast<bool>(eval_), ErrorCode::InvalidArgument, "curve evaluator missing");
}

TransmissionCurve TransmissionCurve::empirical(DetectorParams det, std::vector<double> times,
                                               std::vector<double> values) {
  auto ts = std::make_shared<const std::vector<double>>(times);
  auto vs = std::make_shared<const std::vector<double>>(values);
  Evaluator lerp = [ts, vs](double t) {
    const auto& T = *ts;
    if (t <= T.front()) return vs->front();
    if (t >= T.back()) return vs->back();
    const auto it = std::upper_bound(T.begin(), T.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - T.begin());
    if (T[i - 1] == t) return (*vs)[i - 1];
    const double w = (t - T[i - 1]) / (T[i] - T[i - 1]);
    return (1.0 - w) * (*vs)[i - 1] + w * (*vs)[i];
  };
  return TransmissionCurve(det, CurveSource::empirical, 0.0, std::move(times), std::move(values), std::move(lerp));
}

double TransmissionCurve::operator()(double t) const {
  require(t >= times_.front() && t <= times_.back(), ErrorCode::OutOfSpan, "curve evaluated outside its span");
  return eval_(t);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  require(n >= 2, ErrorCode::InvalidArgument, "linspace needs at least two points");
  std::vector<double> out(n);
  const double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + h * static_cast<double>(i);
  out.back() = b;
  return out;
}

TransmissionCurve transmission_curve(std::shared_ptr<const TrajectorySolution> sol, const DetectorParams& det,
                                     std::span<const double> t_grid, Exec exec) {
  require(sol != nullptr, ErrorCode::InvalidArgument, "null trajectory solution");
  require(std::isfinite(det.x_T), ErrorCode::NonFinite, "detector position must be finite");
  require(t_grid.size() >= 2, ErrorCode::InvalidArgument, "time grid needs at least two points");
  for (double t : t_grid) {
    require(sol->contains(t), ErrorCode::OutOfSpan, "time grid extends outside the integrated span");
  }

  std::vector<double> times(t_grid.begin(), t_grid.end());
  std::vector<double> values(times.size());
  const auto n = static_cast<std::ptrdiff_t>(times.size());
  const PhysicalParams params = sol->params();
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      values[u] = transmission(sol->evaluate(times[u]), params, det);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      values[u] = transmission(sol->evaluate(times[u]), params, det);
    }
  }

  CurveSource source = CurveSource::free;
  double k = 0.0;
  const auto& terms = sol->terms();
  const bool any = std::any_of(terms.begin(), terms.end(), [](const QuadraticTerm& t) { return t.k != 0.0; });
  if (any) {
    if (auto b = sol->barrier()) {
      source = CurveSource::barrier;
      k = b->k;
    } else {
      source = CurveSource::perturbed;
    }
  }
  TransmissionCurve::Evaluator eval = [sol, det](double t) {
    return transmission(sol->evaluate(t), sol->params(), det);
  };
  return TransmissionCurve(det, source, k, std::move(times), std::move(values), std::move(eval));
}

TransmissionCurve transmission_curve(const TrajectorySolution& sol, const DetectorParams& det,
                                     std::span<const double> t_grid, Exec exec) {
  return transmission_curve(std::make_shared<const TrajectorySolution>(sol), det, t_grid, exec);
}

TransmissionCurve free_transmission_curve(const PhysicalParams& params, const DetectorParams& det,
                                          std::span<const double> t_grid) {
  params.validate();
  require(std::isfinite(det.x_T), ErrorCode::NonFinite, "detector position must be finite");
  require(t_grid.size() >= 2, ErrorCode::InvalidArgument, "time grid needs at least two points");
  std::vector<double> times(t_grid.begin(), t_grid.end());
  std::vector<double> values(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) values[i] = transmission(evolve_free(params, times[i]), params, det);
  TransmissionCurve::Evaluator eval = [params, det](double t) {
    return transmission(evolve_free(params, t), params, det);
  };
  return TransmissionCurve(det, CurveSource::free, 0.0, std::move(times), std::move(values), std::move(eval));
}

}  // namespace qsa
