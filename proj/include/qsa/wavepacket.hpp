#pragma once

// Exact Gaussian wavefunction, its density and the time-resolved transmission
// probability past a detector.

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "qsa/dynamics.hpp"
#include "qsa/exec.hpp"

namespace qsa {

using ComplexAmplitude = std::complex<double>;

struct DetectorParams {
  double x_T = 0.0;
};

/// psi(x,t) = (2m/(pi alpha^2))^(1/4) exp[-(x-q)^2 (m/alpha^2 - i m alpha'/(2 hbar alpha))]
///            exp[i p (x-q)/hbar] exp[i (p q - p0 q0)/(2 hbar)] exp[-i phi]
ComplexAmplitude psi(double x, const DynamicalState& state, const PhysicalParams& params);

/// |psi|^2 = sqrt(2m/(pi alpha^2)) exp(-2m (x-q)^2 / alpha^2).
double density(double x, const DynamicalState& state, const PhysicalParams& params);

/// Probability beyond the detector: 1/2 erfc(sqrt(2m) (x_T - q) / alpha).
double transmission(const DynamicalState& state, const PhysicalParams& params, const DetectorParams& det);

enum class CurveSource { free, barrier, perturbed, empirical };

/// Time-sampled T(x_T, t) plus a continuous evaluator. Analytic curves
/// evaluate the closed form on the dense trajectory; empirical curves
/// interpolate linearly between samples.
class TransmissionCurve {
 public:
  using Evaluator = std::function<double(double)>;

  TransmissionCurve(DetectorParams det, CurveSource source, double k, std::vector<double> times,
                    std::vector<double> values, Evaluator evaluator);

  /// Piecewise-linear curve through (times, values).
  static TransmissionCurve empirical(DetectorParams det, std::vector<double> times, std::vector<double> values);

  const DetectorParams& detector() const noexcept { return det_; }
  CurveSource source() const noexcept { return source_; }
  /// Barrier strength for barrier curves, 0 otherwise.
  double k() const noexcept { return k_; }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double t_begin() const noexcept { return times_.front(); }
  double t_end() const noexcept { return times_.back(); }
  double span() const noexcept { return times_.back() - times_.front(); }

  double operator()(double t) const;

 private:
  DetectorParams det_;
  CurveSource source_;
  double k_;
  std::vector<double> times_;
  std::vector<double> values_;
  Evaluator eval_;
};

/// Samples the analytic transmission on t_grid (which must lie inside the
/// solution span) and keeps the dense evaluator for root finding.
TransmissionCurve transmission_curve(std::shared_ptr<const TrajectorySolution> sol, const DetectorParams& det,
                                     std::span<const double> t_grid, Exec exec = Exec::parallel);

TransmissionCurve transmission_curve(const TrajectorySolution& sol, const DetectorParams& det,
                                     std::span<const double> t_grid, Exec exec = Exec::parallel);

/// Free-propagation curve from the closed-form evolution (no integration).
TransmissionCurve free_transmission_curve(const PhysicalParams& params, const DetectorParams& det,
                                          std::span<const double> t_grid);

/// n equispaced times covering [a, b] inclusive.
std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace qsa
