#pragma once

// Classical centre / Ermakov width dynamics behind the exact Gaussian solution
// in a transient inverted-parabola potential.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qsa/ode.hpp"

namespace qsa {

/// Packet and unit parameters (atomic units).
struct PhysicalParams {
  double m = 1.0;
  double hbar = 1.0;
  double q0 = 0.0;
  double p0 = 0.0;
  double alpha0_sq = 1.0;
  double t0 = 0.0;

  void validate() const;
  /// Position standard deviation of the initial packet, alpha0 / (2 sqrt m).
  double sigma0() const;
  double group_velocity() const { return p0 / m; }
};

/// Transient barrier V(x,t) = -1/2 m k exp(-g (t - t_b)^2) x^2.
struct BarrierParams {
  double k = 0.0;
  double g = 1.0;
  double t_b = 0.0;

  void validate() const;
};

/// One term -1/2 m k exp(-g (t - t_peak)^2) (x - center)^2 of a sum of
/// transient quadratic potentials. center = 0 reproduces BarrierParams.
struct QuadraticTerm {
  double k = 0.0;
  double g = 1.0;
  double t_peak = 0.0;
  double center = 0.0;

  static QuadraticTerm from(const BarrierParams& b) { return {b.k, b.g, b.t_b, 0.0}; }
  void validate() const;
};

struct DynamicalState {
  double t = 0.0;
  double q = 0.0;
  double p = 0.0;
  double alpha = 1.0;
  double alpha_prime = 0.0;
  double phi = 0.0;
};

double window(double t, const BarrierParams& barrier);
double omega_sq(double t, const BarrierParams& barrier);

/// Closed-form free evolution (k = 0).
DynamicalState evolve_free(const PhysicalParams& params, double t);

DynamicalState initial_state(const PhysicalParams& params);

/// Conserved Ermakov–Lewis invariant
///   I = 1/2 [ (q/alpha)^2 + ((alpha p/m - alpha' q) / (2 hbar))^2 ].
/// Only conserved for potentials centred at x = 0.
double ermakov_invariant(const DynamicalState& state, const PhysicalParams& params);

struct IntegratorTolerance {
  double rtol = 1e-10;
  double atol = 1e-12;
};

/// Immutable integrated trajectory with dense output. Samples are the
/// integrator step endpoints and are reproduced exactly by evaluate().
class TrajectorySolution {
 public:
  using Dense = ode::DenseSolution<5>;

  TrajectorySolution(PhysicalParams params, std::vector<QuadraticTerm> terms,
                     std::shared_ptr<const Dense> dense);

  const PhysicalParams& params() const noexcept { return params_; }
  /// The single centred barrier, when the potential is of that form.
  std::optional<BarrierParams> barrier() const;
  const std::vector<QuadraticTerm>& terms() const noexcept { return terms_; }
  const std::vector<DynamicalState>& samples() const noexcept { return samples_; }

  double t_begin() const noexcept { return dense_->t_first(); }
  double t_end() const noexcept { return dense_->t_last(); }
  bool contains(double t) const noexcept { return dense_->contains(t); }

  DynamicalState evaluate(double t) const;
  std::size_t steps() const noexcept { return dense_->steps(); }

 private:
  PhysicalParams params_;
  std::vector<QuadraticTerm> terms_;
  std::shared_ptr<const Dense> dense_;
  std::vector<DynamicalState> samples_;
};

/// Integrates q' = p/m, p' = m w2 q, alpha' = beta, beta' = w2 alpha + 4 hbar^2/alpha^3,
/// phi' = hbar/alpha^2 from the initial packet to t_end.
TrajectorySolution evolve_barrier(const PhysicalParams& params, const BarrierParams& barrier,
                                  double t_end, IntegratorTolerance tol = {});

/// Same system for a sum of transient quadratic terms with arbitrary centres:
/// p' = m sum w2_i (q - c_i). q and alpha stay exact for any centres, so the
/// density and transmission remain valid; the phase phi is only the full
/// wavefunction phase when every centre is 0.
TrajectorySolution evolve_quadratic(const PhysicalParams& params, std::span<const QuadraticTerm> terms,
                                    double t_end, IntegratorTolerance tol = {});

/// Continues from an arbitrary state (either time direction).
TrajectorySolution evolve_from(const DynamicalState& start, const PhysicalParams& params,
                               std::span<const QuadraticTerm> terms, double t_end,
                               IntegratorTolerance tol = {});

/// Integration segments that land on the edges of every transient window and
/// cap the step inside it, so a long free stretch cannot step over a barrier.
std::vector<ode::Segment> window_segments(std::span<const QuadraticTerm> terms, double t_start,
                                          double t_end);

/// Total w^2(t) = sum_i k_i exp(-g_i (t - t_i)^2) and the centre-weighted sum
/// sum_i w_i^2(t) c_i.
struct Forcing {
  double w2 = 0.0;
  double w2c = 0.0;
};
Forcing forcing(std::span<const QuadraticTerm> terms, double t);

}  // namespace qsa
