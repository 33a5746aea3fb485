#pragma once

// Classical trajectory ensemble and the Van Vleck propagator for the
// transient inverted-parabola Lagrangian L = 1/2 m qdot^2 + 1/2 m w^2(t) q^2.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "qsa/dynamics.hpp"
#include "qsa/exec.hpp"
#include "qsa/quadrature.hpp"

namespace qsa {

struct EnsembleConfig {
  std::size_t n_traj = 200;
  std::uint64_t seed = 1;
  std::vector<double> t_grid;
};

struct Trajectory {
  double x_init = 0.0;
  std::vector<double> t;
  std::vector<double> q;
};

/// x_i ~ N(q0, alpha0^2/(4m)), i.i.d., one derived seed per index so the draw
/// does not depend on thread scheduling.
std::vector<double> sample_initial(const PhysicalParams& params, const EnsembleConfig& cfg);

/// Every path starts at its x_init with momentum p0 and follows q'' = w^2 q.
std::vector<Trajectory> integrate_ensemble(const PhysicalParams& params, const BarrierParams& barrier,
                                           const EnsembleConfig& cfg, Exec exec = Exec::parallel);

/// CSV `traj_id,t,q`.
void write_csv(std::ostream& out, const std::vector<Trajectory>& ensemble);

/// Converged boundary-value path from (x_src, t0) to (x_dst, t).
struct ClassicalPath {
  double x_src = 0.0;
  double x_dst = 0.0;
  double t0 = 0.0;
  double t = 0.0;
  double v0 = 0.0;
  double p_src = 0.0;
  double s_cl = 0.0;
  double residual = 0.0;
  int iterations = 0;
  /// Dense (q, qdot, S) along the path.
  std::shared_ptr<const ode::DenseSolution<3>> path;
};

struct ShootingOptions {
  int max_iterations = 100;
  double rtol = 1e-12;
  double atol = 1e-14;
};

/// Secant shooting on the initial velocity; the action is accumulated as an
/// extra ODE component. NoConvergence after max_iterations, Caustic when the
/// endpoint does not depend on the initial velocity.
ClassicalPath shoot(double x_src, double x_dst, double t0, double t, const PhysicalParams& params,
                    const BarrierParams& barrier, ShootingOptions opt = {});

struct ActionResult {
  double s_cl = 0.0;
  double p_src = 0.0;
};
ActionResult classical_action(double x_src, double x_dst, double t0, double t, const PhysicalParams& params,
                              const BarrierParams& barrier, ShootingOptions opt = {});

struct PropagatorSample {
  double x_src = 0.0;
  double x_dst = 0.0;
  double t0 = 0.0;
  double t = 0.0;
  double s_cl = 0.0;
  double d2s = 0.0;
  std::complex<double> amplitude;
};

/// K = sqrt((i/(2 pi hbar)) d2s) exp(i S/hbar) with d2s = -dp_src/dx_dst by a
/// central difference over repeated shooting. The principal root is the
/// branch continued from the free case as long as d2s < 0; Caustic otherwise.
PropagatorSample van_vleck(double x_src, double x_dst, double t0, double t, const PhysicalParams& params,
                           const BarrierParams& barrier, ShootingOptions opt = {});

/// Fundamental solutions of q'' = w^2 q from t0 to t: u(t0)=1, u'(t0)=0 and
/// w(t0)=0, w'(t0)=1. Every classical path is x' u + v0 w, so this map gives
/// the action and kernel in closed form:
///   v0 = (x - x' u)/w,  S = m/2 [x (x' u' + v0 w') - x' v0],  d2s = -m/w.
struct FundamentalMap {
  double t0 = 0.0;
  double t = 0.0;
  double m = 1.0;
  double hbar = 1.0;
  double u = 1.0;
  double du = 0.0;
  double w = 0.0;
  double dw = 1.0;

  double v0(double x_src, double x_dst) const { return (x_dst - x_src * u) / w; }
  double action(double x_src, double x_dst) const;
  double d2s() const { return -m / w; }
  std::complex<double> kernel(double x_src, double x_dst) const;
};

FundamentalMap fundamental_map(const PhysicalParams& params, const BarrierParams& barrier, double t0, double t);

struct KernelOptions {
  quad::AdaptiveOptions quad{1e-10, 1e-9, 200000, 64};
  /// Half-width of the source window in initial standard deviations.
  double support_sigmas = 10.0;
  Exec exec = Exec::parallel;
};

/// psi(x,t) = integral K(x,x',t-t0) psi(x',t0) dx' over q0 +- 10 sigma0 by
/// adaptive Gauss-Kronrod, one x point per task. Kernel values come from the
/// fundamental map. QuadratureNonConvergence carries the achieved estimate.
std::vector<std::complex<double>> propagate_by_kernel(const PhysicalParams& params, const BarrierParams& barrier,
                                                      double t, std::span<const double> x_points,
                                                      const KernelOptions& opt = {});

}  // namespace qsa
