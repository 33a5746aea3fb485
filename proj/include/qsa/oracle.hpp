#pragma once

// Independent grid solver for the 1D time-dependent Schroedinger equation
// with a sum of transient quadratic potentials. Crank-Nicolson in time with a
// compact (Numerov) or plain 3-point Laplacian, Dirichlet walls and an edge
// leak guard. The packet can be carried in a Galilean co-moving frame so the
// grid only has to resolve the momentum spread, not the mean momentum.

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qsa/dynamics.hpp"
#include "qsa/exec.hpp"

namespace qsa {

struct Grid {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t n = 256;

  double dx() const { return (x_max - x_min) / static_cast<double>(n - 1); }
  double x(std::size_t i) const { return x_min + dx() * static_cast<double>(i); }
  void validate() const;
};

/// Frame moving with constant velocity v from time t0; lab position of grid
/// point i at time t is grid.x(i) + v (t - t0).
struct Frame {
  double velocity = 0.0;
  double t0 = 0.0;
};

struct GridState {
  Grid grid;
  double t = 0.0;
  double m = 1.0;
  double hbar = 1.0;
  Frame frame;
  /// Amplitude in the frame; equal to psi when frame.velocity = 0.
  std::vector<std::complex<double>> values;

  double offset() const { return frame.velocity * (t - frame.t0); }
  /// Lab-frame position of point i.
  double x(std::size_t i) const { return grid.x(i) + offset(); }
  /// Lab-frame wavefunction at point i.
  std::complex<double> psi(std::size_t i) const;
  double density(std::size_t i) const { return std::norm(values[i]); }
  /// sum |psi|^2 dx
  double norm() const;
};

/// V(x,t) = sum_i -1/2 m k_i exp(-g_i (t - t_i)^2) (x - c_i)^2.
struct PotentialSpec {
  double m = 1.0;
  std::vector<QuadraticTerm> terms;

  static PotentialSpec from(const PhysicalParams& params, const BarrierParams& barrier);
  double operator()(double x, double t) const;
  void validate() const;
};

enum class Laplacian { three_point, numerov };

struct OracleOptions {
  Laplacian scheme = Laplacian::numerov;
  /// Carry the packet in a frame moving at p0/m.
  bool comoving = true;
  /// Largest allowed density within the outermost edge_points on either side.
  double edge_tol = 1e-10;
  std::size_t edge_points = 4;
  Exec exec = Exec::parallel;
};

/// Samples the initial Gaussian. SupportOverflow unless q0 +- 12 sigma0 lies
/// inside the grid.
GridState init_gaussian(const Grid& grid, const PhysicalParams& params, const OracleOptions& opt = {});

/// One Crank-Nicolson step with V sampled at t + dt/2.
GridState step(const GridState& state, const PotentialSpec& pot, double dt, const OracleOptions& opt = {});

struct GridEvolution {
  /// One state per requested output time (the initial state when the only
  /// output time is t0), truncated at an edge leak in partial mode.
  std::vector<GridState> states;
  std::size_t steps = 0;
  std::optional<double> edge_leak_time;
};

/// Steps through ascending output times (each >= state0.t) with steps no
/// larger than dt, landing exactly on every output time. Throws EdgeLeak,
/// unless allow_partial is set, in which case the run stops and reports the
/// leak time.
GridEvolution evolve_grid(const GridState& state0, const PotentialSpec& pot, std::span<const double> output_times,
                          double dt, const OracleOptions& opt = {}, bool allow_partial = false);
GridEvolution evolve_grid(const GridState& state0, const PotentialSpec& pot, double t_end, double dt,
                          const OracleOptions& opt = {});

/// As evolve_grid, but hands each output state to observe instead of storing
/// it. Returns the step count; throws EdgeLeak.
std::size_t evolve_grid_observe(const GridState& state0, const PotentialSpec& pot,
                                std::span<const double> output_times, double dt, const OracleOptions& opt,
                                const std::function<void(const GridState&)>& observe);

/// Probability beyond x_T: trapezoid rule with a linear sub-cell piece at x_T.
double transmission_grid(const GridState& state, double x_T);

/// Analytic psi sampled on the state's grid and frame at time t.
GridState sample_analytic(const TrajectorySolution& sol, const GridState& like, double t);

struct CompareReport {
  std::vector<double> times;
  std::vector<double> dT;
  std::vector<double> l2;
  double max_dT = 0.0;
  double max_l2 = 0.0;
};

/// max |T_analytic - T_grid| and max min_theta || psi_grid - e^{i theta} psi_analytic ||
/// over the given grid states. InvalidArgument if m or hbar differ.
CompareReport compare(const TrajectorySolution& sol, std::span<const GridState> states, double x_T);

/// CSV `x,re,im,density` of the lab-frame wavefunction.
void write_snapshot(std::ostream& out, const GridState& state);

}  // namespace qsa
