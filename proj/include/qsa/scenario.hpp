#pragma once

// A complete run description: packet, barrier template, detector, thresholds
// and output grid. Shared by the sweep, the protocol and the CLI.

#include <string>
#include <string_view>
#include <vector>

#include "qsa/dynamics.hpp"
#include "qsa/wavepacket.hpp"

namespace qsa {

struct Scenario {
  std::string preset;
  PhysicalParams params;
  double g = 1.0;
  double t_b = 0.0;
  std::vector<double> k_list;
  DetectorParams det;
  double eps_dev = 1e-4;
  double eps_w = 1e-3;
  double t_end = 1.0;
  std::size_t grid_points = 10001;

  BarrierParams barrier(double k) const { return {k, g, t_b}; }
  std::vector<double> time_grid() const { return linspace(params.t0, t_end, grid_points); }
  /// Barrier-to-detector distance; the barrier is centred at x = 0.
  double distance() const { return det.x_T; }
  void validate() const;
};

/// q0=-1e3, p0=10, m=5e4, alpha0^2=1e7, t_b=5e6, g=1e-10, k={1,3,6,9,15}e-11,
/// x_T=5e5, t_end=3.5e9.
Scenario preset_fig1();
/// q0=-1e3, p0=2, m=1, alpha0^2=5, t_b=500, g=1/500,
/// k={1/10000,1/5000,1/2500,1/1000,1/500,1/200,1/100}, x_T=500, t_end=1000.
Scenario preset_fig2();
/// Looks up "fig1" / "fig2"; InvalidArgument otherwise.
Scenario preset(std::string_view name);

}  // namespace qsa
