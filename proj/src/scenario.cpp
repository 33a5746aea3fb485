#include "qsa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qsa {

void Scenario::validate() const {
  params.validate();
  require(std::isfinite(g) && std::isfinite(t_b) && std::isfinite(det.x_T) && std::isfinite(t_end),
          ErrorCode::NonFinite, "scenario values must be finite");
  require(g > 0, ErrorCode::InvalidArgument, "g must be positive");
  require(det.x_T > 0, ErrorCode::InvalidArgument, "detector must sit to the right of the barrier (x_T > 0)");
  require(eps_dev > 0 && eps_dev < 1, ErrorCode::InvalidArgument, "eps_dev must lie in (0,1)");
  require(eps_w > 0 && eps_w < 1, ErrorCode::InvalidArgument, "eps_w must lie in (0,1)");
  require(t_end > params.t0, ErrorCode::InvalidArgument, "t_end must exceed t0");
  require(grid_points >= 2, ErrorCode::InvalidArgument, "grid_points must be at least 2");
  for (double k : k_list) {
    require(std::isfinite(k) && k >= 0, ErrorCode::InvalidArgument, "k values must be finite and non-negative");
  }
}

Scenario preset_fig1() {
  Scenario s;
  s.preset = "fig1";
  s.params = {5e4, 1.0, -1e3, 10.0, 1e7, 0.0};
  s.g = 1e-10;
  s.t_b = 5e6;
  s.k_list = {1e-11, 3e-11, 6e-11, 9e-11, 15e-11};
  s.det = {5e5};
  s.t_end = 3.5e9;
  s.grid_points = 20001;
  return s;
}

Scenario preset_fig2() {
  Scenario s;
  s.preset = "fig2";
  s.params = {1.0, 1.0, -1e3, 2.0, 5.0, 0.0};
  s.g = 1.0 / 500;
  s.t_b = 500.0;
  s.k_list = {1.0 / 10000, 1.0 / 5000, 1.0 / 2500, 1.0 / 1000, 1.0 / 500, 1.0 / 200, 1.0 / 100};
  s.det = {500.0};
  s.t_end = 1000.0;
  s.grid_points = 10001;
  return s;
}

Scenario preset(std::string_view name) {
  if (name == "fig1") return preset_fig1();
  if (name == "fig2") return preset_fig2();
  fail(ErrorCode::InvalidArgument, "unknown preset '" + std::string(name) + "' (expected fig1 or fig2)");
}

}  // namespace qsa
