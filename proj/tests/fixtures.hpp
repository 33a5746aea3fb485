#pragma once

#include <algorithm>
#include <cmath>

#include "qsa/dynamics.hpp"

namespace fixtures {

// fig2 preset parameters (atomic units).
inline qsa::PhysicalParams fig2_params() { return {1.0, 1.0, -1000.0, 2.0, 5.0, 0.0}; }
inline qsa::BarrierParams fig2_barrier(double k) { return {k, 1.0 / 500.0, 500.0}; }

// fig1 preset parameters.
inline qsa::PhysicalParams fig1_params() { return {5e4, 1.0, -1000.0, 10.0, 1e7, 0.0}; }
inline qsa::BarrierParams fig1_barrier(double k) { return {k, 1e-10, 5e6}; }

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace fixtures
