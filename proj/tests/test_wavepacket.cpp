#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <random>

#include "doctest.h"
#include "checks.hpp"
#include "fixtures.hpp"
#include "qsa/quadrature.hpp"
#include "qsa/wavepacket.hpp"

using namespace qsa;
using fixtures::fig2_barrier;
using fixtures::fig2_params;

using checks::tdse_residual;

TEST_CASE("psi at the packet centre and its Gaussian envelope") {
  const auto p = fig2_params();
  const auto s = initial_state(p);
  const double peak = std::pow(2.0 * p.m / (std::numbers::pi * p.alpha0_sq), 0.25);
  CHECK(std::abs(psi(p.q0, s, p)) == doctest::Approx(peak).epsilon(1e-15));
  CHECK(std::arg(psi(p.q0, s, p)) == doctest::Approx(0.0));
  const double d = 1.3;
  CHECK(std::abs(psi(p.q0 + d, s, p)) ==
        doctest::Approx(peak * std::exp(-p.m * d * d / p.alpha0_sq)).epsilon(1e-14));
  CHECK(std::norm(psi(p.q0 + d, s, p)) == doctest::Approx(density(p.q0 + d, s, p)).epsilon(1e-14));
}

TEST_CASE("psi satisfies the Schroedinger equation (free)") {
  const auto p = fig2_params();
  const auto sol = evolve_barrier(p, fig2_barrier(0.0), 1000.0, {1e-13, 1e-13});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ut(10.0, 990.0), ux(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = ut(rng);
    const auto s = sol.evaluate(t);
    const double x = s.q + ux(rng) * s.alpha / std::sqrt(p.m);
    worst = std::max(worst, tdse_residual(sol, x, t, 0.0));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("psi satisfies the Schroedinger equation (barrier, k = 1/500)") {
  const auto p = fig2_params();
  const auto b = fig2_barrier(1.0 / 500);
  const auto sol = evolve_barrier(p, b, 1000.0, {1e-13, 1e-13});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(10.0, 990.0), ux(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = ut(rng);
    const auto s = sol.evaluate(t);
    const double x = s.q + ux(rng) * s.alpha / std::sqrt(p.m);
    worst = std::max(worst, tdse_residual(sol, x, t, omega_sq(t, b)));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("density is normalised and symmetric about q") {
  const auto p = fig2_params();
  const auto sol = evolve_barrier(p, fig2_barrier(1.0 / 500), 1000.0);
  for (double t : {0.0, 300.0, 500.0, 1000.0}) {
    const auto s = sol.evaluate(t);
    const double w = s.alpha / std::sqrt(p.m);
    const double norm = quad::integrate<double>([&](double x) { return density(x, s, p); }, s.q - 12 * w,
                                                s.q + 12 * w, {1e-13, 1e-13, 20000, 8});
    CAPTURE(t);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    for (double d : {0.1, 1.0, 7.0}) CHECK(density(s.q + d * w, s, p) == density(s.q - d * w, s, p));
  }
}

TEST_CASE("transmission agrees with the integral of the density") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PhysicalParams p{1.0 + u(rng), 1.0, 0.0, 1.0, 4.0, 0.0};
  for (int i = 0; i < 50; ++i) {
    DynamicalState s;
    s.q = -50 + 100 * u(rng);
    s.alpha = 0.5 + 20 * u(rng);
    s.alpha_prime = u(rng);
    const double w = s.alpha / std::sqrt(p.m);
    const DetectorParams det{s.q + (u(rng) - 0.5) * 6 * w};
    const double integral = quad::integrate<double>([&](double x) { return density(x, s, p); }, det.x_T,
                                                    s.q + 30 * w, {1e-14, 1e-13, 20000, 4});
    CAPTURE(i);
    CHECK(std::abs(transmission(s, p, det) - integral) <= 1e-10);
  }
  DynamicalState s;
  s.q = 5.0;
  s.alpha = 2.0;
  CHECK(transmission(s, p, {s.q}) == 0.5);
  CHECK(transmission(s, p, {s.q - 30 * s.alpha}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(transmission(s, p, {s.q + 30 * s.alpha}) == 0.0);
}

TEST_CASE("transmission curves: range, monotone free curve, early zero") {
  const auto p = fig2_params();
  auto free_sol = std::make_shared<const TrajectorySolution>(evolve_barrier(p, fig2_barrier(0.0), 1000.0));
  const auto grid = linspace(0.0, 1000.0, 2001);
  const auto curve = transmission_curve(free_sol, {500.0}, grid);
  CHECK(curve.source() == CurveSource::free);
  CHECK(curve.values().front() == 0.0);
  for (std::size_t i = 1; i < curve.values().size(); ++i) CHECK(curve.values()[i] >= curve.values()[i - 1]);
  for (double v : curve.values()) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(curve(750.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_THROWS_AS(curve(1000.5), Error);

  auto bar = std::make_shared<const TrajectorySolution>(evolve_barrier(p, fig2_barrier(1.0 / 500), 1000.0));
  const auto serial = transmission_curve(bar, {500.0}, grid, Exec::serial);
  const auto parallel = transmission_curve(bar, {500.0}, grid, Exec::parallel);
  CHECK(serial.source() == CurveSource::barrier);
  CHECK(serial.k() == 1.0 / 500);
  CHECK(serial.values() == parallel.values());
  for (double v : serial.values()) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(serial(123.4) == transmission(bar->evaluate(123.4), p, {500.0}));

  const std::vector<double> outside{0.0, 1001.0};
  CHECK_THROWS_AS(transmission_curve(bar, {500.0}, outside), Error);
}

TEST_CASE("empirical curves interpolate and validate") {
  const auto c = TransmissionCurve::empirical({1.0}, {0.0, 1.0, 3.0}, {0.0, 0.5, 0.9});
  CHECK(c(0.5) == doctest::Approx(0.25));
  CHECK(c(1.0) == 0.5);
  CHECK(c(2.0) == doctest::Approx(0.7));
  CHECK(c.source() == CurveSource::empirical);
  CHECK_THROWS_AS(TransmissionCurve::empirical({1.0}, {0.0, 0.0}, {0.0, 0.1}), Error);
  CHECK_THROWS_AS(TransmissionCurve::empirical({1.0}, {0.0, 1.0}, {0.0, 1.1}), Error);
  CHECK_THROWS_AS(TransmissionCurve::empirical({1.0}, {0.0}, {0.0}), Error);
}
