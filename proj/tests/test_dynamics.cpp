#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "qsa/dynamics.hpp"

using namespace qsa;
using fixtures::fig2_barrier;
using fixtures::fig2_params;
using fixtures::rel_diff;

namespace {

// Independent fixed-step classical RK4 on the same first-order system; the
// oracle for the adaptive integrator.
std::array<double, 5> rk4_reference(const PhysicalParams& p, const BarrierParams& b, double t_end, double h) {
  auto f = [&](double t, const std::array<double, 5>& y) {
    const double w2 = b.k * std::exp(-b.g * (t - b.t_b) * (t - b.t_b));
    return std::array<double, 5>{y[1] / p.m, p.m * w2 * y[0], y[3],
                                 w2 * y[2] + 4 * p.hbar * p.hbar / std::pow(y[2], 3),
                                 p.hbar / (y[2] * y[2])};
  };
  std::array<double, 5> y{p.q0, p.p0, std::sqrt(p.alpha0_sq), 0.0, 0.0};
  const auto n = static_cast<long>(std::llround((t_end - p.t0) / h));
  const double dt = (t_end - p.t0) / static_cast<double>(n);
  double t = p.t0;
  for (long i = 0; i < n; ++i) {
    auto k1 = f(t, y);
    std::array<double, 5> tmp;
    for (int j = 0; j < 5; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
    auto k2 = f(t + 0.5 * dt, tmp);
    for (int j = 0; j < 5; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
    auto k3 = f(t + 0.5 * dt, tmp);
    for (int j = 0; j < 5; ++j) tmp[j] = y[j] + dt * k3[j];
    auto k4 = f(t + dt, tmp);
    for (int j = 0; j < 5; ++j) y[j] += dt / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    t += dt;
  }
  return y;
}

}  // namespace

TEST_CASE("window and omega_sq") {
  const BarrierParams b{1.0 / 500, 1.0 / 500, 500.0};
  const double w = 1.0 / std::sqrt(b.g);
  CHECK(window(b.t_b, b) == 1.0);
  CHECK(window(b.t_b + w, b) == doctest::Approx(0.3678794).epsilon(1e-7));
  CHECK(window(b.t_b - w, b) == doctest::Approx(window(b.t_b + w, b)).epsilon(1e-12));
  CHECK(omega_sq(b.t_b, b) == b.k);
  CHECK(omega_sq(b.t_b + w, b) == doctest::Approx(b.k * std::exp(-1.0)).epsilon(1e-14));
  const BarrierParams zero{0.0, 0.3, 2.0};
  for (double t : {-10.0, 0.0, 2.0, 7.5}) CHECK(omega_sq(t, zero) == 0.0);
}

TEST_CASE("evolve_free closed form") {
  const auto p = fig2_params();
  const auto s = evolve_free(p, 500.0);
  CHECK(s.q == 0.0);
  CHECK(s.p == 2.0);
  CHECK(s.alpha * s.alpha == doctest::Approx(200005.0).epsilon(1e-14));

  const auto s0 = evolve_free(p, p.t0);
  CHECK(s0.q == p.q0);
  CHECK(s0.p == p.p0);
  CHECK(s0.alpha == std::sqrt(p.alpha0_sq));
  CHECK(s0.alpha_prime == 0.0);
  CHECK(s0.phi == 0.0);

  CHECK_THROWS_AS(evolve_free(p, -1.0), Error);
}

TEST_CASE("evolve_free: alpha'' = 4 hbar^2 / alpha^3 by central differences") {
  const PhysicalParams p{1.7, 0.8, 3.0, -1.0, 2.3, 0.0};
  for (double t : {0.5, 3.0, 17.0, 250.0}) {
    const double h = 1e-3 * std::max(1.0, t);
    const double am = evolve_free(p, t - h).alpha;
    const double a0 = evolve_free(p, t).alpha;
    const double ap = evolve_free(p, t + h).alpha;
    const double fd = (ap - 2 * a0 + am) / (h * h);
    const double exact = 4 * p.hbar * p.hbar / std::pow(a0, 3);
    CAPTURE(t);
    CHECK(rel_diff(fd, exact) <= 1e-5);
    // alpha' also matches the derivative of the closed form.
    CHECK(rel_diff((ap - am) / (2 * h), evolve_free(p, t).alpha_prime) <= 1e-6);
    // phi' = hbar / alpha^2.
    const double dphi = (evolve_free(p, t + h).phi - evolve_free(p, t - h).phi) / (2 * h);
    CHECK(rel_diff(dphi, p.hbar / (a0 * a0)) <= 1e-6);
  }
}

TEST_CASE("ermakov_invariant examples") {
  const auto p = fig2_params();
  CHECK(ermakov_invariant(initial_state(p), p) == doctest::Approx(100002.5).epsilon(1e-14));
  DynamicalState s;
  s.q = 0.0;
  s.p = 0.0;
  s.alpha = 3.0;
  s.alpha_prime = 0.4;
  CHECK(ermakov_invariant(s, p) == 0.0);
  s.alpha = 0.0;
  CHECK_THROWS_AS(ermakov_invariant(s, p), Error);
}

TEST_CASE("evolve_barrier with k = 0 agrees with the closed form") {
  const auto p = fig2_params();
  const IntegratorTolerance tol{};
  const auto sol = evolve_barrier(p, fig2_barrier(0.0), 1000.0, tol);
  for (const auto& s : sol.samples()) {
    const auto f = evolve_free(p, s.t);
    CAPTURE(s.t);
    CHECK(std::abs(s.q - f.q) <= 10 * tol.rtol * std::max(1.0, std::abs(f.q)));
    CHECK(std::abs(s.p - f.p) <= 10 * tol.rtol * std::abs(f.p));
    CHECK(std::abs(s.alpha - f.alpha) <= 10 * tol.rtol * f.alpha);
    CHECK(std::abs(s.alpha_prime - f.alpha_prime) <= 10 * tol.rtol * std::max(1.0, f.alpha_prime));
    CHECK(std::abs(s.phi - f.phi) <= 10 * tol.rtol * std::max(1.0, f.phi));
  }
}

TEST_CASE("evolve_barrier: free limit k = 1e-15") {
  const auto p = fig2_params();
  const auto sol = evolve_barrier(p, fig2_barrier(1e-15), 1000.0);
  for (double t = 0.0; t <= 1000.0; t += 12.5) {
    const auto s = sol.evaluate(t);
    const auto f = evolve_free(p, t);
    CAPTURE(t);
    CHECK(std::abs(s.q - f.q) <= 1e-9 * std::max(1.0, std::abs(f.q)));
    CHECK(rel_diff(s.alpha, f.alpha) <= 1e-9);
  }
}

TEST_CASE("evolve_barrier: Ermakov invariant conserved (fig2, k = 1/500)") {
  const auto p = fig2_params();
  const auto sol = evolve_barrier(p, fig2_barrier(1.0 / 500), 1000.0);
  const double i0 = ermakov_invariant(sol.samples().front(), p);
  double worst = 0.0;
  for (const auto& s : sol.samples()) worst = std::max(worst, std::abs(ermakov_invariant(s, p) - i0) / i0);
  CHECK(worst <= 1e-8);
}

TEST_CASE("evolve_barrier: agrees with a fixed-step reference at 1/100 the mean step") {
  const auto p = fig2_params();
  const auto b = fig2_barrier(1.0 / 500);
  const auto sol = evolve_barrier(p, b, 1000.0);
  const double mean_step = 1000.0 / static_cast<double>(sol.steps());
  const auto ref = rk4_reference(p, b, 1000.0, mean_step / 100.0);
  const auto end = sol.evaluate(1000.0);
  CHECK(rel_diff(end.q, ref[0]) <= 1e-6);
  CHECK(rel_diff(end.alpha, ref[2]) <= 1e-6);
}

TEST_CASE("evolve_barrier: p = m dq/dt along the dense output") {
  const auto p = fig2_params();
  const auto sol = evolve_barrier(p, fig2_barrier(1.0 / 500), 1000.0);
  for (double t = 5.0; t < 1000.0; t += 23.0) {
    const double h = 1e-3;
    const double dq = (sol.evaluate(t + h).q - sol.evaluate(t - h).q) / (2 * h);
    const auto s = sol.evaluate(t);
    CAPTURE(t);
    CHECK(std::abs(p.m * dq - s.p) <= 1e-6 * std::max(1.0, std::abs(s.p)));
  }
}

TEST_CASE("evolve_barrier: dense output reproduces samples and alpha stays positive") {
  const auto p = fig2_params();
  const auto sol = evolve_barrier(p, fig2_barrier(1.0 / 100), 1000.0);
  for (const auto& s : sol.samples()) {
    const auto e = sol.evaluate(s.t);
    CHECK(e.q == s.q);
    CHECK(e.alpha == s.alpha);
    CHECK(s.alpha > 0.0);
  }
  for (std::size_t i = 1; i < sol.samples().size(); ++i) CHECK(sol.samples()[i].t > sol.samples()[i - 1].t);
  CHECK(sol.barrier().has_value());
  CHECK(sol.barrier()->k == 1.0 / 100);
}

TEST_CASE("time reversal of the free evolution") {
  const auto p = fig2_params();
  const auto fwd = evolve_barrier(p, fig2_barrier(0.0), 800.0);
  const auto back = evolve_from(fwd.evaluate(800.0), p, {}, p.t0);
  const auto s = back.evaluate(p.t0);
  CHECK(rel_diff(s.q, p.q0) <= 1e-7);
  CHECK(rel_diff(s.p, p.p0) <= 1e-7);
  CHECK(rel_diff(s.alpha, std::sqrt(p.alpha0_sq)) <= 1e-7);
  CHECK(std::abs(s.alpha_prime) <= 1e-7);
  CHECK(std::abs(s.phi) <= 1e-7);
}

TEST_CASE("property: invariant conserved for random centred barriers") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    PhysicalParams p;
    p.m = 0.5 + 3 * u(rng);
    p.hbar = 0.5 + u(rng);
    p.q0 = -200 + 100 * u(rng);
    p.p0 = 0.5 + 3 * u(rng);
    p.alpha0_sq = 1 + 10 * u(rng);
    const BarrierParams b{1e-4 + 5e-3 * u(rng), 1e-3 + 1e-2 * u(rng), 50 + 100 * u(rng)};
    const auto sol = evolve_barrier(p, b, 300.0);
    const double i0 = ermakov_invariant(sol.samples().front(), p);
    double worst = 0.0;
    for (const auto& s : sol.samples()) worst = std::max(worst, std::abs(ermakov_invariant(s, p) - i0) / i0);
    CAPTURE(trial);
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("window segmentation keeps distant barriers from being skipped") {
  // fig1 scale: a 1e5-wide window inside a 3.5e9 span.
  const auto p = fixtures::fig1_params();
  const auto sol = evolve_barrier(p, fixtures::fig1_barrier(6e-11), 3.5e9);
  const auto free = evolve_free(p, 3.5e9);
  CHECK(std::abs(sol.evaluate(3.5e9).alpha / free.alpha) > 2.0);

  const QuadraticTerm term{1.0, 1.0, 10.0, 0.0};
  const auto segs = window_segments(std::span<const QuadraticTerm>(&term, 1), 0.0, 100.0);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].t_end == 1.0);
  CHECK(segs[1].t_end == 19.0);
  CHECK(segs[2].t_end == 100.0);
  const auto back = window_segments(std::span<const QuadraticTerm>(&term, 1), 100.0, 0.0);
  REQUIRE(back.size() == 3);
  CHECK(back[0].t_end == 19.0);
  CHECK(back[1].t_end == 1.0);
  CHECK(back[1].max_step == 0.25);
  CHECK(back[2].t_end == 0.0);
}

TEST_CASE("invalid parameters are rejected") {
  auto p = fig2_params();
  CHECK_THROWS_AS(evolve_barrier(p, fig2_barrier(1e-3), 0.0), Error);
  CHECK_THROWS_AS(evolve_barrier(p, fig2_barrier(-1.0), 10.0), Error);
  CHECK_THROWS_AS(evolve_barrier(p, {1e-3, 0.0, 5.0}, 10.0), Error);
  p.m = NAN;
  CHECK_THROWS_AS(evolve_barrier(p, fig2_barrier(1e-3), 10.0), Error);
  p = fig2_params();
  p.alpha0_sq = -1;
  CHECK_THROWS_AS(evolve_barrier(p, fig2_barrier(1e-3), 10.0), Error);
  try {
    p = fig2_params();
    p.hbar = std::numeric_limits<double>::infinity();
    evolve_barrier(p, fig2_barrier(1e-3), 10.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
}
