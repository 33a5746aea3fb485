#include "qsa/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <exception>
#include <random>

#include "qsa/wavepacket.hpp"

namespace qsa {

namespace {

std::vector<QuadraticTerm> terms_of(const BarrierParams& barrier) {
  if (barrier.k == 0.0) return {};
  return {QuadraticTerm::from(barrier)};
}

// (q, v, S) with S' = L = 1/2 m v^2 + 1/2 m w^2 q^2.
ode::DenseSolution<3> integrate_path(double x, double v0, double t0, double t, const BarrierParams& barrier,
                                     double m, const ShootingOptions& opt) {
  const auto terms = terms_of(barrier);
  auto rhs = [&barrier, m](double tt, const ode::Vec<3>& y) -> ode::Vec<3> {
    const double w2 = omega_sq(tt, barrier);
    return {y[1], w2 * y[0], 0.5 * m * (y[1] * y[1] + w2 * y[0] * y[0])};
  };
  const auto segs = window_segments(terms, t0, t);
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  return ode::integrate<3>(rhs, t0, ode::Vec<3>{x, v0, 0.0}, std::span<const ode::Segment>(segs), o);
}

}  // namespace

std::vector<double> sample_initial(const PhysicalParams& params, const EnsembleConfig& cfg) {
  params.validate();
  require(cfg.n_traj >= 1, ErrorCode::InvalidArgument, "ensemble needs at least one trajectory");
  const double sigma = params.sigma0();
  std::vector<double> xs(cfg.n_traj);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, i));
    std::normal_distribution<double> normal(params.q0, sigma);
    xs[i] = normal(rng);
  }
  return xs;
}

std::vector<Trajectory> integrate_ensemble(const PhysicalParams& params, const BarrierParams& barrier,
                                           const EnsembleConfig& cfg, Exec exec) {
  barrier.validate();
  require(!cfg.t_grid.empty(), ErrorCode::InvalidArgument, "ensemble needs output times");
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    require(cfg.t_grid[i] >= params.t0 && (i == 0 || cfg.t_grid[i] > cfg.t_grid[i - 1]),
            ErrorCode::InvalidArgument, "output times must be strictly increasing and not before t0");
  }
  const auto xs = sample_initial(params, cfg);
  const double v0 = params.group_velocity();
  const double t_last = cfg.t_grid.back();
  std::vector<Trajectory> out(xs.size());

  auto one = [&](std::size_t i) {
    Trajectory tr;
    tr.x_init = xs[i];
    tr.t = cfg.t_grid;
    tr.q.resize(cfg.t_grid.size());
    if (t_last == params.t0) {
      std::fill(tr.q.begin(), tr.q.end(), xs[i]);
    } else {
      const auto path = integrate_path(xs[i], v0, params.t0, t_last, barrier, params.m, {});
      for (std::size_t j = 0; j < tr.t.size(); ++j) tr.q[j] = path(tr.t[j])[0];
    }
    out[i] = std::move(tr);
  };
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<Trajectory>& ensemble) {
  const auto old = out.precision();
  out << std::setprecision(17) << "traj_id,t,q\n";
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto& tr = ensemble[i];
    for (std::size_t j = 0; j < tr.t.size(); ++j) out << i << ',' << tr.t[j] << ',' << tr.q[j] << '\n';
  }
  out.precision(old);
}

ClassicalPath shoot(double x_src, double x_dst, double t0, double t, const PhysicalParams& params,
                    const BarrierParams& barrier, ShootingOptions opt) {
  params.validate();
  barrier.validate();
  require(std::isfinite(x_src) && std::isfinite(x_dst) && std::isfinite(t0) && std::isfinite(t),
          ErrorCode::NonFinite, "shooting endpoints must be finite");
  require(t > t0, ErrorCode::InvalidArgument, "shooting needs t > t0");
  const double span = t - t0;
  const double tol = 1e-10 * (std::abs(x_dst) + 1.0);
  auto miss = [&](double v) { return integrate_path(x_src, v, t0, t, barrier, params.m, opt)(t)[0] - x_dst; };

  double va = (x_dst - x_src) / span;
  double fa = miss(va);
  double vb = va + std::max(1e-3 * std::abs(va), 1e-3 / span);
  double fb = miss(vb);
  int it = 0;
  while (std::abs(fb) > tol) {
    if (++it > opt.max_iterations) {
      fail(ErrorCode::NoConvergence, "shooting residual " + std::to_string(fb) + " after " +
                                         std::to_string(opt.max_iterations) + " iterations");
    }
    const double slope = (fb - fa) / (vb - va);
    if (!(std::abs(slope) > 1e-10 * span)) {
      fail(ErrorCode::Caustic, "endpoint insensitive to the initial velocity (caustic)");
    }
    const double vc = vb - fb / slope;
    va = vb;
    fa = fb;
    vb = vc;
    fb = miss(vb);
  }

  ClassicalPath p;
  p.x_src = x_src;
  p.x_dst = x_dst;
  p.t0 = t0;
  p.t = t;
  p.v0 = vb;
  p.p_src = params.m * vb;
  p.residual = fb;
  p.iterations = it;
  p.path = std::make_shared<const ode::DenseSolution<3>>(integrate_path(x_src, vb, t0, t, barrier, params.m, opt));
  p.s_cl = (*p.path)(t)[2];
  return p;
}

ActionResult classical_action(double x_src, double x_dst, double t0, double t, const PhysicalParams& params,
                              const BarrierParams& barrier, ShootingOptions opt) {
  const auto p = shoot(x_src, x_dst, t0, t, params, barrier, opt);
  return {p.s_cl, p.p_src};
}

PropagatorSample van_vleck(double x_src, double x_dst, double t0, double t, const PhysicalParams& params,
                           const BarrierParams& barrier, ShootingOptions opt) {
  const auto centre = shoot(x_src, x_dst, t0, t, params, barrier, opt);
  const double h = 1e-2 * (std::abs(x_dst) + 1.0);
  const double p_plus = shoot(x_src, x_dst + h, t0, t, params, barrier, opt).p_src;
  const double p_minus = shoot(x_src, x_dst - h, t0, t, params, barrier, opt).p_src;
  PropagatorSample s;
  s.x_src = x_src;
  s.x_dst = x_dst;
  s.t0 = t0;
  s.t = t;
  s.s_cl = centre.s_cl;
  s.d2s = -(p_plus - p_minus) / (2.0 * h);
  require(s.d2s < 0, ErrorCode::Caustic, "mixed action derivative left the free-case sign (caustic)");
  const std::complex<double> i(0.0, 1.0);
  s.amplitude = std::sqrt(i * s.d2s / (2.0 * std::numbers::pi * params.hbar)) *
                std::polar(1.0, s.s_cl / params.hbar);
  return s;
}

double FundamentalMap::action(double x_src, double x_dst) const {
  const double v = v0(x_src, x_dst);
  const double v_end = x_src * du + v * dw;
  return 0.5 * m * (x_dst * v_end - x_src * v);
}

std::complex<double> FundamentalMap::kernel(double x_src, double x_dst) const {
  const std::complex<double> i(0.0, 1.0);
  return std::sqrt(i * d2s() / (2.0 * std::numbers::pi * hbar)) * std::polar(1.0, action(x_src, x_dst) / hbar);
}

FundamentalMap fundamental_map(const PhysicalParams& params, const BarrierParams& barrier, double t0, double t) {
  params.validate();
  barrier.validate();
  require(t > t0, ErrorCode::InvalidArgument, "fundamental map needs t > t0");
  const auto terms = terms_of(barrier);
  auto rhs = [&barrier](double tt, const ode::Vec<4>& y) -> ode::Vec<4> {
    const double w2 = omega_sq(tt, barrier);
    return {y[1], w2 * y[0], y[3], w2 * y[2]};
  };
  const auto segs = window_segments(terms, t0, t);
  ode::Options o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  const auto sol = ode::integrate<4>(rhs, t0, ode::Vec<4>{1.0, 0.0, 0.0, 1.0}, std::span<const ode::Segment>(segs), o);
  const auto y = sol(t);
  FundamentalMap f{t0, t, params.m, params.hbar, y[0], y[1], y[2], y[3]};
  require(f.w > 0, ErrorCode::Caustic, "classical paths focus (w <= 0): caustic");
  return f;
}

std::vector<std::complex<double>> propagate_by_kernel(const PhysicalParams& params, const BarrierParams& barrier,
                                                      double t, std::span<const double> x_points,
                                                      const KernelOptions& opt) {
  const auto map = fundamental_map(params, barrier, params.t0, t);
  const auto init = initial_state(params);
  const double half = opt.support_sigmas * params.sigma0();
  const double a = params.q0 - half;
  const double b = params.q0 + half;
  std::vector<std::complex<double>> out(x_points.size());
  auto one = [&](std::size_t j) {
    const double x = x_points[j];
    auto f = [&](double xs) { return map.kernel(xs, x) * psi(xs, init, params); };
    out[j] = quad::integrate<std::complex<double>>(f, a, b, opt.quad);
  };
  const auto n = static_cast<std::ptrdiff_t>(x_points.size());
  if (opt.exec == Exec::parallel) {
    // Exceptions cannot cross the parallel region; collect the first one.
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      try {
        one(static_cast<std::size_t>(j));
      } catch (...) {
#pragma omp critical(qsa_kernel_error)
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  } else {
    for (std::ptrdiff_t j = 0; j < n; ++j) one(static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace qsa
