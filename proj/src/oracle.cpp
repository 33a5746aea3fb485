#include "qsa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "qsa/wavepacket.hpp"

namespace qsa {

namespace {

using cplx = std::complex<double>;

// Reusable buffers for the tridiagonal Crank-Nicolson solve.
class CrankNicolson {
 public:
  CrankNicolson(std::size_t n, const OracleOptions& opt) : opt_(opt), v_(n), lo_(n), di_(n), up_(n), rhs_(n), cp_(n) {}

  void advance(GridState& s, const PotentialSpec& pot, double dt) {
    const std::size_t n = s.values.size();
    const auto sn = static_cast<std::ptrdiff_t>(n);
    const double dx = s.grid.dx();
    const double tau = dt / (2.0 * s.hbar);
    const double c = s.hbar * s.hbar / (2.0 * s.m * dx * dx);
    const double t_mid = s.t + 0.5 * dt;
    const double shift = s.frame.velocity * (t_mid - s.frame.t0);
    const bool numerov = opt_.scheme == Laplacian::numerov;
    const double m_off = numerov ? 1.0 / 12.0 : 0.0;
    const double m_diag = numerov ? 10.0 / 12.0 : 1.0;
    const cplx I(0.0, 1.0);
    const auto& psi = s.values;

    auto assemble = [&](std::ptrdiff_t i) {
      const auto u = static_cast<std::size_t>(i);
      v_[u] = pot(s.grid.x(u) + shift, t_mid);
    };
    // Row u of (M +- i tau (K + M V)): off-diagonals m_off + i tau (-c + m_off V_j),
    // diagonal m_diag + i tau (2c + m_diag V_u).
    auto row = [&](std::ptrdiff_t i) {
      const auto u = static_cast<std::size_t>(i);
      di_[u] = m_diag + I * tau * (2.0 * c + m_diag * v_[u]);
      cplx b = (m_diag - I * tau * (2.0 * c + m_diag * v_[u])) * psi[u];
      if (u > 0) {
        lo_[u] = m_off + I * tau * (-c + m_off * v_[u - 1]);
        b += (m_off - I * tau * (-c + m_off * v_[u - 1])) * psi[u - 1];
      }
      if (u + 1 < n) {
        up_[u] = m_off + I * tau * (-c + m_off * v_[u + 1]);
        b += (m_off - I * tau * (-c + m_off * v_[u + 1])) * psi[u + 1];
      }
      rhs_[u] = b;
    };
    if (opt_.exec == Exec::parallel) {
#pragma omp parallel
      {
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < sn; ++i) assemble(i);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < sn; ++i) row(i);
      }
    } else {
      for (std::ptrdiff_t i = 0; i < sn; ++i) assemble(i);
      for (std::ptrdiff_t i = 0; i < sn; ++i) row(i);
    }

    // Thomas algorithm.
    cplx denom = di_[0];
    require(std::abs(denom) > 0, ErrorCode::SingularSystem, "zero pivot in tridiagonal solve");
    cp_[0] = up_[0] / denom;
    rhs_[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = di_[i] - lo_[i] * cp_[i - 1];
      require(std::abs(denom) > 0, ErrorCode::SingularSystem, "zero pivot in tridiagonal solve");
      cp_[i] = i + 1 < n ? up_[i] / denom : cplx{};
      rhs_[i] = (rhs_[i] - lo_[i] * rhs_[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs_[i] -= cp_[i] * rhs_[i + 1];
    s.values.swap(rhs_);
    s.t += dt;
  }

 private:
  OracleOptions opt_;
  std::vector<double> v_;
  std::vector<cplx> lo_, di_, up_, rhs_, cp_;
};

double edge_density(const GridState& s, std::size_t k) {
  const std::size_t n = s.values.size();
  k = std::min(k, n / 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < k; ++i) worst = std::max({worst, s.density(i), s.density(n - 1 - i)});
  return worst;
}

}  // namespace

void Grid::validate() const {
  require(std::isfinite(x_min) && std::isfinite(x_max), ErrorCode::NonFinite, "grid bounds must be finite");
  require(x_max > x_min, ErrorCode::InvalidArgument, "grid needs x_max > x_min");
  require(n >= 256, ErrorCode::InvalidArgument, "grid needs at least 256 points");
}

cplx GridState::psi(std::size_t i) const {
  if (frame.velocity == 0.0) return values[i];
  const double s = t - frame.t0;
  const double ph = (m * frame.velocity * x(i) - 0.5 * m * frame.velocity * frame.velocity * s) / hbar;
  return std::polar(1.0, ph) * values[i];
}

double GridState::norm() const {
  double sum = 0.0;
  for (const auto& v : values) sum += std::norm(v);
  return sum * grid.dx();
}

PotentialSpec PotentialSpec::from(const PhysicalParams& params, const BarrierParams& barrier) {
  return {params.m, {QuadraticTerm::from(barrier)}};
}

double PotentialSpec::operator()(double x, double t) const {
  double v = 0.0;
  for (const auto& term : terms) {
    if (term.k == 0.0) continue;
    const double d = t - term.t_peak;
    const double y = x - term.center;
    v -= 0.5 * m * term.k * std::exp(-term.g * d * d) * y * y;
  }
  return v;
}

void PotentialSpec::validate() const {
  require(std::isfinite(m) && m > 0, ErrorCode::InvalidArgument, "potential mass must be positive");
  for (const auto& term : terms) term.validate();
}

GridState init_gaussian(const Grid& grid, const PhysicalParams& params, const OracleOptions& opt) {
  grid.validate();
  params.validate();
  const double sigma = params.sigma0();
  require(params.q0 - 12 * sigma >= grid.x_min && params.q0 + 12 * sigma <= grid.x_max, ErrorCode::SupportOverflow,
          "initial packet q0 +- 12 sigma does not fit inside the grid");
  GridState s;
  s.grid = grid;
  s.t = params.t0;
  s.m = params.m;
  s.hbar = params.hbar;
  s.frame = {opt.comoving ? params.group_velocity() : 0.0, params.t0};
  s.values.resize(grid.n);
  const auto init = initial_state(params);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    s.values[i] = psi(x, init, params) * std::polar(1.0, -params.m * s.frame.velocity * x / params.hbar);
  }
  return s;
}

GridState step(const GridState& state, const PotentialSpec& pot, double dt, const OracleOptions& opt) {
  require(std::isfinite(dt) && dt > 0, ErrorCode::InvalidArgument, "dt must be positive");
  pot.validate();
  GridState next = state;
  CrankNicolson cn(state.values.size(), opt);
  cn.advance(next, pot, dt);
  return next;
}

namespace {

// Shared driver: returns the leak time if the edge guard trips.
std::optional<double> drive(const GridState& state0, const PotentialSpec& pot, std::span<const double> output_times,
                            double dt, const OracleOptions& opt, bool throw_on_leak, std::size_t& steps,
                            const std::function<void(const GridState&)>& observe) {
  require(std::isfinite(dt) && dt > 0, ErrorCode::InvalidArgument, "dt must be positive");
  pot.validate();
  require(pot.m == state0.m, ErrorCode::InvalidArgument, "potential and state use different masses");
  double prev = state0.t;
  for (double t : output_times) {
    require(std::isfinite(t) && t >= prev, ErrorCode::InvalidArgument,
            "output times must be ascending and not before the initial state");
    prev = t;
  }
  GridState s = state0;
  CrankNicolson cn(s.values.size(), opt);
  for (double t_out : output_times) {
    const double span = t_out - s.t;
    if (span > 0) {
      const auto nsteps = static_cast<std::size_t>(std::ceil(span / dt * (1.0 - 1e-12)));
      const double h = span / static_cast<double>(nsteps);
      for (std::size_t k = 0; k < nsteps; ++k) {
        cn.advance(s, pot, h);
        ++steps;
        const double edge = edge_density(s, opt.edge_points);
        if (edge >= opt.edge_tol) {
          if (throw_on_leak) {
            fail(ErrorCode::EdgeLeak, "edge density reached " + std::to_string(edge) + " at t=" + std::to_string(s.t));
          }
          return s.t;
        }
      }
      s.t = t_out;
    }
    observe(s);
  }
  return std::nullopt;
}

}  // namespace

GridEvolution evolve_grid(const GridState& state0, const PotentialSpec& pot, std::span<const double> output_times,
                          double dt, const OracleOptions& opt, bool allow_partial) {
  GridEvolution out;
  out.edge_leak_time = drive(state0, pot, output_times, dt, opt, !allow_partial, out.steps,
                             [&out](const GridState& s) { out.states.push_back(s); });
  return out;
}

std::size_t evolve_grid_observe(const GridState& state0, const PotentialSpec& pot,
                                std::span<const double> output_times, double dt, const OracleOptions& opt,
                                const std::function<void(const GridState&)>& observe) {
  std::size_t steps = 0;
  drive(state0, pot, output_times, dt, opt, true, steps, observe);
  return steps;
}

GridEvolution evolve_grid(const GridState& state0, const PotentialSpec& pot, double t_end, double dt,
                          const OracleOptions& opt) {
  const double t[1] = {t_end};
  return evolve_grid(state0, pot, std::span<const double>(t, 1), dt, opt);
}

double transmission_grid(const GridState& s, double x_T) {
  const std::size_t n = s.values.size();
  const double x0 = s.x(0);
  const double dx = s.grid.dx();
  require(x_T >= x0 && x_T <= s.x(n - 1) + 1e-9 * dx, ErrorCode::InvalidArgument, "x_T lies outside the grid");
  const auto j = std::min(static_cast<std::size_t>((x_T - x0) / dx), n - 2);
  const double w = (x_T - s.x(j)) / dx;
  // Partial cell [x_T, x_{j+1}] with the linearly interpolated density at x_T.
  const double rho_T = (1.0 - w) * s.density(j) + w * s.density(j + 1);
  double total = 0.5 * (1.0 - w) * dx * (rho_T + s.density(j + 1));
  for (std::size_t i = j + 1; i + 1 < n; ++i) total += 0.5 * dx * (s.density(i) + s.density(i + 1));
  return total;
}

GridState sample_analytic(const TrajectorySolution& sol, const GridState& like, double t) {
  GridState s = like;
  s.t = t;
  const auto st = sol.evaluate(t);
  const double v = s.frame.velocity;
  const double tt = t - s.frame.t0;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double x = s.x(i);
    const double ph = -(s.m * v * x - 0.5 * s.m * v * v * tt) / s.hbar;
    s.values[i] = psi(x, st, sol.params()) * std::polar(1.0, ph);
  }
  return s;
}

CompareReport compare(const TrajectorySolution& sol, std::span<const GridState> states, double x_T) {
  const auto& p = sol.params();
  CompareReport r;
  for (const auto& s : states) {
    require(s.m == p.m && s.hbar == p.hbar, ErrorCode::InvalidArgument,
            "grid run and analytic solution use different m or hbar");
    const auto st = sol.evaluate(s.t);
    const double dT = std::abs(transmission(st, p, {x_T}) - transmission_grid(s, x_T));
    double ng = 0.0;
    double na = 0.0;
    cplx ov{};
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const cplx g = s.psi(i);
      const cplx a = psi(s.x(i), st, p);
      ng += std::norm(g);
      na += std::norm(a);
      ov += std::conj(a) * g;
    }
    const double dx = s.grid.dx();
    const double l2 = std::sqrt(std::max(0.0, (ng + na - 2.0 * std::abs(ov)) * dx));
    r.times.push_back(s.t);
    r.dT.push_back(dT);
    r.l2.push_back(l2);
    r.max_dT = std::max(r.max_dT, dT);
    r.max_l2 = std::max(r.max_l2, l2);
  }
  return r;
}

void write_snapshot(std::ostream& out, const GridState& s) {
  const auto old = out.precision();
  out << std::setprecision(17) << "x,re,im,density\n";
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const auto v = s.psi(i);
    out << s.x(i) << ',' << v.real() << ',' << v.imag() << ',' << std::norm(v) << '\n';
  }
  out.precision(old);
}

}  // namespace qsa
