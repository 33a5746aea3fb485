#include "qsa/superarrival.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>

#include "qsa/quadrature.hpp"

namespace qsa {

namespace {

void require_compatible(const TransmissionCurve& a, const TransmissionCurve& b) {
  require(a.detector().x_T == b.detector().x_T, ErrorCode::InvalidArgument, "curves use different detectors");
  require(a.t_begin() == b.t_begin() && a.t_end() == b.t_end(), ErrorCode::InvalidArgument,
          "curves cover different time spans");
}

ReportStatus status_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::NoDeviation: return ReportStatus::no_deviation;
    case ErrorCode::NotSuperarrival: return ReportStatus::not_superarrival;
    case ErrorCode::NoCrossing: return ReportStatus::no_crossing;
    case ErrorCode::DegenerateWindow: return ReportStatus::degenerate_window;
    default: return ReportStatus::failed;
  }
}

SuperarrivalReport report_with_free(const Scenario& sc, double k, const TransmissionCurve& free_curve,
                                    const std::vector<double>& grid, const DeviationThreshold& threshold) {
  SuperarrivalReport r;
  r.k = k;
  r.D = sc.distance();
  try {
    const auto barrier = sc.barrier(k);
    r.t_k = perturbation_start(barrier, sc.eps_w);
    auto sol = std::make_shared<const TrajectorySolution>(evolve_barrier(sc.params, barrier, sc.t_end));
    // Serial inside: the sweep itself is the parallel loop.
    const auto curve = transmission_curve(sol, sc.det, grid, Exec::serial);
    return analyze(curve, free_curve, k, r.t_k, r.D, sc.params.group_velocity(), threshold);
  } catch (const Error& e) {
    r.status = status_for(e.code());
    r.message = e.what();
  } catch (const std::exception& e) {
    r.status = ReportStatus::failed;
    r.message = e.what();
  }
  return r;
}

}  // namespace

double perturbation_start(const BarrierParams& barrier, double eps_w) {
  barrier.validate();
  require(eps_w > 0 && eps_w < 1, ErrorCode::InvalidArgument, "eps_w must lie in (0,1)");
  return barrier.t_b - std::sqrt(std::log(1.0 / eps_w) / barrier.g);
}

void DeviationThreshold::validate() const {
  require(std::isfinite(eps_dev) && eps_dev > 0, ErrorCode::InvalidArgument, "eps_dev must be positive");
  require(std::isfinite(z) && z >= 0, ErrorCode::InvalidArgument, "noise multiplier z must be >= 0");
  if (z > 0) {
    require(n > 0 && n_ref > 0, ErrorCode::InvalidArgument, "noise floor needs positive particle counts");
  }
}

double DeviationThreshold::operator()(double t_free) const {
  if (z == 0.0) return eps_dev;
  const double tf = std::clamp(t_free, 0.0, 1.0);
  const double floor = z * std::sqrt(tf * (1.0 - tf) * (1.0 / n + 1.0 / n_ref));
  return std::max(eps_dev, floor);
}

double detect_deviation(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f,
                        const DeviationThreshold& threshold, DetectOptions opt) {
  require_compatible(curve_k, curve_f);
  threshold.validate();
  auto exceeds = [&](double t) {
    const double tf = curve_f(t);
    return std::abs(curve_k(t) - tf) > threshold(tf);
  };
  const auto& ts = curve_k.times();
  std::size_t i = 0;
  while (i < ts.size() && !exceeds(ts[i])) ++i;
  if (i == ts.size()) {
    fail(ErrorCode::NoDeviation, "|T_k - T_f| never exceeds the deviation threshold");
  }
  if (i == 0) return ts[0];
  double lo = ts[i - 1];
  double hi = ts[i];
  const double res = opt.resolution * curve_k.span();
  while (hi - lo > res) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (exceeds(mid) ? hi : lo) = mid;
  }
  return hi;
}

double detect_deviation(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double eps_dev,
                        DetectOptions opt) {
  return detect_deviation(curve_k, curve_f, DeviationThreshold::constant(eps_dev), opt);
}

double detect_crossing(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double t_d,
                       DetectOptions opt) {
  require_compatible(curve_k, curve_f);
  auto diff = [&](double t) { return curve_k(t) - curve_f(t); };
  require(diff(t_d) > 0, ErrorCode::NotSuperarrival, "T_k falls below T_f at the deviation onset");
  const auto& ts = curve_k.times();
  auto it = std::upper_bound(ts.begin(), ts.end(), t_d);
  double prev = t_d;
  for (; it != ts.end(); ++it) {
    if (diff(*it) <= 0) break;
    prev = *it;
  }
  if (it == ts.end()) fail(ErrorCode::NoCrossing, "T_k - T_f keeps its sign until the end of the span");
  double lo = prev;
  double hi = *it;
  const double res = opt.resolution * curve_k.span();
  while (hi - lo > res) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (diff(mid) > 0 ? lo : hi) = mid;
  }
  return hi;
}

EtaResult eta(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double t_d, double t_c,
              std::size_t panels) {
  require(panels >= 2000, ErrorCode::InvalidArgument, "eta needs at least 2000 Simpson panels");
  require(t_c - t_d > 1e-9 * curve_k.span(), ErrorCode::DegenerateWindow,
          "superarrival window is below the time resolution");
  EtaResult r;
  r.I_k = quad::simpson([&](double t) { return curve_k(t); }, t_d, t_c, panels);
  r.I_f = quad::simpson([&](double t) { return curve_f(t); }, t_d, t_c, panels);
  require(r.I_f > 0, ErrorCode::DegenerateWindow, "free transmission integrates to zero over the window");
  r.eta = (r.I_k - r.I_f) / r.I_f;
  return r;
}

Velocity information_velocity(double t_d, double t_k, double distance, double v_group) {
  require(t_d > t_k, ErrorCode::InvalidArgument, "t_d must exceed t_k");
  require(distance > 0, ErrorCode::InvalidArgument, "distance must be positive");
  require(v_group != 0, ErrorCode::InvalidArgument, "group velocity must be non-zero");
  Velocity v;
  v.v_I = distance / (t_d - t_k);
  v.v_ratio = v.v_I / v_group;
  return v;
}

bool superarrival_holds(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double t_d,
                        double t_c, std::size_t n) {
  const double h = (t_c - t_d) / static_cast<double>(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = t_d + h * static_cast<double>(i);
    if (!(curve_k(t) > curve_f(t))) return false;
  }
  return true;
}

std::string_view to_string(ReportStatus s) noexcept {
  switch (s) {
    case ReportStatus::ok: return "ok";
    case ReportStatus::no_deviation: return "NoDeviation";
    case ReportStatus::not_superarrival: return "NotSuperarrival";
    case ReportStatus::no_crossing: return "NoCrossing";
    case ReportStatus::degenerate_window: return "DegenerateWindow";
    case ReportStatus::failed: return "failed";
  }
  return "unknown";
}

SuperarrivalReport analyze(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double k,
                           double t_k, double distance, double v_group, const DeviationThreshold& threshold,
                           DetectOptions opt) {
  SuperarrivalReport r;
  r.k = k;
  r.t_k = t_k;
  r.D = distance;
  try {
    r.t_d = detect_deviation(curve_k, curve_f, threshold, opt);
    if (!(r.t_d > t_k)) {
      r.status = ReportStatus::not_superarrival;
      r.message = "deviation detected before the perturbation start";
      return r;
    }
    r.t_c = detect_crossing(curve_k, curve_f, r.t_d, opt);
    r.delta_t = r.t_c - r.t_d;
    const auto e = eta(curve_k, curve_f, r.t_d, r.t_c);
    r.I_k = e.I_k;
    r.I_f = e.I_f;
    r.eta = e.eta;
    const auto v = information_velocity(r.t_d, t_k, distance, v_group);
    r.v_I = v.v_I;
    r.v_ratio = v.v_ratio;
    r.status = ReportStatus::ok;
  } catch (const Error& e) {
    const auto s = status_for(e.code());
    if (s == ReportStatus::failed) throw;
    r.status = s;
    r.message = e.what();
  }
  return r;
}

std::vector<SuperarrivalReport> KeyTable::valid() const {
  std::vector<SuperarrivalReport> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [](const SuperarrivalReport& r) { return r.ok(); });
  return out;
}

SuperarrivalReport report_for(const Scenario& scenario, double k, const DeviationThreshold& threshold) {
  scenario.validate();
  const auto grid = scenario.time_grid();
  const auto free_curve = free_transmission_curve(scenario.params, scenario.det, grid);
  return report_with_free(scenario, k, free_curve, grid, threshold);
}

KeyTable sweep_k(const Scenario& scenario, std::span<const double> k_list, const DeviationThreshold& threshold,
                 Exec exec) {
  scenario.validate();
  threshold.validate();
  std::vector<double> ks(k_list.begin(), k_list.end());
  for (double k : ks) {
    require(std::isfinite(k) && k >= 0, ErrorCode::InvalidArgument, "k values must be finite and non-negative");
  }
  std::sort(ks.begin(), ks.end());
  require(std::adjacent_find(ks.begin(), ks.end()) == ks.end(), ErrorCode::InvalidArgument,
          "k values must be distinct");

  KeyTable table;
  table.scenario = scenario;
  table.scenario.k_list = ks;
  table.threshold = threshold;
  table.entries.resize(ks.size());
  if (ks.empty()) return table;

  const auto grid = scenario.time_grid();
  const auto free_curve = free_transmission_curve(scenario.params, scenario.det, grid);
  const auto n = static_cast<std::ptrdiff_t>(ks.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      table.entries[u] = report_with_free(scenario, ks[u], free_curve, grid, threshold);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      table.entries[u] = report_with_free(scenario, ks[u], free_curve, grid, threshold);
    }
  }
  return table;
}

KeyTable sweep_k(const Scenario& scenario, std::span<const double> k_list, Exec exec) {
  return sweep_k(scenario, k_list, DeviationThreshold::constant(scenario.eps_dev), exec);
}

void write_csv(std::ostream& out, const KeyTable& table) {
  const auto old = out.precision();
  out << std::setprecision(17);
  out << "k,eta,v_I,v_ratio,t_k,t_d,t_c,status\n";
  for (const auto& r : table.entries) {
    out << r.k << ',' << r.eta << ',' << r.v_I << ',' << r.v_ratio << ',' << r.t_k << ',' << r.t_d << ','
        << r.t_c << ',' << to_string(r.status) << '\n';
  }
  out.precision(old);
}

}  // namespace qsa
