#pragma once

// Superarrival window detection (t_k, t_d, t_c), magnitude eta, information
// velocity and the k-sweep key table.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsa/exec.hpp"
#include "qsa/scenario.hpp"
#include "qsa/wavepacket.hpp"

namespace qsa {

/// t_k = t_b - sqrt(ln(1/eps_w)/g): first time the window factor exceeds eps_w.
double perturbation_start(const BarrierParams& barrier, double eps_w);

/// Threshold on |T_k - T_f| used to declare a deviation. With z = 0 it is the
/// constant eps_dev; otherwise it is raised to the counting-noise floor
///   z sqrt(T_f (1 - T_f) (1/n + 1/n_ref))
/// of two independent count profiles with n and n_ref particles.
struct DeviationThreshold {
  double eps_dev = 1e-4;
  double z = 0.0;
  double n = 0.0;
  double n_ref = 0.0;

  static DeviationThreshold constant(double eps) { return {eps, 0.0, 0.0, 0.0}; }
  double operator()(double t_free) const;
  void validate() const;
};

struct DetectOptions {
  /// Bisection stops once the bracket is below resolution * (curve span).
  double resolution = 1e-9;
};

/// Smallest t with |T_k(t) - T_f(t)| > threshold, bracketed on the sample grid
/// and refined by bisection. Throws NoDeviation.
double detect_deviation(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f,
                        const DeviationThreshold& threshold, DetectOptions opt = {});
double detect_deviation(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double eps_dev,
                        DetectOptions opt = {});

/// Smallest t > t_d with T_k(t) = T_f(t). Throws NotSuperarrival when T_k is
/// not above T_f just after t_d, NoCrossing when no sign flip is found.
double detect_crossing(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double t_d,
                       DetectOptions opt = {});

struct EtaResult {
  double I_k = 0.0;
  double I_f = 0.0;
  double eta = 0.0;
};

/// I = integral of T over [t_d, t_c] by composite Simpson; eta = (I_k - I_f)/I_f.
EtaResult eta(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double t_d, double t_c,
              std::size_t panels = 4000);

struct Velocity {
  double v_I = 0.0;
  double v_ratio = 0.0;
};

/// v_I = D / (t_d - t_k) and v_I / v_g.
Velocity information_velocity(double t_d, double t_k, double distance, double v_group);

/// True when T_k > T_f on n equispaced interior points of (t_d, t_c).
bool superarrival_holds(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double t_d,
                        double t_c, std::size_t n = 1000);

enum class ReportStatus { ok, no_deviation, not_superarrival, no_crossing, degenerate_window, failed };
std::string_view to_string(ReportStatus s) noexcept;

struct SuperarrivalReport {
  double k = 0.0;
  ReportStatus status = ReportStatus::failed;
  std::string message;
  double t_k = 0.0;
  double t_d = 0.0;
  double t_c = 0.0;
  double delta_t = 0.0;
  double I_k = 0.0;
  double I_f = 0.0;
  double eta = 0.0;
  double D = 0.0;
  double v_I = 0.0;
  double v_ratio = 0.0;

  bool ok() const noexcept { return status == ReportStatus::ok; }
};

/// Full pipeline on a pair of curves. Expected detection failures become a
/// flagged report; other errors propagate.
SuperarrivalReport analyze(const TransmissionCurve& curve_k, const TransmissionCurve& curve_f, double k,
                           double t_k, double distance, double v_group, const DeviationThreshold& threshold,
                           DetectOptions opt = {});

struct KeyTable {
  Scenario scenario;
  DeviationThreshold threshold;
  /// Sorted by k; failed entries are kept with their status.
  std::vector<SuperarrivalReport> entries;

  /// Entries with status ok, in k order.
  std::vector<SuperarrivalReport> valid() const;
};

/// Integrates, detects and reports every k (sorted, must be distinct). The
/// threshold defaults to the scenario's constant eps_dev.
KeyTable sweep_k(const Scenario& scenario, std::span<const double> k_list, Exec exec = Exec::parallel);
KeyTable sweep_k(const Scenario& scenario, std::span<const double> k_list, const DeviationThreshold& threshold,
                 Exec exec = Exec::parallel);

/// One report for a single k (the per-k body of sweep_k).
SuperarrivalReport report_for(const Scenario& scenario, double k, const DeviationThreshold& threshold);

/// Header `k,eta,v_I,v_ratio,t_k,t_d,t_c,status`, 17 significant digits.
void write_csv(std::ostream& out, const KeyTable& table);

}  // namespace qsa
