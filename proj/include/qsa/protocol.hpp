#pragma once

// Alice/Bob signalling on top of the superarrival key table: Alice picks a
// barrier strength per symbol, Bob decodes it from noisy detector counts and
// checks the measured information velocity against the key curve.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsa/oracle.hpp"
#include "qsa/superarrival.hpp"

namespace qsa {

struct RunConfig {
  std::size_t n_particles = 100000;
  /// Bob's pre-recorded free reference uses n_ref_factor * n_particles.
  double n_ref_factor = 100.0;
  /// Deviation threshold multiplier on the counting-noise floor.
  double z = 20.0;
  /// Readout grid; empty means the scenario grid.
  std::vector<double> readout_times;
  std::uint64_t seed = 1;
  double delta_sec = 0.05;

  std::size_t n_reference() const;
  DeviationThreshold threshold(double eps_dev) const;
};

struct CodebookEntry {
  int symbol = 0;
  double k = 0.0;
  double eta = 0.0;
  double v_I = 0.0;
  /// Standard deviation of eta_hat at the configured particle count.
  double eta_sigma = 0.0;
};

class Codebook {
 public:
  /// Builds the key from exact curves with the run's noise-aware threshold,
  /// estimates the eta noise by seeded Monte Carlo (trials runs per entry) and
  /// requires adjacent eta separations above 5 sigma.
  static Codebook build(const Scenario& scenario, std::span<const double> ks, const RunConfig& cfg,
                        std::size_t trials = 40);

  Codebook(Scenario scenario, std::vector<CodebookEntry> entries);

  const Scenario& scenario() const noexcept { return scenario_; }
  const std::vector<CodebookEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const CodebookEntry& at(int symbol) const;

 private:
  Scenario scenario_;
  std::vector<CodebookEntry> entries_;
};

/// Coupled-quantile counting: N uniforms, particle i is counted at t_j iff
/// u_i <= T(t_j).
std::vector<std::uint64_t> simulate_detection(const TransmissionCurve& curve, std::span<const double> readout_times,
                                              std::size_t n_particles, std::uint64_t seed);

enum class DecodeStatus { decoded, erasure, ambiguous };
std::string_view to_string(DecodeStatus s) noexcept;

struct DecodedResult {
  DecodeStatus status = DecodeStatus::erasure;
  std::optional<int> symbol;
  double eta_hat = 0.0;
  double t_d_hat = 0.0;
  double t_c_hat = 0.0;
  double v_I_hat = 0.0;
  bool security_pass = false;
  std::string message;
};

/// Empirical curves from counts, superarrival analysis with the noise-aware
/// threshold, nearest-eta decode. Detection failures become erasures; two
/// entries within 3 sigma of eta_hat make the result ambiguous. security_pass
/// is filled in for decoded results.
DecodedResult bob_decode(std::span<const std::uint64_t> counts, std::span<const std::uint64_t> counts_ref,
                         std::span<const double> readout_times, const Codebook& book, const RunConfig& cfg);

/// |v_I_hat - v_I(k_hat)| / v_I(k_hat) <= delta_sec. False for non-decoded results.
bool security_check(const DecodedResult& result, const Codebook& book, const RunConfig& cfg);

/// Eve's transient quadratic term centred between barrier and detector.
struct EveParams {
  double k_E = 1.0 / 500;
  double x_E = 250.0;
  double g_E = 1.0 / 500;
  double t_E = 500.0;

  /// k_E = 1/500, x_E = x_T/2, g_E = g, t_E = t_b - 1/sqrt(g).
  static EveParams standard(const Scenario& scenario);
};

enum class EveBackend { analytic, grid };

struct EveGridSettings {
  Grid grid{-3000.0, 4000.0, 1u << 14};
  double dt = 0.05;
  OracleOptions options;
};

/// Transmission at x_T with Alice's barrier plus Eve's term. The analytic
/// backend integrates the exact two-centre Gaussian dynamics; the grid backend
/// runs the Crank-Nicolson oracle (EdgeLeak propagates).
TransmissionCurve eve_intercept(const Scenario& scenario, double k_alice, const EveParams& eve,
                                EveBackend backend = EveBackend::analytic, const EveGridSettings& grid = {});

struct SymbolRecord {
  int sent = 0;
  double sent_k = 0.0;
  DecodedResult result;
  /// Bob's cumulative counts on the readout grid.
  std::vector<std::uint64_t> counts;
  std::string counts_file;
};

struct Transcript {
  std::vector<double> readout_times;
  std::vector<std::uint64_t> reference_counts;
  std::vector<SymbolRecord> symbols;
  std::size_t decoded = 0;
  std::size_t correct = 0;
  std::size_t erasures = 0;
  std::size_t ambiguous = 0;
  std::size_t security_passes = 0;
  double accuracy() const;
  double security_pass_rate() const;
};

/// encode -> physics -> detect -> decode -> check for every symbol, with
/// per-symbol seeds derived from cfg.seed. When eve is set she intercepts
/// every symbol, through the chosen backend.
Transcript roundtrip(const Codebook& book, std::span<const int> message, const RunConfig& cfg,
                     const std::optional<EveParams>& eve = std::nullopt, Exec exec = Exec::parallel,
                     EveBackend backend = EveBackend::analytic, const EveGridSettings& grid = {});

/// Per symbol {sent_k, counts_file, eta_hat, v_I_hat, decoded, security_pass}
/// plus summary counts.
void write_json(std::ostream& out, const Transcript& transcript);

}  // namespace qsa
