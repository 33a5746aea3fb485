#include "qsa/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <random>

#include "json.hpp"

namespace qsa {

namespace {

constexpr std::uint64_t kReferenceStream = 0xB0B0000000000000ULL;

std::vector<double> readout_grid(const Scenario& sc, const RunConfig& cfg) {
  return cfg.readout_times.empty() ? sc.time_grid() : cfg.readout_times;
}

TransmissionCurve exact_curve(const Scenario& sc, double k, std::span<const double> times) {
  auto sol = std::make_shared<const TrajectorySolution>(evolve_barrier(sc.params, sc.barrier(k), sc.t_end));
  return transmission_curve(sol, sc.det, times, Exec::serial);
}

TransmissionCurve empirical_from_counts(const Scenario& sc, std::span<const std::uint64_t> counts,
                                        std::span<const double> times, double n) {
  std::vector<double> v(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) v[i] = static_cast<double>(counts[i]) / n;
  return TransmissionCurve::empirical(sc.det, std::vector<double>(times.begin(), times.end()), std::move(v));
}

double agreed_t_k(const Scenario& sc) { return perturbation_start(sc.barrier(1.0), sc.eps_w); }

SuperarrivalReport analyze_counts(const Scenario& sc, std::span<const std::uint64_t> counts,
                                  std::span<const std::uint64_t> counts_ref, std::span<const double> times,
                                  const RunConfig& cfg) {
  const auto tk = empirical_from_counts(sc, counts, times, static_cast<double>(cfg.n_particles));
  const auto tf = empirical_from_counts(sc, counts_ref, times, static_cast<double>(cfg.n_reference()));
  return analyze(tk, tf, 0.0, agreed_t_k(sc), sc.distance(), sc.params.group_velocity(),
                 cfg.threshold(sc.eps_dev));
}

}  // namespace

std::size_t RunConfig::n_reference() const {
  return static_cast<std::size_t>(std::llround(n_ref_factor * static_cast<double>(n_particles)));
}

DeviationThreshold RunConfig::threshold(double eps_dev) const {
  return {eps_dev, z, static_cast<double>(n_particles), static_cast<double>(n_reference())};
}

Codebook::Codebook(Scenario scenario, std::vector<CodebookEntry> entries)
    : scenario_(std::move(scenario)), entries_(std::move(entries)) {
  require(!entries_.empty(), ErrorCode::InvalidArgument, "codebook needs at least one entry");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    require(entries_[i].symbol == static_cast<int>(i), ErrorCode::InvalidArgument,
            "codebook symbols must be 0..n-1 in order");
    if (i > 0) {
      require(entries_[i].k > entries_[i - 1].k, ErrorCode::InvalidArgument, "codebook k values must increase");
      const double sep = entries_[i].eta - entries_[i - 1].eta;
      const double noise = std::max(entries_[i].eta_sigma, entries_[i - 1].eta_sigma);
      require(sep > 5.0 * noise, ErrorCode::InvalidArgument,
              "adjacent codebook entries are not separated by more than 5x the eta noise");
    }
  }
}

const CodebookEntry& Codebook::at(int symbol) const {
  require(symbol >= 0 && static_cast<std::size_t>(symbol) < entries_.size(), ErrorCode::InvalidArgument,
          "unknown symbol " + std::to_string(symbol));
  return entries_[static_cast<std::size_t>(symbol)];
}

Codebook Codebook::build(const Scenario& scenario, std::span<const double> ks, const RunConfig& cfg,
                         std::size_t trials) {
  scenario.validate();
  require(cfg.n_particles >= 1, ErrorCode::InvalidArgument, "n_particles must be at least 1");
  require(trials >= 2, ErrorCode::InvalidArgument, "noise estimate needs at least two trials");
  std::vector<double> sorted(ks.begin(), ks.end());
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::InvalidArgument,
          "codebook k values must be distinct");
  const auto times = readout_grid(scenario, cfg);
  const auto free_curve = free_transmission_curve(scenario.params, scenario.det, times);
  const auto thr = cfg.threshold(scenario.eps_dev);
  const double t_k = agreed_t_k(scenario);

  std::vector<CodebookEntry> entries;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto curve = exact_curve(scenario, sorted[i], times);
    const auto r = analyze(curve, free_curve, sorted[i], t_k, scenario.distance(), scenario.params.group_velocity(),
                           thr);
    require(r.ok(), ErrorCode::InvalidArgument,
            "k=" + std::to_string(sorted[i]) + " has no superarrival under the run threshold: " + r.message);
    double sum = 0.0, sum2 = 0.0;
    std::size_t ok = 0;
    for (std::size_t j = 0; j < trials; ++j) {
      const std::uint64_t s = derive_seed(cfg.seed ^ 0xC0DEB00C00000000ULL, i * trials + j);
      const auto counts = simulate_detection(curve, times, cfg.n_particles, s);
      const auto ref = simulate_detection(free_curve, times, cfg.n_reference(), derive_seed(s, 1));
      const auto est = analyze_counts(scenario, counts, ref, times, cfg);
      if (!est.ok()) continue;
      ++ok;
      sum += est.eta;
      sum2 += est.eta * est.eta;
    }
    double sigma = std::numeric_limits<double>::infinity();
    if (ok * 2 >= trials) {
      const double n = static_cast<double>(ok);
      sigma = std::sqrt(std::max(0.0, (sum2 - sum * sum / n) / (n - 1)));
    }
    entries.push_back({static_cast<int>(i), sorted[i], r.eta, r.v_I, sigma});
  }
  return Codebook(scenario, std::move(entries));
}

std::vector<std::uint64_t> simulate_detection(const TransmissionCurve& curve, std::span<const double> readout_times,
                                              std::size_t n_particles, std::uint64_t seed) {
  require(!readout_times.empty(), ErrorCode::InvalidArgument, "readout grid is empty");
  for (std::size_t i = 1; i < readout_times.size(); ++i) {
    require(readout_times[i] > readout_times[i - 1], ErrorCode::InvalidArgument, "readout times must increase");
  }
  // The count at t_j is the empirical CDF of N uniforms evaluated at T(t_j).
  // Walking the distinct levels upward, each increment is binomial in the
  // particles not yet counted, which has the same joint law as sorting N
  // uniforms but costs O(levels) instead of O(N log N).
  std::vector<double> level(readout_times.size());
  for (std::size_t j = 0; j < level.size(); ++j) level[j] = std::clamp(curve(readout_times[j]), 0.0, 1.0);
  std::vector<std::size_t> order(level.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return level[a] < level[b]; });

  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> counts(level.size());
  std::uint64_t counted = 0;
  double prev = 0.0;
  const auto n = static_cast<std::uint64_t>(n_particles);
  for (std::size_t j : order) {
    const double L = level[j];
    if (L > prev) {
      const std::uint64_t left = n - counted;
      if (left > 0) {
        const double p = L >= 1.0 ? 1.0 : std::clamp((L - prev) / (1.0 - prev), 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> bin(left, p);
        counted += bin(rng);
      }
      prev = L;
    }
    counts[j] = counted;
  }
  return counts;
}

std::string_view to_string(DecodeStatus s) noexcept {
  switch (s) {
    case DecodeStatus::decoded: return "decoded";
    case DecodeStatus::erasure: return "erasure";
    case DecodeStatus::ambiguous: return "ambiguous";
  }
  return "unknown";
}

DecodedResult bob_decode(std::span<const std::uint64_t> counts, std::span<const std::uint64_t> counts_ref,
                         std::span<const double> readout_times, const Codebook& book, const RunConfig& cfg) {
  require(counts.size() == readout_times.size() && counts_ref.size() == readout_times.size(),
          ErrorCode::InvalidArgument, "count profiles must match the readout grid");
  const auto& sc = book.scenario();
  DecodedResult d;
  const auto r = analyze_counts(sc, counts, counts_ref, readout_times, cfg);
  d.t_d_hat = r.t_d;
  d.t_c_hat = r.t_c;
  if (!r.ok()) {
    d.status = DecodeStatus::erasure;
    d.message = r.message;
    return d;
  }
  d.eta_hat = r.eta;
  d.v_I_hat = r.v_I;

  const auto& es = book.entries();
  std::size_t best = 0;
  std::size_t within = 0;
  for (std::size_t i = 0; i < es.size(); ++i) {
    if (std::abs(es[i].eta - d.eta_hat) < std::abs(es[best].eta - d.eta_hat)) best = i;
    if (std::abs(es[i].eta - d.eta_hat) <= 3.0 * es[i].eta_sigma) ++within;
  }
  if (within >= 2) {
    d.status = DecodeStatus::ambiguous;
    d.message = "eta_hat lies within the noise of several codebook entries";
    return d;
  }
  d.status = DecodeStatus::decoded;
  d.symbol = es[best].symbol;
  d.security_pass = security_check(d, book, cfg);
  return d;
}

bool security_check(const DecodedResult& result, const Codebook& book, const RunConfig& cfg) {
  if (result.status != DecodeStatus::decoded || !result.symbol) return false;
  const double v_key = book.at(*result.symbol).v_I;
  const double t_k = agreed_t_k(book.scenario());
  if (!(result.t_d_hat > t_k)) return false;
  const double v_hat = book.scenario().distance() / (result.t_d_hat - t_k);
  return std::abs(v_hat - v_key) / v_key <= cfg.delta_sec;
}

EveParams EveParams::standard(const Scenario& sc) {
  return {1.0 / 500, 0.5 * sc.det.x_T, sc.g, sc.t_b - 1.0 / std::sqrt(sc.g)};
}

TransmissionCurve eve_intercept(const Scenario& sc, double k_alice, const EveParams& eve, EveBackend backend,
                                const EveGridSettings& gs) {
  sc.validate();
  require(eve.x_E > 0 && eve.x_E < sc.det.x_T, ErrorCode::InvalidArgument,
          "Eve must sit strictly between the barrier and the detector");
  const std::vector<QuadraticTerm> terms{{k_alice, sc.g, sc.t_b, 0.0}, {eve.k_E, eve.g_E, eve.t_E, eve.x_E}};
  for (const auto& t : terms) t.validate();
  const auto times = sc.time_grid();
  if (backend == EveBackend::analytic) {
    auto sol = std::make_shared<const TrajectorySolution>(evolve_quadratic(sc.params, terms, sc.t_end));
    return transmission_curve(sol, sc.det, times, Exec::serial);
  }
  const auto s0 = init_gaussian(gs.grid, sc.params, gs.options);
  const PotentialSpec pot{sc.params.m, terms};
  std::vector<double> values;
  values.reserve(times.size());
  evolve_grid_observe(s0, pot, times, gs.dt, gs.options, [&](const GridState& s) {
    values.push_back(std::clamp(transmission_grid(s, sc.det.x_T), 0.0, 1.0));
  });
  return TransmissionCurve::empirical(sc.det, times, std::move(values));
}

double Transcript::accuracy() const {
  return symbols.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(symbols.size());
}

double Transcript::security_pass_rate() const {
  return symbols.empty() ? 0.0 : static_cast<double>(security_passes) / static_cast<double>(symbols.size());
}

Transcript roundtrip(const Codebook& book, std::span<const int> message, const RunConfig& cfg,
                     const std::optional<EveParams>& eve, Exec exec, EveBackend backend,
                     const EveGridSettings& grid) {
  const auto& sc = book.scenario();
  for (int s : message) book.at(s);
  Transcript tr;
  if (message.empty()) return tr;

  const auto times = readout_grid(sc, cfg);
  const auto free_curve = free_transmission_curve(sc.params, sc.det, times);
  const auto ref = simulate_detection(free_curve, times, cfg.n_reference(), derive_seed(cfg.seed, kReferenceStream));

  // One physical curve per distinct symbol.
  std::map<int, TransmissionCurve> curves;
  for (int s : message) {
    if (curves.count(s)) continue;
    const double k = book.at(s).k;
    if (eve) {
      require(cfg.readout_times.empty(), ErrorCode::InvalidArgument, "Eve runs use the scenario grid");
      curves.emplace(s, eve_intercept(sc, k, *eve, backend, grid));
    } else {
      curves.emplace(s, exact_curve(sc, k, times));
    }
  }

  tr.readout_times = times;
  tr.reference_counts = ref;
  tr.symbols.resize(message.size());
  auto one = [&](std::size_t i) {
    const int s = message[i];
    const auto counts = simulate_detection(curves.at(s), times, cfg.n_particles, derive_seed(cfg.seed, i));
    SymbolRecord rec;
    rec.sent = s;
    rec.sent_k = book.at(s).k;
    rec.result = bob_decode(counts, ref, times, book, cfg);
    rec.counts = counts;
    tr.symbols[i] = std::move(rec);
  };
  const auto n = static_cast<std::ptrdiff_t>(message.size());
  if (exec == Exec::parallel) {
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        one(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(qsa_roundtrip_error)
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
  }

  for (const auto& rec : tr.symbols) {
    switch (rec.result.status) {
      case DecodeStatus::decoded:
        ++tr.decoded;
        if (rec.result.symbol == rec.sent) ++tr.correct;
        if (rec.result.security_pass) ++tr.security_passes;
        break;
      case DecodeStatus::erasure: ++tr.erasures; break;
      case DecodeStatus::ambiguous: ++tr.ambiguous; break;
    }
  }
  return tr;
}

void write_json(std::ostream& out, const Transcript& t) {
  nlohmann::ordered_json j;
  j["symbols"] = nlohmann::ordered_json::array();
  for (const auto& rec : t.symbols) {
    nlohmann::ordered_json s;
    s["sent_k"] = rec.sent_k;
    s["counts_file"] = rec.counts_file;
    s["eta_hat"] = rec.result.eta_hat;
    s["v_I_hat"] = rec.result.v_I_hat;
    s["decoded"] = rec.result.symbol ? nlohmann::ordered_json(*rec.result.symbol) : nlohmann::ordered_json(nullptr);
    s["status"] = std::string(to_string(rec.result.status));
    s["security_pass"] = rec.result.security_pass;
    j["symbols"].push_back(std::move(s));
  }
  j["summary"] = {{"symbols", t.symbols.size()}, {"decoded", t.decoded},      {"correct", t.correct},
                  {"erasures", t.erasures},      {"ambiguous", t.ambiguous}, {"security_passes", t.security_passes},
                  {"accuracy", t.accuracy()},    {"security_pass_rate", t.security_pass_rate()}};
  out << j.dump(2) << '\n';
}

}  // namespace qsa
