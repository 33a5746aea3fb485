#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qsa/protocol.hpp"

using namespace qsa;

namespace {

TransmissionCurve constant_curve(double v, std::vector<double> times) {
  std::vector<double> vals(times.size(), v);
  return TransmissionCurve::empirical({500.0}, std::move(times), std::move(vals));
}

// Per-particle reference: draw N uniforms, count u_i <= T(t_j).
std::vector<std::uint64_t> brute_detection(const std::vector<double>& levels, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::uint64_t> c(levels.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng);
    for (std::size_t j = 0; j < levels.size(); ++j) c[j] += x <= levels[j] ? 1 : 0;
  }
  return c;
}

struct Moments {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;
};

template <class Draw>
Moments moments(std::size_t dim, std::size_t reps, Draw draw) {
  Moments m{std::vector<double>(dim, 0.0), std::vector<std::vector<double>>(dim, std::vector<double>(dim, 0.0))};
  std::vector<std::vector<double>> xs;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto c = draw(r);
    xs.emplace_back(c.begin(), c.end());
    for (std::size_t j = 0; j < dim; ++j) m.mean[j] += xs.back()[j] / static_cast<double>(reps);
  }
  for (const auto& x : xs)
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b)
        m.cov[a][b] += (x[a] - m.mean[a]) * (x[b] - m.mean[b]) / static_cast<double>(reps - 1);
  return m;
}

const Scenario& fig2() {
  static const Scenario sc = preset_fig2();
  return sc;
}

const Codebook& fig2_book() {
  static const Codebook book = [] {
    RunConfig cfg;
    return Codebook::build(fig2(), fig2().k_list, cfg, 40);
  }();
  return book;
}

}  // namespace

TEST_CASE("run config derived quantities") {
  RunConfig cfg;
  CHECK(cfg.n_reference() == 10000000u);
  const auto thr = cfg.threshold(1e-4);
  CHECK(thr.eps_dev == 1e-4);
  CHECK(thr.z == 20.0);
  CHECK(thr.n == 1e5);
  CHECK(thr.n_ref == 1e7);
}

TEST_CASE("detection with T identically 0 or 1") {
  const auto times = linspace(0.0, 10.0, 11);
  const auto zero = simulate_detection(constant_curve(0.0, times), times, 1000, 7);
  const auto one = simulate_detection(constant_curve(1.0, times), times, 1000, 7);
  for (auto c : zero) CHECK(c == 0u);
  for (auto c : one) CHECK(c == 1000u);
  const auto none = simulate_detection(constant_curve(0.5, times), times, 0, 7);
  for (auto c : none) CHECK(c == 0u);
}

TEST_CASE("detection counts are monotone in T and bounded") {
  const auto times = linspace(0.0, 1000.0, 2001);
  auto sol = std::make_shared<const TrajectorySolution>(evolve_barrier(fig2().params, fig2().barrier(0.002), 1000.0));
  const auto curve = transmission_curve(sol, fig2().det, times);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = simulate_detection(curve, times, 100000, seed);
    for (std::size_t a = 0; a < times.size(); ++a) {
      CHECK(c[a] <= 100000u);
      if (a > 0 && curve.values()[a] >= curve.values()[a - 1]) CHECK(c[a] >= c[a - 1]);
      if (a > 0 && curve.values()[a] < curve.values()[a - 1]) CHECK(c[a] <= c[a - 1]);
    }
  }
}

TEST_CASE("detection means match N T over many seeds") {
  const std::vector<double> times{0.0, 1.0, 2.0, 3.0, 4.0};
  const std::vector<double> levels{0.02, 0.3, 0.3, 0.71, 0.999};
  const auto curve = TransmissionCurve::empirical({1.0}, times, levels);
  const std::size_t n = 500, reps = 1000;
  std::vector<double> mean(times.size(), 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto c = simulate_detection(curve, times, n, derive_seed(3, r));
    for (std::size_t j = 0; j < c.size(); ++j) mean[j] += static_cast<double>(c[j]) / reps;
  }
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double se = std::sqrt(n * levels[j] * (1 - levels[j]) / reps);
    CHECK(std::abs(mean[j] - n * levels[j]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("detection joint law matches per-particle sampling") {
  // Non-monotone levels exercise the reordering. For T_a <= T_b the exact
  // covariance is N T_a (1 - T_b).
  const std::vector<double> times{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> levels{0.6, 0.15, 0.4, 0.85};
  const auto curve = TransmissionCurve::empirical({1.0}, times, levels);
  const std::size_t n = 40, reps = 20000;
  const auto fast = moments(4, reps, [&](std::size_t r) { return simulate_detection(curve, times, n, derive_seed(11, r)); });
  std::mt19937_64 rng(12);
  const auto slow = moments(4, reps, [&](std::size_t) { return brute_detection(levels, n, rng); });
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const double lo = std::min(levels[a], levels[b]), hi = std::max(levels[a], levels[b]);
      const double exact = n * lo * (1 - hi);
      // Sample covariance standard error is about sqrt((var_a var_b + cov^2) / reps).
      const double va = n * levels[a] * (1 - levels[a]), vb = n * levels[b] * (1 - levels[b]);
      const double se = std::sqrt((va * vb + exact * exact) / reps);
      CHECK(std::abs(fast.cov[a][b] - exact) <= 5.0 * se);
      CHECK(std::abs(slow.cov[a][b] - exact) <= 5.0 * se);
    }
    const double se = std::sqrt(n * levels[a] * (1 - levels[a]) / reps);
    CHECK(std::abs(fast.mean[a] - n * levels[a]) <= 5.0 * se);
    CHECK(std::abs(fast.mean[a] - slow.mean[a]) <= 7.0 * se);
  }
}

TEST_CASE("detection is deterministic per seed and rejects bad grids") {
  const auto times = linspace(0.0, 1.0, 5);
  const auto curve = TransmissionCurve::empirical({1.0}, times, {0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK(simulate_detection(curve, times, 1000, 5) == simulate_detection(curve, times, 1000, 5));
  const std::vector<double> empty;
  CHECK_THROWS_AS(simulate_detection(curve, empty, 10, 1), Error);
  const std::vector<double> back{0.0, 0.5, 0.25};
  CHECK_THROWS_AS(simulate_detection(curve, back, 10, 1), Error);
}

TEST_CASE("codebook for the fig2 scenario") {
  const auto& book = fig2_book();
  REQUIRE(book.size() == 7);
  for (std::size_t i = 0; i < book.size(); ++i) {
    const auto& e = book.entries()[i];
    CHECK(e.symbol == static_cast<int>(i));
    CHECK(e.eta > 0.0);
    CHECK(std::isfinite(e.eta_sigma));
    CHECK(e.eta_sigma > 0.0);
    if (i > 0) {
      CHECK(e.eta - book.entries()[i - 1].eta > 5.0 * e.eta_sigma);
      CHECK(e.v_I > book.entries()[i - 1].v_I);
    }
  }
  CHECK(book.at(3).k == doctest::Approx(1.0 / 1000));
  CHECK_THROWS_AS(book.at(7), Error);
  CHECK_THROWS_AS(book.at(-1), Error);
}

TEST_CASE("codebook construction guards") {
  RunConfig cfg;
  const std::vector<double> dup{0.001, 0.001};
  CHECK_THROWS_AS(Codebook::build(fig2(), dup, cfg), Error);
  const std::vector<double> none{0.0};
  CHECK_THROWS_AS(Codebook::build(fig2(), none, cfg), Error);
  // Entries too close for the noise.
  std::vector<CodebookEntry> close{{0, 0.001, 0.5, 8.0, 0.01}, {1, 0.002, 0.52, 8.1, 0.01}};
  CHECK_THROWS_AS(Codebook(fig2(), close), Error);
  std::vector<CodebookEntry> misnumbered{{1, 0.001, 0.5, 8.0, 0.001}};
  CHECK_THROWS_AS(Codebook(fig2(), misnumbered), Error);
}

TEST_CASE("noiseless decode is the identity") {
  // Counts at the exact expected value: round(N T).
  const auto& book = fig2_book();
  RunConfig cfg;
  const auto times = fig2().time_grid();
  const auto free_curve = free_transmission_curve(fig2().params, fig2().det, times);
  std::vector<std::uint64_t> ref(times.size());
  for (std::size_t j = 0; j < times.size(); ++j)
    ref[j] = static_cast<std::uint64_t>(std::llround(free_curve.values()[j] * cfg.n_reference()));
  for (const auto& e : book.entries()) {
    auto sol = std::make_shared<const TrajectorySolution>(evolve_barrier(fig2().params, fig2().barrier(e.k), 1000.0));
    const auto curve = transmission_curve(sol, fig2().det, times);
    std::vector<std::uint64_t> counts(times.size());
    for (std::size_t j = 0; j < times.size(); ++j)
      counts[j] = static_cast<std::uint64_t>(std::llround(curve.values()[j] * cfg.n_particles));
    const auto d = bob_decode(counts, ref, times, book, cfg);
    REQUIRE(d.status == DecodeStatus::decoded);
    CHECK(*d.symbol == e.symbol);
    CHECK(d.security_pass);
    CHECK(d.eta_hat == doctest::Approx(e.eta).epsilon(1e-2));
  }
}

TEST_CASE("tiny particle counts give erasures, not crashes") {
  const auto& book = fig2_book();
  RunConfig cfg;
  cfg.n_particles = 10;
  const std::vector<int> msg{0, 3, 6, 2, 5};
  const auto tr = roundtrip(book, msg, cfg);
  CHECK(tr.symbols.size() == msg.size());
  CHECK(tr.decoded + tr.erasures + tr.ambiguous == msg.size());
  CHECK(tr.correct <= tr.decoded);
}

TEST_CASE("decode input validation") {
  const auto& book = fig2_book();
  RunConfig cfg;
  const auto times = fig2().time_grid();
  std::vector<std::uint64_t> c(times.size()), short_c(times.size() - 1);
  CHECK_THROWS_AS(bob_decode(short_c, c, times, book, cfg), Error);
  CHECK_THROWS_AS(bob_decode(c, short_c, times, book, cfg), Error);
}

TEST_CASE("security check on shifted arrival") {
  const auto& book = fig2_book();
  RunConfig cfg;
  const double t_k = perturbation_start(fig2().barrier(1.0), fig2().eps_w);
  DecodedResult d;
  d.status = DecodeStatus::decoded;
  d.symbol = 4;
  const double v = book.at(4).v_I;
  d.t_d_hat = t_k + fig2().distance() / v;
  CHECK(security_check(d, book, cfg));
  d.t_d_hat = t_k + fig2().distance() / (v * 1.04);
  CHECK(security_check(d, book, cfg));
  d.t_d_hat = t_k + fig2().distance() / (v * 1.2);
  CHECK_FALSE(security_check(d, book, cfg));
  d.t_d_hat = t_k + fig2().distance() / (v * 0.8);
  CHECK_FALSE(security_check(d, book, cfg));
  d.t_d_hat = t_k - 1.0;
  CHECK_FALSE(security_check(d, book, cfg));
  d.status = DecodeStatus::erasure;
  d.t_d_hat = t_k + fig2().distance() / v;
  CHECK_FALSE(security_check(d, book, cfg));
}

TEST_CASE("Eve with zero strength reproduces the single-barrier curve") {
  EveParams eve = EveParams::standard(fig2());
  CHECK(eve.k_E == doctest::Approx(1.0 / 500));
  CHECK(eve.x_E == doctest::Approx(250.0));
  CHECK(eve.t_E == doctest::Approx(500.0 - std::sqrt(500.0)));
  eve.k_E = 0.0;
  const auto with = eve_intercept(fig2(), 0.002, eve);
  auto sol = std::make_shared<const TrajectorySolution>(evolve_barrier(fig2().params, fig2().barrier(0.002), 1000.0));
  const auto base = transmission_curve(sol, fig2().det, fig2().time_grid());
  double worst = 0.0;
  for (std::size_t j = 0; j < base.values().size(); ++j)
    worst = std::max(worst, std::abs(with.values()[j] - base.values()[j]));
  CHECK(worst <= 1e-7);
}

TEST_CASE("Eve placement validation") {
  EveParams eve = EveParams::standard(fig2());
  eve.x_E = 600.0;
  CHECK_THROWS_AS(eve_intercept(fig2(), 0.002, eve), Error);
  eve.x_E = -1.0;
  CHECK_THROWS_AS(eve_intercept(fig2(), 0.002, eve), Error);
}

TEST_CASE("round trip without Eve decodes and passes security") {
  const auto& book = fig2_book();
  RunConfig cfg;
  cfg.seed = 99;
  std::vector<int> msg;
  for (int i = 0; i < 28; ++i) msg.push_back((i * 5) % 7);
  const auto tr = roundtrip(book, msg, cfg);
  CHECK(tr.correct == msg.size());
  CHECK(tr.security_passes == msg.size());
  CHECK(tr.accuracy() == 1.0);
  const auto serial = roundtrip(book, msg, cfg, std::nullopt, Exec::serial);
  REQUIRE(serial.symbols.size() == tr.symbols.size());
  for (std::size_t i = 0; i < msg.size(); ++i) {
    CHECK(serial.symbols[i].result.eta_hat == tr.symbols[i].result.eta_hat);
    CHECK(serial.symbols[i].result.t_d_hat == tr.symbols[i].result.t_d_hat);
  }
}

TEST_CASE("round trip with a weak Eve still passes") {
  const auto& book = fig2_book();
  RunConfig cfg;
  EveParams eve = EveParams::standard(fig2());
  eve.k_E = 1e-8;
  const std::vector<int> msg{0, 1, 2, 3, 4, 5, 6};
  const auto tr = roundtrip(book, msg, cfg, eve);
  CHECK(tr.correct == msg.size());
  CHECK(tr.security_passes == msg.size());
}

TEST_CASE("round trip with the standard Eve fails security") {
  const auto& book = fig2_book();
  RunConfig cfg;
  const std::vector<int> msg{0, 1, 2, 3, 4, 5, 6, 0, 1, 2, 3, 4, 5, 6};
  const auto tr = roundtrip(book, msg, cfg, EveParams::standard(fig2()));
  CHECK(tr.security_passes == 0u);
}

TEST_CASE("round trip edge cases and JSON transcript") {
  const auto& book = fig2_book();
  RunConfig cfg;
  const std::vector<int> empty;
  const auto tr0 = roundtrip(book, empty, cfg);
  CHECK(tr0.symbols.empty());
  CHECK(tr0.accuracy() == 0.0);
  const std::vector<int> bad{0, 9};
  CHECK_THROWS_AS(roundtrip(book, bad, cfg), Error);

  const std::vector<int> msg{2, 4};
  const auto a = roundtrip(book, msg, cfg);
  const auto b = roundtrip(book, msg, cfg);
  CHECK(a.symbols[0].result.eta_hat == b.symbols[0].result.eta_hat);
  std::ostringstream os;
  write_json(os, a);
  const auto j = nlohmann::json::parse(os.str());
  REQUIRE(j["symbols"].size() == 2);
  CHECK(j["symbols"][0]["sent_k"].get<double>() == book.at(2).k);
  CHECK(j["symbols"][1]["decoded"].get<int>() == 4);
  CHECK(j["symbols"][0].contains("eta_hat"));
  CHECK(j["symbols"][0].contains("v_I_hat"));
  CHECK(j["symbols"][0].contains("security_pass"));
  CHECK(j["symbols"][0].contains("counts_file"));
  CHECK(j["summary"]["correct"].get<int>() == 2);
}

TEST_CASE("Eve grid backend agrees with the analytic backend on a small scenario") {
  Scenario sc;
  sc.preset = "small";
  sc.params = {1.0, 1.0, -40.0, 1.0, 50.0, 0.0};
  sc.g = 1.0 / 25;
  sc.t_b = 40.0;
  sc.k_list = {0.01};
  sc.det = {20.0};
  sc.t_end = 80.0;
  sc.grid_points = 161;
  EveParams eve{0.005, 10.0, 1.0 / 25, 45.0};
  EveGridSettings gs;
  gs.grid = {-350.0, 300.0, 4096};
  gs.dt = 0.05;
  const auto an = eve_intercept(sc, 0.01, eve, EveBackend::analytic);
  const auto gr = eve_intercept(sc, 0.01, eve, EveBackend::grid, gs);
  REQUIRE(gr.values().size() == an.values().size());
  CHECK(gr.source() == CurveSource::empirical);
  double worst = 0.0;
  for (std::size_t j = 0; j < an.values().size(); ++j)
    worst = std::max(worst, std::abs(gr.values()[j] - an.values()[j]));
  CHECK(worst <= 1e-3);
}
