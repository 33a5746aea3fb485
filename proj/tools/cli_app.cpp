#include "cli_app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "qsa/superarrival.hpp"
#include "qsa/trajectories.hpp"
#include "qsa/version.hpp"

namespace qsa::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using Field = std::function<void(const json&)>;

// Visits every key of an object; anything not in fields is rejected.
void read_object(const json& j, const std::string& where, const std::map<std::string, Field>& fields) {
  require(j.is_object(), ErrorCode::InvalidArgument, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    require(it != fields.end(), ErrorCode::InvalidArgument, "unknown config key '" + where + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      fail(ErrorCode::InvalidArgument, "config key '" + where + "." + key + "': " + e.what());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidArgument || std::string(e.what()).find("config key") != std::string::npos)
        throw;
      fail(ErrorCode::InvalidArgument, "config key '" + where + "." + key + "': " + e.what());
    }
  }
}

template <class T>
Field set(T& target) {
  return [&target](const json& v) {
    if constexpr (std::is_floating_point_v<T>) {
      require(v.is_number(), ErrorCode::InvalidArgument, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      require(v.is_number_integer(), ErrorCode::InvalidArgument, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        require(v.is_number_unsigned(), ErrorCode::InvalidArgument, "expected a non-negative integer");
      }
    }
    target = v.get<T>();
  };
}

EveParams read_eve(const json& v, const Scenario& sc) {
  EveParams e = EveParams::standard(sc);
  if (v.is_string()) {
    require(v.get<std::string>() == "standard", ErrorCode::InvalidArgument, "eve must be null, \"standard\" or an object");
    return e;
  }
  read_object(v, "protocol.eve",
              {{"k_E", set(e.k_E)}, {"x_E", set(e.x_E)}, {"g_E", set(e.g_E)}, {"t_E", set(e.t_E)}});
  return e;
}

std::vector<double> default_codebook(const Scenario& sc) {
  if (sc.preset == "fig2") return {1.0 / 2500, 1.0 / 1000, 1.0 / 500, 1.0 / 200, 1.0 / 100};
  return sc.k_list;
}

// Shortest decimal form that parses back to the same double.
std::string shortest(double v) {
  for (int prec = 1; prec < 17; ++prec) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    if (std::strtod(os.str().c_str(), nullptr) == v) return os.str();
  }
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string header(const Config& cfg, const std::string& command) {
  std::ostringstream os;
  os << "# artifact " << version << " command " << command << '\n' << "# config " << to_json(cfg).dump() << '\n';
  return os.str();
}

RunConfig run_config(const Config& cfg) {
  RunConfig rc;
  rc.n_particles = cfg.protocol.n_particles;
  rc.n_ref_factor = cfg.protocol.n_ref_factor;
  rc.z = cfg.protocol.z;
  rc.delta_sec = cfg.protocol.delta_sec;
  rc.seed = cfg.seed;
  return rc;
}

void cmd_transmission(const Config& cfg, std::ostream& out) {
  const auto& sc = cfg.scenario;
  const auto times = sc.time_grid();
  auto ks = sc.k_list;
  std::sort(ks.begin(), ks.end());
  std::vector<TransmissionCurve> cols{free_transmission_curve(sc.params, sc.det, times)};
  for (double k : ks) {
    auto sol = std::make_shared<const TrajectorySolution>(evolve_barrier(sc.params, sc.barrier(k), sc.t_end));
    cols.push_back(transmission_curve(sol, sc.det, times));
  }
  out << header(cfg, "transmission") << std::setprecision(17) << "t,T_free";
  for (double k : ks) out << ",T_" << shortest(k);
  out << '\n';
  for (std::size_t j = 0; j < times.size(); ++j) {
    out << times[j];
    for (const auto& c : cols) out << ',' << c.values()[j];
    out << '\n';
  }
}

void cmd_sweep(const Config& cfg, std::ostream& out) {
  const auto table = sweep_k(cfg.scenario, cfg.scenario.k_list);
  out << header(cfg, "sweep");
  write_csv(out, table);
}

void cmd_trajectories(const Config& cfg, std::ostream& out) {
  const auto& sc = cfg.scenario;
  const auto& ts = cfg.trajectories;
  require(ts.points >= 2, ErrorCode::InvalidArgument, "trajectories.points must be at least 2");
  EnsembleConfig ec{ts.n_traj, cfg.seed, linspace(sc.params.t0, sc.t_end, ts.points)};
  // An empty ensemble is a valid request at the command level: header only.
  const auto ens = ts.n_traj == 0 ? std::vector<Trajectory>{} : integrate_ensemble(sc.params, sc.barrier(ts.k), ec);
  out << header(cfg, "trajectories");
  write_csv(out, ens);
}

void cmd_oracle_compare(const Config& cfg, std::ostream& out) {
  const auto& sc = cfg.scenario;
  const auto& os = cfg.oracle;
  require(os.outputs >= 2, ErrorCode::InvalidArgument, "oracle.outputs must be at least 2");
  const auto sol = evolve_barrier(sc.params, sc.barrier(os.k), sc.t_end);
  const OracleOptions opt;
  const auto s0 = init_gaussian(os.grid, sc.params, opt);
  const auto pot = PotentialSpec::from(sc.params, sc.barrier(os.k));
  const auto times = linspace(sc.params.t0, sc.t_end, os.outputs);
  const double norm0 = s0.norm();

  ojson samples = ojson::array();
  double max_dT = 0.0, max_l2 = 0.0, drift = 0.0, last_t = sc.params.t0;
  std::size_t steps = 0;
  std::optional<std::string> leak;
  try {
    steps = evolve_grid_observe(s0, pot, times, os.dt, opt, [&](const GridState& s) {
      const auto r = compare(sol, std::span<const GridState>(&s, 1), sc.det.x_T);
      max_dT = std::max(max_dT, r.max_dT);
      max_l2 = std::max(max_l2, r.max_l2);
      drift = std::max(drift, std::abs(s.norm() - norm0));
      last_t = s.t;
      samples.push_back({{"t", s.t}, {"dT", r.max_dT}, {"l2", r.max_l2}});
    });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EdgeLeak) throw;
    leak = e.what();
  }
  ojson j;
  j["artifact_version"] = version;
  j["command"] = "oracle-compare";
  j["config"] = to_json(cfg);
  j["k"] = os.k;
  j["x_T"] = sc.det.x_T;
  j["max_dT"] = max_dT;
  j["max_l2"] = max_l2;
  j["norm_drift"] = drift;
  j["steps"] = steps;
  j["edge_leak"] = leak ? ojson(*leak) : ojson(nullptr);
  j["completed_until"] = last_t;
  j["samples"] = std::move(samples);
  out << j.dump(2) << '\n';
}

void write_counts(const std::string& path, const std::vector<double>& times, const std::vector<std::uint64_t>& c) {
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::InvalidArgument, "cannot write " + path);
  f << std::setprecision(17) << "t,count\n";
  for (std::size_t j = 0; j < times.size(); ++j) f << times[j] << ',' << c[j] << '\n';
}

void cmd_protocol(const Config& cfg, std::ostream& out) {
  const auto& ps = cfg.protocol;
  const auto rc = run_config(cfg);
  const auto ks = ps.codebook_k.empty() ? default_codebook(cfg.scenario) : ps.codebook_k;
  const auto book = Codebook::build(cfg.scenario, ks, rc, ps.trials);
  auto message = ps.message;
  if (message.empty()) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xA11CEULL));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(book.size()) - 1);
    for (std::size_t i = 0; i < ps.message_length; ++i) message.push_back(pick(rng));
  }
  auto tr = roundtrip(book, message, rc, ps.eve, Exec::parallel, ps.eve_backend);
  if (!ps.counts_dir.empty()) {
    std::filesystem::create_directories(ps.counts_dir);
    write_counts((std::filesystem::path(ps.counts_dir) / "reference.csv").string(), tr.readout_times,
                 tr.reference_counts);
    for (std::size_t i = 0; i < tr.symbols.size(); ++i) {
      const auto path = (std::filesystem::path(ps.counts_dir) / ("symbol_" + std::to_string(i) + ".csv")).string();
      write_counts(path, tr.readout_times, tr.symbols[i].counts);
      tr.symbols[i].counts_file = path;
    }
  }
  std::ostringstream body;
  write_json(body, tr);
  const auto t = ojson::parse(body.str());
  ojson j;
  j["artifact_version"] = version;
  j["command"] = "protocol";
  j["config"] = to_json(cfg);
  j["codebook"] = ojson::array();
  for (const auto& e : book.entries())
    j["codebook"].push_back({{"symbol", e.symbol}, {"k", e.k}, {"eta", e.eta}, {"v_I", e.v_I}, {"eta_sigma", e.eta_sigma}});
  j["symbols"] = t["symbols"];
  j["summary"] = t["summary"];
  out << j.dump(2) << '\n';
}

}  // namespace

Config defaults(const std::string& preset_name) {
  Config cfg;
  cfg.scenario = preset(preset_name);
  // The co-moving window keeps the lab width 7000 and is centred on the packet.
  cfg.oracle.grid = {cfg.scenario.params.q0 - 3500.0, cfg.scenario.params.q0 + 3500.0, 1u << 14};
  return cfg;
}

void apply_json(Config& cfg, const json& j) {
  auto& sc = cfg.scenario;
  auto& p = sc.params;
  auto& ts = cfg.trajectories;
  auto& os = cfg.oracle;
  auto& ps = cfg.protocol;
  read_object(
      j, "config",
      {{"preset",
        [&](const json& v) {
          require(v.get<std::string>() == sc.preset, ErrorCode::InvalidArgument,
                  "config preset '" + v.get<std::string>() + "' does not match the selected preset '" + sc.preset + "'");
        }},
       {"params",
        [&](const json& v) {
          read_object(v, "params",
                      {{"m", set(p.m)},
                       {"hbar", set(p.hbar)},
                       {"q0", set(p.q0)},
                       {"p0", set(p.p0)},
                       {"alpha0_sq", set(p.alpha0_sq)},
                       {"t0", set(p.t0)}});
        }},
       {"g", set(sc.g)},
       {"t_b", set(sc.t_b)},
       {"k_list", [&](const json& v) { sc.k_list = v.get<std::vector<double>>(); }},
       {"x_T", set(sc.det.x_T)},
       {"eps_dev", set(sc.eps_dev)},
       {"eps_w", set(sc.eps_w)},
       {"t_end", set(sc.t_end)},
       {"grid_points", set(sc.grid_points)},
       {"seed", set(cfg.seed)},
       {"trajectories",
        [&](const json& v) {
          read_object(v, "trajectories", {{"k", set(ts.k)}, {"n_traj", set(ts.n_traj)}, {"points", set(ts.points)}});
        }},
       {"oracle",
        [&](const json& v) {
          read_object(v, "oracle",
                      {{"k", set(os.k)},
                       {"x_min", set(os.grid.x_min)},
                       {"x_max", set(os.grid.x_max)},
                       {"n", set(os.grid.n)},
                       {"dt", set(os.dt)},
                       {"outputs", set(os.outputs)}});
        }},
       {"protocol", [&](const json& v) {
          read_object(v, "protocol",
                      {{"n_particles", set(ps.n_particles)},
                       {"n_ref_factor", set(ps.n_ref_factor)},
                       {"z", set(ps.z)},
                       {"delta_sec", set(ps.delta_sec)},
                       {"trials", set(ps.trials)},
                       {"codebook_k", [&](const json& x) { ps.codebook_k = x.get<std::vector<double>>(); }},
                       {"message", [&](const json& x) { ps.message = x.get<std::vector<int>>(); }},
                       {"message_length", set(ps.message_length)},
                       {"eve",
                        [&](const json& x) {
                          if (x.is_null()) {
                            ps.eve.reset();
                          } else {
                            ps.eve = read_eve(x, sc);
                          }
                        }},
                       {"eve_backend",
                        [&](const json& x) {
                          const auto s = x.get<std::string>();
                          require(s == "analytic" || s == "grid", ErrorCode::InvalidArgument,
                                  "eve_backend must be \"analytic\" or \"grid\"");
                          ps.eve_backend = s == "grid" ? EveBackend::grid : EveBackend::analytic;
                        }},
                       {"counts_dir", [&](const json& x) { ps.counts_dir = x.get<std::string>(); }}});
        }}});
}

ojson to_json(const Config& cfg) {
  const auto& sc = cfg.scenario;
  const auto& p = sc.params;
  const auto& ps = cfg.protocol;
  ojson j;
  j["preset"] = sc.preset;
  j["params"] = {{"m", p.m}, {"hbar", p.hbar}, {"q0", p.q0}, {"p0", p.p0}, {"alpha0_sq", p.alpha0_sq}, {"t0", p.t0}};
  j["g"] = sc.g;
  j["t_b"] = sc.t_b;
  j["k_list"] = sc.k_list;
  j["x_T"] = sc.det.x_T;
  j["eps_dev"] = sc.eps_dev;
  j["eps_w"] = sc.eps_w;
  j["t_end"] = sc.t_end;
  j["grid_points"] = sc.grid_points;
  j["seed"] = cfg.seed;
  j["trajectories"] = {{"k", cfg.trajectories.k}, {"n_traj", cfg.trajectories.n_traj}, {"points", cfg.trajectories.points}};
  j["oracle"] = {{"k", cfg.oracle.k},   {"x_min", cfg.oracle.grid.x_min}, {"x_max", cfg.oracle.grid.x_max},
                 {"n", cfg.oracle.grid.n}, {"dt", cfg.oracle.dt},          {"outputs", cfg.oracle.outputs}};
  ojson pj;
  pj["n_particles"] = ps.n_particles;
  pj["n_ref_factor"] = ps.n_ref_factor;
  pj["z"] = ps.z;
  pj["delta_sec"] = ps.delta_sec;
  pj["trials"] = ps.trials;
  pj["codebook_k"] = ps.codebook_k;
  pj["message"] = ps.message;
  pj["message_length"] = ps.message_length;
  pj["eve"] = ps.eve ? ojson{{"k_E", ps.eve->k_E}, {"x_E", ps.eve->x_E}, {"g_E", ps.eve->g_E}, {"t_E", ps.eve->t_E}}
                     : ojson(nullptr);
  pj["eve_backend"] = ps.eve_backend == EveBackend::grid ? "grid" : "analytic";
  pj["counts_dir"] = ps.counts_dir;
  j["protocol"] = std::move(pj);
  return j;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum superarrival simulator", "qsa"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::optional<std::string> preset_flag, config_path, out_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> x_detector, eps_dev;
  app.add_option("--preset", preset_flag, "Scenario preset")->check(CLI::IsMember({"fig1", "fig2"}));
  app.add_option("--config", config_path, "JSON config overlaying the preset")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Output file (default stdout)");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--x-detector", x_detector, "Detector position x_T");
  app.add_option("--eps-dev", eps_dev, "Deviation threshold");

  const std::map<std::string, std::function<void(const Config&, std::ostream&)>> commands{
      {"transmission", cmd_transmission},
      {"sweep", cmd_sweep},
      {"trajectories", cmd_trajectories},
      {"oracle-compare", cmd_oracle_compare},
      {"protocol", cmd_protocol}};
  app.add_subcommand("transmission", "CSV t,T_free,T_k... on the scenario grid");
  app.add_subcommand("sweep", "Key table CSV over k_list");
  app.add_subcommand("trajectories", "Seeded trajectory ensemble CSV");
  app.add_subcommand("oracle-compare", "Grid solver vs analytic transmission, JSON");
  app.add_subcommand("protocol", "Encode/detect/decode transcript, JSON");

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    json file;
    if (config_path) {
      std::ifstream f(*config_path);
      try {
        file = json::parse(f);
      } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, "cannot parse " + *config_path + ": " + e.what());
      }
    }
    std::string name = "fig2";
    if (preset_flag) {
      name = *preset_flag;
    } else if (file.is_object() && file.contains("preset") && file["preset"].is_string()) {
      name = file["preset"].get<std::string>();
    }
    Config cfg = defaults(name);
    if (config_path) apply_json(cfg, file);
    if (seed) cfg.seed = *seed;
    if (x_detector) cfg.scenario.det.x_T = *x_detector;
    if (eps_dev) cfg.scenario.eps_dev = *eps_dev;
    cfg.scenario.validate();

    const auto& cmd = commands.at(app.get_subcommands().front()->get_name());
    if (out_path) {
      std::ofstream f(*out_path);
      require(static_cast<bool>(f), ErrorCode::InvalidArgument, "cannot open " + *out_path);
      cmd(cfg, f);
    } else {
      cmd(cfg, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace qsa::cli
