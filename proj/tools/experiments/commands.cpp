#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include "oracles.hpp"

namespace fwmkv::tools {
namespace {

/// Owns the run directory for the duration of body, then writes the manifest.
template <class Body>
int with_run(const ExperimentConfig& cfg, const std::string& command, Body body) {
  RunLock lock(cfg.output);
  RunManifest m;
  m.command = command;
  m.config = cfg.to_kv();
  const auto start = std::chrono::steady_clock::now();
  const int code = body(m, lock.dir());
  m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.write(lock.dir());
  return code;
}

std::ofstream open_artifact(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  return out;
}

TorusMeasure resolve_measure(const std::string& spec, int dim) {
  if (std::filesystem::is_regular_file(spec)) {
    try {
      return read_measure(std::filesystem::path(spec));
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  return load_measure_spec(spec, dim);
}

}  // namespace

int cmd_metric(const MetricArgs& args, std::ostream& out) {
  const TorusMeasure a = resolve_measure(args.first, args.dim);
  const TorusMeasure b = resolve_measure(args.second, args.dim);
  if (a.dim() != b.dim()) throw UsageError("measures live on tori of different dimension");
  const double lambda = args.lambda.value_or(n_star(a.dim()));
  const MetricResult r = rho_lambda(a, b, lambda, args.cutoff);
  out << format_double(r.value) << ',' << format_double(r.truncation_error) << ',' << r.cutoff << '\n';
  return kExitPass;
}

int cmd_hamiltonian(const HamiltonianArgs& args, std::ostream& out) {
  const ExperimentConfig& cfg = args.config;
  const int dim = cfg.family.state_dim();
  const CoefficientFamily family = make_family(cfg.family);
  const TorusMeasure mu = load_measure_spec(cfg.init, dim);
  const FourierTable gamma = trig_table(dim, parse_trig_terms(args.gamma, dim));
  fwmkv::HamiltonianOptions opts;
  opts.convention = args.half ? GeneratorConvention::half : GeneratorConvention::full;
  opts.refine_levels = args.refine;
  const HamiltonianResult h = hamiltonian(mu, gamma, cfg.dictionary.build(), family, opts);
  out << format_double(h.value) << ',' << h.argmin << ',' << format_double(h.control[0]) << '\n';
  return kExitPass;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  const ExperimentConfig& cfg = args.config;
  if (args.signal.empty()) throw UsageError("--signal needs at least one value");
  cfg.sim.validate();
  const CoefficientFamily family = make_family(cfg.family);
  const TorusMeasure mu0 = load_measure_spec(cfg.init, cfg.family.state_dim());
  const ControlDictionary pieces = ControlDictionary::constants(args.signal);
  std::vector<std::size_t> picks(args.signal.size());
  for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
  const ControlSignal signal = ControlSignal::uniform(cfg.sim.t0, cfg.sim.horizon, pieces, picks);
  return with_run(cfg, "simulate", [&](RunManifest& m, const std::filesystem::path& dir) {
    const FlowTrajectory traj = simulate_flow(mu0, signal, family, cfg.sim);
    write_trajectory(dir, traj, family);
    m.artifacts = {"meta.txt", "payoff.csv"};
    for (std::size_t j = 0; j < traj.laws.size(); ++j) m.artifacts.push_back("laws_" + std::to_string(j) + ".txt");
    const double J = payoff(traj, family);
    m.checks.push_back({"payoff_finite", std::isfinite(J)});
    out << "payoff," << format_double(J) << '\n';
    return kExitPass;
  });
}

int cmd_eikonal(const EikonalArgs& args, std::ostream& out) {
  const ExperimentConfig& cfg = args.config;
  const EikonalProblem p{eikonal_running_cost(cfg.family.L), args.time_cells, args.space_cells, cfg.sim.horizon};
  return with_run(cfg, "eikonal", [&](RunManifest& m, const std::filesystem::path& dir) {
    const ValueTable w = eikonal_solve(p);
    write_value_table(dir / "w_table.txt", w);
    m.artifacts.push_back("w_table.txt");
    out << "w00,error_estimate,cfl\n"
        << format_double(w.at(0.0, 0.0)) << ',' << format_double(w.error_estimate) << ',' << format_double(w.cfl) << '\n';
    if (!args.oracle) return kExitPass;
    const OracleResult r = eikonal_trajectory_oracle(p, 0.0, 0.0);
    const ValueTable o = eikonal_oracle_table(p, std::max(r.levels - 1, 2));
    double gap = 0.0;
    for (int i = 0; i <= w.time_cells(); ++i)
      for (int j = 0; j < w.space_cells(); ++j) gap = std::max(gap, std::abs(w(i, j) - o.at(w.time(i), w.space(j))));
    const bool ok = gap <= 2e-2;
    m.checks.push_back({"oracle_sup_gap", ok});
    out << "oracle_w00,sup_gap,status\n" << format_double(r.value) << ',' << format_double(gap) << ',' << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kExitPass : kExitCheckFailed;
  });
}

int cmd_value(const ValueArgs& args, std::ostream& out) {
  const ExperimentConfig& cfg = args.config;
  const CoefficientFamily family = make_family(cfg.family);
  const TorusMeasure mu = load_measure_spec(cfg.init, cfg.family.state_dim());
  return with_run(cfg, "value", [&](RunManifest& m, const std::filesystem::path& dir) {
    const SearchResult r = value_search(args.t, mu, family, cfg.dictionary.build(), cfg.search());
    std::ostringstream row;
    row << "search_value,upper_bound,std_error,leaves,partial,signal\n"
        << format_double(r.search_value) << ',' << format_double(r.upper_bound) << ',' << format_double(r.std_error) << ','
        << r.leaves << ',' << (r.partial ? 1 : 0) << ",\"" << r.best.describe() << "\"\n";
    if (cfg.family.name == "eikonal") {
      const ValueTable w = eikonal_solve(EikonalProblem{eikonal_running_cost(cfg.family.L), 200, 200, cfg.sim.horizon});
      const ReducedValue red = reduced_value(args.t, mu, w);
      row << "reduced_value,lifted_mean,flagged,gap\n"
          << format_double(red.value) << ',' << format_double(red.mean) << ',' << (red.flagged ? 1 : 0) << ','
          << format_double(r.upper_bound - red.value) << '\n';
    }
    open_artifact(dir / "value.csv") << row.str();
    m.artifacts.push_back("value.csv");
    m.checks.push_back({"complete_search", !r.partial});
    out << row.str();
    return kExitPass;
  });
}

int cmd_dpp_check(const DppArgs& args, std::ostream& out) {
  const ExperimentConfig& cfg = args.config;
  const CoefficientFamily family = make_family(cfg.family);
  const TorusMeasure mu = load_measure_spec(cfg.init, cfg.family.state_dim());
  const ControlDictionary dict = cfg.dictionary.build();
  std::optional<ValueTable> table;
  LeafEvaluator continuation;
  double tolerance = 1e-10;
  if (cfg.family.name == "eikonal") {
    table = eikonal_solve(EikonalProblem{eikonal_running_cost(cfg.family.L), 200, 200, cfg.sim.horizon});
    continuation = [&](const ParticleSystem& s) { return reduced_value(s.time(), s.nodes(), *table).value; };
    tolerance = table->error_estimate;
  }
  return with_run(cfg, "dpp-check", [&](RunManifest& m, const std::filesystem::path& dir) {
    std::ostringstream csv;
    csv << "t,tau,lhs,rhs,residual,error_bar,status\n";
    bool all = true;
    for (double tau : args.taus) {
      const bool terminal = std::abs(tau - cfg.sim.horizon) <= 1e-12;
      const DPPReport r = dpp_residual(args.t, tau, mu, family, dict, cfg.search(), terminal ? LeafEvaluator{} : continuation,
                                       terminal ? 1e-10 : tolerance);
      csv << format_double(r.t) << ',' << format_double(r.tau) << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
          << format_double(r.residual()) << ',' << format_double(r.error_bar()) << ',' << (r.pass() ? "PASS" : "FAIL") << '\n';
      m.checks.push_back({"dpp_tau_" + format_double(tau), r.pass()});
      all = all && r.pass();
    }
    open_artifact(dir / "dpp.csv") << csv.str();
    m.artifacts.push_back("dpp.csv");
    out << csv.str();
    return all ? kExitPass : kExitCheckFailed;
  });
}

int cmd_lipschitz(const LipschitzArgs& args, std::ostream& out) {
  const ExperimentConfig& cfg = args.config;
  if (args.mode != "time" && args.mode != "space") throw UsageError("--mode must be time or space");
  const CoefficientFamily family = make_family(cfg.family);
  const ControlDictionary dict = cfg.dictionary.build();
  const int dim = cfg.family.state_dim();
  return with_run(cfg, "lipschitz", [&](RunManifest& m, const std::filesystem::path& dir) {
    std::ostringstream csv;
    bool ok = true;
    if (args.mode == "time") {
      const TimeLipschitzReport r = lipschitz_probe_time(family, dict, cfg.search(), load_measure_spec(cfg.init, dim), args.t, args.gaps);
      csv << "h,difference,noise\n";
      for (std::size_t i = 0; i < r.gaps.size(); ++i)
        csv << format_double(r.gaps[i]) << ',' << format_double(r.differences[i]) << ',' << format_double(r.noise[i]) << '\n';
      ok = r.pass();
      out << csv.str() << "exponent," << format_double(r.exponent) << "\nnoise_floor," << (r.noise_floor ? 1 : 0) << '\n';
      m.checks.push_back({"time_exponent_or_floor", ok});
    } else {
      if (args.pairs < 1) throw UsageError("--pairs must be positive");
      std::vector<std::pair<TorusMeasure, TorusMeasure>> pairs;
      for (int p = 0; p < args.pairs; ++p)
        pairs.emplace_back(random_cloud(dim, cfg.sim.particles, derive_seed(cfg.sim.seed, 2 * p), true),
                           random_cloud(dim, cfg.sim.particles, derive_seed(cfg.sim.seed, 2 * p + 1), true));
      const SpaceLipschitzReport r = lipschitz_probe_space(family, dict, cfg.sim, pairs, cfg.cutoff);
      csv << "pair,ratio\n";
      for (std::size_t i = 0; i < r.ratios.size(); ++i) csv << i << ',' << format_double(r.ratios[i]) << '\n';
      ok = std::isfinite(r.l1);
      out << csv.str() << "l1," << format_double(r.l1) << "\nskipped," << r.skipped << '\n';
      m.checks.push_back({"space_ratio_finite", ok});
    }
    open_artifact(dir / "lipschitz.csv") << csv.str();
    m.artifacts.push_back("lipschitz.csv");
    return ok ? kExitPass : kExitCheckFailed;
  });
}

int cmd_acceptance(const AcceptanceArgs& args, std::ostream& out) {
  suite_criteria(args.suite);  // validates before any lock is taken
  ExperimentConfig echo;
  echo.id = "acceptance-" + args.suite;
  echo.sim.seed = args.seed;
  echo.output = args.output;
  return with_run(echo, "acceptance " + args.suite, [&](RunManifest& m, const std::filesystem::path& dir) {
    const AcceptanceReport report = run_acceptance(args.suite, args.seed, &out);
    const std::string name = "acceptance_" + args.suite + ".csv";
    open_artifact(dir / name) << report.csv();
    m.artifacts.push_back(name);
    for (const auto& c : report.criteria) {
      m.checks.push_back({"criterion_" + std::to_string(c.id), c.pass()});
      out << "criterion " << c.id << ' ' << (c.pass() ? "PASS" : "FAIL") << ' ' << c.title << '\n';
    }
    if (!report.pass()) {
      out << "failures:";
      for (const auto& c : report.criteria)
        for (const auto& r : c.rows)
          if (!r.pass) out << ' ' << c.id << ':' << r.check;
      out << '\n';
    }
    return report.pass() ? kExitPass : kExitCheckFailed;
  });
}

int cmd_export(const std::filesystem::path& dir, std::ostream& out) {
  const RunManifest m = RunManifest::read(dir);
  std::vector<std::string> written;
  if (std::filesystem::is_regular_file(dir / "w_table.txt")) {
    auto f = open_artifact(dir / "w_surface.dat");
    write_value_surface(f, read_value_table(dir / "w_table.txt"));
    written.push_back("w_surface.dat");
  }
  const auto read_csv = [](const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::istringstream s(line);
      for (std::string c; std::getline(s, c, ',');) cells.push_back(c);
      rows.push_back(cells);
    }
    return rows;
  };
  if (std::filesystem::is_regular_file(dir / "lipschitz.csv") && m.command == "lipschitz") {
    const auto rows = read_csv(dir / "lipschitz.csv");
    auto f = open_artifact(dir / "lipschitz.dat");
    if (!rows.empty() && rows.front().size() == 3) {
      f << "# log_h log_difference\n";
      for (const auto& r : rows) {
        const double h = std::stod(r[0]);
        const double d = std::stod(r[1]);
        if (d > 0.0) f << format_double(std::log(h)) << ' ' << format_double(std::log(d)) << '\n';
      }
    } else {
      f << "# pair ratio\n";
      for (const auto& r : rows) f << r[0] << ' ' << r[1] << '\n';
    }
    written.push_back("lipschitz.dat");
  }
  if (std::filesystem::is_regular_file(dir / "dpp.csv")) {
    auto f = open_artifact(dir / "dpp.dat");
    f << "# t tau lhs rhs residual error_bar pass\n";
    for (const auto& r : read_csv(dir / "dpp.csv"))
      f << r[0] << ' ' << r[1] << ' ' << r[2] << ' ' << r[3] << ' ' << r[4] << ' ' << r[5] << ' ' << (r[6] == "PASS" ? 1 : 0) << '\n';
    written.push_back("dpp.dat");
  }
  if (written.empty()) throw UsageError("nothing to export in '" + dir.string() + "'");
  for (const auto& w : written) out << (dir / w).string() << '\n';
  return kExitPass;
}

}  // namespace fwmkv::tools
