#include <CLI11.hpp>

#include <ostream>

#include "commands.hpp"

namespace fwmkv::tools {
namespace {

/// Flags shared by the experiment commands; unset flags keep the config file (or default) value.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> id, family, L, init, out;
  std::optional<double> sigma, kappa, dict_lo, dict_hi, dt, t0, horizon, lambda;
  std::optional<int> dict_count, depth, reps, cutoff, stride;
  std::optional<std::size_t> particles, budget;
  std::optional<std::uint64_t> seed;
  std::vector<double> dict_values;

  ExperimentConfig resolve() const {
    ExperimentConfig c = config ? ExperimentConfig::load(*config) : ExperimentConfig{};
    if (id) c.id = *id;
    if (family) c.family.name = *family;
    if (L) c.family.L = *L;
    if (init) c.init = *init;
    if (out) c.output = *out;
    if (sigma) c.family.sigma = *sigma;
    if (kappa) c.family.kappa = *kappa;
    if (dict_lo) c.dictionary.lo = *dict_lo;
    if (dict_hi) c.dictionary.hi = *dict_hi;
    if (dict_count) c.dictionary.count = *dict_count;
    if (!dict_values.empty()) c.dictionary.values = dict_values;
    if (dt) c.sim.dt = *dt;
    if (t0) c.sim.t0 = *t0;
    if (horizon) c.sim.horizon = *horizon;
    if (stride) c.sim.record_stride = *stride;
    if (particles) c.sim.particles = *particles;
    if (seed) c.sim.seed = *seed;
    if (depth) c.depth = *depth;
    if (reps) c.mc_reps = *reps;
    if (budget) c.budget = *budget;
    if (lambda) c.lambda = *lambda;
    if (cutoff) c.cutoff = *cutoff;
    return c;
  }
};

void add_family_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "Experiment config file (or a run manifest)")->check(CLI::ExistingFile);
  app->add_option("--id", o.id, "Experiment id");
  app->add_option("--family", o.family, "Coefficient family: eikonal, kuramoto, fourier");
  app->add_option("--sigma", o.sigma, "Noise level");
  app->add_option("--L", o.L, "Eikonal running cost as trig terms, e.g. 'const=1 cos1=1'");
  app->add_option("--kappa", o.kappa, "Kuramoto coupling");
  app->add_option("--init", o.init, "Initial law: dirac:x, uniform[:cells] or a measure file");
  app->add_option("--dict-lo", o.dict_lo, "Lowest constant control");
  app->add_option("--dict-hi", o.dict_hi, "Highest constant control");
  app->add_option("--dict-count", o.dict_count, "Number of evenly spaced constant controls");
  app->add_option("--dict-values", o.dict_values, "Explicit constant controls (overrides lo/hi/count)");
}

void add_run_options(CLI::App* app, Overrides& o, bool search) {
  add_family_options(app, o);
  app->add_option("--particles", o.particles, "Particle count N");
  app->add_option("--dt", o.dt, "Time step");
  app->add_option("--t0", o.t0, "Start time");
  app->add_option("--horizon", o.horizon, "Terminal time T");
  app->add_option("--seed", o.seed, "Seed");
  app->add_option("--record-stride", o.stride, "Record every n-th law (0: first and last only)");
  app->add_option("--lambda", o.lambda, "Metric order (0: n_*)");
  app->add_option("--cutoff", o.cutoff, "Fourier cutoff K");
  app->add_option("--out", o.out, "Run directory");
  if (search) {
    app->add_option("--depth", o.depth, "Control intervals per signal");
    app->add_option("--reps", o.reps, "Independent re-evaluations of the best signal");
    app->add_option("--budget", o.budget, "Maximum number of searched signals");
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field control experiments on the torus", "mkv"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::function<int()> action;

  MetricArgs metric;
  auto* m = app.add_subcommand("metric", "Fourier-Wasserstein distance between two measures; prints value,err,K");
  m->add_option("first", metric.first, "Measure file, dirac:x or uniform[:cells]")->required();
  m->add_option("second", metric.second, "Measure file, dirac:x or uniform[:cells]")->required();
  m->add_option("--lambda", metric.lambda, "Order lambda (default n_*(d))");
  m->add_option("--cutoff", metric.cutoff, "Fourier cutoff K")->capture_default_str();
  m->add_option("--dim", metric.dim, "Dimension for dirac:/uniform specs")->capture_default_str();
  m->callback([&] { action = [&] { return cmd_metric(metric, out); }; });

  Overrides ho;
  HamiltonianArgs ham;
  auto* h = app.add_subcommand("hamiltonian", "Minimum over the dictionary of mu(l + M[gamma]); prints value,argmin,control");
  add_family_options(h, ho);
  h->add_option("--gamma", ham.gamma, "gamma as trig terms, e.g. 'cos1=1 sin2=0.5'")->required();
  h->add_flag("--half", ham.half, "Use the half generator convention");
  h->add_option("--refine", ham.refine, "Refinement levels around the best constant control")->capture_default_str();
  h->callback([&] {
    action = [&] {
      ham.config = ho.resolve();
      return cmd_hamiltonian(ham, out);
    };
  });

  Overrides so;
  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a law flow and write the trajectory");
  add_run_options(s, so, false);
  s->add_option("--signal", sim.signal, "Constant controls on equal pieces of [t0, T]");
  s->callback([&] {
    action = [&] {
      sim.config = so.resolve();
      return cmd_simulate(sim, out);
    };
  });

  Overrides eo;
  EikonalArgs eik;
  auto* e = app.add_subcommand("eikonal", "Solve the reduced Eikonal equation and write w_table.txt");
  e->add_option("--config", eo.config, "Experiment config file")->check(CLI::ExistingFile);
  e->add_option("--L", eo.L, "Running cost as trig terms");
  e->add_option("--horizon", eo.horizon, "Terminal time T");
  e->add_option("--out", eo.out, "Run directory");
  e->add_option("--nt", eik.time_cells, "Time cells")->capture_default_str();
  e->add_option("--ny", eik.space_cells, "Space cells")->capture_default_str();
  e->add_flag("--oracle", eik.oracle, "Check the sweep against the trajectory oracle");
  e->callback([&] {
    action = [&] {
      eik.config = eo.resolve();
      return cmd_eikonal(eik, out);
    };
  });

  Overrides vo;
  ValueArgs val;
  auto* v = app.add_subcommand("value", "Search piecewise-constant signals for an upper bound on the value");
  add_run_options(v, vo, true);
  v->add_option("--t", val.t, "Start time")->capture_default_str();
  v->callback([&] {
    action = [&] {
      val.config = vo.resolve();
      return cmd_value(val, out);
    };
  });

  Overrides dpo;
  DppArgs dpp;
  auto* d = app.add_subcommand("dpp-check", "Dynamic programming residual at (t, tau); writes dpp.csv");
  add_run_options(d, dpo, true);
  d->add_option("--t", dpp.t, "Start time")->capture_default_str();
  d->add_option("--tau", dpp.taus, "Intermediate times")->capture_default_str();
  d->callback([&] {
    action = [&] {
      dpp.config = dpo.resolve();
      return cmd_dpp_check(dpp, out);
    };
  });

  Overrides lo;
  LipschitzArgs lip;
  auto* l = app.add_subcommand("lipschitz", "Empirical Lipschitz probes in time or measure; writes lipschitz.csv");
  add_run_options(l, lo, true);
  l->add_option("--mode", lip.mode, "time or space")->check(CLI::IsMember({"time", "space"}))->capture_default_str();
  l->add_option("--t", lip.t, "Base time (time mode)")->capture_default_str();
  l->add_option("--gaps", lip.gaps, "Time gaps h (time mode)")->capture_default_str();
  l->add_option("--pairs", lip.pairs, "Random pairs (space mode)")->capture_default_str();
  l->callback([&] {
    action = [&] {
      lip.config = lo.resolve();
      return cmd_lipschitz(lip, out);
    };
  });

  AcceptanceArgs acc;
  auto* a = app.add_subcommand("acceptance", "Run a pinned acceptance suite and write acceptance_<suite>.csv");
  a->add_option("suite", acc.suite, "metrics, calculus, dynamics, value or all")->required();
  a->add_option("--seed", acc.seed, "Seed")->capture_default_str();
  a->add_option("--out", acc.output, "Run directory")->capture_default_str();
  a->callback([&] { action = [&] { return cmd_acceptance(acc, out); }; });

  std::string export_dir;
  auto* x = app.add_subcommand("export", "Turn a run directory into plot-ready .dat files");
  x->add_option("dir", export_dir, "Run directory")->required();
  x->callback([&] { action = [&] { return cmd_export(export_dir, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }
  try {
    return action();
  } catch (const std::exception& ex) {
    err << "mkv: " << ex.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace fwmkv::tools
