#include "fwmkv/value.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fwmkv/parallel.hpp"
#include "fwmkv/rng.hpp"

namespace fwmkv {
namespace {

constexpr std::uint64_t kRepTag = 0x5EA2C4ull;
constexpr std::uint64_t kNestedTag = 0x4E57ull;
constexpr int kOracleControls = 161;

int wrap_index(int j, int n) {
  j %= n;
  return j < 0 ? j + n : j;
}

void check_problem(const EikonalProblem& p) {
  if (p.time_cells < 1 || p.space_cells < 4) throw std::invalid_argument("eikonal grid too small");
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon)) throw std::invalid_argument("eikonal horizon must be positive");
}

ValueTable lax_friedrichs(const EikonalProblem& p) {
  const int nt = p.time_cells;
  const int ny = p.space_cells;
  ValueTable tab(nt, ny, p.horizon, "local-lax-friedrichs");
  const double dy = kTwoPi / ny;
  const double dtau = p.horizon / nt;
  std::vector<double> L(static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) L[static_cast<std::size_t>(j)] = p.L(tab.space(j));
  std::vector<double> w(static_cast<std::size_t>(ny), 0.0);
  std::vector<double> next(w.size());
  for (int j = 0; j < ny; ++j) tab(nt, j) = 0.0;
  for (int i = nt - 1; i >= 0; --i) {
    double pmax = 0.0;
    for (int j = 0; j < ny; ++j)
      pmax = std::max(pmax, std::abs(w[static_cast<std::size_t>(wrap_index(j + 1, ny))] - w[static_cast<std::size_t>(j)]) / dy);
    const int sub = std::max(1, static_cast<int>(std::ceil(pmax * dtau / (0.5 * dy))));
    const double h = dtau / sub;
    tab.substeps += sub;
    for (int s = 0; s < sub; ++s) {
      for (int j = 0; j < ny; ++j) {
        const double wc = w[static_cast<std::size_t>(j)];
        const double pm = (wc - w[static_cast<std::size_t>(wrap_index(j - 1, ny))]) / dy;
        const double pp = (w[static_cast<std::size_t>(wrap_index(j + 1, ny))] - wc) / dy;
        const double alpha = std::max(std::abs(pm), std::abs(pp));
        const double pbar = 0.5 * (pm + pp);
        const double flux = 0.5 * pbar * pbar - 0.5 * alpha * (pp - pm);
        tab.cfl = std::max(tab.cfl, alpha * h / dy);
        next[static_cast<std::size_t>(j)] = wc + h * (L[static_cast<std::size_t>(j)] - flux);
      }
      w.swap(next);
    }
    for (int j = 0; j < ny; ++j) {
      if (!std::isfinite(w[static_cast<std::size_t>(j)])) throw std::runtime_error("eikonal sweep diverged");
      tab(i, j) = w[static_cast<std::size_t>(j)];
    }
  }
  return tab;
}

struct Segments {
  int steps = 0;
  std::vector<int> cuts;  // step offsets of interval boundaries, size depth + 1
};

Segments split_steps(double t, double end, const SearchConfig& cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("search depth must be >= 1");
  SimulationConfig c = cfg.sim;
  c.t0 = t;
  c.horizon = end;
  c.validate();
  Segments s;
  s.steps = c.steps();
  if (s.steps < cfg.depth) throw std::invalid_argument("search horizon has fewer steps than control intervals");
  for (int l = 0; l <= cfg.depth; ++l) s.cuts.push_back(s.steps * l / cfg.depth);
  return s;
}

struct Branch {
  double value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> picks;
  std::size_t leaves = 0;
  bool partial = false;
};

class TreeWalker {
 public:
  TreeWalker(const ControlDictionary& dict, const Segments& seg, const LeafEvaluator& leaf, std::size_t budget)
      : dict_(dict), seg_(seg), leaf_(leaf), budget_(budget) {}

  void walk(const ParticleSystem& sys, std::vector<std::size_t>& picks, Branch& out) const {
    const std::size_t level = picks.size();
    if (level + 1 == seg_.cuts.size()) {
      if (out.leaves >= budget_) {
        out.partial = true;
        return;
      }
      ++out.leaves;
      const double v = sys.accumulated_cost() + (leaf_ ? leaf_(sys) : sys.terminal_cost());
      if (v < out.value) {
        out.value = v;
        out.picks = picks;
      }
      return;
    }
    const int n = seg_.cuts[level + 1] - seg_.cuts[level];
    for (std::size_t e = 0; e < dict_.size() && !out.partial; ++e) {
      ParticleSystem child = sys;
      child.advance(dict_[e], n);
      picks.push_back(e);
      walk(child, picks, out);
      picks.pop_back();
    }
  }

 private:
  const ControlDictionary& dict_;
  const Segments& seg_;
  const LeafEvaluator& leaf_;
  std::size_t budget_;
};

double replay(const TorusMeasure& mu0, const CoefficientFamily& family, const ControlDictionary& dict,
              const SimulationConfig& c, const Segments& seg, const std::vector<std::size_t>& picks,
              const LeafEvaluator& leaf) {
  ParticleSystem sys(mu0, family, c);
  for (std::size_t l = 0; l < picks.size(); ++l) sys.advance(dict[picks[l]], seg.cuts[l + 1] - seg.cuts[l]);
  return sys.accumulated_cost() + (leaf ? leaf(sys) : sys.terminal_cost());
}

}  // namespace

ValueTable::ValueTable(int time_cells, int space_cells, double horizon, std::string scheme_name)
    : scheme(std::move(scheme_name)), nt_(time_cells), ny_(space_cells), horizon_(horizon),
      values_(static_cast<std::size_t>(time_cells + 1) * static_cast<std::size_t>(space_cells), 0.0) {
  if (time_cells < 1 || space_cells < 2) throw std::invalid_argument("value table too small");
}

double ValueTable::at(double t, double y) const {
  if (!(t >= -1e-12 && t <= horizon_ + 1e-12)) throw std::out_of_range("value table: time outside [0, T]");
  const double u = std::clamp(t / horizon_ * nt_, 0.0, static_cast<double>(nt_));
  const int i = std::min(static_cast<int>(u), nt_ - 1);
  const double ft = u - i;
  const double v = wrap_angle(y + kPi) / kTwoPi * ny_;
  const int j = std::min(static_cast<int>(v), ny_ - 1);
  const double fy = v - j;
  const int j1 = (j + 1) % ny_;
  const auto row = [&](int r) { return (1.0 - fy) * (*this)(r, j) + fy * (*this)(r, j1); };
  if (ft == 0.0) return row(i);
  return (1.0 - ft) * row(i) + ft * row(i + 1);
}

ValueTable eikonal_solve(const EikonalProblem& p, bool estimate_error) {
  check_problem(p);
  ValueTable fine = lax_friedrichs(p);
  if (estimate_error && p.time_cells % 2 == 0 && p.space_cells % 2 == 0 && p.space_cells >= 8) {
    EikonalProblem half = p;
    half.time_cells /= 2;
    half.space_cells /= 2;
    const ValueTable coarse = lax_friedrichs(half);
    double e = 0.0;
    for (int i = 0; i <= half.time_cells; ++i)
      for (int j = 0; j < half.space_cells; ++j) e = std::max(e, std::abs(coarse(i, j) - fine(2 * i, 2 * j)));
    fine.error_estimate = e;
  }
  return fine;
}

ValueTable eikonal_oracle_table(const EikonalProblem& p, int level) {
  check_problem(p);
  if (level < 0 || level > 10) throw std::invalid_argument("oracle ladder level out of range");
  const int nt = 50 << level;
  const int ny = 64 << level;
  ValueTable tab(nt, ny, p.horizon, "semi-lagrangian-dp");
  const double dt = p.horizon / nt;
  const double dy = kTwoPi / ny;
  const double A = std::max(1.0, 1.25 * std::sqrt(2.0 * (p.L.max() - p.L.min())));
  const int na = kOracleControls;
  std::vector<int> offset(static_cast<std::size_t>(na));
  std::vector<double> frac(static_cast<std::size_t>(na));
  std::vector<double> cost(static_cast<std::size_t>(na) * static_cast<std::size_t>(ny));
  std::vector<double> L(static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) L[static_cast<std::size_t>(j)] = p.L(tab.space(j));
  for (int k = 0; k < na; ++k) {
    const double a = -A + 2.0 * A * k / (na - 1);
    const double shift = a * dt / dy;
    const double fl = std::floor(shift);
    offset[static_cast<std::size_t>(k)] = static_cast<int>(fl);
    frac[static_cast<std::size_t>(k)] = shift - fl;
    for (int j = 0; j < ny; ++j) {
      const double y1 = tab.space(j) + a * dt;
      cost[static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)] =
          dt * (0.5 * a * a + 0.5 * (L[static_cast<std::size_t>(j)] + p.L(y1)));
    }
  }
  for (int i = nt - 1; i >= 0; --i) {
    parallel_for(static_cast<std::size_t>(ny), [&](std::size_t ju) {
      const int j = static_cast<int>(ju);
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < na; ++k) {
        const int j0 = wrap_index(j + offset[static_cast<std::size_t>(k)], ny);
        const int j1 = (j0 + 1) % ny;
        const double f = frac[static_cast<std::size_t>(k)];
        const double v = cost[static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) + ju] +
                         (1.0 - f) * tab(i + 1, j0) + f * tab(i + 1, j1);
        best = std::min(best, v);
      }
      tab(i, j) = best;
    });
  }
  return tab;
}

OracleResult eikonal_trajectory_oracle(const EikonalProblem& p, double t, double y, double tol, int max_level) {
  if (!(tol > 0.0)) throw std::invalid_argument("oracle tolerance must be positive");
  OracleResult r;
  double prev = 0.0;
  for (int level = 0; level <= max_level; ++level) {
    const double v = eikonal_oracle_table(p, level).at(t, y);
    r.levels = level + 1;
    r.value = v;
    if (level > 0) {
      r.last_change = std::abs(v - prev);
      if (r.last_change <= tol) {
        r.converged = true;
        break;
      }
    }
    prev = v;
  }
  return r;
}

ReducedValue reduced_value(double t, const NodesView& nodes, const ValueTable& table) {
  const LiftedMean m = lifted_mean(nodes);
  return {table.at(t, m.mean), m.mean, m.flagged};
}

ReducedValue reduced_value(double t, const TorusMeasure& mu, const ValueTable& table) {
  return reduced_value(t, mu.nodes(), table);
}

SearchResult signal_search(double t, double end, const TorusMeasure& mu0, const CoefficientFamily& family,
                           const ControlDictionary& dict, const SearchConfig& cfg, const LeafEvaluator& leaf) {
  if (dict.empty()) throw std::invalid_argument("search needs a non-empty dictionary");
  if (cfg.mc_reps < 0) throw std::invalid_argument("mc_reps must be >= 0");
  const Segments seg = split_steps(t, end, cfg);
  SimulationConfig c = cfg.sim;
  c.t0 = t;
  c.horizon = end;
  c.record_stride = 0;

  const ParticleSystem root(mu0, family, c);
  const TreeWalker walker(dict, seg, leaf, cfg.budget);
  double total = 1.0;
  for (int l = 0; l < cfg.depth; ++l) total *= static_cast<double>(dict.size());

  Branch best;
  if (total <= static_cast<double>(cfg.budget)) {
    std::vector<Branch> branches(dict.size());
    const int n = seg.cuts[1] - seg.cuts[0];
    parallel_for(dict.size(), [&](std::size_t e) {
      ParticleSystem child = root;
      child.advance(dict[e], n);
      std::vector<std::size_t> picks{e};
      walker.walk(child, picks, branches[e]);
    });
    for (const Branch& b : branches) {
      best.leaves += b.leaves;
      if (b.value < best.value) {
        best.value = b.value;
        best.picks = b.picks;
      }
    }
  } else {
    std::vector<std::size_t> picks;
    walker.walk(root, picks, best);
  }

  SearchResult r;
  r.search_value = best.value;
  r.best_picks = best.picks;
  r.leaves = best.leaves;
  r.partial = best.partial;
  std::vector<double> bps;
  std::vector<FeedbackMap> maps;
  for (std::size_t l = 0; l < best.picks.size(); ++l) {
    bps.push_back(l == 0 ? t : t + c.dt * seg.cuts[l]);
    maps.push_back(dict[best.picks[l]]);
  }
  bps.push_back(end);
  r.best = ControlSignal(std::move(bps), std::move(maps));

  if (cfg.mc_reps == 0) {
    r.upper_bound = r.search_value;
    return r;
  }
  std::vector<double> vals(static_cast<std::size_t>(cfg.mc_reps));
  for (int k = 0; k < cfg.mc_reps; ++k) {
    SimulationConfig ck = c;
    ck.seed = derive_seed(cfg.sim.seed, kRepTag + static_cast<std::uint64_t>(k));
    vals[static_cast<std::size_t>(k)] = replay(mu0, family, dict, ck, seg, best.picks, leaf);
  }
  const double n = static_cast<double>(vals.size());
  const double mean = pairwise_sum<double>(vals.size(), [&](std::size_t i) { return vals[i]; }) / n;
  r.upper_bound = mean;
  if (vals.size() > 1) {
    const double var =
        pairwise_sum<double>(vals.size(), [&](std::size_t i) { return (vals[i] - mean) * (vals[i] - mean); }) / (n - 1.0);
    r.std_error = std::sqrt(var / n);
  }
  return r;
}

SearchResult value_search(double t, const TorusMeasure& mu0, const CoefficientFamily& family,
                          const ControlDictionary& dict, const SearchConfig& cfg) {
  return signal_search(t, cfg.sim.horizon, mu0, family, dict, cfg);
}

DPPReport dpp_residual(double t, double tau, const TorusMeasure& mu0, const CoefficientFamily& family,
                       const ControlDictionary& dict, const SearchConfig& cfg, const LeafEvaluator& continuation,
                       double tolerance) {
  const double T = cfg.sim.horizon;
  if (!(tau > t) || tau > T + 1e-12) throw std::invalid_argument("dpp check needs t < tau <= T");
  const bool at_end = std::abs(tau - T) <= 1e-12;
  DPPReport r;
  r.t = t;
  r.tau = at_end ? T : tau;
  r.tolerance = tolerance;
  const SearchResult lhs = value_search(t, mu0, family, dict, cfg);
  r.lhs = lhs.upper_bound;
  r.lhs_se = lhs.std_error;

  LeafEvaluator leaf;
  if (!at_end) {
    if (continuation) {
      leaf = continuation;
    } else {
      SearchConfig nested = cfg;
      nested.mc_reps = 0;
      nested.sim.seed = derive_seed(cfg.sim.seed, kNestedTag);
      leaf = [&family, &dict, nested, tau](const ParticleSystem& state) {
        return value_search(tau, TorusMeasure(state.law()), family, dict, nested).search_value;
      };
    }
  }
  const SearchResult rhs = signal_search(t, r.tau, mu0, family, dict, cfg, leaf);
  r.rhs = rhs.upper_bound;
  r.rhs_se = rhs.std_error;
  return r;
}

SpaceLipschitzReport lipschitz_probe_space(const CoefficientFamily& family, const ControlDictionary& dict,
                                           const SimulationConfig& cfg,
                                           const std::vector<std::pair<TorusMeasure, TorusMeasure>>& pairs,
                                           int cutoff) {
  SpaceLipschitzReport r;
  SimulationConfig c = cfg;
  c.record_stride = 0;
  const double lambda = n_star(family.dim);
  for (const auto& [mu, nu] : pairs) {
    const MetricResult d0 = rho_lambda(mu, nu, lambda, cutoff);
    if (d0.value < 10.0 * d0.truncation_error) {
      ++r.skipped;
      continue;
    }
    double worst = 0.0;
    for (std::size_t e = 0; e < dict.size(); ++e) {
      const ControlSignal sig = ControlSignal::constant(c.t0, c.horizon, dict[e]);
      const double ja = payoff(simulate_flow(mu, sig, family, c), family);
      const double jb = payoff(simulate_flow(nu, sig, family, c), family);
      worst = std::max(worst, std::abs(ja - jb) / d0.value);
    }
    r.ratios.push_back(worst);
    r.l1 = std::max(r.l1, worst);
  }
  return r;
}

TimeLipschitzReport lipschitz_probe_time(const CoefficientFamily& family, const ControlDictionary& dict,
                                         const SearchConfig& cfg, const TorusMeasure& mu, double t,
                                         const std::vector<double>& gaps) {
  if (gaps.empty()) throw std::invalid_argument("time probe needs at least one gap");
  TimeLipschitzReport r;
  r.gaps = gaps;
  const SearchResult base = value_search(t, mu, family, dict, cfg);
  std::vector<double> lx;
  std::vector<double> ly;
  r.noise_floor = true;
  for (double h : gaps) {
    if (!(h > 0.0) || t + h >= cfg.sim.horizon) throw std::invalid_argument("time probe gap outside (0, T - t)");
    const SearchResult s = value_search(t + h, mu, family, dict, cfg);
    const double diff = std::abs(base.upper_bound - s.upper_bound);
    const double noise = 3.0 * std::sqrt(base.std_error * base.std_error + s.std_error * s.std_error);
    r.differences.push_back(diff);
    r.noise.push_back(noise);
    if (diff > noise) r.noise_floor = false;
    if (diff > 0.0) {
      lx.push_back(std::log(h));
      ly.push_back(std::log(diff));
    }
  }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    r.exponent = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return r;
}

}  // namespace fwmkv
