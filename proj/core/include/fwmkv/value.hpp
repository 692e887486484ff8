#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fwmkv/dynamics.hpp"
#include "fwmkv/families.hpp"

namespace fwmkv {

/// w(t, y) on [0, T] x T^1 for -d_t w = -1/2 (d_y w)^2 + L(y), w(T, .) = 0.
struct EikonalProblem {
  PeriodicFunction1D L;
  int time_cells = 200;
  int space_cells = 200;
  double horizon = 1.0;
};

/// Values on times t_i = i T / Nt and y_j = -pi + j 2pi / Ny, row-major in time.
class ValueTable {
 public:
  ValueTable(int time_cells, int space_cells, double horizon, std::string scheme);

  int time_cells() const { return nt_; }
  int space_cells() const { return ny_; }
  double horizon() const { return horizon_; }
  double time(int i) const { return horizon_ * i / nt_; }
  double space(int j) const { return -kPi + kTwoPi * j / ny_; }
  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(i) * static_cast<std::size_t>(ny_) + static_cast<std::size_t>(j)]; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) * static_cast<std::size_t>(ny_) + static_cast<std::size_t>(j)]; }
  /// Linear in t, periodic linear in y.
  double at(double t, double y) const;
  std::span<const double> values() const { return values_; }

  std::string scheme;
  double cfl = 0.0;             // largest |p| dt / dy used by the sweep
  double error_estimate = 0.0;  // sup difference against a half-resolution solve (0 if not computed)
  int substeps = 0;             // total CFL substeps taken

 private:
  int nt_;
  int ny_;
  double horizon_;
  std::vector<double> values_;
};

/// Monotone local Lax-Friedrichs sweep backward from w(T, .) = 0, with CFL substepping.
/// estimate_error adds a half-resolution solve for error_estimate.
ValueTable eikonal_solve(const EikonalProblem& p, bool estimate_error = true);

/// Semi-Lagrangian dynamic programming over a discrete constant-control set on ladder level l:
/// Nt = 50 2^l, Ny = 64 2^l. Independent of the PDE sweep.
ValueTable eikonal_oracle_table(const EikonalProblem& p, int level);

struct OracleResult {
  double value = 0.0;
  int levels = 0;            // ladder levels computed
  double last_change = 0.0;  // |value_l - value_{l-1}| at the final level
  bool converged = false;
};
/// Refines the ladder until two successive levels agree to tol at (t, y).
OracleResult eikonal_trajectory_oracle(const EikonalProblem& p, double t, double y, double tol = 1e-3, int max_level = 6);

struct ReducedValue {
  double value = 0.0;
  double mean = 0.0;
  bool flagged = false;
};
/// w(t, m(mu)) with m the lifted mean.
ReducedValue reduced_value(double t, const TorusMeasure& mu, const ValueTable& table);
ReducedValue reduced_value(double t, const NodesView& nodes, const ValueTable& table);

/// Value of the continuation at the end of a search horizon, given the particle state there.
using LeafEvaluator = std::function<double(const ParticleSystem& state)>;

struct SearchConfig {
  SimulationConfig sim;       // particles, dt, seed, horizon T; t0 is overridden by the search start
  int depth = 4;              // number of equal control intervals
  int mc_reps = 32;           // independent re-evaluations of the best signal
  std::size_t budget = 2'000'000;  // maximum number of leaves
};

struct SearchResult {
  double search_value = 0.0;  // minimum over all signals under common random numbers
  ControlSignal best = ControlSignal::constant(0.0, 1.0, FeedbackMap::constant(0.0));
  std::vector<std::size_t> best_picks;
  double upper_bound = 0.0;  // mean payoff of best over mc_reps independent seeds
  double std_error = 0.0;
  std::size_t leaves = 0;
  bool partial = false;  // budget exhausted before every signal was tried
};

/// Exhaustive search over piecewise-constant signals on [t, end] built from the dictionary.
/// Leaves add the continuation (terminal cost when none is given). Shares prefixes between signals.
SearchResult signal_search(double t, double end, const TorusMeasure& mu0, const CoefficientFamily& family,
                           const ControlDictionary& dict, const SearchConfig& cfg, const LeafEvaluator& leaf = {});

/// signal_search on [t, T] with the terminal cost. An upper bound on v(t, mu), never v itself.
SearchResult value_search(double t, const TorusMeasure& mu0, const CoefficientFamily& family,
                          const ControlDictionary& dict, const SearchConfig& cfg);

struct DPPReport {
  double t = 0.0;
  double tau = 0.0;
  double lhs = 0.0;  // value_search from t
  double rhs = 0.0;  // search on [t, tau] plus continuation at tau
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double tolerance = 0.0;  // deterministic part of the error bar
  double residual() const { return lhs - rhs; }
  double error_bar() const { return 3.0 * std::sqrt(lhs_se * lhs_se + rhs_se * rhs_se) + tolerance; }
  bool pass() const { return std::abs(residual()) <= error_bar(); }
};
/// Without a continuation, tau < T uses a nested value_search (depth cfg.depth) at tau.
DPPReport dpp_residual(double t, double tau, const TorusMeasure& mu0, const CoefficientFamily& family,
                       const ControlDictionary& dict, const SearchConfig& cfg, const LeafEvaluator& continuation = {},
                       double tolerance = 1e-10);

struct SpaceLipschitzReport {
  std::vector<double> ratios;  // |J(t,mu,alpha) - J(t,nu,alpha)| / rho_{n_*}(mu, nu), max over signals per pair
  double l1 = 0.0;             // max ratio
  int skipped = 0;
};
/// Constant-in-time signals from each dictionary entry, synchronous coupling per pair.
SpaceLipschitzReport lipschitz_probe_space(const CoefficientFamily& family, const ControlDictionary& dict,
                                           const SimulationConfig& cfg,
                                           const std::vector<std::pair<TorusMeasure, TorusMeasure>>& pairs,
                                           int cutoff = 32);

struct TimeLipschitzReport {
  std::vector<double> gaps;
  std::vector<double> differences;  // |v(t, mu) - v(t + h, mu)|
  std::vector<double> noise;        // 3 sqrt(se_t^2 + se_{t+h}^2)
  double exponent = 0.0;            // least-squares slope of log difference against log h
  bool noise_floor = false;         // every difference within its noise level
  bool pass() const { return noise_floor || exponent >= 0.45; }
};
TimeLipschitzReport lipschitz_probe_time(const CoefficientFamily& family, const ControlDictionary& dict,
                                         const SearchConfig& cfg, const TorusMeasure& mu, double t,
                                         const std::vector<double>& gaps);

}  // namespace fwmkv
