#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fwmkv/calculus.hpp"

namespace fwmkv {

struct SimulationConfig {
  std::size_t particles = 1000;
  double dt = 1e-2;
  double t0 = 0.0;
  double horizon = 1.0;  // T
  std::uint64_t seed = 0;
  /// Laws are stored every record_stride steps; 0 stores only the initial and final laws.
  int record_stride = 1;

  /// Throws unless N >= 2, 0 < dt <= T - t0 and (T - t0) / dt is an integer within 1e-9.
  void validate() const;
  int steps() const;
  /// Global index of the step starting at time u; noise is keyed by it.
  std::int64_t step_index(double u) const;
};

/// Piecewise-constant feedback: maps[i] acts on [breakpoints[i], breakpoints[i+1]).
class ControlSignal {
 public:
  ControlSignal(std::vector<double> breakpoints, std::vector<FeedbackMap> maps);
  static ControlSignal constant(double t0, double T, FeedbackMap map);
  /// depth equal intervals on [t0, T] filled with dictionary entries by index.
  static ControlSignal uniform(double t0, double T, const ControlDictionary& dict, const std::vector<std::size_t>& picks);

  const FeedbackMap& at(double u) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<FeedbackMap>& maps() const { return maps_; }
  std::string describe() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<FeedbackMap> maps_;
};

/// N interacting particles advanced by Euler-Maruyama with wrap to the torus. Copyable, so a
/// search can branch from a shared prefix. Noise for particle i at global step j is a pure
/// function of (seed, i, j).
class ParticleSystem {
 public:
  /// Uses mu0's particles directly when it is an equal-weight cloud of exactly N particles,
  /// otherwise draws N samples from mu0.
  ParticleSystem(const TorusMeasure& mu0, const CoefficientFamily& family, const SimulationConfig& cfg);

  /// One step of length dt under alpha; adds the left-endpoint running cost.
  void step(const FeedbackMap& alpha);
  void advance(const FeedbackMap& alpha, int n) {
    for (int i = 0; i < n; ++i) step(alpha);
  }

  double time() const { return time_; }
  std::int64_t global_step() const { return global_step_; }
  /// Left-endpoint integral of the mean running cost so far.
  double accumulated_cost() const { return cost_ * cfg_.dt; }
  const std::vector<double>& step_costs() const { return step_costs_; }
  NodesView nodes() const { return {family_->dim, coords_, weights_}; }
  ParticleCloud law() const { return ParticleCloud(family_->dim, coords_, weights_); }
  double terminal_cost() const;
  const SimulationConfig& config() const { return cfg_; }
  const CoefficientFamily& family() const { return *family_; }

 private:
  const CoefficientFamily* family_;
  SimulationConfig cfg_;
  std::vector<double> coords_;
  std::vector<double> weights_;
  double time_;
  std::int64_t global_step_;
  double cost_ = 0.0;
  std::vector<double> step_costs_;
};

/// Law flow at the recorded times plus the per-step mean running costs.
struct FlowTrajectory {
  std::vector<double> times;
  std::vector<ParticleCloud> laws;
  std::vector<double> step_costs;
  std::vector<std::int64_t> recorded_steps;  // local step index of each recorded law
  double dt = 0.0;
  ControlSignal signal = ControlSignal::constant(0.0, 1.0, FeedbackMap::constant(0.0));
  SimulationConfig config;

  const ParticleCloud& final_law() const { return laws.back(); }
};

FlowTrajectory simulate_flow(const TorusMeasure& mu0, const ControlSignal& signal, const CoefficientFamily& family,
                             const SimulationConfig& cfg);

/// Left-endpoint quadrature of the mean running cost plus phi of the final law.
double payoff(const FlowTrajectory& traj, const CoefficientFamily& family);

struct LawInvarianceReport {
  std::vector<std::size_t> particle_counts;
  std::vector<double> payoff_spread;  // sample standard deviation across trials
  std::vector<double> law_spread;     // mean rho_{n_*} between trial 0's terminal law and the others
  double exponent = 0.0;              // fitted slope of log payoff spread against log N
  bool zero_spread = false;           // every spread vanished
};
/// Re-draws the initial particles with different seeds and measures how payoffs and terminal laws spread.
LawInvarianceReport law_invariance_probe(const TorusMeasure& mu0, const ControlSignal& signal,
                                         const CoefficientFamily& family, const SimulationConfig& cfg, int trials,
                                         const std::vector<std::size_t>& particle_counts);

struct ItoReport {
  double lhs = 0.0;         // psi(T, L_T) - psi(t, mu)
  double rhs = 0.0;         // integral of d_t psi + L_s(M[d_mu psi]) on the step grid
  double martingale = 0.0;  // noise-driven part of the particle expansion, a mean-zero control variate
  double residual() const { return lhs - rhs; }
  double corrected() const { return lhs - rhs - martingale; }
};
/// Needs every step recorded. The generator uses the given convention; Ito's formula needs half.
ItoReport ito_flow_residual(const TestFunction& psi, const FlowTrajectory& traj, const CoefficientFamily& family,
                            GeneratorConvention conv = GeneratorConvention::half);

struct FlowLipschitzReport {
  std::vector<double> initial_distance;  // rho(mu, nu) per pair
  std::vector<double> final_distance;    // rho(L_T^mu, L_T^nu) per pair
  std::vector<double> ratios;
  double c_hat = 0.0;  // max ratio
  int skipped = 0;     // pairs whose initial distance was below 10x the truncation error
};
/// Synchronous coupling: both initial laws are driven by the same noise per particle index.
FlowLipschitzReport flow_lipschitz_probe(const std::vector<std::pair<TorusMeasure, TorusMeasure>>& pairs,
                                         const ControlSignal& signal, const CoefficientFamily& family,
                                         const SimulationConfig& cfg, double lambda, int cutoff);

/// meta.txt (config echo), laws_<j>.txt and payoff.csv in dir.
void write_trajectory(const std::filesystem::path& dir, const FlowTrajectory& traj, const CoefficientFamily& family);

}  // namespace fwmkv
