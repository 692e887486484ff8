#include "fwmkv/dynamics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fwmkv/measure_io.hpp"
#include "fwmkv/parallel.hpp"
#include "fwmkv/rng.hpp"

namespace fwmkv {
namespace {

constexpr std::uint64_t kNoiseTag = 0xB0B5EEDull;
constexpr std::uint64_t kInitialTag = 0x1A1Aull;
constexpr std::size_t kParticleBlock = 512;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool equal_weight_cloud(const TorusMeasure& mu, std::size_t n) {
  if (mu.kind() != MeasureKind::particles || mu.nodes().size() != n) return false;
  const double w = 1.0 / static_cast<double>(n);
  for (double v : mu.nodes().weights) {
    if (std::abs(v - w) > 1e-15) return false;
  }
  return true;
}

/// Standard normals for particle i at a global step.
std::array<double, kMaxDim> noise(const CounterStream& stream, std::int64_t step, int noise_dim) {
  const auto j = static_cast<std::uint64_t>(step);
  if (noise_dim == 1) return {normal_component(stream.block(j / 2), static_cast<int>(j % 2)), 0.0, 0.0};
  const auto z01 = normal_pair(stream.block(2 * j));
  std::array<double, kMaxDim> z{z01[0], z01[1], 0.0};
  if (noise_dim > 2) z[2] = normal_pair(stream.block(2 * j + 1))[0];
  return z;
}

}  // namespace

void SimulationConfig::validate() const {
  if (particles < 2) throw std::invalid_argument("simulation needs at least 2 particles");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("simulation time step must be positive");
  if (!(horizon > t0)) throw std::invalid_argument("simulation horizon must exceed the start time");
  if (dt > horizon - t0 + 1e-12) throw std::invalid_argument("simulation time step exceeds the horizon");
  const double ratio = (horizon - t0) / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("(T - t) / dt must be an integer, got " + fmt(ratio));
  if (record_stride < 0) throw std::invalid_argument("record_stride must be >= 0");
}

int SimulationConfig::steps() const { return static_cast<int>(std::llround((horizon - t0) / dt)); }

std::int64_t SimulationConfig::step_index(double u) const { return std::llround(u / dt); }

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<FeedbackMap> maps)
    : breakpoints_(std::move(breakpoints)), maps_(std::move(maps)) {
  if (maps_.empty() || breakpoints_.size() != maps_.size() + 1)
    throw std::invalid_argument("control signal needs one map per interval");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i + 1] > breakpoints_[i])) throw std::invalid_argument("control signal breakpoints must increase");
  }
}

ControlSignal ControlSignal::constant(double t0, double T, FeedbackMap map) { return ControlSignal({t0, T}, {std::move(map)}); }

ControlSignal ControlSignal::uniform(double t0, double T, const ControlDictionary& dict, const std::vector<std::size_t>& picks) {
  if (picks.empty()) throw std::invalid_argument("control signal needs at least one interval");
  std::vector<double> bp;
  std::vector<FeedbackMap> maps;
  const auto n = picks.size();
  for (std::size_t i = 0; i <= n; ++i) bp.push_back(i == n ? T : t0 + (T - t0) * static_cast<double>(i) / static_cast<double>(n));
  for (std::size_t p : picks) {
    if (p >= dict.size()) throw std::out_of_range("control signal: dictionary index out of range");
    maps.push_back(dict[p]);
  }
  return ControlSignal(std::move(bp), std::move(maps));
}

const FeedbackMap& ControlSignal::at(double u) const {
  const auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, u);
  return maps_[static_cast<std::size_t>(std::distance(breakpoints_.begin() + 1, it))];
}

std::string ControlSignal::describe() const {
  std::string s;
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    if (i) s += ' ';
    s += "[" + fmt(breakpoints_[i]) + "," + fmt(breakpoints_[i + 1]) + ")" + maps_[i].label();
  }
  return s;
}

ParticleSystem::ParticleSystem(const TorusMeasure& mu0, const CoefficientFamily& family, const SimulationConfig& cfg)
    : family_(&family), cfg_(cfg), time_(cfg.t0), global_step_(cfg.step_index(cfg.t0)) {
  cfg_.validate();
  if (mu0.dim() != family.dim) throw std::invalid_argument("initial law and family disagree in dimension");
  if (!family.drift || !family.sigma || !family.running_cost)
    throw std::invalid_argument("coefficient family '" + family.name + "' is missing an evaluator");
  if (equal_weight_cloud(mu0, cfg.particles)) {
    coords_.assign(mu0.nodes().coords.begin(), mu0.nodes().coords.end());
  } else {
    const ParticleCloud sample = sample_measure(mu0, cfg.particles, derive_seed(cfg.seed, kInitialTag));
    coords_.assign(sample.coords().begin(), sample.coords().end());
  }
  weights_.assign(cfg.particles, 1.0 / static_cast<double>(cfg.particles));
}

void ParticleSystem::step(const FeedbackMap& alpha) {
  const CoefficientFamily& fam = *family_;
  const int d = fam.dim;
  const int dp = fam.noise_dim;
  const auto du = static_cast<std::size_t>(d);
  const std::size_t n = weights_.size();
  const NodesView view = nodes();
  const std::vector<double> m = fam.features_of(view);
  const double dt = cfg_.dt;
  const double sq = std::sqrt(dt);

  const bool uniform = fam.spatially_constant && alpha.is_constant();
  Control a0{};
  Vec b0{};
  Mat s0{};
  double c0 = 0.0;
  if (uniform) {
    a0 = alpha.constant_value();
    b0 = fam.drift(view.point(0), m, a0);
    s0 = fam.sigma(view.point(0), m, a0);
    c0 = fam.running_cost(view.point(0), m, a0);
  }
  const double c = uniform ? c0 : pairwise_sum<double>(n, [&](std::size_t i) {
    const double* x = view.point(i);
    return weights_[i] * fam.running_cost(x, m, alpha(x));
  });
  if (!std::isfinite(c)) throw std::runtime_error("non-finite running cost at step " + std::to_string(global_step_));

  const std::uint64_t key = derive_seed(cfg_.seed, kNoiseTag);
  const std::size_t blocks = (n + kParticleBlock - 1) / kParticleBlock;
  std::vector<char> bad(blocks, 0);
  parallel_for(blocks, [&](std::size_t blk) {
    const std::size_t end = std::min(n, (blk + 1) * kParticleBlock);
    for (std::size_t i = blk * kParticleBlock; i < end; ++i) {
      double* x = coords_.data() + i * du;
      Vec b = b0;
      Mat s = s0;
      if (!uniform) {
        const Control a = alpha(x);
        b = fam.drift(x, m, a);
        s = fam.sigma(x, m, a);
      }
      const auto z = noise(CounterStream(key, i), global_step_, dp);
      for (int r = 0; r < d; ++r) {
        double incr = b[static_cast<std::size_t>(r)] * dt;
        for (int l = 0; l < dp; ++l) incr += s[static_cast<std::size_t>(r * kMaxDim + l)] * sq * z[static_cast<std::size_t>(l)];
        if (!std::isfinite(incr)) bad[blk] = 1;
        x[r] = wrap_angle(x[r] + incr);
      }
    }
  });
  if (std::find(bad.begin(), bad.end(), 1) != bad.end())
    throw std::runtime_error("non-finite coefficient at step " + std::to_string(global_step_));

  step_costs_.push_back(c);
  cost_ += c;
  ++global_step_;
  time_ = cfg_.dt * static_cast<double>(global_step_);
}

double ParticleSystem::terminal_cost() const {
  if (!family_->terminal_cost) return 0.0;
  return family_->terminal_cost(family_->features_of(nodes()));
}

FlowTrajectory simulate_flow(const TorusMeasure& mu0, const ControlSignal& signal, const CoefficientFamily& family,
                             const SimulationConfig& cfg) {
  cfg.validate();
  const auto& bp = signal.breakpoints();
  if (std::abs(bp.front() - cfg.t0) > 1e-9 || std::abs(bp.back() - cfg.horizon) > 1e-9)
    throw std::invalid_argument("control signal must cover the simulation horizon");
  ParticleSystem sys(mu0, family, cfg);
  FlowTrajectory traj;
  traj.dt = cfg.dt;
  traj.signal = signal;
  traj.config = cfg;
  const int M = cfg.steps();
  const auto record = [&](int j) {
    traj.times.push_back(j == M ? cfg.horizon : cfg.t0 + cfg.dt * j);
    traj.laws.push_back(sys.law());
    traj.recorded_steps.push_back(j);
  };
  record(0);
  for (int j = 0; j < M; ++j) {
    sys.step(signal.at(cfg.t0 + cfg.dt * (j + 0.5)));
    const bool last = j + 1 == M;
    if (last || (cfg.record_stride > 0 && (j + 1) % cfg.record_stride == 0)) record(j + 1);
  }
  traj.step_costs = sys.step_costs();
  return traj;
}

double payoff(const FlowTrajectory& traj, const CoefficientFamily& family) {
  double sum = 0.0;
  for (double c : traj.step_costs) sum += c;
  const double terminal = family.terminal_cost ? family.terminal_cost(family.features_of(traj.final_law().view())) : 0.0;
  return sum * traj.dt + terminal;
}

LawInvarianceReport law_invariance_probe(const TorusMeasure& mu0, const ControlSignal& signal,
                                         const CoefficientFamily& family, const SimulationConfig& cfg, int trials,
                                         const std::vector<std::size_t>& particle_counts) {
  if (trials < 2) throw std::invalid_argument("law invariance probe needs at least 2 trials");
  LawInvarianceReport r;
  r.particle_counts = particle_counts;
  const int lambda = n_star(family.dim);
  for (std::size_t n : particle_counts) {
    std::vector<double> pay;
    std::vector<ParticleCloud> finals;
    for (int k = 0; k < trials; ++k) {
      SimulationConfig c = cfg;
      c.particles = n;
      c.record_stride = 0;
      c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
      const FlowTrajectory t = simulate_flow(mu0, signal, family, c);
      pay.push_back(payoff(t, family));
      finals.push_back(t.final_law());
    }
    const double mean = std::accumulate(pay.begin(), pay.end(), 0.0) / trials;
    double var = 0.0;
    for (double p : pay) var += (p - mean) * (p - mean);
    r.payoff_spread.push_back(std::sqrt(var / (trials - 1)));
    double ls = 0.0;
    for (int k = 1; k < trials; ++k) ls += rho_lambda(finals[0], finals[static_cast<std::size_t>(k)], lambda, 32).value;
    r.law_spread.push_back(ls / (trials - 1));
  }
  r.zero_spread = std::all_of(r.payoff_spread.begin(), r.payoff_spread.end(), [](double s) { return s == 0.0; });
  if (!r.zero_spread && particle_counts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < particle_counts.size(); ++i) {
      if (!(r.payoff_spread[i] > 0.0)) continue;
      const double x = std::log(static_cast<double>(particle_counts[i]));
      const double y = std::log(r.payoff_spread[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++cnt;
    }
    if (cnt >= 2) r.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  }
  return r;
}

ItoReport ito_flow_residual(const TestFunction& psi, const FlowTrajectory& traj, const CoefficientFamily& family,
                            GeneratorConvention conv) {
  const std::size_t M = traj.step_costs.size();
  if (traj.laws.size() != M + 1) throw std::invalid_argument("Ito residual needs every step recorded");
  const int d = family.dim;
  const int dp = family.noise_dim;
  const double dt = traj.dt;
  const double s = diffusion_factor(conv);

  ItoReport r;
  r.lhs = psi.value(traj.times.back(), traj.laws.back()) - psi.value(traj.times.front(), traj.laws.front());
  double rhs = 0.0;
  double mart = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    const double u = traj.times[j];
    const TorusMeasure mu = traj.laws[j];
    const NodesView now = traj.laws[j].view();
    const NodesView next = traj.laws[j + 1].view();
    const SeriesEvaluator gamma(psi.measure_derivative(u, mu));
    const std::vector<double> m = family.features_of(now);
    const FeedbackMap& alpha = traj.signal.at(u + 0.5 * dt);
    const std::size_t n = now.size();
    std::vector<double> gen(n), noise_term(n);
    parallel_for(n, [&](std::size_t i) {
      const double* x = now.point(i);
      const double* y = next.point(i);
      const Control a = alpha(x);
      const Vec b = family.drift(x, m, a);
      const Mat sig = family.sigma(x, m, a);
      const Jet jet = gamma.jet(x);
      double g = 0.0;
      double mt = 0.0;
      std::array<double, kMaxDim> dx{};
      for (int p = 0; p < d; ++p) {
        g += b[static_cast<std::size_t>(p)] * jet.grad[static_cast<std::size_t>(p)];
        dx[static_cast<std::size_t>(p)] = wrap_centered(y[p] - x[p]) - b[static_cast<std::size_t>(p)] * dt;
        mt += jet.grad[static_cast<std::size_t>(p)] * dx[static_cast<std::size_t>(p)];
      }
      for (int p = 0; p < d; ++p) {
        for (int q = 0; q < d; ++q) {
          double cov = 0.0;
          for (int l = 0; l < dp; ++l)
            cov += sig[static_cast<std::size_t>(p * kMaxDim + l)] * sig[static_cast<std::size_t>(q * kMaxDim + l)];
          const double h = jet.hess[static_cast<std::size_t>(p * kMaxDim + q)];
          g += s * cov * h;
          mt += 0.5 * h * (dx[static_cast<std::size_t>(p)] * dx[static_cast<std::size_t>(q)] - cov * dt);
        }
      }
      gen[i] = now.weights[i] * g;
      noise_term[i] = now.weights[i] * mt;
    });
    rhs += dt * (psi.time_derivative(u, mu) + pairwise_sum<double>(n, [&](std::size_t i) { return gen[i]; }));
    mart += pairwise_sum<double>(n, [&](std::size_t i) { return noise_term[i]; });
  }
  r.rhs = rhs;
  r.martingale = mart;
  return r;
}

FlowLipschitzReport flow_lipschitz_probe(const std::vector<std::pair<TorusMeasure, TorusMeasure>>& pairs,
                                         const ControlSignal& signal, const CoefficientFamily& family,
                                         const SimulationConfig& cfg, double lambda, int cutoff) {
  FlowLipschitzReport r;
  SimulationConfig c = cfg;
  c.record_stride = 0;
  for (const auto& [mu, nu] : pairs) {
    const MetricResult d0 = rho_lambda(mu, nu, lambda, cutoff);
    if (d0.value < 10.0 * d0.truncation_error) {
      ++r.skipped;
      continue;
    }
    const FlowTrajectory a = simulate_flow(mu, signal, family, c);
    const FlowTrajectory b = simulate_flow(nu, signal, family, c);
    const double d1 = rho_lambda(a.final_law(), b.final_law(), lambda, cutoff).value;
    r.initial_distance.push_back(d0.value);
    r.final_distance.push_back(d1);
    r.ratios.push_back(d1 / d0.value);
    r.c_hat = std::max(r.c_hat, d1 / d0.value);
  }
  return r;
}

void write_trajectory(const std::filesystem::path& dir, const FlowTrajectory& traj, const CoefficientFamily& family) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream meta(dir / "meta.txt");
    if (!meta) throw std::runtime_error("cannot write '" + (dir / "meta.txt").string() + "'");
    const SimulationConfig& c = traj.config;
    meta << "family = " << family.name << "\nparticles = " << c.particles << "\ndt = " << fmt(c.dt)
         << "\nt0 = " << fmt(c.t0) << "\nhorizon = " << fmt(c.horizon) << "\nseed = " << c.seed
         << "\nrecord_stride = " << c.record_stride << "\nsignal = " << traj.signal.describe()
         << "\nlaws = " << traj.laws.size() << "\n";
    for (std::size_t j = 0; j < traj.times.size(); ++j)
      meta << "time_" << j << " = " << fmt(traj.times[j]) << "\n";
  }
  for (std::size_t j = 0; j < traj.laws.size(); ++j)
    write_measure(dir / ("laws_" + std::to_string(j) + ".txt"), TorusMeasure(traj.laws[j]));
  std::ofstream pay(dir / "payoff.csv");
  if (!pay) throw std::runtime_error("cannot write '" + (dir / "payoff.csv").string() + "'");
  double running = 0.0;
  for (double cst : traj.step_costs) running += cst;
  running *= traj.dt;
  const double total = payoff(traj, family);
  pay << "running_cost,terminal_cost,payoff\n" << fmt(running) << "," << fmt(total - running) << "," << fmt(total) << "\n";
}

}  // namespace fwmkv
