#include "fwmkv/families.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

#include "fwmkv/parallel.hpp"

namespace fwmkv {

PeriodicFunction1D::PeriodicFunction1D(std::vector<double> samples, std::optional<double> lipschitz)
    : samples_(std::move(samples)) {
  if (samples_.size() < 2) throw std::invalid_argument("periodic function needs at least two samples");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw std::invalid_argument("periodic function: non-finite sample");
  }
  const double h = kTwoPi / static_cast<double>(samples_.size());
  for (std::size_t j = 0; j < samples_.size(); ++j)
    lipschitz_ = std::max(lipschitz_, std::abs(samples_[(j + 1) % samples_.size()] - samples_[j]) / h);
  if (lipschitz && lipschitz_ > *lipschitz * (1.0 + 1e-9))
    throw std::invalid_argument("periodic function exceeds its declared Lipschitz constant");
}

PeriodicFunction1D PeriodicFunction1D::sample(const std::function<double(double)>& f, int n, std::optional<double> lipschitz) {
  if (n < 2) throw std::invalid_argument("periodic function needs at least two samples");
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) s[static_cast<std::size_t>(j)] = f(-kPi + kTwoPi * j / n);
  return PeriodicFunction1D(std::move(s), lipschitz);
}

double PeriodicFunction1D::operator()(double y) const {
  const double n = static_cast<double>(samples_.size());
  const double u = wrap_angle(y + kPi) / kTwoPi * n;
  const auto j = std::min(static_cast<std::size_t>(u), samples_.size() - 1);
  const double frac = u - static_cast<double>(j);
  return (1.0 - frac) * samples_[j] + frac * samples_[(j + 1) % samples_.size()];
}

double PeriodicFunction1D::min() const { return *std::min_element(samples_.begin(), samples_.end()); }
double PeriodicFunction1D::max() const { return *std::max_element(samples_.begin(), samples_.end()); }

LiftedMean lifted_mean(const NodesView& nodes) {
  if (nodes.dim != 1) throw std::invalid_argument("lifted mean needs d = 1");
  const std::size_t n = nodes.size();
  std::vector<double> cs(n);
  std::vector<double> sn(n);
  for (std::size_t i = 0; i < n; ++i) {
    cs[i] = nodes.weights[i] * std::cos(nodes.coords[i]);
    sn[i] = nodes.weights[i] * std::sin(nodes.coords[i]);
  }
  const double c = pairwise_sum<double>(n, [&](std::size_t i) { return cs[i]; });
  const double s = pairwise_sum<double>(n, [&](std::size_t i) { return sn[i]; });
  LiftedMean r;
  r.centre = (std::hypot(c, s) > 1e-12) ? std::atan2(s, c) : 0.0;
  double near_low = 0.0;
  double near_high = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double off = wrap_centered(nodes.coords[i] - r.centre);
    cs[i] = nodes.weights[i] * off;
    if (off < -0.75 * kPi) near_low += nodes.weights[i];
    if (off > 0.75 * kPi) near_high += nodes.weights[i];
  }
  const double mean_offset = pairwise_sum<double>(n, [&](std::size_t i) { return cs[i]; });
  r.mean = wrap_centered(r.centre + mean_offset);
  r.flagged = near_low > 0.01 && near_high > 0.01;
  return r;
}

CoefficientFamily eikonal_family(PeriodicFunction1D L, double sigma) {
  if (!std::isfinite(sigma)) throw std::invalid_argument("eikonal family: sigma must be finite");
  auto cost = std::make_shared<const PeriodicFunction1D>(std::move(L));
  CoefficientFamily f;
  f.name = "eikonal";
  f.dim = 1;
  f.noise_dim = 1;
  f.control_dim = 1;
  f.spatially_constant = true;
  f.features = [](const NodesView& nodes) {
    const LiftedMean m = lifted_mean(nodes);
    return std::vector<double>{m.mean, m.flagged ? 1.0 : 0.0};
  };
  f.drift = [](const double*, Features, const Control& a) { return Vec{a[0], 0.0, 0.0}; };
  f.sigma = [sigma](const double*, Features, const Control&) {
    Mat m{};
    m[0] = sigma;
    return m;
  };
  f.running_cost = [cost](const double*, Features m, const Control& a) { return 0.5 * a[0] * a[0] + (*cost)(m[0]); };
  f.terminal_cost = [](Features) { return 0.0; };
  return f;
}

CoefficientFamily kuramoto_family(double kappa, double sigma) {
  CoefficientFamily f;
  f.name = "kuramoto";
  f.dim = 1;
  f.noise_dim = 1;
  f.control_dim = 1;
  f.spatially_constant = true;
  f.features = [](const NodesView& nodes) {
    const double c = pairwise_sum<double>(nodes.size(), [&](std::size_t i) { return nodes.weights[i] * std::cos(nodes.coords[i]); });
    const double s = pairwise_sum<double>(nodes.size(), [&](std::size_t i) { return nodes.weights[i] * std::sin(nodes.coords[i]); });
    return std::vector<double>{c, s};
  };
  f.drift = [](const double*, Features, const Control& a) { return Vec{a[0], 0.0, 0.0}; };
  f.sigma = [sigma](const double*, Features, const Control&) {
    Mat m{};
    m[0] = sigma;
    return m;
  };
  f.running_cost = [kappa](const double*, Features m, const Control& a) {
    return 0.5 * a[0] * a[0] + kappa * (1.0 - m[0] * m[0] - m[1] * m[1]);
  };
  f.terminal_cost = [](Features) { return 0.0; };
  return f;
}

CoefficientFamily fourier_family(const FourierFamilySpec& spec) {
  check_dimension(spec.dim);
  const int d = spec.dim;
  if (!spec.drift.empty() && spec.drift.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("fourier family: drift needs one table per axis");
  for (const FourierTable& t : spec.drift) {
    if (t.dim() != d) throw std::invalid_argument("fourier family: drift table dimension mismatch");
  }
  if ((spec.cost && spec.cost->dim() != d) || (spec.moment && spec.moment->dim() != d))
    throw std::invalid_argument("fourier family: table dimension mismatch");

  auto drift = std::make_shared<std::vector<SeriesEvaluator>>();
  for (const FourierTable& t : spec.drift) drift->emplace_back(t);
  auto cost = spec.cost ? std::make_shared<const SeriesEvaluator>(*spec.cost) : nullptr;
  auto moment = std::make_shared<std::vector<SeriesEvaluator>>();
  if (spec.moment) moment->emplace_back(*spec.moment);

  CoefficientFamily f;
  f.name = "fourier";
  f.dim = d;
  f.noise_dim = d;
  f.control_dim = d;
  f.c_a = spec.c_a;
  f.spatially_constant = drift->empty() && !cost;
  f.features = [moment](const NodesView& nodes) { return moment_values(nodes, *moment); };
  const double gain = spec.control_gain;
  const double md = spec.moment_drift;
  f.drift = [drift, gain, md, d](const double* x, Features m, const Control& a) {
    Vec b{};
    const double shift = m.empty() ? 0.0 : md * m[0];
    for (int i = 0; i < d; ++i) {
      b[static_cast<std::size_t>(i)] = gain * a[static_cast<std::size_t>(i)] + shift;
      if (!drift->empty()) b[static_cast<std::size_t>(i)] += (*drift)[static_cast<std::size_t>(i)].value(x);
    }
    return b;
  };
  const double sigma = spec.sigma;
  f.sigma = [sigma, d](const double*, Features, const Control&) {
    Mat s{};
    for (int i = 0; i < d; ++i) s[static_cast<std::size_t>(i * kMaxDim + i)] = sigma;
    return s;
  };
  const double cc = spec.cost_control;
  const double mc = spec.moment_cost;
  f.running_cost = [cost, cc, mc, d](const double* x, Features m, const Control& a) {
    double sq = 0.0;
    for (int i = 0; i < d; ++i) sq += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
    double v = 0.5 * cc * sq;
    if (cost) v += cost->value(x);
    if (!m.empty()) v += mc * m[0];
    return v;
  };
  const double term = spec.terminal;
  f.terminal_cost = [term](Features m) { return m.empty() ? 0.0 : term * m[0]; };
  return f;
}

}  // namespace fwmkv
