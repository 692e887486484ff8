#include "fwmkv/calculus.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

#include "fwmkv/parallel.hpp"
#include "fwmkv/rng.hpp"

namespace fwmkv {
namespace {

struct PreparedNodes {
  NodesView nodes;
  std::vector<Jet> jets;
};

PreparedNodes prepare(const NodesView& nodes, const FourierTable& gamma) {
  PreparedNodes p{nodes, std::vector<Jet>(nodes.size())};
  const SeriesEvaluator ev(gamma);
  parallel_for(nodes.size(), [&](std::size_t i) { p.jets[i] = ev.jet(nodes.point(i)); });
  return p;
}

double generator_at(const Jet& jet, const Vec& b, const Mat& sig, int d, int dp, double s) {
  double out = 0.0;
  for (int i = 0; i < d; ++i) out += b[static_cast<std::size_t>(i)] * jet.grad[static_cast<std::size_t>(i)];
  if (s == 0.0) return out;
  double second = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double a = 0.0;
      for (int l = 0; l < dp; ++l)
        a += sig[static_cast<std::size_t>(i * kMaxDim + l)] * sig[static_cast<std::size_t>(j * kMaxDim + l)];
      second += a * jet.hess[static_cast<std::size_t>(i * kMaxDim + j)];
    }
  }
  return out + s * second;
}

struct IntegrandParts {
  double cost = 0.0;
  double generator = 0.0;
};

/// mu(l(., m, alpha)) and mu(M^{m}[gamma]) over prepared nodes with features m (possibly of another measure).
IntegrandParts integrate_parts(const PreparedNodes& p, Features m, const FeedbackMap& alpha,
                               const CoefficientFamily& family, double s) {
  const int d = family.dim;
  const int dp = family.noise_dim;
  const NodesView& nodes = p.nodes;
  const double cost = pairwise_sum<double>(nodes.size(), [&](std::size_t i) {
    const double* x = nodes.point(i);
    return nodes.weights[i] * family.running_cost(x, m, alpha(x));
  });
  const double gen = pairwise_sum<double>(nodes.size(), [&](std::size_t i) {
    const double* x = nodes.point(i);
    const Control a = alpha(x);
    return nodes.weights[i] * generator_at(p.jets[i], family.drift(x, m, a), family.sigma(x, m, a), d, dp, s);
  });
  return {cost, gen};
}

void check_family(const CoefficientFamily& f, int dim) {
  if (!f.drift || !f.sigma || !f.running_cost)
    throw std::invalid_argument("coefficient family '" + f.name + "' is missing an evaluator");
  if (f.dim != dim) throw std::invalid_argument("coefficient family '" + f.name + "': dimension mismatch");
}

}  // namespace

FeedbackMap FeedbackMap::constant(Control a, int control_dim) {
  if (control_dim < 1 || control_dim > kMaxDim) throw std::invalid_argument("control dimension must be in [1, 3]");
  for (double v : a) {
    if (!std::isfinite(v)) throw std::invalid_argument("constant control must be finite");
  }
  FeedbackMap f;
  f.constant_ = a;
  f.control_dim_ = control_dim;
  std::string label = "const(";
  for (int i = 0; i < control_dim; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? "," : "", a[static_cast<std::size_t>(i)]);
    label += buf;
  }
  f.label_ = label + ")";
  return f;
}

FeedbackMap FeedbackMap::fourier(std::vector<FourierTable> components, std::string label) {
  if (components.empty() || components.size() > static_cast<std::size_t>(kMaxDim))
    throw std::invalid_argument("feedback map needs 1 to 3 components");
  FeedbackMap f;
  f.control_dim_ = static_cast<int>(components.size());
  for (const FourierTable& t : components) {
    if (t.dim() != components.front().dim()) throw std::invalid_argument("feedback map components disagree in dimension");
    f.components_.emplace_back(t);
  }
  f.label_ = label.empty() ? "fourier" : std::move(label);
  return f;
}

Control FeedbackMap::operator()(const double* x) const {
  if (components_.empty()) return constant_;
  Control a{};
  for (std::size_t c = 0; c < components_.size(); ++c) a[c] = components_[c].value(x);
  return a;
}

double FeedbackMap::cn_norm_bound(int n) const {
  if (components_.empty()) {
    double m = 0.0;
    for (int i = 0; i < control_dim_; ++i) m = std::max(m, std::abs(constant_[static_cast<std::size_t>(i)]));
    return m;
  }
  double worst = 0.0;
  for (const SeriesEvaluator& ev : components_) {
    const FourierTable& t = ev.table();
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const WaveVector k = t.wave_vector(i);
      int kinf = 0;
      for (int a = 0; a < t.dim(); ++a) kinf = std::max(kinf, std::abs(k[static_cast<std::size_t>(a)]));
      s += std::abs(t[i]) * std::pow(std::max(1, kinf), n);
    }
    worst = std::max(worst, s * basis_scale(t.dim()));
  }
  return worst;
}

ControlDictionary::ControlDictionary(std::vector<FeedbackMap> entries, std::optional<double> c0, int smoothness)
    : entries_(std::move(entries)) {
  double worst = 0.0;
  for (const FeedbackMap& e : entries_) {
    if (e.control_dim() != entries_.front().control_dim())
      throw std::invalid_argument("control dictionary entries disagree in control dimension");
    worst = std::max(worst, e.cn_norm_bound(smoothness));
  }
  if (c0 && worst > *c0 * (1.0 + 1e-12))
    throw std::invalid_argument("control dictionary entry exceeds the declared bound c0 = " + std::to_string(*c0));
  c0_ = c0.value_or(worst);
}

ControlDictionary ControlDictionary::constants(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("constant dictionary needs at least one entry");
  if (!(hi >= lo)) throw std::invalid_argument("constant dictionary: hi must be >= lo");
  std::vector<double> values;
  for (int i = 0; i < count; ++i) values.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return constants(values);
}

ControlDictionary ControlDictionary::constants(const std::vector<double>& values) {
  std::vector<FeedbackMap> e;
  for (double v : values) e.push_back(FeedbackMap::constant(v));
  return ControlDictionary(std::move(e));
}

ControlDictionary ControlDictionary::merged(const ControlDictionary& other) const {
  std::vector<FeedbackMap> e = entries_;
  e.insert(e.end(), other.entries_.begin(), other.entries_.end());
  return ControlDictionary(std::move(e), std::max(c0_, other.c0_));
}

std::vector<double> moment_values(const NodesView& nodes, const std::vector<SeriesEvaluator>& f) {
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j)
    out[j] = pairwise_sum<double>(nodes.size(), [&](std::size_t i) { return nodes.weights[i] * f[j].value(nodes.point(i)); });
  return out;
}

FourierTable trig_table(int dim, const std::vector<TrigTerm>& terms) {
  int K = 1;
  for (const TrigTerm& t : terms) {
    for (int a = 0; a < kMaxDim; ++a) {
      if (a >= dim && t.k[static_cast<std::size_t>(a)] != 0) throw std::invalid_argument("trig term exceeds dimension");
      K = std::max(K, std::abs(t.k[static_cast<std::size_t>(a)]));
    }
  }
  FourierTable out(dim, K);
  const double scale = 1.0 / basis_scale(dim);
  for (const TrigTerm& t : terms) {
    const WaveVector neg{-t.k[0], -t.k[1], -t.k[2]};
    const bool zero = t.k == WaveVector{0, 0, 0};
    switch (t.kind) {
      case TrigTerm::Kind::constant:
        out.at({0, 0, 0}) += scale * t.coef;
        break;
      case TrigTerm::Kind::cosine:
        if (zero) {
          out.at(t.k) += scale * t.coef;
        } else {
          out.at(t.k) += 0.5 * scale * t.coef;
          out.at(neg) += 0.5 * scale * t.coef;
        }
        break;
      case TrigTerm::Kind::sine:
        if (!zero) {
          out.at(t.k) += cplx(0.0, -0.5 * scale * t.coef);
          out.at(neg) += cplx(0.0, 0.5 * scale * t.coef);
        }
        break;
    }
  }
  return out;
}

FourierTable linear_derivative_rho_sq(const TorusMeasure& mu, const TorusMeasure& nu, double lambda, int cutoff) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("linear_derivative_rho_sq: dimension mismatch");
  const SobolevWeight w = SobolevWeight::dual(lambda, mu.dim());
  FourierTable eta = fourier_table(mu, cutoff) - fourier_table(nu, cutoff);
  for (std::size_t i = 0; i < eta.size(); ++i) eta[i] *= w.decay(eta.norm_sq(i));
  return eta;
}

double c2_certificate(const FourierTable& gamma, double declared_tail) {
  if (!std::isfinite(declared_tail) || declared_tail < 0.0)
    throw std::invalid_argument("C2 certificate: declared tail must be finite and nonnegative");
  double s = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const cplx c = gamma[i];
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw std::domain_error("C2 certificate: non-finite coefficient");
    s += (1.0 + gamma.norm_sq(i)) * std::abs(c);
  }
  return s * basis_scale(gamma.dim()) + declared_tail;
}

double generator_apply(const FourierTable& gamma, const TorusMeasure& mu, const FeedbackMap& alpha,
                       const CoefficientFamily& family, const double* x, GeneratorConvention conv,
                       double declared_tail) {
  check_family(family, mu.dim());
  c2_certificate(gamma, declared_tail);
  const std::vector<double> m = family.features_of(mu);
  const Control a = alpha(x);
  const Jet jet = SeriesEvaluator(gamma).jet(x);
  return generator_at(jet, family.drift(x, m, a), family.sigma(x, m, a), family.dim, family.noise_dim,
                      diffusion_factor(conv));
}

cplx generator_on_mode(const WaveVector& k, const TorusMeasure& mu, const FeedbackMap& alpha,
                       const CoefficientFamily& family, const double* x, GeneratorConvention conv) {
  check_family(family, mu.dim());
  const int d = family.dim;
  const std::vector<double> m = family.features_of(mu);
  const Control a = alpha(x);
  const Vec b = family.drift(x, m, a);
  const Mat sig = family.sigma(x, m, a);
  double kb = 0.0;
  double phase = 0.0;
  for (int i = 0; i < d; ++i) {
    kb += k[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
    phase += k[static_cast<std::size_t>(i)] * x[i];
  }
  double ak = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int l = 0; l < family.noise_dim; ++l)
        s += sig[static_cast<std::size_t>(i * kMaxDim + l)] * sig[static_cast<std::size_t>(j * kMaxDim + l)];
      ak += s * k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)];
    }
  }
  ak *= diffusion_factor(conv);
  const cplx ek_conj = basis_scale(d) * std::polar(1.0, -phase);
  return -cplx(ak, kb) * ek_conj;
}

double hamiltonian_integrand(const TorusMeasure& mu, const FourierTable& gamma, const FeedbackMap& alpha,
                             const CoefficientFamily& family, GeneratorConvention conv) {
  check_family(family, mu.dim());
  const PreparedNodes p = prepare(mu.nodes(), gamma);
  const std::vector<double> m = family.features_of(mu);
  const IntegrandParts parts = integrate_parts(p, m, alpha, family, diffusion_factor(conv));
  return parts.cost + parts.generator;
}

HamiltonianResult hamiltonian(const TorusMeasure& mu, const FourierTable& gamma, const ControlDictionary& dict,
                              const CoefficientFamily& family, const HamiltonianOptions& opts) {
  if (dict.empty()) throw std::invalid_argument("hamiltonian: empty control dictionary");
  check_family(family, mu.dim());
  c2_certificate(gamma, opts.declared_tail);
  const PreparedNodes p = prepare(mu.nodes(), gamma);
  const std::vector<double> m = family.features_of(mu);
  const double s = diffusion_factor(opts.convention);
  const auto integrand = [&](const FeedbackMap& alpha) {
    const IntegrandParts parts = integrate_parts(p, m, alpha, family, s);
    return parts.cost + parts.generator;
  };

  std::vector<double> values(dict.size());
  parallel_for(dict.size(), [&](std::size_t i) { values[i] = integrand(dict[i]); });
  HamiltonianResult r;
  r.value = values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < r.value) {
      r.value = values[i];
      r.argmin = i;
    }
  }
  const FeedbackMap& best = dict[r.argmin];
  r.control = best.constant_value();
  if (opts.refine_levels <= 0 || !best.is_constant() || best.control_dim() != 1) return r;

  // Local refinement around the best constant, starting from the gap to its nearest constant neighbour.
  double h = std::numeric_limits<double>::infinity();
  for (const FeedbackMap& e : dict.entries()) {
    if (!e.is_constant()) continue;
    const double gap = std::abs(e.constant_value()[0] - r.control[0]);
    if (gap > 0.0) h = std::min(h, gap);
  }
  if (!std::isfinite(h)) h = 1.0;
  for (int level = 1; level <= opts.refine_levels; ++level) {
    h *= 0.5;
    const double centre = r.control[0];
    for (const double cand : {centre - h, centre + h}) {
      const double v = integrand(FeedbackMap::constant(cand));
      if (v < r.value) {
        r.value = v;
        r.control[0] = cand;
        r.refined = true;
      }
    }
  }
  return r;
}

HamiltonianGap hamiltonian_gap(const TorusMeasure& mu, const TorusMeasure& nu, const FourierTable& kappa,
                               const ControlDictionary& dict, const CoefficientFamily& family, GeneratorConvention conv) {
  if (dict.empty()) throw std::invalid_argument("hamiltonian_gap: empty control dictionary");
  check_family(family, mu.dim());
  check_family(family, nu.dim());
  const double s = diffusion_factor(conv);
  const PreparedNodes pm = prepare(mu.nodes(), kappa);
  const PreparedNodes pn = prepare(nu.nodes(), kappa);
  const std::vector<double> fm = family.features_of(mu);
  const std::vector<double> fn = family.features_of(nu);

  HamiltonianGap g;
  double h_mu = std::numeric_limits<double>::infinity();
  double h_nu = std::numeric_limits<double>::infinity();
  for (const FeedbackMap& alpha : dict.entries()) {
    const IntegrandParts mu_mu = integrate_parts(pm, fm, alpha, family, s);
    const IntegrandParts nu_nu = integrate_parts(pn, fn, alpha, family, s);
    const IntegrandParts nu_mu = integrate_parts(pn, fm, alpha, family, s);
    h_mu = std::min(h_mu, mu_mu.cost + mu_mu.generator);
    h_nu = std::min(h_nu, nu_nu.cost + nu_nu.generator);
    g.sup_t = std::max(g.sup_t, std::abs(mu_mu.cost - nu_nu.cost));
    g.sup_i = std::max(g.sup_i, std::abs(mu_mu.generator - nu_mu.generator));
    g.sup_j = std::max(g.sup_j, std::abs(nu_mu.generator - nu_nu.generator));
  }
  g.difference = std::abs(h_mu - h_nu);
  return g;
}

TestFunction half_rho_squared(TorusMeasure nu, double lambda, int cutoff) {
  const SobolevWeight w = SobolevWeight::dual(lambda, nu.dim());
  auto nu_table = std::make_shared<const FourierTable>(fourier_table(nu, cutoff));
  TestFunction f;
  f.value = [nu_table, w, cutoff](double, const TorusMeasure& mu) {
    const double r = dual_norm(fourier_table(mu, cutoff) - *nu_table, w).value;
    return 0.5 * r * r;
  };
  f.time_derivative = [](double, const TorusMeasure&) { return 0.0; };
  f.measure_derivative = [nu_table, w, cutoff](double, const TorusMeasure& mu) {
    FourierTable eta = fourier_table(mu, cutoff) - *nu_table;
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] *= w.decay(eta.norm_sq(i));
    return eta;
  };
  return f;
}

TestFunction moment_test_function(FourierTable f) {
  auto table = std::make_shared<const FourierTable>(std::move(f));
  auto ev = std::make_shared<const SeriesEvaluator>(*table);
  TestFunction out;
  out.value = [ev](double, const TorusMeasure& mu) {
    const NodesView nodes = mu.nodes();
    return pairwise_sum<double>(nodes.size(), [&](std::size_t i) { return nodes.weights[i] * ev->value(nodes.point(i)); });
  };
  out.time_derivative = [](double, const TorusMeasure&) { return 0.0; };
  out.measure_derivative = [table](double, const TorusMeasure&) { return *table; };
  return out;
}

double dpe_residual(const TestFunction& psi, double t, const TorusMeasure& mu, const ControlDictionary& dict,
                    const CoefficientFamily& family, const HamiltonianOptions& opts) {
  return -psi.time_derivative(t, mu) - hamiltonian(mu, psi.measure_derivative(t, mu), dict, family, opts).value;
}

double doubling_functional(const ValueEvaluator& u, const ValueEvaluator& w, const TestFunctionGadget& g) {
  if (!(g.eps > 0.0)) throw std::invalid_argument("doubling functional: eps must be positive");
  const double r = rho_lambda(g.mu, g.nu, g.order(), g.cutoff).value;
  return u(g.t, g.mu) - w(g.s, g.nu) - (r * r + (g.t - g.s) * (g.t - g.s)) / (2.0 * g.eps);
}

TestFunction psi_epsilon(const TestFunctionGadget& g) {
  if (!(g.eps > 0.0)) throw std::invalid_argument("psi_epsilon: eps must be positive");
  const TestFunction h = half_rho_squared(g.nu, g.order(), g.cutoff);
  const double eps = g.eps;
  const double s = g.s;
  TestFunction f;
  f.value = [h, eps, s](double t, const TorusMeasure& mu) { return (h.value(t, mu) + 0.5 * (t - s) * (t - s)) / eps; };
  f.time_derivative = [eps, s](double t, const TorusMeasure&) { return (t - s) / eps; };
  f.measure_derivative = [h, eps](double t, const TorusMeasure& mu) { return h.measure_derivative(t, mu) * (1.0 / eps); };
  return f;
}

TestFunction phi_epsilon(const TestFunctionGadget& g) {
  if (!(g.eps > 0.0)) throw std::invalid_argument("phi_epsilon: eps must be positive");
  const TestFunction h = half_rho_squared(g.mu, g.order(), g.cutoff);
  const double eps = g.eps;
  const double t0 = g.t;
  TestFunction f;
  f.value = [h, eps, t0](double s, const TorusMeasure& nu) { return -(h.value(s, nu) + 0.5 * (t0 - s) * (t0 - s)) / eps; };
  f.time_derivative = [eps, t0](double s, const TorusMeasure&) { return (t0 - s) / eps; };
  f.measure_derivative = [h, eps](double s, const TorusMeasure& nu) { return h.measure_derivative(s, nu) * (-1.0 / eps); };
  return f;
}

FourierTable kappa_epsilon(const TestFunctionGadget& g) {
  if (!(g.eps > 0.0)) throw std::invalid_argument("kappa_epsilon: eps must be positive");
  return linear_derivative_rho_sq(g.mu, g.nu, g.order(), g.cutoff) * (1.0 / g.eps);
}

FamilyValidation validate_family(const CoefficientFamily& family, const ControlDictionary& dict, int pairs,
                                 std::uint64_t seed) {
  check_family(family, family.dim);
  const int d = family.dim;
  const int n = n_star(d);
  constexpr int kLine = 128;
  const double step = kTwoPi / kLine;
  RandomStream rng(derive_seed(seed, 0xFA111Full));
  const auto random_cloud = [&] {
    std::vector<double> c(static_cast<std::size_t>(8 * d));
    for (double& v : c) v = rng.uniform(0.0, kTwoPi);
    return ParticleCloud::equal_weights(d, std::move(c));
  };
  const std::size_t entries = std::min<std::size_t>(dict.size(), 8);

  // All scalar outputs of b, sigma and l at (x, m, a).
  const auto outputs = [&](const double* x, Features m, const Control& a) {
    std::vector<double> o;
    const Vec b = family.drift(x, m, a);
    const Mat s = family.sigma(x, m, a);
    for (int i = 0; i < d; ++i) o.push_back(b[static_cast<std::size_t>(i)]);
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < family.noise_dim; ++l) o.push_back(s[static_cast<std::size_t>(i * kMaxDim + l)]);
    o.push_back(family.running_cost(x, m, a));
    return o;
  };

  FamilyValidation r;
  for (int p = 0; p < pairs; ++p) {
    const TorusMeasure mu = random_cloud();
    const TorusMeasure nu = random_cloud();
    const std::vector<double> fm = family.features_of(mu);
    const std::vector<double> fn = family.features_of(nu);
    const double rho = rho_lambda(mu, nu, n, 32).value;
    double base[kMaxDim];
    for (int a = 0; a < d; ++a) base[a] = rng.uniform(0.0, kTwoPi);
    for (std::size_t e = 0; e < entries; ++e) {
      const FeedbackMap& alpha = dict[e];
      for (int axis = 0; axis < d; ++axis) {
        // Sampled values along a line, then finite differences up to order n_* for each output.
        std::vector<std::vector<double>> line;
        for (int j = 0; j < kLine; ++j) {
          double x[kMaxDim];
          std::copy(base, base + d, x);
          x[axis] = wrap_angle(base[axis] + j * step);
          const Control a = alpha(x);
          line.push_back(outputs(x, fm, a));
          const std::vector<double> other = outputs(x, fn, a);
          if (rho > 0.0) {
            for (std::size_t q = 0; q < other.size(); ++q)
              r.max_lipschitz = std::max(r.max_lipschitz, std::abs(other[q] - line.back()[q]) / rho);
          }
        }
        double cn = 0.0;
        for (std::size_t q = 0; q < line.front().size(); ++q) {
          std::vector<double> v(kLine);
          for (int j = 0; j < kLine; ++j) v[static_cast<std::size_t>(j)] = line[static_cast<std::size_t>(j)][q];
          double norm = 0.0;
          for (int order = 0; order <= n; ++order) {
            double sup = 0.0;
            for (double x : v) sup = std::max(sup, std::abs(x));
            norm = std::max(norm, sup / std::pow(step, order));
            std::vector<double> next(kLine);
            for (int j = 0; j < kLine; ++j) next[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>((j + 1) % kLine)] - v[static_cast<std::size_t>(j)];
            v = std::move(next);
          }
          cn += norm;
        }
        r.max_cn = std::max(r.max_cn, cn);
      }
    }
    if (family.terminal_cost && rho > 0.0)
      r.max_lipschitz = std::max(r.max_lipschitz, std::abs(family.terminal_cost(fm) - family.terminal_cost(fn)) / rho);
  }
  r.within_budget = r.max_cn <= family.c_a && r.max_lipschitz <= family.c_a;
  return r;
}

}  // namespace fwmkv
