#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fwmkv/fourier.hpp"
#include "fwmkv/measure.hpp"
#include "fwmkv/sobolev.hpp"

namespace fwmkv {

/// A control value in A, a subset of R^m with m <= 3.
using Control = Vec;

/// A feedback map alpha: T^d -> A, either constant or a real trigonometric series per component.
class FeedbackMap {
 public:
  static FeedbackMap constant(Control a, int control_dim = 1);
  static FeedbackMap constant(double a) { return constant(Control{a, 0.0, 0.0}, 1); }
  static FeedbackMap fourier(std::vector<FourierTable> components, std::string label = {});

  Control operator()(const double* x) const;
  bool is_constant() const { return components_.empty(); }
  const Control& constant_value() const { return constant_; }
  int control_dim() const { return control_dim_; }
  const std::string& label() const { return label_; }
  /// Certified bound on max over |beta| <= n of sup |d^beta alpha|, componentwise maximum.
  double cn_norm_bound(int n) const;

 private:
  Control constant_{};
  int control_dim_ = 1;
  std::vector<SeriesEvaluator> components_;
  std::string label_;
};

/// A finite control set. Entries keep their insertion order; ties resolve to the lowest index.
class ControlDictionary {
 public:
  ControlDictionary() = default;
  /// Throws if any entry's C^n bound exceeds c0, or if control dimensions disagree.
  explicit ControlDictionary(std::vector<FeedbackMap> entries, std::optional<double> c0 = {}, int smoothness = 3);

  /// count evenly spaced constants in [lo, hi].
  static ControlDictionary constants(double lo, double hi, int count);
  static ControlDictionary constants(const std::vector<double>& values);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const FeedbackMap& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<FeedbackMap>& entries() const { return entries_; }
  double c0() const { return c0_; }
  int control_dim() const { return entries_.empty() ? 1 : entries_.front().control_dim(); }
  /// This dictionary followed by the entries of other.
  ControlDictionary merged(const ControlDictionary& other) const;

 private:
  std::vector<FeedbackMap> entries_;
  double c0_ = 0.0;
};

/// The finitely many measure statistics a family's coefficients depend on.
using FeatureMap = std::function<std::vector<double>(const NodesView&)>;
using Features = std::span<const double>;

/// b, sigma, l and phi as evaluators of (x, features(mu), a).
struct CoefficientFamily {
  std::string name;
  int dim = 1;
  int noise_dim = 1;
  int control_dim = 1;
  FeatureMap features;
  std::function<Vec(const double* x, Features m, const Control& a)> drift;
  std::function<Mat(const double* x, Features m, const Control& a)> sigma;
  std::function<double(const double* x, Features m, const Control& a)> running_cost;
  std::function<double(Features m)> terminal_cost;
  /// Declared regularity budget c_a.
  double c_a = std::numeric_limits<double>::infinity();
  /// b, sigma and l do not depend on x; lets the simulator evaluate them once per step for constant controls.
  bool spatially_constant = false;

  std::vector<double> features_of(const NodesView& nodes) const { return features ? features(nodes) : std::vector<double>{}; }
  std::vector<double> features_of(const TorusMeasure& mu) const { return features_of(mu.nodes()); }
};

/// mu(f) = Re sum_k c_k conj(F_k(mu)) evaluated at the nodes: sum_i w_i f(x_i).
std::vector<double> moment_values(const NodesView& nodes, const std::vector<SeriesEvaluator>& f);

/// Real trigonometric polynomial built from terms const, cos(k.x), sin(k.x).
struct TrigTerm {
  enum class Kind { constant, cosine, sine } kind = Kind::constant;
  WaveVector k{0, 0, 0};
  double coef = 0.0;
};
FourierTable trig_table(int dim, const std::vector<TrigTerm>& terms);

/// Second-order term weight in the generator: full gives sum sigma sigma^T d2, half gives 1/2 of it.
enum class GeneratorConvention { full, half };
inline double diffusion_factor(GeneratorConvention c) { return c == GeneratorConvention::full ? 1.0 : 0.5; }

/// Coefficients of the linear derivative of h = 1/2 rho_lambda^2(., nu) at mu, as a function table:
/// c_k = (1+|k|^2)^{-lambda} F_k(mu - nu).
FourierTable linear_derivative_rho_sq(const TorusMeasure& mu, const TorusMeasure& nu, double lambda, int cutoff);

/// sum_k (1+|k|^2) |c_k| (2pi)^{-d/2}, a C^2 bound on the series. Throws if a coefficient is
/// non-finite or the declared tail of the dropped modes is negative or non-finite.
double c2_certificate(const FourierTable& gamma, double declared_tail = 0.0);

/// M^{alpha,mu}[gamma](x) = b . grad gamma + s sum_{ijl} sigma_il sigma_jl d2_ij gamma, s from the convention.
double generator_apply(const FourierTable& gamma, const TorusMeasure& mu, const FeedbackMap& alpha,
                       const CoefficientFamily& family, const double* x,
                       GeneratorConvention conv = GeneratorConvention::full, double declared_tail = 0.0);

/// Closed form M[conj e_k](x) = -[i k.b + a_k] conj e_k(x), a_k = s sum sigma_il sigma_jl k_i k_j.
cplx generator_on_mode(const WaveVector& k, const TorusMeasure& mu, const FeedbackMap& alpha,
                       const CoefficientFamily& family, const double* x,
                       GeneratorConvention conv = GeneratorConvention::full);

struct HamiltonianOptions {
  GeneratorConvention convention = GeneratorConvention::full;
  /// Bisection-style refinement levels around the best constant control (scalar controls only).
  int refine_levels = 0;
  double declared_tail = 0.0;
};

struct HamiltonianResult {
  double value = 0.0;
  std::size_t argmin = 0;  // dictionary index of the best entry before refinement
  Control control{};       // best control if it is constant (refined value when refinement ran)
  bool refined = false;
};

/// mu(l^alpha(., mu) + M^{alpha,mu}[gamma]) for one feedback map.
double hamiltonian_integrand(const TorusMeasure& mu, const FourierTable& gamma, const FeedbackMap& alpha,
                             const CoefficientFamily& family, GeneratorConvention conv = GeneratorConvention::full);

/// min over the dictionary of the integrand. Throws on an empty dictionary.
HamiltonianResult hamiltonian(const TorusMeasure& mu, const FourierTable& gamma, const ControlDictionary& dict,
                              const CoefficientFamily& family, const HamiltonianOptions& opts = {});

/// Terms bounding |H(mu, kappa) - H(nu, kappa)|: sup_alpha T + sup_alpha I + sup_alpha J.
struct HamiltonianGap {
  double difference = 0.0;  // |H(mu,kappa) - H(nu,kappa)|
  double sup_t = 0.0;       // |mu(l(.,mu)) - nu(l(.,nu))|
  double sup_i = 0.0;       // |(mu - nu)(M^{mu}[kappa])|
  double sup_j = 0.0;       // |nu(M^{mu}[kappa] - M^{nu}[kappa])|
  double bound() const { return sup_t + sup_i + sup_j; }
};
HamiltonianGap hamiltonian_gap(const TorusMeasure& mu, const TorusMeasure& nu, const FourierTable& kappa,
                               const ControlDictionary& dict, const CoefficientFamily& family,
                               GeneratorConvention conv = GeneratorConvention::full);

/// A smooth test function psi(t, mu) with its time derivative and linear derivative.
struct TestFunction {
  std::function<double(double t, const TorusMeasure& mu)> value;
  std::function<double(double t, const TorusMeasure& mu)> time_derivative;
  std::function<FourierTable(double t, const TorusMeasure& mu)> measure_derivative;
};

/// psi(t, mu) = 1/2 rho_lambda^2(mu, nu) (truncated at K).
TestFunction half_rho_squared(TorusMeasure nu, double lambda, int cutoff);
/// psi(t, mu) = mu(f).
TestFunction moment_test_function(FourierTable f);

/// -d_t psi(t, mu) - H(mu, d_mu psi(t, mu)); zero when psi solves the dynamic programming equation at (t, mu).
double dpe_residual(const TestFunction& psi, double t, const TorusMeasure& mu, const ControlDictionary& dict,
                    const CoefficientFamily& family, const HamiltonianOptions& opts = {});

/// Anchors and penalty of the doubling-of-variables construction.
struct TestFunctionGadget {
  TorusMeasure mu;
  TorusMeasure nu;
  double t = 0.0;
  double s = 0.0;
  double eps = 1.0;
  double lambda = 0.0;  // 0 selects n_*(d)
  int cutoff = 32;

  double order() const { return lambda > 0.0 ? lambda : n_star(mu.dim()); }
};

using ValueEvaluator = std::function<double(double t, const TorusMeasure& mu)>;

/// Phi_eps = u(t, mu) - w(s, nu) - (rho^2(mu, nu) + (t - s)^2) / (2 eps) at the anchors.
double doubling_functional(const ValueEvaluator& u, const ValueEvaluator& w, const TestFunctionGadget& g);
/// psi_eps(t, mu) = (rho^2(mu, nu_eps) + (t - s_eps)^2) / (2 eps).
TestFunction psi_epsilon(const TestFunctionGadget& g);
/// phi_eps(s, nu) = -(rho^2(mu_eps, nu) + (t_eps - s)^2) / (2 eps), as a function of (s, nu).
TestFunction phi_epsilon(const TestFunctionGadget& g);
/// (1/eps) (1+|k|^2)^{-lambda} F_k(mu_eps - nu_eps).
FourierTable kappa_epsilon(const TestFunctionGadget& g);

/// Sampled check of a family against its declared budget c_a.
struct FamilyValidation {
  double max_cn = 0.0;         // largest sampled C^{n_*} surrogate over sampled mu and entries
  double max_lipschitz = 0.0;  // largest |h(x,mu,a) - h(x,nu,a)| / rho_{n_*}(mu, nu)
  bool within_budget = false;
};
FamilyValidation validate_family(const CoefficientFamily& family, const ControlDictionary& dict, int pairs,
                                 std::uint64_t seed);

}  // namespace fwmkv
