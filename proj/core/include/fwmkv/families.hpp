#pragma once

#include <functional>
#include <vector>

#include "fwmkv/calculus.hpp"

namespace fwmkv {

/// Periodic function on [-pi, pi) from equally spaced samples y_j = -pi + j 2pi/n, linear interpolation.
class PeriodicFunction1D {
 public:
  PeriodicFunction1D() = default;
  /// Throws if the sampled Lipschitz constant exceeds the declared one (when given).
  explicit PeriodicFunction1D(std::vector<double> samples, std::optional<double> lipschitz = {});
  static PeriodicFunction1D sample(const std::function<double(double)>& f, int n = 4096,
                                   std::optional<double> lipschitz = {});
  static PeriodicFunction1D constant(double c) { return PeriodicFunction1D(std::vector<double>{c, c}); }

  double operator()(double y) const;
  std::size_t size() const { return samples_.size(); }
  std::span<const double> samples() const { return samples_; }
  double lipschitz() const { return lipschitz_; }
  double min() const;
  double max() const;

 private:
  std::vector<double> samples_;
  double lipschitz_ = 0.0;
};

/// Mean of mu after lifting to [c - pi, c + pi) around the circular-mean direction c.
struct LiftedMean {
  double mean = 0.0;     // in [-pi, pi)
  double centre = 0.0;   // c
  bool flagged = false;  // more than 1% of the mass within pi/4 of each end of the lift interval
};
LiftedMean lifted_mean(const NodesView& nodes);
inline LiftedMean lifted_mean(const TorusMeasure& mu) { return lifted_mean(mu.nodes()); }

/// Features [m(mu), flag] and b = a, sigma constant, l = a^2/2 + L(m(mu)), phi = 0, on T^1.
CoefficientFamily eikonal_family(PeriodicFunction1D L, double sigma = 1.0);

/// b = a, sigma constant, l = a^2/2 + kappa [1 - mu(cos)^2 - mu(sin)^2], phi = 0, on T^1.
CoefficientFamily kuramoto_family(double kappa, double sigma);

/// Generic family built from trigonometric tables, linear in a single moment m = mu(f):
/// b_i = gain a_i + g_i(x) + moment_drift m, sigma = sigma I,
/// l = cost_control |a|^2 / 2 + c(x) + moment_cost m, phi = terminal m.
struct FourierFamilySpec {
  int dim = 1;
  double control_gain = 0.0;
  std::vector<FourierTable> drift;  // empty or one table per axis
  double sigma = 0.0;
  double cost_control = 0.0;
  std::optional<FourierTable> cost;
  std::optional<FourierTable> moment;
  double moment_drift = 0.0;
  double moment_cost = 0.0;
  double terminal = 0.0;
  double c_a = std::numeric_limits<double>::infinity();
};
CoefficientFamily fourier_family(const FourierFamilySpec& spec);

}  // namespace fwmkv
