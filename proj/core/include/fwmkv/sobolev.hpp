#pragma once

#include <optional>

#include "fwmkv/fourier.hpp"
#include "fwmkv/measure.hpp"

namespace fwmkv {

/// Smoothness order 3 + floor(d/2): the Sobolev order that embeds into C^2(T^d).
int n_star(int d);

/// Order lambda of the weights (1+|k|^2)^{+-lambda} in dimension d.
class SobolevWeight {
 public:
  /// Primal weight for function norms; lambda >= 1.
  SobolevWeight(double lambda, int dim);
  /// Weight usable on the measure side; additionally requires 2 lambda > d.
  static SobolevWeight dual(double lambda, int dim);

  double lambda() const { return lambda_; }
  int dim() const { return dim_; }
  bool summable() const { return 2.0 * lambda_ > dim_; }
  /// (1+|k|^2)^{-lambda}
  double decay(double k_norm_sq) const { return std::pow(1.0 + k_norm_sq, -lambda_); }
  /// (1+|k|^2)^{+lambda}
  double growth(double k_norm_sq) const { return std::pow(1.0 + k_norm_sq, lambda_); }

 private:
  double lambda_;
  int dim_;
};

/// A truncated value with a certified bound on what the truncation dropped.
struct MetricResult {
  double value = 0.0;
  double truncation_error = 0.0;
  int cutoff = 0;

  double lower() const { return std::max(value - truncation_error, 0.0); }
  double upper() const { return value + truncation_error; }
};

struct CertifiedInterval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Upper bound for sum over k in Z^d with |k|_inf > K of (1+|k|^2)^{-s}; requires 2s > d.
double lattice_tail_bound(int d, double s, int K);

/// (sum_{|k|_inf <= K} (1+|k|^2)^lambda |c_k|^2)^{1/2}. The tail of a general function is
/// unknown, so truncation_error is +inf unless tail_sq_bound certifies the dropped sum.
MetricResult sobolev_norm(const FourierTable& f, const SobolevWeight& w, std::optional<double> tail_sq_bound = {});
MetricResult sobolev_norm(std::span<const int> shape, std::span<const double> values, const SobolevWeight& w, int cutoff);

/// |eta|_lambda of a signed-measure table: (sum (1+|k|^2)^{-lambda} |F_k(eta)|^2)^{1/2}.
MetricResult dual_norm(const FourierTable& eta, const SobolevWeight& w);

/// Fourier-Wasserstein distance rho_lambda(mu, nu) truncated at K, with certified tail.
MetricResult rho_lambda(const TorusMeasure& mu, const TorusMeasure& nu, double lambda, int cutoff);

struct DualMaximizer {
  FourierTable psi;  // F_k(psi) = (1+|k|^2)^{-lambda} F_k(eta)
  bool degenerate = false;
};

/// The function attaining the supremum in the dual representation of |eta|_lambda.
DualMaximizer dual_maximizer(const FourierTable& eta, double lambda);

/// Exact Wasserstein-1 distance between two particle clouds on the circle.
double w1_circle(const ParticleCloud& mu, const ParticleCloud& nu);

/// c_{m,d} = sqrt(2^m (1 + d^m (2pi)^d)), with hat-rho_m <= c_{m,d} rho_m.
double embedding_constant(int m, int d);

/// sum_{k in Z^d} (1+|k|^2)^{2 - n_*(d)} as a certified interval: partial sum to K plus tail bound.
CertifiedInterval tail_constant_c(int d, std::optional<int> cutoff = {});

}  // namespace fwmkv
