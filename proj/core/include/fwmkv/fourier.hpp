#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "fwmkv/measure.hpp"
#include "fwmkv/torus.hpp"

namespace fwmkv {

using cplx = std::complex<double>;
using WaveVector = std::array<int, kMaxDim>;

/// (2pi)^{-d/2}, the modulus of every basis function e_k.
inline double basis_scale(int d) { return std::pow(kTwoPi, -0.5 * d); }

/// Coefficients c_k for every k with |k|_inf <= K. A measure table stores
/// F_k(mu) = mu(conj e_k); a function table stores F_k(f), so f = sum c_k e_k.
class FourierTable {
 public:
  FourierTable() = default;
  FourierTable(int dim, int cutoff);

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  std::size_t size() const { return coeffs_.size(); }
  int side() const { return 2 * cutoff_ + 1; }

  std::size_t flat_index(const WaveVector& k) const;
  WaveVector wave_vector(std::size_t flat) const;
  bool contains(const WaveVector& k) const;

  cplx& operator[](std::size_t flat) { return coeffs_[flat]; }
  cplx operator[](std::size_t flat) const { return coeffs_[flat]; }
  cplx& at(const WaveVector& k) { return coeffs_[flat_index(k)]; }
  /// Zero outside the stored cube.
  cplx coefficient(const WaveVector& k) const { return contains(k) ? coeffs_[flat_index(k)] : cplx{}; }
  std::span<const cplx> coefficients() const { return coeffs_; }

  /// |k|^2 for the flat entry.
  double norm_sq(std::size_t flat) const;

  FourierTable& operator+=(const FourierTable& o);
  FourierTable& operator-=(const FourierTable& o);
  FourierTable& operator*=(double s);
  friend FourierTable operator+(FourierTable a, const FourierTable& b) { return a += b; }
  friend FourierTable operator-(FourierTable a, const FourierTable& b) { return a -= b; }
  friend FourierTable operator*(FourierTable a, double s) { return a *= s; }
  friend FourierTable operator*(double s, FourierTable a) { return a *= s; }

  /// Restriction (or zero-extension) to a different cutoff.
  FourierTable resized(int cutoff) const;

  /// max over k of |c_{-k} - conj(c_k)|.
  double conjugate_asymmetry() const;
  /// Rewrites c_{-k} as conj(c_k) for the lexicographically negative half; c_0 made real.
  void symmetrize();

  /// Tail certificate for a measure-difference table: sum over |k|_inf > K of
  /// (1+|k|^2)^{-lambda} (2 (2pi)^{-d/2})^2.
  double difference_tail_bound(double lambda) const;

 private:
  int dim_ = 0;
  int cutoff_ = 0;
  std::vector<cplx> coeffs_;
};

/// mu(conj e_k) as a direct sum over the measure's nodes (midpoint rule for grids).
cplx fourier_coefficient(const TorusMeasure& mu, const WaveVector& k);

/// Every coefficient with |k|_inf <= K. Conjugate symmetry is exact.
FourierTable fourier_table(const TorusMeasure& mu, int cutoff);
FourierTable fourier_table(const NodesView& nodes, int cutoff);

/// Coefficients of a real function sampled on a uniform grid over [0,2pi)^d (cell
/// centers), by midpoint quadrature.
FourierTable function_coefficients(std::span<const int> shape, std::span<const double> values, int cutoff);

/// Value, gradient and Hessian of a real trigonometric series.
struct Jet {
  double value = 0.0;
  Vec grad{};
  Mat hess{};  // d x d, row-major with stride kMaxDim
};

/// Evaluates f(x) = Re sum c_k e_k(x) and its derivatives. Precomputes the
/// wave-vector list so repeated evaluation in hot loops avoids index decoding.
class SeriesEvaluator {
 public:
  explicit SeriesEvaluator(const FourierTable& table);

  double value(const double* x) const;
  Jet jet(const double* x) const;
  const FourierTable& table() const { return table_; }

 private:
  void phases(const double* x, std::vector<cplx>& axis) const;

  FourierTable table_;
  std::vector<std::size_t> active_;  // nonzero entries
  std::vector<WaveVector> waves_;
};

/// mu(f) for a function table: sum_k c_k conj(F_k(mu)), evaluated from coefficient tables.
double pair_measure_function(const FourierTable& measure, const FourierTable& function);

}  // namespace fwmkv
