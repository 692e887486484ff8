#include "fwmkv/fourier.hpp"

#include <algorithm>
#include <stdexcept>

#include "fwmkv/parallel.hpp"
#include "fwmkv/sobolev.hpp"

namespace fwmkv {
namespace {

constexpr std::size_t kNodeBlock = 512;

bool lex_negative(const WaveVector& k, int d) {
  for (int a = 0; a < d; ++a) {
    if (k[static_cast<std::size_t>(a)] != 0) return k[static_cast<std::size_t>(a)] < 0;
  }
  return false;
}

WaveVector negate(const WaveVector& k) { return {-k[0], -k[1], -k[2]}; }

/// e^{-i j x} for j in [-K, K], stored at offset j + K.
void axis_phases(double x, int K, cplx* out) {
  const cplx step = std::polar(1.0, -x);
  out[K] = 1.0;
  cplx p = 1.0;
  for (int j = 1; j <= K; ++j) {
    // Re-anchor periodically so the recurrence error stays at a few ulps.
    p = (j % 16 == 0) ? std::polar(1.0, -x * j) : p * step;
    out[K + j] = p;
    out[K - j] = std::conj(p);
  }
}

void accumulate_nodes(const NodesView& nodes, std::size_t begin, std::size_t end, FourierTable& acc) {
  const int d = nodes.dim;
  const int K = acc.cutoff();
  const int side = acc.side();
  std::vector<cplx> ph(static_cast<std::size_t>(d * side));
  for (std::size_t i = begin; i < end; ++i) {
    const double w = nodes.weights[i];
    if (w == 0.0) continue;
    const double* x = nodes.point(i);
    for (int a = 0; a < d; ++a) axis_phases(x[a], K, ph.data() + a * side);
    if (d == 1) {
      for (int j = 0; j < side; ++j) acc[static_cast<std::size_t>(j)] += w * ph[static_cast<std::size_t>(j)];
    } else if (d == 2) {
      for (int j0 = 0; j0 < side; ++j0) {
        const cplx p0 = w * ph[static_cast<std::size_t>(j0)];
        const std::size_t row = static_cast<std::size_t>(j0) * static_cast<std::size_t>(side);
        for (int j1 = 0; j1 < side; ++j1) acc[row + static_cast<std::size_t>(j1)] += p0 * ph[static_cast<std::size_t>(side + j1)];
      }
    } else {
      for (int j0 = 0; j0 < side; ++j0) {
        const cplx p0 = w * ph[static_cast<std::size_t>(j0)];
        for (int j1 = 0; j1 < side; ++j1) {
          const cplx p01 = p0 * ph[static_cast<std::size_t>(side + j1)];
          const std::size_t row = (static_cast<std::size_t>(j0) * static_cast<std::size_t>(side) + static_cast<std::size_t>(j1)) *
                                  static_cast<std::size_t>(side);
          for (int j2 = 0; j2 < side; ++j2) acc[row + static_cast<std::size_t>(j2)] += p01 * ph[static_cast<std::size_t>(2 * side + j2)];
        }
      }
    }
  }
}

}  // namespace

FourierTable::FourierTable(int dim, int cutoff) : dim_(dim), cutoff_(cutoff) {
  check_dimension(dim);
  if (cutoff < 0) throw std::invalid_argument("FourierTable: cutoff must be nonnegative");
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(2 * cutoff + 1);
  coeffs_.assign(n, cplx{});
}

std::size_t FourierTable::flat_index(const WaveVector& k) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a)
    flat = flat * static_cast<std::size_t>(side()) + static_cast<std::size_t>(k[static_cast<std::size_t>(a)] + cutoff_);
  return flat;
}

WaveVector FourierTable::wave_vector(std::size_t flat) const {
  WaveVector k{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    k[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(side())) - cutoff_;
    flat /= static_cast<std::size_t>(side());
  }
  return k;
}

bool FourierTable::contains(const WaveVector& k) const {
  for (int a = 0; a < dim_; ++a) {
    if (std::abs(k[static_cast<std::size_t>(a)]) > cutoff_) return false;
  }
  for (int a = dim_; a < kMaxDim; ++a) {
    if (k[static_cast<std::size_t>(a)] != 0) return false;
  }
  return true;
}

double FourierTable::norm_sq(std::size_t flat) const {
  const WaveVector k = wave_vector(flat);
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) s += static_cast<double>(k[static_cast<std::size_t>(a)]) * k[static_cast<std::size_t>(a)];
  return s;
}

FourierTable& FourierTable::operator+=(const FourierTable& o) {
  if (o.dim_ != dim_ || o.cutoff_ != cutoff_) throw std::invalid_argument("FourierTable: shape mismatch");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

FourierTable& FourierTable::operator-=(const FourierTable& o) {
  if (o.dim_ != dim_ || o.cutoff_ != cutoff_) throw std::invalid_argument("FourierTable: shape mismatch");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

FourierTable& FourierTable::operator*=(double s) {
  for (cplx& c : coeffs_) c *= s;
  return *this;
}

FourierTable FourierTable::resized(int cutoff) const {
  FourierTable out(dim_, cutoff);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coefficient(out.wave_vector(i));
  return out;
}

double FourierTable::conjugate_asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const cplx mirror = coeffs_[flat_index(negate(wave_vector(i)))];
    worst = std::max(worst, std::abs(mirror - std::conj(coeffs_[i])));
  }
  return worst;
}

void FourierTable::symmetrize() {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const WaveVector k = wave_vector(i);
    if (lex_negative(k, dim_)) coeffs_[i] = std::conj(coeffs_[flat_index(negate(k))]);
  }
  const std::size_t zero = flat_index({0, 0, 0});
  coeffs_[zero] = coeffs_[zero].real();
}

double FourierTable::difference_tail_bound(double lambda) const {
  const double m = 2.0 * basis_scale(dim_);
  return lattice_tail_bound(dim_, lambda, cutoff_) * m * m;
}

cplx fourier_coefficient(const TorusMeasure& mu, const WaveVector& k) {
  const NodesView nodes = mu.nodes();
  const int d = nodes.dim;
  for (int a = d; a < kMaxDim; ++a) {
    if (k[static_cast<std::size_t>(a)] != 0) throw std::invalid_argument("fourier_coefficient: wave vector exceeds dimension");
  }
  const cplx s = pairwise_sum<cplx>(nodes.size(), [&](std::size_t i) {
    const double* x = nodes.point(i);
    double phase = 0.0;
    for (int a = 0; a < d; ++a) phase += k[static_cast<std::size_t>(a)] * x[a];
    return nodes.weights[i] * std::polar(1.0, -phase);
  });
  return basis_scale(d) * s;
}

FourierTable fourier_table(const NodesView& nodes, int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("fourier_table: cutoff must be >= 1");
  FourierTable table(nodes.dim, cutoff);
  const std::size_t blocks = (nodes.size() + kNodeBlock - 1) / kNodeBlock;
  std::vector<FourierTable> partial(blocks, FourierTable(nodes.dim, cutoff));
  parallel_for(blocks, [&](std::size_t b) {
    accumulate_nodes(nodes, b * kNodeBlock, std::min(nodes.size(), (b + 1) * kNodeBlock), partial[b]);
  });
  // Fixed pairwise tree over blocks: independent of how blocks were scheduled.
  for (std::size_t stride = 1; stride < blocks; stride *= 2) {
    for (std::size_t b = 0; b + stride < blocks; b += 2 * stride) partial[b] += partial[b + stride];
  }
  if (blocks > 0) table = std::move(partial[0]);
  table *= basis_scale(nodes.dim);
  table.symmetrize();
  return table;
}

FourierTable fourier_table(const TorusMeasure& mu, int cutoff) { return fourier_table(mu.nodes(), cutoff); }

FourierTable function_coefficients(std::span<const int> shape, std::span<const double> values, int cutoff) {
  const int d = static_cast<int>(shape.size());
  check_dimension(d);
  std::size_t cells = 1;
  double vol = 1.0;
  for (int n : shape) {
    cells *= static_cast<std::size_t>(n);
    vol *= kTwoPi / n;
  }
  if (values.size() != cells) throw std::invalid_argument("function_coefficients: value count does not match shape");
  std::vector<double> coords(cells * static_cast<std::size_t>(d));
  std::vector<double> weights(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t flat = c;
    for (int a = d - 1; a >= 0; --a) {
      const auto n = static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
      coords[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] =
          (static_cast<double>(flat % n) + 0.5) * (kTwoPi / static_cast<double>(n));
      flat /= n;
    }
    weights[c] = values[c] * vol;
  }
  return fourier_table(NodesView{d, coords, weights}, cutoff);
}

SeriesEvaluator::SeriesEvaluator(const FourierTable& table) : table_(table) {
  for (std::size_t i = 0; i < table_.size(); ++i) {
    if (table_[i] != cplx{}) {
      active_.push_back(i);
      waves_.push_back(table_.wave_vector(i));
    }
  }
}

void SeriesEvaluator::phases(const double* x, std::vector<cplx>& axis) const {
  const int d = table_.dim();
  const int K = table_.cutoff();
  const int side = table_.side();
  axis.resize(static_cast<std::size_t>(d * side));
  // e^{+i j x}: conjugate of the measure-side phase.
  for (int a = 0; a < d; ++a) {
    axis_phases(-x[a], K, axis.data() + a * side);
  }
}

double SeriesEvaluator::value(const double* x) const {
  thread_local std::vector<cplx> axis;
  phases(x, axis);
  const int d = table_.dim();
  const int K = table_.cutoff();
  const int side = table_.side();
  double s = 0.0;
  for (std::size_t n = 0; n < active_.size(); ++n) {
    const std::size_t flat = active_[n];
    const WaveVector& k = waves_[n];
    cplx e = axis[static_cast<std::size_t>(k[0] + K)];
    for (int a = 1; a < d; ++a) e *= axis[static_cast<std::size_t>(a * side + k[static_cast<std::size_t>(a)] + K)];
    s += (table_[flat] * e).real();
  }
  return basis_scale(d) * s;
}

Jet SeriesEvaluator::jet(const double* x) const {
  thread_local std::vector<cplx> axis;
  phases(x, axis);
  const int d = table_.dim();
  const int K = table_.cutoff();
  const int side = table_.side();
  Jet out;
  for (std::size_t n = 0; n < active_.size(); ++n) {
    const std::size_t flat = active_[n];
    const WaveVector& k = waves_[n];
    cplx e = axis[static_cast<std::size_t>(k[0] + K)];
    for (int a = 1; a < d; ++a) e *= axis[static_cast<std::size_t>(a * side + k[static_cast<std::size_t>(a)] + K)];
    const cplx term = table_[flat] * e;
    out.value += term.real();
    // d/dx_a -> i k_a; d2/dx_a dx_b -> -k_a k_b
    for (int a = 0; a < d; ++a) {
      const double ka = k[static_cast<std::size_t>(a)];
      out.grad[static_cast<std::size_t>(a)] += -ka * term.imag();
      for (int b = 0; b < d; ++b) out.hess[static_cast<std::size_t>(a * kMaxDim + b)] -= ka * k[static_cast<std::size_t>(b)] * term.real();
    }
  }
  const double s = basis_scale(d);
  out.value *= s;
  for (double& g : out.grad) g *= s;
  for (double& h : out.hess) h *= s;
  return out;
}

double pair_measure_function(const FourierTable& measure, const FourierTable& function) {
  if (measure.dim() != function.dim()) throw std::invalid_argument("pair_measure_function: dimension mismatch");
  const int K = std::min(measure.cutoff(), function.cutoff());
  const FourierTable m = measure.resized(K);
  const FourierTable f = function.resized(K);
  const cplx s = pairwise_sum<cplx>(m.size(), [&](std::size_t i) { return f[i] * std::conj(m[i]); });
  return s.real();
}

}  // namespace fwmkv
