#include "fwmkv/sobolev.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwmkv/parallel.hpp"

namespace fwmkv {
namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Exact sum of (1+|k|^2)^{-s} over lo < |k|_inf <= hi.
double shell_sum(int d, double s, int lo, int hi) {
  double total = 0.0;
  const int side = 2 * hi + 1;
  std::size_t n = 1;
  for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(side);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t f = flat;
    int inf = 0;
    double sq = 0.0;
    for (int a = 0; a < d; ++a) {
      const int k = static_cast<int>(f % static_cast<std::size_t>(side)) - hi;
      f /= static_cast<std::size_t>(side);
      inf = std::max(inf, std::abs(k));
      sq += static_cast<double>(k) * k;
    }
    if (inf > lo) total += std::pow(1.0 + sq, -s);
  }
  return total;
}

/// Integral comparison for the lattice points with |k|_2 >= R, using cubes of
/// half-diagonal c = sqrt(d)/2 and (1+r^2)^{-s} <= r^{-2s}. Requires R > sqrt(d).
double radial_tail(int d, double s, double R) {
  const double omega = d == 2 ? kTwoPi : 2.0 * kTwoPi;
  const double c = std::sqrt(static_cast<double>(d)) / 2.0;
  const double r0 = R - 2.0 * c;
  double total = 0.0;
  for (int j = 0; j <= d - 1; ++j)
    total += binomial(d - 1, j) * std::pow(c, d - 1 - j) * std::pow(r0, j + 1 - 2.0 * s) / (2.0 * s - j - 1);
  return omega * total;
}

void check_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < 1.0)
    throw std::invalid_argument("Sobolev order lambda must be >= 1, got " + std::to_string(lambda));
}

}  // namespace

int n_star(int d) {
  if (d < 1) throw std::invalid_argument("n_star: d must be >= 1");
  return 3 + d / 2;
}

SobolevWeight::SobolevWeight(double lambda, int dim) : lambda_(lambda), dim_(dim) {
  check_lambda(lambda);
  check_dimension(dim);
}

SobolevWeight SobolevWeight::dual(double lambda, int dim) {
  SobolevWeight w(lambda, dim);
  if (!w.summable())
    throw std::invalid_argument("dual Sobolev norm needs 2 lambda > d (lambda=" + std::to_string(lambda) +
                                ", d=" + std::to_string(dim) + ")");
  return w;
}

double lattice_tail_bound(int d, double s, int K) {
  check_dimension(d);
  if (K < 0) throw std::invalid_argument("lattice_tail_bound: K must be >= 0");
  if (!(2.0 * s > d)) throw std::invalid_argument("lattice_tail_bound: needs 2s > d");
  if (d == 1) {
    if (K == 0) return 2.0 * std::pow(2.0, -s) + lattice_tail_bound(1, s, 1);
    return 2.0 * std::pow(static_cast<double>(K), 1.0 - 2.0 * s) / (2.0 * s - 1.0);
  }
  // Points with |k|_inf > K satisfy |k|_2 >= K + 1; keep the radial bound away from its pole.
  const int K0 = std::max(K, static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(d)))));
  const double explicit_part = K0 > K ? shell_sum(d, s, K, K0) : 0.0;
  return explicit_part + radial_tail(d, s, K0 + 1.0);
}

MetricResult sobolev_norm(const FourierTable& f, const SobolevWeight& w, std::optional<double> tail_sq_bound) {
  if (f.dim() != w.dim()) throw std::invalid_argument("sobolev_norm: dimension mismatch");
  const double sq = pairwise_sum<double>(f.size(), [&](std::size_t i) { return w.growth(f.norm_sq(i)) * std::norm(f[i]); });
  MetricResult r;
  r.value = std::sqrt(sq);
  r.cutoff = f.cutoff();
  r.truncation_error = tail_sq_bound ? std::sqrt(std::max(*tail_sq_bound, 0.0)) : std::numeric_limits<double>::infinity();
  return r;
}

MetricResult sobolev_norm(std::span<const int> shape, std::span<const double> values, const SobolevWeight& w, int cutoff) {
  return sobolev_norm(function_coefficients(shape, values, cutoff), w);
}

MetricResult dual_norm(const FourierTable& eta, const SobolevWeight& w) {
  if (eta.dim() != w.dim()) throw std::invalid_argument("dual_norm: dimension mismatch");
  if (!w.summable()) throw std::invalid_argument("dual_norm: needs 2 lambda > d");
  const double sq = pairwise_sum<double>(eta.size(), [&](std::size_t i) { return w.decay(eta.norm_sq(i)) * std::norm(eta[i]); });
  MetricResult r;
  r.value = std::sqrt(sq);
  r.cutoff = eta.cutoff();
  r.truncation_error = std::sqrt(eta.difference_tail_bound(w.lambda()));
  return r;
}

MetricResult rho_lambda(const TorusMeasure& mu, const TorusMeasure& nu, double lambda, int cutoff) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("rho_lambda: dimension mismatch");
  const SobolevWeight w = SobolevWeight::dual(lambda, mu.dim());
  return dual_norm(fourier_table(mu, cutoff) - fourier_table(nu, cutoff), w);
}

DualMaximizer dual_maximizer(const FourierTable& eta, double lambda) {
  const SobolevWeight w = SobolevWeight::dual(lambda, eta.dim());
  DualMaximizer out{FourierTable(eta.dim(), eta.cutoff()), true};
  for (std::size_t i = 0; i < eta.size(); ++i) {
    out.psi[i] = w.decay(eta.norm_sq(i)) * eta[i];
    if (eta[i] != cplx{}) out.degenerate = false;
  }
  return out;
}

double w1_circle(const ParticleCloud& mu, const ParticleCloud& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw std::invalid_argument("w1_circle: only d = 1 is supported");
  // Signed atoms of mu - nu sorted by position; G is the CDF difference on each arc.
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(mu.size() + nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) atoms.emplace_back(mu.coords()[i], mu.weights()[i]);
  for (std::size_t i = 0; i < nu.size(); ++i) atoms.emplace_back(nu.coords()[i], -nu.weights()[i]);
  std::sort(atoms.begin(), atoms.end());

  std::vector<std::pair<double, double>> arcs;  // (level, length)
  arcs.reserve(atoms.size());
  double g = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    g += atoms[i].second;
    const double next = i + 1 < atoms.size() ? atoms[i + 1].first : atoms[0].first + kTwoPi;
    const double len = next - atoms[i].first;
    if (len > 0.0) arcs.emplace_back(g, len);
  }
  if (arcs.empty()) return 0.0;

  // The optimal shift is a length-weighted median of the levels.
  std::vector<std::pair<double, double>> sorted = arcs;
  std::sort(sorted.begin(), sorted.end());
  double half = 0.0;
  for (const auto& a : sorted) half += a.second;
  half *= 0.5;
  double acc = 0.0;
  double t = sorted.back().first;
  for (const auto& a : sorted) {
    acc += a.second;
    if (acc >= half) {
      t = a.first;
      break;
    }
  }
  double cost = 0.0;
  for (const auto& a : arcs) cost += a.second * std::abs(a.first - t);
  return cost;
}

double embedding_constant(int m, int d) {
  if (m < 1 || d < 1) throw std::invalid_argument("embedding_constant: m and d must be >= 1");
  return std::sqrt(std::pow(2.0, m) * (1.0 + std::pow(static_cast<double>(d), m) * std::pow(kTwoPi, d)));
}

CertifiedInterval tail_constant_c(int d, std::optional<int> cutoff) {
  check_dimension(d);
  const double s = n_star(d) - 2.0;
  const int K = cutoff.value_or(d == 1 ? 256 : d == 2 ? 48 : 16);
  if (K < 1) throw std::invalid_argument("tail_constant_c: cutoff must be >= 1");
  const double partial = shell_sum(d, s, -1, K);
  return {partial, partial + lattice_tail_bound(d, s, K)};
}

}  // namespace fwmkv
