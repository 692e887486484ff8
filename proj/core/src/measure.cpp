#include "fwmkv/measure.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fwmkv/parallel.hpp"
#include "fwmkv/rng.hpp"

namespace fwmkv {
namespace {

void center_of(std::span<const int> shape, std::size_t flat, double* out) {
  for (auto a = static_cast<std::ptrdiff_t>(shape.size()) - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
    const std::size_t idx = flat % n;
    flat /= n;
    out[a] = (static_cast<double>(idx) + 0.5) * (kTwoPi / static_cast<double>(n));
  }
}

void check_weights(std::span<const double> w, double scale) {
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("measure weights must be finite and nonnegative");
  }
  const double total = scale * pairwise_sum<double>(w.size(), [&](std::size_t i) { return w[i]; });
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw std::invalid_argument("measure mass must be 1 within 1e-12, got " + std::to_string(total));
}

ParticleCloud grid_nodes(const GridDensity& g) {
  const int d = g.dim();
  std::vector<double> coords(g.cell_count() * static_cast<std::size_t>(d));
  std::vector<double> weights(g.cell_count());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    g.cell_center(c, coords.data() + c * static_cast<std::size_t>(d));
    weights[c] = g.density()[c] * g.cell_volume();
  }
  // Midpoint weights inherit the density's normalization; renormalize the last ulp away.
  const double total = pairwise_sum<double>(weights.size(), [&](std::size_t i) { return weights[i]; });
  for (double& w : weights) w /= total;
  return ParticleCloud(d, std::move(coords), std::move(weights));
}

}  // namespace

ParticleCloud::ParticleCloud(int dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
  check_dimension(dim);
  if (weights_.empty()) throw std::invalid_argument("particle cloud must be nonempty");
  if (coords_.size() != weights_.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("particle cloud: coordinate count does not match weights");
  for (double& x : coords_) {
    if (!std::isfinite(x)) throw std::domain_error("particle cloud: non-finite coordinate");
    x = wrap_angle(x);
  }
  check_weights(weights_, 1.0);
}

ParticleCloud ParticleCloud::equal_weights(int dim, std::vector<double> coords) {
  check_dimension(dim);
  const std::size_t n = coords.size() / static_cast<std::size_t>(dim);
  if (n == 0) throw std::invalid_argument("particle cloud must be nonempty");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return ParticleCloud(dim, std::move(coords), std::move(w));
}

ParticleCloud ParticleCloud::dirac(std::span<const double> x) {
  return ParticleCloud(static_cast<int>(x.size()), std::vector<double>(x.begin(), x.end()), {1.0});
}

TorusPoint ParticleCloud::point(std::size_t i) const {
  return reduce_to_torus(std::span<const double>(coords_.data() + i * static_cast<std::size_t>(dim_),
                                                 static_cast<std::size_t>(dim_)));
}

GridDensity::GridDensity(std::vector<int> shape, std::vector<double> density)
    : shape_(std::move(shape)), density_(std::move(density)) {
  check_dimension(static_cast<int>(shape_.size()));
  std::size_t cells = 1;
  cell_volume_ = 1.0;
  for (int n : shape_) {
    if (n < 1) throw std::invalid_argument("grid density: every axis needs at least one cell");
    cells *= static_cast<std::size_t>(n);
    cell_volume_ *= kTwoPi / n;
  }
  if (density_.size() != cells) throw std::invalid_argument("grid density: value count does not match shape");
  check_weights(density_, cell_volume_);
}

GridDensity GridDensity::uniform(int dim, int cells_per_axis) {
  check_dimension(dim);
  std::vector<int> shape(static_cast<std::size_t>(dim), cells_per_axis);
  std::size_t cells = 1;
  for (int n : shape) cells *= static_cast<std::size_t>(n);
  return GridDensity(std::move(shape), std::vector<double>(cells, 1.0 / std::pow(kTwoPi, dim)));
}

GridDensity GridDensity::from_function(std::vector<int> shape, const std::function<double(const double*)>& f) {
  check_dimension(static_cast<int>(shape.size()));
  std::size_t cells = 1;
  for (int n : shape) {
    if (n < 1) throw std::invalid_argument("grid density: every axis needs at least one cell");
    cells *= static_cast<std::size_t>(n);
  }
  std::vector<double> values(cells);
  double x[kMaxDim];
  for (std::size_t c = 0; c < cells; ++c) {
    center_of(shape, c, x);
    values[c] = f(x);
  }
  return from_cell_values(std::move(shape), std::move(values));
}

GridDensity GridDensity::from_cell_values(std::vector<int> shape, std::vector<double> values) {
  double vol = 1.0;
  for (int n : shape) vol *= kTwoPi / std::max(n, 1);
  const double total = vol * pairwise_sum<double>(values.size(), [&](std::size_t i) { return values[i]; });
  if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("grid density: mass must be positive");
  for (double& v : values) v /= total;
  return GridDensity(std::move(shape), std::move(values));
}

void GridDensity::cell_center(std::size_t flat, double* out) const { center_of(shape_, flat, out); }

TorusMeasure::TorusMeasure(ParticleCloud cloud) : nodes_(std::make_shared<const ParticleCloud>(std::move(cloud))) {}

TorusMeasure::TorusMeasure(GridDensity grid)
    : nodes_(std::make_shared<const ParticleCloud>(grid_nodes(grid))),
      grid_(std::make_shared<const GridDensity>(std::move(grid))) {}

const GridDensity& TorusMeasure::grid() const {
  if (!grid_) throw std::logic_error("measure is not a grid density");
  return *grid_;
}

const ParticleCloud& TorusMeasure::particles() const {
  if (grid_) throw std::logic_error("measure is not a particle cloud");
  return *nodes_;
}

TorusMeasure mixture(const TorusMeasure& a, const TorusMeasure& b, double t) {
  if (a.dim() != b.dim()) throw std::invalid_argument("mixture: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("mixture: weight must lie in [0, 1]");
  const NodesView na = a.nodes();
  const NodesView nb = b.nodes();
  std::vector<double> coords(na.coords.begin(), na.coords.end());
  coords.insert(coords.end(), nb.coords.begin(), nb.coords.end());
  std::vector<double> w;
  w.reserve(na.size() + nb.size());
  for (double v : na.weights) w.push_back((1.0 - t) * v);
  for (double v : nb.weights) w.push_back(t * v);
  return ParticleCloud(a.dim(), std::move(coords), std::move(w));
}

ParticleCloud sample_measure(const TorusMeasure& mu, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_measure: n must be >= 1");
  const int d = mu.dim();
  const auto du = static_cast<std::size_t>(d);
  const CounterStream stream(derive_seed(seed, 0x5A3D1Eull));

  // Cumulative weights over the nodes (particles or grid cells).
  const NodesView nodes = mu.nodes();
  std::vector<double> cdf(nodes.size());
  std::partial_sum(nodes.weights.begin(), nodes.weights.end(), cdf.begin());
  const double total = cdf.back();

  std::vector<double> coords(n * du);
  for (std::size_t i = 0; i < n; ++i) {
    const auto block = stream.block(2 * i);
    const double u = (uniform_open_closed(block[0], block[1]) - 0x1.0p-53) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto node = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    if (node >= nodes.size()) node = nodes.size() - 1;
    while (nodes.weights[node] == 0.0 && node > 0) --node;
    const double* p = nodes.point(node);
    if (mu.kind() == MeasureKind::particles) {
      std::copy(p, p + d, coords.begin() + static_cast<std::ptrdiff_t>(i * du));
    } else {
      const auto jitter = stream.block(2 * i + 1);
      const double r[4] = {uniform_open_closed(jitter[0], jitter[1]) - 0x1.0p-53,
                           uniform_open_closed(jitter[2], jitter[3]) - 0x1.0p-53,
                           uniform_open_closed(block[2], block[3]) - 0x1.0p-53, 0.0};
      for (int a = 0; a < d; ++a) {
        const double h = mu.grid().cell_width(a);
        coords[i * du + static_cast<std::size_t>(a)] = p[a] - 0.5 * h + r[a] * h;
      }
    }
  }
  return ParticleCloud::equal_weights(d, std::move(coords));
}

double integrate(const NodesView& nodes, const std::function<double(const double*)>& f) {
  return pairwise_sum<double>(nodes.size(), [&](std::size_t i) { return nodes.weights[i] * f(nodes.point(i)); });
}

double integrate(const TorusMeasure& mu, const std::function<double(const double*)>& f) {
  return integrate(mu.nodes(), f);
}

}  // namespace fwmkv
