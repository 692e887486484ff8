#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fwmkv/torus.hpp"

namespace fwmkv {

inline constexpr double kWeightTolerance = 1e-12;

/// Non-owning view of weighted nodes: particles, or grid cell centers with
/// weights density * cell volume.
struct NodesView {
  int dim = 0;
  std::span<const double> coords;   // size() * dim, row-major
  std::span<const double> weights;  // one per node

  std::size_t size() const { return weights.size(); }
  const double* point(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(dim); }
};

class ParticleCloud {
 public:
  /// Coordinates are reduced to the torus; weights must be nonnegative and sum to 1.
  ParticleCloud(int dim, std::vector<double> coords, std::vector<double> weights);

  static ParticleCloud equal_weights(int dim, std::vector<double> coords);
  static ParticleCloud dirac(std::span<const double> x);

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> coords() const { return coords_; }
  std::span<const double> weights() const { return weights_; }
  TorusPoint point(std::size_t i) const;
  NodesView view() const { return {dim_, coords_, weights_}; }

 private:
  int dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// Piecewise-constant density on a uniform grid over [0, 2pi)^d, row-major with
/// the first axis slowest.
class GridDensity {
 public:
  GridDensity(std::vector<int> shape, std::vector<double> density);

  static GridDensity uniform(int dim, int cells_per_axis);
  /// Samples f at cell centers and normalizes.
  static GridDensity from_function(std::vector<int> shape, const std::function<double(const double*)>& f);
  /// Uses caller-supplied cell averages and normalizes.
  static GridDensity from_cell_values(std::vector<int> shape, std::vector<double> values);

  int dim() const { return static_cast<int>(shape_.size()); }
  std::span<const int> shape() const { return shape_; }
  std::span<const double> density() const { return density_; }
  double cell_volume() const { return cell_volume_; }
  std::size_t cell_count() const { return density_.size(); }
  double cell_width(int axis) const { return kTwoPi / shape_[static_cast<std::size_t>(axis)]; }
  void cell_center(std::size_t flat, double* out) const;

 private:
  std::vector<int> shape_;
  std::vector<double> density_;
  double cell_volume_;
};

enum class MeasureKind { particles, grid };

/// A probability measure on T^d. Immutable and cheap to copy.
class TorusMeasure {
 public:
  TorusMeasure(ParticleCloud cloud);  // NOLINT(google-explicit-constructor)
  TorusMeasure(GridDensity grid);     // NOLINT(google-explicit-constructor)

  static TorusMeasure dirac(std::span<const double> x) { return ParticleCloud::dirac(x); }
  static TorusMeasure dirac1(double x) { return ParticleCloud::dirac(std::span<const double>(&x, 1)); }
  static TorusMeasure uniform(int dim, int cells_per_axis = 64) { return GridDensity::uniform(dim, cells_per_axis); }

  int dim() const { return nodes_->dim(); }
  MeasureKind kind() const { return grid_ ? MeasureKind::grid : MeasureKind::particles; }
  /// Quadrature nodes: the particles themselves, or grid cell centers (midpoint rule).
  NodesView nodes() const { return nodes_->view(); }
  const ParticleCloud& node_cloud() const { return *nodes_; }
  const GridDensity& grid() const;
  const ParticleCloud& particles() const;

 private:
  std::shared_ptr<const ParticleCloud> nodes_;
  std::shared_ptr<const GridDensity> grid_;
};

/// (1 - t) a + t b as a weighted particle cloud over the union of nodes. t in [0, 1].
TorusMeasure mixture(const TorusMeasure& a, const TorusMeasure& b, double t);

/// n i.i.d. draws of mu, a pure function of (mu, n, seed). Particle clouds are resampled
/// by weight; grid densities draw a cell by weight and a uniform point inside it.
ParticleCloud sample_measure(const TorusMeasure& mu, std::size_t n, std::uint64_t seed);

/// mu(f) by quadrature over the measure's nodes.
double integrate(const TorusMeasure& mu, const std::function<double(const double*)>& f);
double integrate(const NodesView& nodes, const std::function<double(const double*)>& f);

}  // namespace fwmkv
