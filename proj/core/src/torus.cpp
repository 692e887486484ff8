#include "fwmkv/torus.hpp"

namespace fwmkv {

TorusPoint reduce_to_torus(std::span<const double> x) {
  check_dimension(static_cast<int>(x.size()));
  TorusPoint p;
  p.dim_ = static_cast<int>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw std::domain_error("reduce_to_torus: non-finite coordinate");
    p.coords_[i] = wrap_angle(x[i]);
  }
  return p;
}

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("torus_distance: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < x.dim(); ++i) {
    const double di = circle_distance(x[i], y[i]);
    s += di * di;
  }
  return std::sqrt(s);
}

}  // namespace fwmkv
