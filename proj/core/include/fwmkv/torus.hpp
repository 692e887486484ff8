#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

namespace fwmkv {

inline constexpr int kMaxDim = 3;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec = std::array<double, kMaxDim>;
/// Row-major d x d' block; only the leading dim x noise_dim entries are used.
using Mat = std::array<double, kMaxDim * kMaxDim>;

/// Reduces an angle to [0, 2pi).
inline double wrap_angle(double x) {
  if (x >= 0.0 && x < kTwoPi) return x;
  if (x < 0.0 && x >= -kTwoPi) {
    const double r = x + kTwoPi;
    return r < kTwoPi ? r : 0.0;
  }
  if (x >= kTwoPi && x < 2.0 * kTwoPi) return x - kTwoPi;
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Reduces an angle to [-pi, pi).
inline double wrap_centered(double x) {
  double r = wrap_angle(x + kPi) - kPi;
  return r;
}

/// Geodesic distance on the unit-speed circle R / 2piZ.
inline double circle_distance(double a, double b) {
  return std::abs(wrap_centered(a - b));
}

inline void check_dimension(int d) {
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("dimension must be in [1, " + std::to_string(kMaxDim) +
                                "], got " + std::to_string(d));
}

class TorusPoint {
 public:
  TorusPoint() = default;

  int dim() const { return dim_; }
  double operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
  std::span<const double> coords() const { return {coords_.data(), static_cast<std::size_t>(dim_)}; }
  const double* data() const { return coords_.data(); }

  friend TorusPoint reduce_to_torus(std::span<const double> x);

 private:
  std::array<double, kMaxDim> coords_{};
  int dim_ = 0;
};

/// Maps each coordinate to [0, 2pi). Throws on non-finite input or unsupported dimension.
TorusPoint reduce_to_torus(std::span<const double> x);

/// inf over integer shifts k of |x - y - 2 pi k|.
double torus_distance(const TorusPoint& x, const TorusPoint& y);

}  // namespace fwmkv
