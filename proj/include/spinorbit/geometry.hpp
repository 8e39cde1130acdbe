#pragma once

#include <array>
#include <cmath>
#include <random>

#include "spinorbit/errors.hpp"

namespace spinorbit {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad2deg(double rad) { return rad * (180.0 / kPi); }

/// Point on a Poincare-type sphere: a unit 3-vector. Serves both as a
/// measurement setting and as a hidden spin-like state.
class PoincareVector {
 public:
  /// Components must already be unit length to within 1e-9 in squared norm;
  /// they are snapped to exact unit norm on construction.
  PoincareVector(double x, double y, double z) {
    const double n2 = x * x + y * y + z * z;
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 1e-9)
      throw InvalidInput("PoincareVector: components are not a unit vector");
    const double inv = 1.0 / std::sqrt(n2);
    x_ = x * inv;
    y_ = y * inv;
    z_ = z * inv;
  }

  /// Unit vector along an arbitrary nonzero direction.
  static PoincareVector normalized(double x, double y, double z) {
    const double n = std::hypot(x, y, z);
    if (!std::isfinite(n) || n == 0.0)
      throw InvalidInput("PoincareVector: cannot normalize a zero vector");
    return PoincareVector(x / n, y / n, z / n);
  }

  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  PoincareVector operator-() const { return PoincareVector(-x_, -y_, -z_); }

 private:
  double x_, y_, z_;
};

inline double dot(const PoincareVector& a, const PoincareVector& b) {
  return a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
}

inline std::array<double, 3> cross(const PoincareVector& a, const PoincareVector& b) {
  return {a.y() * b.z() - a.z() * b.y(),
          a.z() * b.x() - a.x() * b.z(),
          a.x() * b.y() - a.y() * b.x()};
}

/// Angle between two unit vectors in radians; atan2 form stays accurate for
/// nearly parallel and nearly antiparallel pairs alike.
inline double angle_between(const PoincareVector& a, const PoincareVector& b) {
  const auto c = cross(a, b);
  const double s = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  return std::atan2(s, dot(a, b));
}

/// Rodrigues rotation of v about a unit axis.
inline PoincareVector rotate_about(const PoincareVector& v, const PoincareVector& axis,
                                   double angle_rad) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  const auto k = cross(axis, v);
  const double d = dot(axis, v) * (1.0 - c);
  return PoincareVector(v.x() * c + k[0] * s + axis.x() * d,
                        v.y() * c + k[1] * s + axis.y() * d,
                        v.z() * c + k[2] * s + axis.z() * d);
}

inline bool approx_equal(const PoincareVector& a, const PoincareVector& b,
                         double tol = 1e-12) {
  return std::abs(a.x() - b.x()) <= tol && std::abs(a.y() - b.y()) <= tol &&
         std::abs(a.z() - b.z()) <= tol;
}

/// Uniform direction on the sphere (area-preserving in z and azimuth).
template <typename URBG>
PoincareVector random_unit_vector(URBG& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z = 2.0 * unit(rng) - 1.0;
  const double az = 2.0 * kPi * unit(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return PoincareVector(r * std::cos(az), r * std::sin(az), z);
}

}  // namespace spinorbit
