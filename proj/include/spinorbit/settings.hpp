#pragma once

// Measurement-setting triads. For each separation angle phi the three
// polarizer directions a_i pair with analyzer directions (b_i, b'_i) that
// straddle a_i by phi inside three mutually orthogonal planes: two great
// circles through the equator and one through the poles.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinorbit/errors.hpp"
#include "spinorbit/geometry.hpp"

namespace spinorbit {

struct SettingsTriad {
  double phi_deg = 0.0;
  std::array<PoincareVector, 3> a;
  std::array<PoincareVector, 3> b;
  std::array<PoincareVector, 3> b_prime;
};

/// The canonical triad for separation angle phi_deg in [0, 180]:
///   plane 1 (equator, around a1 = x):  b, b' = (cos p, +-sin p, 0)
///   plane 2 (equator, around a2 = y):  b, b' = (-+sin p, cos p, 0)
///   plane 3 (y-z,     around a3 = y):  b, b' = (0, cos p, +-sin p)
/// with p = phi/2, so each pair straddles its a_i symmetrically.
inline SettingsTriad build_triad(double phi_deg) {
  if (!(phi_deg >= 0.0 && phi_deg <= 180.0))
    throw InvalidInput("build_triad: phi must lie in [0, 180] degrees");
  const double p = 0.5 * deg2rad(phi_deg);
  const double c = std::cos(p);
  const double s = std::sin(p);
  return SettingsTriad{
      phi_deg,
      {PoincareVector(1, 0, 0), PoincareVector(0, 1, 0), PoincareVector(0, 1, 0)},
      {PoincareVector(c, s, 0), PoincareVector(-s, c, 0), PoincareVector(0, c, s)},
      {PoincareVector(c, -s, 0), PoincareVector(s, c, 0), PoincareVector(0, c, -s)}};
}

/// One validated triad property. `vacuous` marks constraints that degenerate
/// at phi = 0 or 180 (difference or sum vectors vanish); those pass with a
/// zero residual.
struct ConstraintCheck {
  bool pass = true;
  bool vacuous = false;
  double residual = 0.0;
};

struct TriadReport {
  ConstraintCheck pair_angle;     // max_i |angle(b_i, b'_i) - phi|, radians
  ConstraintCheck orthogonality;  // max pairwise |d_i . d_j| of unit differences
  ConstraintCheck parallelism;    // max_i sin(angle between b_i + b'_i and a_i)

  bool all_pass() const {
    return pair_angle.pass && orthogonality.pass && parallelism.pass;
  }
};

/// Checks the three defining constraints of a triad against its phi_deg.
inline TriadReport validate_triad(const SettingsTriad& t, double tol = 1e-9) {
  TriadReport report;
  const double phi_rad = deg2rad(t.phi_deg);

  for (int i = 0; i < 3; ++i) {
    const double r = std::abs(angle_between(t.b[i], t.b_prime[i]) - phi_rad);
    report.pair_angle.residual = std::max(report.pair_angle.residual, r);
  }
  report.pair_angle.pass = report.pair_angle.residual <= tol;

  // unit difference directions; a vanishing difference (phi = 0) is vacuous
  std::array<std::array<double, 3>, 3> d;
  std::array<bool, 3> defined{};
  for (int i = 0; i < 3; ++i) {
    double dx = t.b[i].x() - t.b_prime[i].x();
    double dy = t.b[i].y() - t.b_prime[i].y();
    double dz = t.b[i].z() - t.b_prime[i].z();
    const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
    defined[i] = n > 1e-12;
    if (defined[i]) d[i] = {dx / n, dy / n, dz / n};
  }
  bool any_pair = false;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      if (!defined[i] || !defined[j]) continue;
      any_pair = true;
      const double r = std::abs(d[i][0] * d[j][0] + d[i][1] * d[j][1] + d[i][2] * d[j][2]);
      report.orthogonality.residual = std::max(report.orthogonality.residual, r);
    }
  report.orthogonality.vacuous = !any_pair;
  report.orthogonality.pass = report.orthogonality.residual <= tol;

  // sum directions must lie along a_i; a vanishing sum (phi = 180) is vacuous
  bool any_sum = false;
  for (int i = 0; i < 3; ++i) {
    double sx = t.b[i].x() + t.b_prime[i].x();
    double sy = t.b[i].y() + t.b_prime[i].y();
    double sz = t.b[i].z() + t.b_prime[i].z();
    const double n = std::sqrt(sx * sx + sy * sy + sz * sz);
    if (n <= 1e-12) continue;
    any_sum = true;
    const double cx = sy * t.a[i].z() - sz * t.a[i].y();
    const double cy = sz * t.a[i].x() - sx * t.a[i].z();
    const double cz = sx * t.a[i].y() - sy * t.a[i].x();
    const double r = std::sqrt(cx * cx + cy * cy + cz * cz) / n;
    report.parallelism.residual = std::max(report.parallelism.residual, r);
  }
  report.parallelism.vacuous = !any_sum;
  report.parallelism.pass = report.parallelism.residual <= tol;

  return report;
}

/// Closed grid start, start+step, ... up to stop (inclusive within half a
/// billionth of a step, so binary-representable grids keep their endpoint).
inline std::vector<double> sweep_grid(double start_deg, double stop_deg, double step_deg) {
  if (!(step_deg > 0.0)) throw InvalidInput("sweep_grid: step must be positive");
  if (!(start_deg <= stop_deg)) throw InvalidInput("sweep_grid: start must not exceed stop");
  if (!(start_deg >= 0.0 && stop_deg <= 180.0))
    throw InvalidInput("sweep_grid: grid must lie within [0, 180] degrees");
  std::vector<double> grid;
  for (long k = 0;; ++k) {
    const double phi = start_deg + static_cast<double>(k) * step_deg;
    if (phi > stop_deg + 1e-9 * step_deg) break;
    grid.push_back(std::min(phi, stop_deg));
  }
  return grid;
}

inline nlohmann::json to_json(const PoincareVector& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

inline nlohmann::json to_json(const SettingsTriad& t) {
  const auto triple = [](const std::array<PoincareVector, 3>& arr) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& v : arr) rows.push_back(to_json(v));
    return rows;
  };
  nlohmann::json j;
  j["phi_deg"] = t.phi_deg;
  j["a"] = triple(t.a);
  j["b"] = triple(t.b);
  j["b_prime"] = triple(t.b_prime);
  return j;
}

namespace detail {
inline PoincareVector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number())
    throw InvalidInput("settings json: vectors must be arrays of three numbers");
  const double x = j[0].get<double>();
  const double y = j[1].get<double>();
  const double z = j[2].get<double>();
  const double n2 = x * x + y * y + z * z;
  // external data gets the looser documented tolerance, then is snapped
  if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 1e-6)
    throw InvalidInput("settings json: vector is not unit length");
  return PoincareVector::normalized(x, y, z);
}

inline std::array<PoincareVector, 3> triple_from_json(const nlohmann::json& j,
                                                      const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
    throw InvalidInput(std::string("settings json: missing or malformed '") + key + "'");
  return {vector_from_json(j[key][0]), vector_from_json(j[key][1]),
          vector_from_json(j[key][2])};
}
}  // namespace detail

/// Parses a triad document. Vectors are accepted if unit to within 1e-6 and
/// snapped; geometric constraints are the caller's to check via validate_triad.
inline SettingsTriad triad_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("phi_deg") || !j["phi_deg"].is_number())
    throw InvalidInput("settings json: missing numeric 'phi_deg'");
  const double phi = j["phi_deg"].get<double>();
  if (!(phi >= 0.0 && phi <= 180.0))
    throw InvalidInput("settings json: phi_deg must lie in [0, 180]");
  return SettingsTriad{phi, detail::triple_from_json(j, "a"),
                       detail::triple_from_json(j, "b"),
                       detail::triple_from_json(j, "b_prime")};
}

}  // namespace spinorbit
