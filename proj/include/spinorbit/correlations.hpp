#pragma once

// Exact quantum predictions for the two-analyzer experiment and the
// inequality they are tested against: joint outcome probabilities, the
// correlation E3 statistic, the hidden-variable bound L3, and the window of
// separation angles where quantum theory exceeds that bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinorbit/detail/io.hpp"
#include "spinorbit/errors.hpp"
#include "spinorbit/geometry.hpp"
#include "spinorbit/settings.hpp"
#include "spinorbit/statespace.hpp"

namespace spinorbit {

/// Which analyzer a single-side quantity refers to: X is the polarization
/// observable along a, Y is the orbital observable along b.
enum class Side { X, Y };

/// A correlation together with its one-sigma statistical uncertainty.
/// Exact theoretical values carry sigma = 0.
struct CorrelationValue {
  double value = 0.0;
  double sigma = 0.0;
  bool sigma_floored = false;
};

namespace detail {
inline void require_phi_range(double phi_deg, const char* where) {
  if (!(phi_deg >= 0.0 && phi_deg <= 180.0))
    throw InvalidInput(std::string(where) + ": phi must lie in [0, 180] degrees");
}
}  // namespace detail

/// Joint probabilities of the four outcome combinations, ordered
/// (+,+), (+,-), (-,+), (-,-), for analyzers along a (polarization) and
/// b (orbital, in the settings frame).
inline std::array<double, 4> joint_outcome_probabilities(const SpinOrbitState& state,
                                                         const PoincareVector& a,
                                                         const PoincareVector& b) {
  const QubitState sam_plus = vector_to_state(a, Sphere::SAM);
  const QubitState sam_minus = vector_to_state(-a, Sphere::SAM);
  const QubitState oam_plus = oam_measurement_state(b);
  const QubitState oam_minus = oam_measurement_state(-b);

  const auto prob = [&state](const QubitState& s, const QubitState& o) {
    const std::array<complexd, 2> sc{s.c_plus(), s.c_minus()};
    const std::array<complexd, 2> oc{o.c_plus(), o.c_minus()};
    complexd amp{0.0, 0.0};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        amp += std::conj(sc[i]) * std::conj(oc[j]) * state.amplitude(i, j);
    return std::norm(amp);
  };

  return {prob(sam_plus, oam_plus), prob(sam_plus, oam_minus),
          prob(sam_minus, oam_plus), prob(sam_minus, oam_minus)};
}

inline double quantum_correlation_value(const SpinOrbitState& state,
                                        const PoincareVector& a,
                                        const PoincareVector& b) {
  const auto p = joint_outcome_probabilities(state, a, b);
  return p[0] - p[1] - p[2] + p[3];
}

inline CorrelationValue quantum_correlation(const SpinOrbitState& state,
                                            const PoincareVector& a,
                                            const PoincareVector& b) {
  return {quantum_correlation_value(state, a, b), 0.0, false};
}

/// Expectation of a single analyzer's +-1 outcome.
inline double quantum_marginal(const SpinOrbitState& state, const PoincareVector& setting,
                               Side side) {
  double p_plus = 0.0;
  if (side == Side::X) {
    const QubitState s = vector_to_state(setting, Sphere::SAM);
    for (int o = 0; o < 2; ++o)
      p_plus += std::norm(std::conj(s.c_plus()) * state.amplitude(0, o) +
                          std::conj(s.c_minus()) * state.amplitude(1, o));
  } else {
    const QubitState o = oam_measurement_state(setting);
    for (int s = 0; s < 2; ++s)
      p_plus += std::norm(std::conj(o.c_plus()) * state.amplitude(s, 0) +
                          std::conj(o.c_minus()) * state.amplitude(s, 1));
  }
  return 2.0 * p_plus - 1.0;
}

/// Quantum value of the three-triad statistic
/// E3 = (1/3) sum_i |C(a_i, b_i) + C(a_i, b'_i)| for the canonical triad,
/// evaluated through the analyzer projectors.
inline double e3_quantum(double phi_deg) {
  detail::require_phi_range(phi_deg, "e3_quantum");
  const SettingsTriad t = build_triad(phi_deg);
  const SpinOrbitState psi = prepare_phi_plus();
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    sum += std::abs(quantum_correlation_value(psi, t.a[i], t.b[i]) +
                    quantum_correlation_value(psi, t.a[i], t.b_prime[i]));
  return sum / 3.0;
}

/// Hidden-variable bound L3(phi) = 2 - (2/3)|sin(phi/2)|.
inline double leggett_bound(double phi_deg) {
  detail::require_phi_range(phi_deg, "leggett_bound");
  return 2.0 - (2.0 / 3.0) * std::abs(std::sin(0.5 * deg2rad(phi_deg)));
}

/// Angular window where a model curve exceeds the bound, with the interior
/// maximum of the gap. Endpoints are resolved by bisection to 1e-9 degrees;
/// the peak by golden-section search, which assumes the gap is unimodal on
/// the window (true for the smooth curves this library produces).
struct ViolationWindow {
  double phi_low_deg = 0.0;
  double phi_high_deg = 0.0;
  double phi_peak_deg = 0.0;
  double peak_gap = 0.0;
};

template <typename F>
std::optional<ViolationWindow> violation_window_of(F&& e3_of_phi) {
  const auto gap = [&](double phi) { return e3_of_phi(phi) - leggett_bound(phi); };

  constexpr double kScanStep = 0.25;
  constexpr int kScanCount = 721;  // 0 to 180 inclusive
  int first = -1, last = -1;
  for (int k = 0; k < kScanCount; ++k) {
    if (gap(k * kScanStep) > 1e-15) {
      if (first < 0) first = k;
      last = k;
    }
  }
  if (first < 0) return std::nullopt;

  const auto bisect = [&gap](double neg, double pos) {
    // invariant: gap(neg) <= 0 < gap(pos); returns the crossing
    for (int it = 0; it < 80 && std::abs(pos - neg) > 1e-9; ++it) {
      const double mid = 0.5 * (neg + pos);
      (gap(mid) > 0.0 ? pos : neg) = mid;
    }
    return 0.5 * (neg + pos);
  };

  ViolationWindow w;
  w.phi_low_deg = first == 0 ? 0.0 : bisect((first - 1) * kScanStep, first * kScanStep);
  w.phi_high_deg =
      last == kScanCount - 1 ? 180.0 : bisect((last + 1) * kScanStep, last * kScanStep);

  // golden-section maximization of the gap over the window
  const double inv_phi = 0.6180339887498949;
  double lo = w.phi_low_deg, hi = w.phi_high_deg;
  double m1 = hi - inv_phi * (hi - lo), m2 = lo + inv_phi * (hi - lo);
  double g1 = gap(m1), g2 = gap(m2);
  while (hi - lo > 1e-10) {
    if (g1 < g2) {
      lo = m1;
      m1 = m2;
      g1 = g2;
      m2 = lo + inv_phi * (hi - lo);
      g2 = gap(m2);
    } else {
      hi = m2;
      m2 = m1;
      g2 = g1;
      m1 = hi - inv_phi * (hi - lo);
      g1 = gap(m1);
    }
  }
  double peak = 0.5 * (lo + hi);

  // comparisons go blind to rounding noise within ~1e-6 of the peak, so
  // sharpen by bisecting on the sign of the symmetric difference instead
  {
    const double h = 1e-4;
    const auto rising = [&gap, h](double phi) { return gap(phi + h) > gap(phi - h); };
    double a = std::max(w.phi_low_deg + h, peak - 0.5);
    double b = std::min(w.phi_high_deg - h, peak + 0.5);
    if (a < b && rising(a) && !rising(b)) {
      while (b - a > 1e-9) {
        const double mid = 0.5 * (a + b);
        (rising(mid) ? a : b) = mid;
      }
      peak = 0.5 * (a + b);
    }
  }
  w.phi_peak_deg = peak;
  w.peak_gap = gap(peak);
  return w;
}

/// Window for the ideal quantum curve 2|cos(phi/2)|.
inline ViolationWindow ideal_violation_window() {
  return *violation_window_of([](double phi) { return e3_quantum(phi); });
}

/// E3 with its propagated uncertainty. `sum_near_zero` flags any group whose
/// |C_i + C'_i| is within 3 sigma of zero, where the sign freeze behind the
/// error propagation loses its footing.
struct E3Estimate {
  double e3 = 0.0;
  double sigma_e3 = 0.0;
  bool sum_near_zero = false;
};

/// Combines the six measured correlations, ordered
/// (C(a1,b1), C(a1,b'1), C(a2,b2), C(a2,b'2), C(a3,b3), C(a3,b'3)).
/// Uncertainty treats each |.| sign as frozen at the measured value, so
/// sigma_E3 = (1/3) sqrt(sum_i sigma_i^2 + sigma'_i^2).
inline E3Estimate e3_from_correlations(const std::array<CorrelationValue, 6>& c) {
  for (const auto& ci : c)
    if (!(std::abs(ci.value) <= 1.0 + 1e-9) || !(ci.sigma >= 0.0))
      throw InvalidInput("e3_from_correlations: correlations must lie in [-1, 1]");
  E3Estimate out;
  double var = 0.0;
  for (int i = 0; i < 3; ++i) {
    const CorrelationValue& u = c[2 * i];
    const CorrelationValue& v = c[2 * i + 1];
    const double pair_var = u.sigma * u.sigma + v.sigma * v.sigma;
    out.e3 += std::abs(u.value + v.value);
    var += pair_var;
    if (pair_var > 0.0 && std::abs(u.value + v.value) < 3.0 * std::sqrt(pair_var))
      out.sum_near_zero = true;
  }
  out.e3 /= 3.0;
  out.sigma_e3 = std::sqrt(var) / 3.0;
  return out;
}

/// One row of the theory-curve table.
struct E3Point {
  double phi_deg = 0.0;
  double e3 = 0.0;
  double l3 = 0.0;
  double sigma_e3 = 0.0;
};

inline constexpr const char* kCurvesCsvHeader = "phi_deg,e3,l3,sigma_e3";

/// Serializes curve rows, optionally with the violation window appended as a
/// comment line so the body stays parseable.
inline std::string e3_points_to_csv(const std::vector<E3Point>& points,
                                    const std::optional<ViolationWindow>& window = {}) {
  std::string out = std::string(kCurvesCsvHeader) + "\n";
  for (const E3Point& p : points) {
    out += detail::format_double(p.phi_deg) + ',' + detail::format_double(p.e3) + ',' +
           detail::format_double(p.l3) + ',' + detail::format_double(p.sigma_e3) + '\n';
  }
  if (window) {
    nlohmann::json j;
    j["phi_low_deg"] = window->phi_low_deg;
    j["phi_high_deg"] = window->phi_high_deg;
    j["phi_peak_deg"] = window->phi_peak_deg;
    j["peak_gap"] = window->peak_gap;
    out += "# window " + j.dump() + "\n";
  }
  return out;
}

/// Parses curve rows; '#' lines and the header are skipped.
inline std::vector<E3Point> parse_e3_points_csv(std::istream& in) {
  std::vector<E3Point> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    if (line == kCurvesCsvHeader) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 comma-separated fields");
    E3Point p;
    if (!detail::parse_double(fields[0], p.phi_deg) ||
        !detail::parse_double(fields[1], p.e3) ||
        !detail::parse_double(fields[2], p.l3) ||
        !detail::parse_double(fields[3], p.sigma_e3))
      throw ParseError(line_no, "fields must be decimal numbers");
    points.push_back(p);
  }
  return points;
}

}  // namespace spinorbit
