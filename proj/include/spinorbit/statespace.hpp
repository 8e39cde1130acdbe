#pragma once

// Single-photon spin-orbit state space: polarization (SAM) and the |m| = 1
// orbital angular momentum (OAM) subspace, each modeled as a qubit with its
// own Poincare-type sphere, plus the q-plate map that entangles them.

#include <array>
#include <cmath>
#include <complex>

#include "spinorbit/errors.hpp"
#include "spinorbit/geometry.hpp"

namespace spinorbit {

using complexd = std::complex<double>;

/// Which Bloch sphere a qubit state lives on.
///
/// SAM poles: north |L>, south |R>. Equator phase reference: +x is |H>,
/// so +y is the antidiagonal-free convention (|H>+|V>)/sqrt(2).
/// OAM poles: north |+1>, south |-1>.
enum class Sphere { SAM, OAM };

/// Pure qubit state with amplitudes on the sphere's (north, south) basis.
/// The squared norm must be within 1e-9 of 1; amplitudes are rescaled to an
/// exactly normalized pair on construction.
class QubitState {
 public:
  QubitState(complexd c_plus, complexd c_minus, Sphere label)
      : c_plus_(c_plus), c_minus_(c_minus), label_(label) {
    const double n2 = std::norm(c_plus_) + std::norm(c_minus_);
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 1e-9)
      throw InvalidInput("QubitState: amplitudes are not normalized");
    const double inv = 1.0 / std::sqrt(n2);
    c_plus_ *= inv;
    c_minus_ *= inv;
  }

  complexd c_plus() const { return c_plus_; }
  complexd c_minus() const { return c_minus_; }
  Sphere label() const { return label_; }

  /// Same ray with the global phase fixed: the first amplitude of magnitude
  /// above 1e-12 is made real and non-negative.
  QubitState canonicalized() const {
    const complexd ref = std::abs(c_plus_) > 1e-12 ? c_plus_ : c_minus_;
    const complexd phase = std::abs(ref) / ref;
    return QubitState(c_plus_ * phase, c_minus_ * phase, label_);
  }

 private:
  complexd c_plus_, c_minus_;
  Sphere label_;
};

/// State on the Bloch vector v of the given sphere, canonical phase.
/// Convention: c_plus = cos(theta/2), c_minus = e^{-i az} sin(theta/2) with
/// theta the polar angle from +z and az = atan2(y, x).
inline QubitState vector_to_state(const PoincareVector& v, Sphere label) {
  const double theta = std::acos(std::clamp(v.z(), -1.0, 1.0));
  const double az = std::atan2(v.y(), v.x());
  const complexd c_plus{std::cos(0.5 * theta), 0.0};
  const complexd c_minus = std::polar(std::sin(0.5 * theta), -az);
  return QubitState(c_plus, c_minus, label).canonicalized();
}

/// Bloch vector of a pure qubit state:
/// x = 2 Re(c+ c-*), y = 2 Im(c+ c-*), z = |c+|^2 - |c-|^2.
inline PoincareVector state_to_vector(const QubitState& s) {
  const complexd t = s.c_plus() * std::conj(s.c_minus());
  return PoincareVector(2.0 * t.real(), 2.0 * t.imag(),
                        std::norm(s.c_plus()) - std::norm(s.c_minus()));
}

/// |<s1|s2>|^2. The states must live on the same sphere.
inline double overlap_probability(const QubitState& s1, const QubitState& s2) {
  if (s1.label() != s2.label())
    throw InvalidInput("overlap_probability: states live on different spheres");
  const complexd ip =
      std::conj(s1.c_plus()) * s2.c_plus() + std::conj(s1.c_minus()) * s2.c_minus();
  return std::norm(ip);
}

/// Pure two-qubit spin-orbit state. Amplitude order is
/// (|L,+1>, |L,-1>, |R,+1>, |R,-1>), i.e. index = 2*sam + oam with
/// sam 0 for L / 1 for R and oam 0 for +1 / 1 for -1.
class SpinOrbitState {
 public:
  explicit SpinOrbitState(std::array<complexd, 4> amplitudes) : amp_(amplitudes) {
    double n2 = 0.0;
    for (const complexd& a : amp_) n2 += std::norm(a);
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 1e-9)
      throw InvalidInput("SpinOrbitState: amplitudes are not normalized");
    const double inv = 1.0 / std::sqrt(n2);
    for (complexd& a : amp_) a *= inv;
  }

  const std::array<complexd, 4>& amplitudes() const { return amp_; }
  complexd amplitude(int sam, int oam) const { return amp_[2 * sam + oam]; }

 private:
  std::array<complexd, 4> amp_;
};

/// q-plate of topological charge q. Only q = 1/2 keeps the output inside the
/// |m| = 1 orbital subspace modeled here.
struct QPlate {
  double q = 0.5;
};

/// Full-conversion q-plate action on a polarization state carrying no orbital
/// angular momentum: alpha|L> + beta|R>  ->  alpha|R,+1> + beta|L,-1>.
inline SpinOrbitState apply_qplate(const QubitState& pol, const QPlate& plate = {}) {
  if (pol.label() != Sphere::SAM)
    throw InvalidInput("apply_qplate: input must be a polarization state");
  if (std::abs(plate.q - 0.5) > 1e-12)
    throw UnsupportedCharge("apply_qplate: only charge q = 1/2 is supported");
  return SpinOrbitState({complexd{0.0, 0.0}, pol.c_minus(), pol.c_plus(), complexd{0.0, 0.0}});
}

/// The entangled state (|L,-1> + |R,+1>)/sqrt(2), as produced by the q-plate
/// from horizontal polarization.
inline SpinOrbitState prepare_phi_plus() {
  const complexd r{std::sqrt(0.5), 0.0};
  return SpinOrbitState({complexd{0.0, 0.0}, r, r, complexd{0.0, 0.0}});
}

/// Reduced polarization density matrix, rows/cols ordered (L, R).
inline std::array<std::array<complexd, 2>, 2> reduced_sam_density(const SpinOrbitState& s) {
  std::array<std::array<complexd, 2>, 2> rho{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int o = 0; o < 2; ++o)
        rho[i][j] += s.amplitude(i, o) * std::conj(s.amplitude(j, o));
  return rho;
}

/// Bloch vector of the OAM analyzer state for a setting b given in the shared
/// settings frame.
///
/// With the entangled state (|L,-1> + |R,+1>)/sqrt(2), raw Bloch coordinates
/// give the joint correlation a_x b_x + a_y b_y - a_z b_z. The library's
/// settings frame instead defines correlations in singlet form, C = -a.b, so
/// the OAM analyzer inverts the two equatorial axes. Physically this is
/// absorbed into how the projection holograms are indexed; in code it lives
/// here and nowhere else.
inline PoincareVector oam_bloch_vector(const PoincareVector& b) {
  return PoincareVector(-b.x(), -b.y(), b.z());
}

/// OAM analyzer state for a setting b in the settings frame.
inline QubitState oam_measurement_state(const PoincareVector& b) {
  return vector_to_state(oam_bloch_vector(b), Sphere::OAM);
}

// --- Jones calculus on the (H, V) basis ----------------------------------
//
// Circular basis: |L> = (|H> - i|V>)/sqrt(2), |R> = (|H> + i|V>)/sqrt(2).
// This places |H> at +x and (|H>+|V>)/sqrt(2) at +y of the SAM sphere.

using Jones = std::array<std::array<complexd, 2>, 2>;

/// (c_H, c_V) components of a polarization state.
inline std::array<complexd, 2> to_hv(const QubitState& pol) {
  if (pol.label() != Sphere::SAM)
    throw InvalidInput("to_hv: input must be a polarization state");
  const double r = std::sqrt(0.5);
  return {r * (pol.c_plus() + pol.c_minus()),
          complexd{0.0, 1.0} * r * (pol.c_minus() - pol.c_plus())};
}

/// Half-wave plate with fast axis at theta_deg from horizontal.
inline Jones jones_hwp(double theta_deg) {
  const double c = std::cos(2.0 * deg2rad(theta_deg));
  const double s = std::sin(2.0 * deg2rad(theta_deg));
  return {{{complexd{c, 0.0}, complexd{s, 0.0}},
           {complexd{s, 0.0}, complexd{-c, 0.0}}}};
}

/// Quarter-wave plate with fast axis at theta_deg from horizontal;
/// R(theta) diag(1, i) R(-theta).
inline Jones jones_qwp(double theta_deg) {
  const double c = std::cos(deg2rad(theta_deg));
  const double s = std::sin(deg2rad(theta_deg));
  const complexd i{0.0, 1.0};
  return {{{c * c + i * s * s, c * s * (1.0 - i)},
           {c * s * (1.0 - i), s * s + i * c * c}}};
}

inline std::array<complexd, 2> apply_jones(const Jones& m, const std::array<complexd, 2>& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

/// HWP and QWP fast-axis angles, in degrees from horizontal, wrapped into
/// [0, 90) and [0, 180).
struct WavePlateAngles {
  double hwp_deg = 0.0;
  double qwp_deg = 0.0;
};

/// Probability that a photon in `pol` passes a HWP -> QWP -> horizontal
/// polarizer chain with the given plate angles.
inline double projection_transmission(const WavePlateAngles& angles, const QubitState& pol) {
  const auto out = apply_jones(jones_qwp(angles.qwp_deg),
                               apply_jones(jones_hwp(angles.hwp_deg), to_hv(pol)));
  return std::norm(out[0]);
}

/// Plate angles that project onto the polarization state with Bloch vector a:
/// the chain HWP(h) -> QWP(q) -> H-polarizer transmits that state fully.
///
/// Geometry behind the closed form: working backwards from the polarizer, the
/// chain analyzes the state w = HWP(h) QWP(q)^dag |H>. Without the HWP,
/// w0(q) = (cos^2 2q, cos 2q sin 2q, -sin 2q) in Bloch coordinates; the HWP
/// then flips z and maps equatorial azimuth psi0 to 4h - psi0. Solving w = a
/// gives 2q = asin(a_z) or its supplement, and 4h = az(a) + az(w0_xy), where
/// az(w0_xy) is 2q on the cos 2q >= 0 branch and 2q + pi on the other. Each
/// candidate is verified by direct transmission before being returned.
inline WavePlateAngles waveplate_projection_angles(const PoincareVector& a) {
  const QubitState target = vector_to_state(a, Sphere::SAM);
  const auto wrap = [](double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    return r;
  };

  std::array<WavePlateAngles, 2> candidates;
  int n_candidates = 0;
  if (std::abs(a.z()) >= 1.0 - 1e-14) {
    // poles: circular light; the HWP is redundant, fix it at 0
    candidates[n_candidates++] = {0.0, a.z() > 0.0 ? 45.0 : 135.0};
  } else {
    const double psi = std::atan2(a.y(), a.x());
    const double half = std::asin(std::clamp(a.z(), -1.0, 1.0));
    // branch with cos 2q >= 0, equatorial azimuth of w(q) is 2q
    const double q1 = 0.5 * half;
    const double h1 = 0.25 * (psi + 2.0 * q1);
    // branch with cos 2q <= 0, azimuth shifts by pi
    const double q2 = 0.5 * (kPi - half);
    const double h2 = 0.25 * (psi + 2.0 * q2 + kPi);
    candidates[n_candidates++] = {wrap(rad2deg(h1), 90.0), wrap(rad2deg(q1), 180.0)};
    candidates[n_candidates++] = {wrap(rad2deg(h2), 90.0), wrap(rad2deg(q2), 180.0)};
  }

  const WavePlateAngles* best = nullptr;
  for (int i = 0; i < n_candidates; ++i) {
    if (projection_transmission(candidates[i], target) < 1.0 - 1e-10) continue;
    if (!best || candidates[i].hwp_deg < best->hwp_deg - 1e-12) best = &candidates[i];
  }
  if (!best)
    throw std::logic_error("waveplate_projection_angles: no candidate reached unit transmission");
  return *best;
}

}  // namespace spinorbit
