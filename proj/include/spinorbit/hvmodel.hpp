#pragma once

// Numerical engine for the hidden-variable side of the inequality: models
// whose hidden states carry definite polarization and orbital directions,
// with outcome distributions constrained only by the two single-side
// marginals those directions dictate. The optimizer searches this whole
// class for the largest attainable E3.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spinorbit/correlations.hpp"
#include "spinorbit/errors.hpp"
#include "spinorbit/geometry.hpp"
#include "spinorbit/settings.hpp"

namespace spinorbit {

/// One hidden state: a definite direction for each side's sphere.
struct HiddenState {
  PoincareVector u;
  PoincareVector v;
};

struct WeightedHiddenState {
  HiddenState state;
  double weight = 1.0;
};

/// Finite mixture of hidden states. Weights must be non-negative and sum to
/// one within 1e-12.
class HiddenModel {
 public:
  explicit HiddenModel(std::vector<WeightedHiddenState> support)
      : support_(std::move(support)) {
    if (support_.empty()) throw InvalidInput("HiddenModel: empty support");
    double sum = 0.0;
    for (const auto& w : support_) {
      if (!(w.weight >= 0.0)) throw InvalidInput("HiddenModel: negative weight");
      sum += w.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw InvalidInput("HiddenModel: weights must sum to 1");
  }

  const std::vector<WeightedHiddenState>& support() const { return support_; }

 private:
  std::vector<WeightedHiddenState> support_;
};

/// Mean of one side's +-1 outcome under a hidden state: u.a or v.b.
inline double marginal_mean(const HiddenState& h, const PoincareVector& setting,
                            Side side) {
  return side == Side::X ? dot(h.u, setting) : dot(h.v, setting);
}

/// Attainable correlations for fixed marginal means m1, m2: the Frechet
/// interval [-1 + |m1 + m2|, 1 - |m1 - m2|], never empty for |m| <= 1.
struct CorrelationRange {
  double c_min = -1.0;
  double c_max = 1.0;
};

inline CorrelationRange correlation_range(double m1, double m2) {
  if (!(std::abs(m1) <= 1.0 + 1e-12) || !(std::abs(m2) <= 1.0 + 1e-12))
    throw InvalidInput("correlation_range: marginals must lie in [-1, 1]");
  m1 = std::clamp(m1, -1.0, 1.0);
  m2 = std::clamp(m2, -1.0, 1.0);
  return {-1.0 + std::abs(m1 + m2), 1.0 - std::abs(m1 - m2)};
}

/// Joint +-1 outcome distribution, ordered (+,+), (+,-), (-,+), (-,-).
struct JointOutcomeDistribution {
  std::array<double, 4> p{};

  double correlation() const { return p[0] - p[1] - p[2] + p[3]; }
  double marginal_x() const { return p[0] + p[1] - p[2] - p[3]; }
  double marginal_y() const { return p[0] - p[1] + p[2] - p[3]; }
};

/// The unique +-1 joint distribution with marginals (u.a, v.b) and the given
/// correlation: p(x,y) = (1 + x m1 + y m2 + x y c)/4. The correlation must
/// lie in the Frechet interval; rounding dust below zero (within 1e-12) is
/// clipped and the distribution renormalized.
inline JointOutcomeDistribution build_joint(const HiddenState& h, const PoincareVector& a,
                                            const PoincareVector& b, double c) {
  const double m1 = dot(h.u, a);
  const double m2 = dot(h.v, b);
  const CorrelationRange r = correlation_range(m1, m2);
  if (c < r.c_min - 1e-12 || c > r.c_max + 1e-12)
    throw InvalidInput("build_joint: correlation outside the attainable interval");

  JointOutcomeDistribution d;
  double sum = 0.0;
  int slot = 0;
  for (const int x : {+1, -1})
    for (const int y : {+1, -1}) {
      double p = 0.25 * (1.0 + x * m1 + y * m2 + x * y * c);
      if (p < 0.0) {
        if (p < -1e-12) throw InvalidInput("build_joint: negative outcome probability");
        p = 0.0;
      }
      d.p[slot++] = p;
      sum += p;
    }
  for (double& p : d.p) p /= sum;
  return d;
}

/// Chooses a correlation inside the attainable interval for hidden state
/// index `state`, analyzer pair `pair` (0..5, even = unprimed).
using CorrelationSelector =
    std::function<double(std::size_t state, int pair, const CorrelationRange&)>;

/// Selector that always pins pair j to its interval endpoint: c_max where
/// signs[j] = +1, c_min where signs[j] = -1.
inline CorrelationSelector extreme_selector(const std::array<int, 6>& signs) {
  for (const int s : signs)
    if (s != 1 && s != -1) throw InvalidInput("extreme_selector: signs must be +-1");
  return [signs](std::size_t, int pair, const CorrelationRange& r) {
    return signs[pair] > 0 ? r.c_max : r.c_min;
  };
}

/// E3 of a hidden-variable model under a per-state correlation choice.
inline double model_e3(const HiddenModel& model, const SettingsTriad& t,
                       const CorrelationSelector& select) {
  std::array<double, 6> c{};
  const auto& support = model.support();
  for (std::size_t s = 0; s < support.size(); ++s) {
    const HiddenState& h = support[s].state;
    for (int pair = 0; pair < 6; ++pair) {
      const int i = pair / 2;
      const PoincareVector& b = pair % 2 == 0 ? t.b[i] : t.b_prime[i];
      const CorrelationRange r = correlation_range(dot(h.u, t.a[i]), dot(h.v, b));
      double ci = select(s, pair, r);
      if (ci < r.c_min - 1e-12 || ci > r.c_max + 1e-12)
        throw InvalidInput("model_e3: selector left the attainable interval");
      c[pair] += support[s].weight * std::clamp(ci, r.c_min, r.c_max);
    }
  }
  return (std::abs(c[0] + c[1]) + std::abs(c[2] + c[3]) + std::abs(c[4] + c[5])) / 3.0;
}

/// Largest E3 a single hidden state (u, v) can reach, with the endpoint
/// choice that reaches it.
///
/// Searching single states with per-group endpoint choices is exhaustive for
/// the whole model class. With selectors held fixed, each accumulated
/// C(a_i, b) is linear in the mixture weights, so E3 -- a sum of absolute
/// values of linear functions -- is convex over the weight simplex and is
/// maximized at a vertex: one hidden state. And within group i, as the two
/// chosen correlations range over their intervals, C_i + C'_i sweeps an
/// interval whose extremes sit at (c_max, c'_max) and (c_min, c'_min), so
/// |C_i + C'_i| needs only those two endpoint patterns; groups don't
/// interact. The 2^6 sign enumeration therefore collapses to three
/// independent two-way choices.
struct SingleStateBest {
  double e3 = 0.0;
  std::array<int, 6> signs{+1, +1, +1, +1, +1, +1};
};

inline SingleStateBest single_state_best_e3(const SettingsTriad& t, const PoincareVector& u,
                                            const PoincareVector& v) {
  SingleStateBest out;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double m1 = dot(u, t.a[i]);
    const CorrelationRange r = correlation_range(m1, dot(v, t.b[i]));
    const CorrelationRange rp = correlation_range(m1, dot(v, t.b_prime[i]));
    const double hi = r.c_max + rp.c_max;
    const double lo = -(r.c_min + rp.c_min);
    const int sign = hi >= lo ? +1 : -1;
    out.signs[2 * i] = sign;
    out.signs[2 * i + 1] = sign;
    sum += hi >= lo ? hi : lo;
  }
  out.e3 = sum / 3.0;
  return out;
}

/// Result of the search: the best model found and the bound it respects.
struct HvOptimum {
  double phi_deg = 0.0;
  double best_e3 = 0.0;
  double l3 = 0.0;
  double gap = 0.0;  // l3 - best_e3, non-negative when the bound holds
  PoincareVector u{0, 0, 1};
  PoincareVector v{0, 0, 1};
  std::array<int, 6> selector_signs{+1, +1, +1, +1, +1, +1};
  std::uint64_t budget = 0;
};

namespace detail {

inline PoincareVector sphere_point(double theta_deg, double az_deg) {
  const double th = deg2rad(theta_deg);
  const double az = deg2rad(az_deg);
  return PoincareVector(std::sin(th) * std::cos(az), std::sin(th) * std::sin(az),
                        std::cos(th));
}

/// Nelder-Mead on 4 angle coordinates, minimizing f, metered by `evals`.
template <typename F>
std::pair<std::array<double, 4>, double> nelder_mead4(F&& f, std::array<double, 4> start,
                                                      double scale_deg,
                                                      std::uint64_t max_evals,
                                                      std::uint64_t& evals) {
  constexpr int n = 4;
  std::array<std::array<double, 4>, n + 1> x;
  std::array<double, n + 1> fx;
  x[0] = start;
  fx[0] = f(x[0]);
  ++evals;
  for (int i = 1; i <= n; ++i) {
    x[i] = start;
    x[i][i - 1] += scale_deg;
    fx[i] = f(x[i]);
    ++evals;
  }

  std::array<int, n + 1> idx{0, 1, 2, 3, 4};
  while (evals < max_evals) {
    std::sort(idx.begin(), idx.end(), [&](int ai, int bi) { return fx[ai] < fx[bi]; });
    const int best = idx[0], second_worst = idx[n - 1], worst = idx[n];
    if (fx[worst] - fx[best] < 1e-15) break;

    std::array<double, 4> cen{};
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < 4; ++k) cen[k] += x[idx[i]][k] / n;

    const auto blend = [&](double coef) {
      std::array<double, 4> p;
      for (int k = 0; k < 4; ++k) p[k] = cen[k] + coef * (x[worst][k] - cen[k]);
      return p;
    };

    const auto xr = blend(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fx[idx[0]]) {
      if (evals >= max_evals) {
        x[worst] = xr;
        fx[worst] = fr;
        break;
      }
      const auto xe = blend(-2.0);
      const double fe = f(xe);
      ++evals;
      x[worst] = fe < fr ? xe : xr;
      fx[worst] = fe < fr ? fe : fr;
    } else if (fr < fx[second_worst]) {
      x[worst] = xr;
      fx[worst] = fr;
    } else {
      const auto xc = blend(fr < fx[worst] ? -0.5 : 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fx[worst])) {
        x[worst] = xc;
        fx[worst] = fc;
      } else {
        for (int i = 1; i <= n && evals < max_evals; ++i) {
          for (int k = 0; k < 4; ++k)
            x[idx[i]][k] = x[idx[0]][k] + 0.5 * (x[idx[i]][k] - x[idx[0]][k]);
          fx[idx[i]] = f(x[idx[i]]);
          ++evals;
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (fx[i] < fx[best]) best = i;
  return {x[best], fx[best]};
}

}  // namespace detail

/// Best E3 over all hidden-variable models of this class for one triad.
/// Deterministic: a latitude/longitude scan over (u, v) pairs whose
/// resolution adapts to the evaluation budget (finest 5 degrees), followed by
/// Nelder-Mead refinement of the four sphere angles. Ties on the scan keep
/// the earliest grid point, so reruns bit-match.
inline HvOptimum maximize_e3(const SettingsTriad& t, std::uint64_t budget = 1000000) {
  if (budget < 1000) throw InvalidInput("maximize_e3: budget must be at least 1000");

  // latitude/longitude lattice, poles once; steps divide 180 so both poles
  // and the equator are always present
  static constexpr std::array<double, 13> kSteps{5,  6,  9,  10, 12, 15, 18,
                                                 20, 30, 36, 45, 60, 90};
  double grid_step = kSteps.back();
  for (const double step : kSteps) {
    const auto ring_count = static_cast<std::uint64_t>(std::llround(360.0 / step));
    const auto n_rings = static_cast<std::uint64_t>(std::llround(180.0 / step)) - 1;
    const std::uint64_t points = 2 + n_rings * ring_count;
    if (points * points <= (budget * 7) / 10) {
      grid_step = step;
      break;
    }
  }
  std::vector<std::array<double, 2>> lattice;
  {
    const auto ring_count = static_cast<std::uint64_t>(std::llround(360.0 / grid_step));
    const auto n_rings = static_cast<std::uint64_t>(std::llround(180.0 / grid_step)) - 1;
    lattice.reserve(2 + n_rings * ring_count);
    lattice.push_back({0.0, 0.0});
    for (std::uint64_t r = 1; r <= n_rings; ++r)
      for (std::uint64_t c = 0; c < ring_count; ++c)
        lattice.push_back(
            {static_cast<double>(r) * grid_step, static_cast<double>(c) * grid_step});
    lattice.push_back({180.0, 0.0});
  }

  std::uint64_t evals = 0;
  double best_e3 = -1.0;
  std::array<double, 4> best_angles{};
  for (const auto& ua : lattice) {
    const PoincareVector u = detail::sphere_point(ua[0], ua[1]);
    for (const auto& va : lattice) {
      const PoincareVector v = detail::sphere_point(va[0], va[1]);
      const double e3 = single_state_best_e3(t, u, v).e3;
      ++evals;
      if (e3 > best_e3) {
        best_e3 = e3;
        best_angles = {ua[0], ua[1], va[0], va[1]};
      }
    }
  }

  const auto objective = [&t](const std::array<double, 4>& ang) {
    return -single_state_best_e3(t, detail::sphere_point(ang[0], ang[1]),
                                 detail::sphere_point(ang[2], ang[3]))
                .e3;
  };
  const std::uint64_t polish_evals = std::min<std::uint64_t>(budget - evals, 4000);
  std::uint64_t polish_used = 0;
  const auto [angles, neg_e3] = detail::nelder_mead4(objective, best_angles,
                                                     0.5 * grid_step, polish_evals,
                                                     polish_used);
  if (-neg_e3 > best_e3) {
    best_e3 = -neg_e3;
    best_angles = angles;
  }

  HvOptimum out;
  out.phi_deg = t.phi_deg;
  out.u = detail::sphere_point(best_angles[0], best_angles[1]);
  out.v = detail::sphere_point(best_angles[2], best_angles[3]);
  const SingleStateBest final_best = single_state_best_e3(t, out.u, out.v);
  out.best_e3 = final_best.e3;
  out.selector_signs = final_best.signs;
  out.l3 = leggett_bound(t.phi_deg);
  out.gap = out.l3 - out.best_e3;
  out.budget = budget;
  return out;
}

inline nlohmann::json hv_optimum_to_json(const HvOptimum& o) {
  nlohmann::json j;
  j["phi_deg"] = o.phi_deg;
  j["best_e3"] = o.best_e3;
  j["l3"] = o.l3;
  j["gap"] = o.gap;
  j["u"] = to_json(o.u);
  j["v"] = to_json(o.v);
  j["selector_signs"] = o.selector_signs;
  j["budget"] = o.budget;
  return j;
}

}  // namespace spinorbit
