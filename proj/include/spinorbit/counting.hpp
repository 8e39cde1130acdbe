#pragma once

// Monte Carlo photon counting: Poissonian coincidence tables for each
// analyzer pair, the correlation estimator with its propagated uncertainty,
// full sweep simulation, and the CSV/JSON formats the tools exchange.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spinorbit/correlations.hpp"
#include "spinorbit/detail/io.hpp"
#include "spinorbit/errors.hpp"
#include "spinorbit/settings.hpp"
#include "spinorbit/statespace.hpp"

namespace spinorbit {

/// Coincidence counts for one analyzer pair, by outcome combination.
/// Field order matches the serialized combo order (pp, mm, pm, mp).
struct CountTable {
  std::int64_t n_pp = 0;
  std::int64_t n_mm = 0;
  std::int64_t n_pm = 0;
  std::int64_t n_mp = 0;

  std::int64_t total() const { return n_pp + n_mm + n_pm + n_mp; }
};

inline constexpr std::uint64_t kDefaultSeed = 12345;

struct ExperimentConfig {
  double mean_counts_per_setting = 1e4;
  double visibility = 0.96;
  std::uint64_t rng_seed = kDefaultSeed;
};

/// Serialized name of the random machinery; recorded in run metadata so a
/// sweep is reproducible from the numbers alone.
inline constexpr const char* kGeneratorName = "mt19937_64+knuth-ptrs";

/// Probability of the outcome pair (x, y), each +-1, for a zero-marginal
/// correlation c: p = (1 + x y c)/4.
inline double joint_probability(double c, int x, int y) {
  if (x * x != 1 || y * y != 1)
    throw InvalidInput("joint_probability: outcomes must be +1 or -1");
  if (!(std::abs(c) <= 1.0 + 1e-12))
    throw InvalidInput("joint_probability: correlation must lie in [-1, 1]");
  c = std::clamp(c, -1.0, 1.0);
  return 0.25 * (1.0 + x * y * c);
}

/// Deterministic Poisson sampler over mt19937_64. Knuth's product method
/// below mean 10, Hormann's PTRS transformed rejection at and above it; both
/// are exact, so the split is a speed choice, not an approximation. Uniforms
/// take the generator's top 53 bits, which pins the draw sequence on every
/// platform that agrees on mt19937_64.
class PoissonSampler {
 public:
  explicit PoissonSampler(std::uint64_t seed) : rng_(seed) {}

  std::int64_t operator()(double mean) {
    if (!std::isfinite(mean) || mean < 0.0)
      throw InvalidInput("PoissonSampler: mean must be finite and non-negative");
    if (mean == 0.0) return 0;
    return mean < 10.0 ? sample_knuth(mean) : sample_ptrs(mean);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::int64_t sample_knuth(double mean) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  std::int64_t sample_ptrs(double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
          k * loglam - mean - std::lgamma(k + 1.0))
        return static_cast<std::int64_t>(k);
    }
  }

  std::mt19937_64 rng_;
};

/// Collision-free substream seed for one (grid row, analyzer pair) cell, so
/// sweep cells are reproducible independently of evaluation order.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t phi_index,
                                   std::uint64_t pair_index) {
  const auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ phi_index) ^ pair_index);
}

/// Simulates one analyzer pair with true correlation c. Each entry is an
/// independent Poisson draw with mean (counts per setting) * 4 * p(x, y)
/// at the visibility-degraded correlation; draws happen in field order
/// (pp, mm, pm, mp).
inline CountTable simulate_counts(double c, const ExperimentConfig& cfg) {
  if (!(std::abs(c) <= 1.0 + 1e-12))
    throw InvalidInput("simulate_counts: correlation must lie in [-1, 1]");
  if (!std::isfinite(cfg.mean_counts_per_setting) || cfg.mean_counts_per_setting <= 0.0)
    throw InvalidInput("simulate_counts: mean counts must be positive");
  if (!(cfg.visibility >= 0.0 && cfg.visibility <= 1.0))
    throw InvalidInput("simulate_counts: visibility must lie in [0, 1]");
  const double ceff = cfg.visibility * std::clamp(c, -1.0, 1.0);
  PoissonSampler draw(cfg.rng_seed);
  const double scale = 4.0 * cfg.mean_counts_per_setting;
  CountTable t;
  t.n_pp = draw(scale * joint_probability(ceff, +1, +1));
  t.n_mm = draw(scale * joint_probability(ceff, -1, -1));
  t.n_pm = draw(scale * joint_probability(ceff, +1, -1));
  t.n_mp = draw(scale * joint_probability(ceff, -1, +1));
  return t;
}

/// Correlation estimate (S - D)/N with S = n_pp + n_mm, D = n_pm + n_mp,
/// N = S + D, and first-order Poisson error sigma = 2 sqrt(S D) / N^1.5
/// (equal to sqrt((1 - C^2)/N)). When S or D is zero that propagated sigma
/// collapses to zero; zero entries are then floored to one count and the
/// result flagged, so downstream significance never divides by zero.
inline CorrelationValue estimate_correlation(const CountTable& t) {
  for (const std::int64_t n : {t.n_pp, t.n_mm, t.n_pm, t.n_mp})
    if (n < 0) throw InvalidInput("estimate_correlation: counts must be non-negative");
  const std::int64_t s = t.n_pp + t.n_mm;
  const std::int64_t d = t.n_pm + t.n_mp;
  const std::int64_t n = s + d;
  if (n == 0) throw NoData("estimate_correlation: count table is empty");

  CorrelationValue out;
  out.value = static_cast<double>(s - d) / static_cast<double>(n);
  if (s > 0 && d > 0) {
    out.sigma = 2.0 * std::sqrt(static_cast<double>(s) * static_cast<double>(d)) /
                std::pow(static_cast<double>(n), 1.5);
  } else {
    const double sf = static_cast<double>(std::max<std::int64_t>(t.n_pp, 1) +
                                          std::max<std::int64_t>(t.n_mm, 1));
    const double df = static_cast<double>(std::max<std::int64_t>(t.n_pm, 1) +
                                          std::max<std::int64_t>(t.n_mp, 1));
    out.sigma = 2.0 * std::sqrt(sf * df) / std::pow(sf + df, 1.5);
    out.sigma_floored = true;
  }
  return out;
}

/// One sweep row: the measured statistic against the bound at its phi.
struct SignificanceReport {
  double phi_deg = 0.0;
  double e3_est = 0.0;
  double sigma_e3 = 0.0;
  double l3 = 0.0;
  double n_sigma = 0.0;
  bool sum_near_zero = false;  // diagnostic only, not serialized
};

/// Pair labels in serialization order: plane index with a prime marker.
inline constexpr std::array<const char*, 6> kPairLabels{"1", "1p", "2", "2p", "3", "3p"};

/// Raw counts for one (phi, analyzer pair) cell. `pair` indexes kPairLabels:
/// even entries are (a_i, b_i), odd entries (a_i, b'_i).
struct CountRecord {
  double phi_deg = 0.0;
  int pair = 0;
  CountTable table;
};

struct SweepOutput {
  std::vector<SignificanceReport> reports;
  std::vector<CountRecord> counts;
};

/// Simulates every triad at the configured intensity and visibility and
/// scores it against the bound. Rows come out in ascending phi order, and
/// cell (row, pair) draws from derive_stream(seed, row, pair), so any cell
/// can be reproduced in isolation.
inline SweepOutput run_sweep_detailed(const std::vector<SettingsTriad>& triads,
                                      const ExperimentConfig& cfg) {
  if (triads.empty()) throw InvalidInput("run_sweep: no triads given");
  std::vector<std::size_t> order(triads.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
    return triads[lhs].phi_deg < triads[rhs].phi_deg;
  });

  const SpinOrbitState psi = prepare_phi_plus();
  SweepOutput out;
  for (std::size_t row = 0; row < order.size(); ++row) {
    const SettingsTriad& t = triads[order[row]];
    std::array<CorrelationValue, 6> est;
    for (int pair = 0; pair < 6; ++pair) {
      const int i = pair / 2;
      const PoincareVector& b = pair % 2 == 0 ? t.b[i] : t.b_prime[i];
      const double c_true = quantum_correlation_value(psi, t.a[i], b);
      ExperimentConfig cell = cfg;
      cell.rng_seed = derive_stream(cfg.rng_seed, row, static_cast<std::uint64_t>(pair));
      const CountTable table = simulate_counts(c_true, cell);
      est[pair] = estimate_correlation(table);
      out.counts.push_back({t.phi_deg, pair, table});
    }
    const E3Estimate e = e3_from_correlations(est);
    SignificanceReport r;
    r.phi_deg = t.phi_deg;
    r.e3_est = e.e3;
    r.sigma_e3 = e.sigma_e3;
    r.l3 = leggett_bound(t.phi_deg);
    r.n_sigma = (e.e3 - r.l3) / e.sigma_e3;
    r.sum_near_zero = e.sum_near_zero;
    out.reports.push_back(r);
  }
  return out;
}

inline std::vector<SignificanceReport> run_sweep(const std::vector<SettingsTriad>& triads,
                                                 const ExperimentConfig& cfg) {
  return run_sweep_detailed(triads, cfg).reports;
}

// --- serialization ---------------------------------------------------------

inline constexpr const char* kCountsCsvHeader = "phi_deg,pair_index,combo,count";
inline constexpr std::array<const char*, 4> kComboLabels{"pp", "mm", "pm", "mp"};

inline std::string counts_to_csv(const std::vector<CountRecord>& records) {
  std::string out = std::string(kCountsCsvHeader) + "\n";
  for (const CountRecord& r : records) {
    const std::array<std::int64_t, 4> vals{r.table.n_pp, r.table.n_mm, r.table.n_pm,
                                           r.table.n_mp};
    for (int c = 0; c < 4; ++c) {
      out += detail::format_double(r.phi_deg);
      out += ',';
      out += kPairLabels[r.pair];
      out += ',';
      out += kComboLabels[c];
      out += ',';
      out += std::to_string(vals[c]);
      out += '\n';
    }
  }
  return out;
}

struct IngestResult {
  std::vector<CountRecord> records;       // complete tables, phi- then pair-ordered
  std::vector<std::string> warnings;      // incomplete tables that were dropped
};

/// Parses a counts document. Malformed rows and duplicate keys are hard
/// errors carrying their line number; tables missing some combos are dropped
/// with a warning instead, so one truncated cell cannot sink a whole run.
inline IngestResult ingest_counts(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty counts document");
  ++line_no;
  detail::strip_cr(line);
  if (line != kCountsCsvHeader)
    throw ParseError(1, std::string("expected header '") + kCountsCsvHeader + "'");

  struct Partial {
    std::array<std::int64_t, 4> vals{};
    unsigned seen = 0;
  };
  std::map<std::pair<double, int>, Partial> groups;

  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 comma-separated fields");

    double phi = 0.0;
    if (!detail::parse_double(fields[0], phi) || !(phi >= 0.0 && phi <= 180.0))
      throw ParseError(line_no, "phi_deg must be a number in [0, 180]");

    int pair = -1;
    for (int p = 0; p < 6; ++p)
      if (fields[1] == kPairLabels[p]) pair = p;
    if (pair < 0)
      throw ParseError(line_no, "pair_index must be one of 1,1p,2,2p,3,3p");

    int combo = -1;
    for (int c = 0; c < 4; ++c)
      if (fields[2] == kComboLabels[c]) combo = c;
    if (combo < 0) throw ParseError(line_no, "combo must be one of pp,mm,pm,mp");

    std::int64_t count = 0;
    if (!detail::parse_int64(fields[3], count) || count < 0)
      throw ParseError(line_no, "count must be a non-negative integer");

    Partial& g = groups[{phi, pair}];
    if (g.seen & (1u << combo))
      throw ParseError(line_no, "duplicate row for this phi, pair and combo");
    g.seen |= 1u << combo;
    g.vals[combo] = count;
  }

  IngestResult out;
  for (const auto& [key, g] : groups) {
    if (g.seen == 0xF) {
      out.records.push_back(
          {key.first, key.second, CountTable{g.vals[0], g.vals[1], g.vals[2], g.vals[3]}});
    } else {
      std::string missing;
      for (int c = 0; c < 4; ++c)
        if (!(g.seen & (1u << c))) missing += std::string(missing.empty() ? "" : ",") + kComboLabels[c];
      out.warnings.push_back("phi=" + detail::format_double(key.first) + " pair=" +
                             kPairLabels[key.second] + ": missing combo(s) " + missing +
                             ", table dropped");
    }
  }
  return out;
}

struct AnalyzeResult {
  std::vector<SignificanceReport> reports;
  std::vector<std::string> warnings;
};

/// Scores ingested counts. Every phi with all six pairs present produces a
/// report row; incomplete phis are skipped with a warning. Throws NoData when
/// nothing is complete.
inline AnalyzeResult analyze_counts(const std::vector<CountRecord>& records) {
  std::map<double, std::array<const CountTable*, 6>> by_phi;
  for (const CountRecord& r : records) {
    if (r.pair < 0 || r.pair > 5) throw InvalidInput("analyze_counts: pair index out of range");
    auto& slots = by_phi[r.phi_deg];
    if (slots[r.pair]) throw InvalidInput("analyze_counts: duplicate pair for one phi");
    slots[r.pair] = &r.table;
  }

  AnalyzeResult out;
  for (const auto& [phi, slots] : by_phi) {
    std::string missing;
    for (int p = 0; p < 6; ++p)
      if (!slots[p]) missing += std::string(missing.empty() ? "" : ",") + kPairLabels[p];
    if (!missing.empty()) {
      out.warnings.push_back("phi=" + detail::format_double(phi) + ": missing pair(s) " +
                             missing + ", skipped");
      continue;
    }
    std::array<CorrelationValue, 6> est;
    for (int p = 0; p < 6; ++p) est[p] = estimate_correlation(*slots[p]);
    const E3Estimate e = e3_from_correlations(est);
    SignificanceReport r;
    r.phi_deg = phi;
    r.e3_est = e.e3;
    r.sigma_e3 = e.sigma_e3;
    r.l3 = leggett_bound(phi);
    r.n_sigma = (e.e3 - r.l3) / e.sigma_e3;
    r.sum_near_zero = e.sum_near_zero;
    out.reports.push_back(r);
  }
  if (out.reports.empty())
    throw NoData("analyze_counts: no phi has a complete set of analyzer pairs");
  return out;
}

inline constexpr const char* kReportCsvHeader = "phi_deg,e3_est,sigma_e3,l3,n_sigma";

inline std::string reports_to_csv(const std::vector<SignificanceReport>& reports) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const SignificanceReport& r : reports) {
    out += detail::format_double(r.phi_deg) + ',' + detail::format_double(r.e3_est) + ',' +
           detail::format_double(r.sigma_e3) + ',' + detail::format_double(r.l3) + ',' +
           detail::format_double(r.n_sigma) + '\n';
  }
  return out;
}

inline std::vector<SignificanceReport> parse_reports_csv(std::istream& in) {
  std::vector<SignificanceReport> reports;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    if (line == kReportCsvHeader) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 5) throw ParseError(line_no, "expected 5 comma-separated fields");
    SignificanceReport r;
    if (!detail::parse_double(fields[0], r.phi_deg) ||
        !detail::parse_double(fields[1], r.e3_est) ||
        !detail::parse_double(fields[2], r.sigma_e3) ||
        !detail::parse_double(fields[3], r.l3) ||
        !detail::parse_double(fields[4], r.n_sigma))
      throw ParseError(line_no, "fields must be decimal numbers");
    reports.push_back(r);
  }
  return reports;
}

/// Run provenance for a sweep: everything needed to reproduce its numbers.
inline nlohmann::json metadata_json(const ExperimentConfig& cfg, double start_deg,
                                    double stop_deg, double step_deg) {
  nlohmann::json j;
  j["seed"] = cfg.rng_seed;
  j["generator_name"] = kGeneratorName;
  j["mean_counts_per_setting"] = cfg.mean_counts_per_setting;
  j["visibility"] = cfg.visibility;
  j["grid"] = {{"start_deg", start_deg}, {"stop_deg", stop_deg}, {"step_deg", step_deg}};
  return j;
}

}  // namespace spinorbit
