#pragma once

// Command line front end. Four subcommands cover the pipeline: `curves` for
// the exact theory table, `sweep` for a simulated experiment, `analyze` for
// scoring recorded counts, `hvmax` for the hidden-variable search.
//
// Exit codes: 0 success, 2 usage problems (flags, ranges, output paths),
// 3 data problems (unreadable, malformed or insufficient input).

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinorbit/correlations.hpp"
#include "spinorbit/counting.hpp"
#include "spinorbit/errors.hpp"
#include "spinorbit/hvmodel.hpp"
#include "spinorbit/settings.hpp"

namespace spinorbit {

namespace detail {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

/// Writes text to a file, or to stdout for an empty path or "-".
inline bool write_text(const std::string& path, const std::string& text,
                       std::string& error) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return true;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    error = "cannot open output file: " + path;
    return false;
  }
  file << text;
  file.flush();
  if (!file) {
    error = "failed while writing output file: " + path;
    return false;
  }
  return true;
}

inline nlohmann::json window_to_json(const ViolationWindow& w) {
  nlohmann::json j;
  j["phi_low_deg"] = w.phi_low_deg;
  j["phi_high_deg"] = w.phi_high_deg;
  j["phi_peak_deg"] = w.phi_peak_deg;
  j["peak_gap"] = w.peak_gap;
  return j;
}

inline nlohmann::json reports_to_json(const std::vector<SignificanceReport>& reports) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SignificanceReport& r : reports) {
    nlohmann::json row;
    row["phi_deg"] = r.phi_deg;
    row["e3_est"] = r.e3_est;
    row["sigma_e3"] = r.sigma_e3;
    row["l3"] = r.l3;
    row["n_sigma"] = r.n_sigma;
    rows.push_back(row);
  }
  return nlohmann::json{{"reports", rows}};
}

struct GridFlags {
  double start = 0.0;
  double stop = 180.0;
  double step = 4.0;
};

inline void add_grid_flags(CLI::App* cmd, GridFlags& grid) {
  cmd->add_option("--phi-start", grid.start, "first separation angle, degrees")
      ->check(CLI::Range(0.0, 180.0))
      ->capture_default_str();
  cmd->add_option("--phi-stop", grid.stop, "last separation angle, degrees")
      ->check(CLI::Range(0.0, 180.0))
      ->capture_default_str();
  cmd->add_option("--phi-step", grid.step, "grid spacing, degrees")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"single-photon spin-orbit nonlocality simulator"};
  app.require_subcommand(1);

  detail::GridFlags curves_grid, sweep_grid_flags;
  std::string curves_output, curves_format = "csv";
  CLI::App* curves = app.add_subcommand(
      "curves", "exact quantum curve, bound and violation window");
  detail::add_grid_flags(curves, curves_grid);
  curves->add_option("--output", curves_output, "output path, '-' for stdout");
  curves->add_option("--format", curves_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  ExperimentConfig sweep_cfg;
  std::string sweep_output, sweep_counts_output, sweep_format = "csv";
  CLI::App* sweep =
      app.add_subcommand("sweep", "simulate photon counting over a grid of angles");
  detail::add_grid_flags(sweep, sweep_grid_flags);
  sweep->add_option("--mean-counts", sweep_cfg.mean_counts_per_setting,
                    "mean counts per analyzer setting")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--visibility", sweep_cfg.visibility, "correlation visibility")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sweep->add_option("--seed", sweep_cfg.rng_seed, "random seed")->capture_default_str();
  sweep->add_option("--output", sweep_output, "report path; metadata goes beside it")
      ->required();
  sweep->add_option("--output-counts", sweep_counts_output, "also write raw counts here");
  sweep->add_option("--format", sweep_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  std::string analyze_input, analyze_output, analyze_format = "csv";
  CLI::App* analyze =
      app.add_subcommand("analyze", "score a counts table against the bound");
  analyze->add_option("--input", analyze_input, "counts CSV path")->required();
  analyze->add_option("--output", analyze_output, "output path, '-' for stdout");
  analyze->add_option("--format", analyze_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  double hvmax_phi = 0.0;
  std::uint64_t hvmax_budget = 1000000;
  std::string hvmax_output, hvmax_format = "json";
  CLI::App* hvmax =
      app.add_subcommand("hvmax", "search hidden-variable models for the largest E3");
  hvmax->add_option("--phi", hvmax_phi, "separation angle, degrees")
      ->check(CLI::Range(0.0, 180.0))
      ->required();
  hvmax->add_option("--budget", hvmax_budget, "candidate evaluation budget")
      ->capture_default_str();
  hvmax->add_option("--output", hvmax_output, "output path, '-' for stdout");
  hvmax->add_option("--format", hvmax_format, "json")
      ->check(CLI::IsMember({"json"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? detail::kExitOk : detail::kExitUsage;
  }

  const auto check_grid = [](const detail::GridFlags& g, std::string& error) {
    if (g.start > g.stop) {
      error = "--phi-start must not exceed --phi-stop";
      return false;
    }
    return true;
  };

  std::string error;
  try {
    if (*curves) {
      if (!check_grid(curves_grid, error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      std::vector<E3Point> points;
      for (const double phi : sweep_grid(curves_grid.start, curves_grid.stop, curves_grid.step))
        points.push_back({phi, e3_quantum(phi), leggett_bound(phi), 0.0});
      const ViolationWindow window = ideal_violation_window();
      std::string text;
      if (curves_format == "csv") {
        text = e3_points_to_csv(points, window);
      } else {
        nlohmann::json j;
        j["points"] = nlohmann::json::array();
        for (const E3Point& p : points)
          j["points"].push_back({{"phi_deg", p.phi_deg},
                                 {"e3", p.e3},
                                 {"l3", p.l3},
                                 {"sigma_e3", p.sigma_e3}});
        j["window"] = detail::window_to_json(window);
        text = j.dump(2) + "\n";
      }
      if (!detail::write_text(curves_output, text, error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      return detail::kExitOk;
    }

    if (*sweep) {
      if (!check_grid(sweep_grid_flags, error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      if (sweep_output == "-") {
        std::cerr << "sweep needs a real --output path (metadata is written beside it)\n";
        return detail::kExitUsage;
      }
      std::vector<SettingsTriad> triads;
      for (const double phi :
           sweep_grid(sweep_grid_flags.start, sweep_grid_flags.stop, sweep_grid_flags.step))
        triads.push_back(build_triad(phi));
      const SweepOutput result = run_sweep_detailed(triads, sweep_cfg);
      for (const SignificanceReport& r : result.reports)
        if (r.sum_near_zero)
          std::cerr << "warning: phi=" << detail::format_double(r.phi_deg)
                    << ": a correlation pair sum sits within 3 sigma of zero\n";

      const std::string text = sweep_format == "csv"
                                   ? reports_to_csv(result.reports)
                                   : detail::reports_to_json(result.reports).dump(2) + "\n";
      if (!detail::write_text(sweep_output, text, error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      const nlohmann::json meta =
          metadata_json(sweep_cfg, sweep_grid_flags.start, sweep_grid_flags.stop,
                        sweep_grid_flags.step);
      if (!detail::write_text(sweep_output + ".meta.json", meta.dump(2) + "\n", error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      if (!sweep_counts_output.empty() &&
          !detail::write_text(sweep_counts_output, counts_to_csv(result.counts), error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      return detail::kExitOk;
    }

    if (*analyze) {
      std::ifstream in(analyze_input, std::ios::binary);
      if (!in) {
        std::cerr << "cannot open input file: " << analyze_input << "\n";
        return detail::kExitData;
      }
      const IngestResult ingested = ingest_counts(in);
      for (const std::string& w : ingested.warnings) std::cerr << "warning: " << w << "\n";
      const AnalyzeResult scored = analyze_counts(ingested.records);
      for (const std::string& w : scored.warnings) std::cerr << "warning: " << w << "\n";
      for (const SignificanceReport& r : scored.reports)
        if (r.sum_near_zero)
          std::cerr << "warning: phi=" << detail::format_double(r.phi_deg)
                    << ": a correlation pair sum sits within 3 sigma of zero\n";
      const std::string text = analyze_format == "csv"
                                   ? reports_to_csv(scored.reports)
                                   : detail::reports_to_json(scored.reports).dump(2) + "\n";
      if (!detail::write_text(analyze_output, text, error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      return detail::kExitOk;
    }

    if (*hvmax) {
      if (hvmax_budget < 1000) {
        std::cerr << "--budget must be at least 1000\n";
        return detail::kExitUsage;
      }
      const HvOptimum best = maximize_e3(build_triad(hvmax_phi), hvmax_budget);
      const std::string text = hv_optimum_to_json(best).dump(2) + "\n";
      if (!detail::write_text(hvmax_output, text, error)) {
        std::cerr << error << "\n";
        return detail::kExitUsage;
      }
      return detail::kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return detail::kExitData;
  } catch (const NoData& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return detail::kExitData;
  } catch (const InvalidInput& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return detail::kExitData;
  }
  return detail::kExitUsage;
}

}  // namespace spinorbit
