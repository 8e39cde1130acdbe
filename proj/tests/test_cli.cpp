#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spinorbit/cli.hpp"

using namespace spinorbit;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"spinorbit"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("spinorbit_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("curves writes the exact table with its window footer", "[cli]") {
  TempDir tmp;
  const fs::path out = tmp.path / "curves.csv";
  REQUIRE(run({"curves", "--output", out.string()}) == 0);

  const std::string text = slurp(out);
  CHECK(text.find("# window") != std::string::npos);

  std::istringstream in(text);
  const std::vector<E3Point> points = parse_e3_points_csv(in);
  REQUIRE(points.size() == 46);
  CHECK(points.front().phi_deg == 0.0);
  CHECK(points.front().e3 == Catch::Approx(2.0).margin(1e-12));
  CHECK(points.back().phi_deg == 180.0);
  for (const E3Point& p : points) {
    CHECK(p.e3 == e3_quantum(p.phi_deg));
    CHECK(p.l3 == leggett_bound(p.phi_deg));
    CHECK(p.sigma_e3 == 0.0);
  }
}

TEST_CASE("curves emits equivalent JSON on request", "[cli]") {
  TempDir tmp;
  const fs::path out = tmp.path / "curves.json";
  REQUIRE(run({"curves", "--phi-start", "20", "--phi-stop", "40", "--phi-step", "10",
               "--format", "json", "--output", out.string()}) == 0);

  const nlohmann::json j = nlohmann::json::parse(slurp(out));
  REQUIRE(j["points"].size() == 3);
  CHECK(j["points"][1]["phi_deg"] == 30.0);
  CHECK(j["points"][1]["e3"] == e3_quantum(30.0));
  CHECK(j["window"]["phi_high_deg"].get<double>() ==
        Catch::Approx(73.73979529168804).margin(1e-6));
  CHECK(j["window"]["peak_gap"].get<double>() ==
        Catch::Approx(2.0 * std::sqrt(10.0) / 3.0 - 2.0).margin(1e-9));
}

TEST_CASE("usage problems exit with code 2", "[cli]") {
  TempDir tmp;
  CHECK(run({}) == 2);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({"curves", "--no-such-flag"}) == 2);
  CHECK(run({"curves", "--phi-step", "0"}) == 2);
  CHECK(run({"curves", "--phi-start", "90", "--phi-stop", "30"}) == 2);
  CHECK(run({"curves", "--phi-stop", "200"}) == 2);
  CHECK(run({"curves", "--format", "yaml"}) == 2);
  CHECK(run({"analyze"}) == 2);  // --input is required
  CHECK(run({"sweep", "--visibility", "1.5", "--output", (tmp.path / "r.csv").string()}) ==
        2);
  CHECK(run({"sweep"}) == 2);  // --output is required
  CHECK(run({"hvmax"}) == 2);  // --phi is required
  CHECK(run({"hvmax", "--phi", "240"}) == 2);
  CHECK(run({"hvmax", "--phi", "28", "--budget", "10"}) == 2);
  CHECK(run({"curves", "--output", (tmp.path / "no_dir" / "x.csv").string()}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"curves", "--help"}) == 0);
}

TEST_CASE("sweep, metadata and analyze close the loop byte for byte", "[cli]") {
  TempDir tmp;
  const fs::path report = tmp.path / "report.csv";
  const fs::path counts = tmp.path / "counts.csv";
  const std::vector<std::string> sweep_args{
      "sweep",        "--phi-start",     "20",
      "--phi-stop",   "40",              "--phi-step",
      "4",            "--seed",          "99",
      "--mean-counts", "2000",           "--output",
      report.string(), "--output-counts", counts.string()};

  REQUIRE(run(sweep_args) == 0);
  const std::string first = slurp(report);

  std::istringstream in(first);
  const auto reports = parse_reports_csv(in);
  REQUIRE(reports.size() == 6);
  for (const auto& r : reports) CHECK(r.l3 == leggett_bound(r.phi_deg));

  // metadata sidecar carries the provenance
  const nlohmann::json meta = nlohmann::json::parse(slurp(report.string() + ".meta.json"));
  CHECK(meta["seed"] == 99);
  CHECK(meta["generator_name"] == "mt19937_64+knuth-ptrs");
  CHECK(meta["mean_counts_per_setting"] == 2000.0);
  CHECK(meta["visibility"] == 0.96);
  CHECK(meta["grid"]["step_deg"] == 4.0);

  // a rerun with identical flags is byte-identical
  const fs::path report2 = tmp.path / "report2.csv";
  const fs::path counts2 = tmp.path / "counts2.csv";
  std::vector<std::string> again = sweep_args;
  for (std::string& arg : again) {
    if (arg == report.string()) arg = report2.string();
    if (arg == counts.string()) arg = counts2.string();
  }
  REQUIRE(run(again) == 0);
  CHECK(slurp(report2) == first);
  CHECK(slurp(counts2) == slurp(counts));

  // analyzing the emitted counts reproduces the report bytes
  const fs::path reanalyzed = tmp.path / "reanalyzed.csv";
  REQUIRE(run({"analyze", "--input", counts.string(), "--output",
               reanalyzed.string()}) == 0);
  CHECK(slurp(reanalyzed) == first);
}

TEST_CASE("analyze reports data problems with exit code 3", "[cli]") {
  TempDir tmp;
  CHECK(run({"analyze", "--input", (tmp.path / "absent.csv").string()}) == 3);

  const fs::path garbled = tmp.path / "garbled.csv";
  std::ofstream(garbled) << "not,a,counts,file\n28,1,pp,5\n";
  CHECK(run({"analyze", "--input", garbled.string()}) == 3);

  const fs::path truncated = tmp.path / "truncated.csv";
  std::ofstream(truncated) << "phi_deg,pair_index,combo,count\n28,1,pp,5\n";
  CHECK(run({"analyze", "--input", truncated.string()}) == 3);  // nothing complete

  const fs::path negative = tmp.path / "negative.csv";
  std::ofstream(negative) << "phi_deg,pair_index,combo,count\n28,1,pp,-3\n";
  CHECK(run({"analyze", "--input", negative.string()}) == 3);
}

TEST_CASE("analyze scores partial documents when something is complete", "[cli]") {
  TempDir tmp;
  const fs::path counts = tmp.path / "partial.csv";
  {
    std::ofstream out(counts);
    out << kCountsCsvHeader << "\n";
    for (const char* pair : kPairLabels)
      for (const char* combo : kComboLabels)
        out << "28," << pair << "," << combo << ",250\n";
    out << "32,1,pp,100\n";  // lone fragment of an incomplete phi
  }
  const fs::path report = tmp.path / "partial_report.csv";
  REQUIRE(run({"analyze", "--input", counts.string(), "--output", report.string()}) == 0);

  std::istringstream in(slurp(report));
  const auto reports = parse_reports_csv(in);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].phi_deg == 28.0);
  // flat tables estimate all correlations as zero
  CHECK(reports[0].e3_est == 0.0);
  CHECK(reports[0].n_sigma < 0.0);
}

TEST_CASE("hvmax reports the saturated bound as JSON", "[cli]") {
  TempDir tmp;
  const fs::path out = tmp.path / "hv.json";
  REQUIRE(run({"hvmax", "--phi", "0", "--budget", "50000", "--output", out.string()}) ==
          0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out));
  CHECK(j["phi_deg"] == 0.0);
  CHECK(j["best_e3"] == 2.0);
  CHECK(j["gap"] == 0.0);
  CHECK(j["budget"] == 50000);

  const fs::path out28 = tmp.path / "hv28.json";
  REQUIRE(run({"hvmax", "--phi", "28", "--budget", "50000", "--output",
               out28.string()}) == 0);
  const nlohmann::json j28 = nlohmann::json::parse(slurp(out28));
  CHECK(j28["best_e3"].get<double>() ==
        Catch::Approx(leggett_bound(28.0)).margin(1e-9));
  CHECK(j28["u"].size() == 3);
  CHECK(j28["selector_signs"].size() == 6);
}
