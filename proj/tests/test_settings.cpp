#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spinorbit/settings.hpp"

using namespace spinorbit;

TEST_CASE("canonical triad matches its construction at 60 degrees", "[settings]") {
  const SettingsTriad t = build_triad(60.0);
  const double c = std::cos(deg2rad(30.0));
  const double s = std::sin(deg2rad(30.0));

  CHECK(approx_equal(t.a[0], PoincareVector(1, 0, 0), 1e-15));
  CHECK(approx_equal(t.a[1], PoincareVector(0, 1, 0), 1e-15));
  CHECK(approx_equal(t.a[2], PoincareVector(0, 1, 0), 1e-15));

  CHECK(approx_equal(t.b[0], PoincareVector(c, s, 0), 1e-15));
  CHECK(approx_equal(t.b_prime[0], PoincareVector(c, -s, 0), 1e-15));
  CHECK(approx_equal(t.b[1], PoincareVector(-s, c, 0), 1e-15));
  CHECK(approx_equal(t.b_prime[1], PoincareVector(s, c, 0), 1e-15));
  CHECK(approx_equal(t.b[2], PoincareVector(0, c, s), 1e-15));
  CHECK(approx_equal(t.b_prime[2], PoincareVector(0, c, -s), 1e-15));

  CHECK_THROWS_AS(build_triad(-1.0), InvalidInput);
  CHECK_THROWS_AS(build_triad(180.5), InvalidInput);
}

TEST_CASE("every triad on a one-degree grid validates", "[settings]") {
  for (int phi = 0; phi <= 180; ++phi) {
    const TriadReport report = validate_triad(build_triad(phi), 1e-9);
    INFO("phi = " << phi);
    CHECK(report.all_pass());
    CHECK(report.pair_angle.residual <= 1e-9);
    CHECK(report.orthogonality.residual <= 1e-9);
    CHECK(report.parallelism.residual <= 1e-9);
  }
}

TEST_CASE("degenerate constraints pass as vacuous at the range ends", "[settings]") {
  const TriadReport at_zero = validate_triad(build_triad(0.0));
  CHECK(at_zero.all_pass());
  CHECK(at_zero.orthogonality.vacuous);  // b and b' coincide, no differences
  CHECK_FALSE(at_zero.parallelism.vacuous);

  const TriadReport at_pi = validate_triad(build_triad(180.0));
  CHECK(at_pi.all_pass());
  CHECK(at_pi.parallelism.vacuous);  // b and b' cancel, no sums
  CHECK_FALSE(at_pi.orthogonality.vacuous);

  const TriadReport generic = validate_triad(build_triad(90.0));
  CHECK_FALSE(generic.orthogonality.vacuous);
  CHECK_FALSE(generic.parallelism.vacuous);
}

TEST_CASE("a half-degree perturbation trips exactly the constraint it breaks",
          "[settings]") {
  const double delta = deg2rad(0.5);

  // rotating one b about the z axis changes its angle to b'
  SettingsTriad bent = build_triad(40.0);
  bent.b[0] = rotate_about(bent.b[0], PoincareVector(0, 0, 1), delta);
  const TriadReport r1 = validate_triad(bent, 1e-9);
  CHECK_FALSE(r1.pair_angle.pass);
  CHECK(r1.pair_angle.residual == Catch::Approx(delta).epsilon(1e-6));

  // rotating the third pair rigidly about y keeps angles and sums intact but
  // tilts its difference direction out of the orthogonal frame
  SettingsTriad tilted = build_triad(40.0);
  tilted.b[2] = rotate_about(tilted.b[2], PoincareVector(0, 1, 0), delta);
  tilted.b_prime[2] = rotate_about(tilted.b_prime[2], PoincareVector(0, 1, 0), delta);
  const TriadReport r2 = validate_triad(tilted, 1e-9);
  CHECK(r2.pair_angle.pass);
  CHECK(r2.parallelism.pass);
  CHECK_FALSE(r2.orthogonality.pass);
  CHECK(r2.orthogonality.residual == Catch::Approx(std::sin(delta)).epsilon(1e-6));

  // rotating one b within the pair plane slides the sum off its a
  SettingsTriad slid = build_triad(40.0);
  slid.b[0] = rotate_about(slid.b[0], PoincareVector(0, 0, 1), delta);
  slid.b_prime[0] = rotate_about(slid.b_prime[0], PoincareVector(0, 0, 1), delta);
  const TriadReport r3 = validate_triad(slid, 1e-9);
  CHECK(r3.pair_angle.pass);
  CHECK_FALSE(r3.parallelism.pass);
  CHECK(r3.parallelism.residual == Catch::Approx(std::sin(delta)).epsilon(1e-6));
}

TEST_CASE("sweep grids are closed, ordered and validated", "[settings]") {
  const auto grid = sweep_grid(0.0, 180.0, 4.0);
  REQUIRE(grid.size() == 46);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 180.0);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

  const auto ragged = sweep_grid(0.0, 180.0, 7.0);
  CHECK(ragged.size() == 26);
  CHECK(ragged.back() == 175.0);

  const auto single = sweep_grid(28.0, 28.0, 4.0);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 28.0);

  CHECK_THROWS_AS(sweep_grid(0.0, 180.0, 0.0), InvalidInput);
  CHECK_THROWS_AS(sweep_grid(0.0, 180.0, -2.0), InvalidInput);
  CHECK_THROWS_AS(sweep_grid(90.0, 30.0, 4.0), InvalidInput);
  CHECK_THROWS_AS(sweep_grid(-4.0, 20.0, 4.0), InvalidInput);
  CHECK_THROWS_AS(sweep_grid(0.0, 184.0, 4.0), InvalidInput);
}

TEST_CASE("triads survive a JSON round trip", "[settings]") {
  const SettingsTriad t = build_triad(73.0);
  const SettingsTriad back = triad_from_json(to_json(t));
  CHECK(back.phi_deg == t.phi_deg);
  for (int i = 0; i < 3; ++i) {
    CHECK(approx_equal(back.a[i], t.a[i], 1e-15));
    CHECK(approx_equal(back.b[i], t.b[i], 1e-15));
    CHECK(approx_equal(back.b_prime[i], t.b_prime[i], 1e-15));
  }
  CHECK(validate_triad(back, 1e-6).all_pass());
}

TEST_CASE("malformed triad documents are rejected", "[settings]") {
  nlohmann::json good = to_json(build_triad(40.0));

  nlohmann::json no_phi = good;
  no_phi.erase("phi_deg");
  CHECK_THROWS_AS(triad_from_json(no_phi), InvalidInput);

  nlohmann::json bad_phi = good;
  bad_phi["phi_deg"] = 200.0;
  CHECK_THROWS_AS(triad_from_json(bad_phi), InvalidInput);

  nlohmann::json missing = good;
  missing.erase("b_prime");
  CHECK_THROWS_AS(triad_from_json(missing), InvalidInput);

  nlohmann::json short_vec = good;
  short_vec["b"][1] = nlohmann::json::array({0.0, 1.0});
  CHECK_THROWS_AS(triad_from_json(short_vec), InvalidInput);

  nlohmann::json not_unit = good;
  not_unit["a"][0] = nlohmann::json::array({0.9, 0.0, 0.0});
  CHECK_THROWS_AS(triad_from_json(not_unit), InvalidInput);

  nlohmann::json textual = good;
  textual["a"][0][0] = "one";
  CHECK_THROWS_AS(triad_from_json(textual), InvalidInput);
}
