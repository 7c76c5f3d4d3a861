#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "so3orbit/io.hpp"
#include "so3orbit/model.hpp"
#include "so3orbit/moments.hpp"

using namespace so3orbit;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "so3orbit_test_io";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

bool same_bits(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].rows() != b[l].rows() || a[l].cols() != b[l].cols()) return false;
    // bitwise: == on doubles, which also fails on NaN
    for (Eigen::Index i = 0; i < a[l].size(); ++i) {
      if (a[l](i).real() != b[l](i).real() || a[l](i).imag() != b[l](i).imag()) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("signals and distributions round-trip bitwise through files") {
  const std::string ps = temp_path("x.json"), pd = temp_path("rho.json");
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const int L = 1 + int(seed % 6), R = 1 + int(seed % 4);
    const Signal x = random_signal(L, R, seed, seed % 2 == 0);
    save_signal(x, ps);
    const Signal y = load_signal(ps);
    CHECK(y.L == L);
    CHECK(y.R == R);
    CHECK(y.real_symmetric == x.real_symmetric);
    CHECK(same_bits(x.bands, y.bands));

    const Distribution rho = random_distribution(L, seed, seed % 3 == 0);
    save_distribution(rho, pd);
    const Distribution r2 = load_distribution(pd);
    CHECK(r2.in_plane == rho.in_plane);
    CHECK(same_bits(rho.bands, r2.bands));
  }
}

TEST_CASE("moments round-trip with metadata") {
  const Signal x = random_signal(3, 2, 4, true);
  const Distribution rho = random_distribution(3, 4, false);
  const FirstMoment m1 = population_first_moment(rho, x);
  SecondMoment m2 = population_second_moment(rho, x);
  m2.warnings.push_back("grid halved");
  const std::string p = temp_path("m.json");
  save_moments(m1, m2, p);
  FirstMoment a;
  SecondMoment b;
  load_moments(p, a, b);
  CHECK(same_bits(a.bands, m1.bands));
  CHECK(b.components.size() == m2.components.size());
  CHECK(max_abs_diff(b, m2) == 0.0);
  CHECK(!b.n_used.has_value());
  REQUIRE(b.warnings.size() == 1);
  CHECK(b.warnings[0] == "grid halved");

  m2.n_used = 1234;
  m2.sigma_used = 0.25;
  save_moments(m1, m2, p);
  load_moments(p, a, b);
  CHECK(b.n_used == std::optional<std::uint64_t>(1234));
  CHECK(b.sigma_used == 0.25);
}

TEST_CASE("observations round-trip") {
  const Signal x = random_signal(2, 2, 1, true);
  const RotationSample rot = sample_uniform(7, 3);
  const ObservationSet obs = generate_observations(x, rot, 0.5, 3, NoiseMode::real_symmetric);
  const std::string p = temp_path("obs.json");
  save_observations(obs, p);
  const ObservationSet o2 = load_observations(p);
  REQUIRE(o2.size() == 7);
  CHECK(o2.sigma() == 0.5);
  CHECK(o2.noise_mode() == NoiseMode::real_symmetric);
  for (std::size_t i = 0; i < 7; ++i) CHECK(same_bits(o2.data[i].bands, obs.data[i].bands));
}

TEST_CASE("malformed documents name the problem") {
  const Signal x = random_signal(3, 2, 9, false);
  json j = to_json(x);

  SUBCASE("missing band") {
    j["bands"].erase(2);
    CHECK_THROWS_WITH_AS(signal_from_json(j), doctest::Contains("missing band 2"), ParseError);
  }
  SUBCASE("version") {
    j["format_version"] = 7;
    CHECK_THROWS_AS(signal_from_json(j), UnsupportedVersion);
  }
  SUBCASE("wrong kind") {
    CHECK_THROWS_AS(distribution_from_json(j), ParseError);
  }
  SUBCASE("wrong shape") {
    j["bands"][1]["re"].erase(0);
    CHECK_THROWS_AS(signal_from_json(j), ParseError);
  }
  SUBCASE("missing component") {
    const SecondMoment m2 = population_second_moment(Distribution::uniform(3), x);
    json jm = to_json(m2);
    jm["components"].erase(0);
    CHECK_THROWS_WITH_AS(second_moment_from_json(jm), doctest::Contains("missing component"),
                         ParseError);
  }
  SUBCASE("distribution band 0 must be one") {
    json jd = to_json(Distribution::uniform(2));
    jd["bands"][0]["re"][0][0] = 0.5;
    CHECK_THROWS_AS(distribution_from_json(jd), ParseError);
  }
}

TEST_CASE("file errors") {
  CHECK_THROWS_AS(load_signal(temp_path("does_not_exist.json")), IoError);
  const std::string p = temp_path("broken.json");
  {
    std::ofstream f(p);
    f << "{\n  \"format_version\": 1,\n  \"kind\": \n}";
  }
  CHECK_THROWS_WITH_AS(load_signal(p), doctest::Contains("line"), ParseError);
  CHECK_THROWS_AS(write_json_file(json::object(), "/nonexistent_dir/x.json"), IoError);
}
