#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isokit/distortion.hpp"
#include "isokit/io.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>

using namespace isokit;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("point file parsing") {
  SUBCASE("csv points") {
    const auto parsed = parse_point_file(temp_file("iokit_a.csv", "0,0\n1,0\n"));
    CHECK(parsed.config.size() == 2);
    CHECK(parsed.config.dim == 2);
    CHECK(parsed.warnings.empty());
  }
  SUBCASE("trailing labels") {
    const auto parsed =
        parse_point_file(temp_file("iokit_b.csv", "0,0,origin\n1,0,east\n"));
    CHECK(parsed.config.dim == 2);
    REQUIRE(parsed.config.labels.size() == 2);
    CHECK(parsed.config.labels[0] == "origin");
  }
  SUBCASE("ragged rows are rejected with the row number") {
    const auto path = temp_file("iokit_c.csv", "0,0\n1,0,3,4\n");
    try {
      parse_point_file(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("wrong dimension against expectation") {
    const auto path = temp_file("iokit_d.csv", "0,0,1\n");
    CHECK_THROWS_AS(parse_point_file(path, 2), ParseError);
  }
  SUBCASE("json array of arrays") {
    const auto parsed = parse_point_file(temp_file("iokit_e.json", "[[0,0,1]]"), 3);
    CHECK(parsed.config.size() == 1);
    CHECK(parsed.config.dim == 3);
  }
  SUBCASE("non-numeric field is rejected") {
    const auto path = temp_file("iokit_f.csv", "0,zero\n1,1\n");
    // the trailing non-numeric column is a label; a middle one is an error
    const auto path2 = temp_file("iokit_g.csv", "a,0\n1,1\n");
    CHECK_THROWS_AS(parse_point_file(path2), ParseError);
    (void)path;
  }
  SUBCASE("duplicate points are warned with indices") {
    const auto parsed =
        parse_point_file(temp_file("iokit_h.csv", "1,2\n1,2\n3,4\n"));
    REQUIRE(parsed.warnings.size() == 1);
    CHECK(parsed.warnings[0].find("1") != std::string::npos);
    CHECK(parsed.warnings[0].find("2") != std::string::npos);
  }
}

TEST_CASE("csv round trip preserves coordinates") {
  std::mt19937_64 rng(3);
  const auto config = oracle::random_config(rng, 3, 7);
  const fs::path path = fs::temp_directory_path() / "iokit_rt.csv";
  write_point_csv(config, path);
  const auto back = parse_point_file(path);
  REQUIRE(back.config.size() == config.size());
  for (int i = 0; i < config.size(); ++i) {
    CHECK((back.config.points[static_cast<std::size_t>(i)] -
           config.points[static_cast<std::size_t>(i)])
              .norm() == 0.0);
  }
}

TEST_CASE("map json round trip re-audits identically") {
  std::mt19937_64 rng(5);
  const auto map =
      slow_twist(oracle::random_rotation(rng, 2),
                 {{0, 1, AngleFunction::exp_decay(0.4, 3.0)}});
  const Region region = Region::ball(Vec::Zero(2), 3.0);
  const auto before = distortion_audit(map, region, 200, 99);
  const SmoothMap back = SmoothMap::from_json(map.to_json());
  const auto after = distortion_audit(back, region, 200, 99);
  CHECK(std::abs(before.sup_jacobian_defect - after.sup_jacobian_defect) <= 1e-12);
  CHECK(std::abs(before.sup_pair_ratio_defect - after.sup_pair_ratio_defect) <= 1e-12);
  CHECK(map.to_json().dump() == back.to_json().dump());
}

TEST_CASE("identical seeds give byte-identical json") {
  std::mt19937_64 rng(7);
  const auto map = slide(DisplacementField::reciprocal_exp(0.05, 0.02, 1.0));
  const Region region = Region::ball(Vec::Zero(2), 2.0);
  const auto a1 = distortion_audit(map, region, 300, 1234);
  const auto a2 = distortion_audit(map, region, 300, 1234);
  Json j1{{"jac", a1.sup_jacobian_defect}, {"pair", a1.sup_pair_ratio_defect}};
  Json j2{{"jac", a2.sup_jacobian_defect}, {"pair", a2.sup_pair_ratio_defect}};
  CHECK(j1.dump() == j2.dump());
}

TEST_CASE("tsv plot table has a single header line") {
  std::mt19937_64 rng(9);
  const auto map = make_identity(2);
  std::vector<Vec> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(sample_in_ball(rng, Vec::Zero(2), 1.0));
  const fs::path path = fs::temp_directory_path() / "iokit_plot.tsv";
  write_map_samples_tsv(map, samples, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x0\tx1\tf0\tf1");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
}
