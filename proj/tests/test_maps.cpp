#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isokit/distortion.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

using namespace isokit;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

void check_jacobian_matches_fd(const SmoothMap& map, const Vec& x, double scale) {
  const double h = 1e-5 * scale;
  const Mat fd = oracle::finite_difference_jacobian(map, x, h);
  const Mat an = map.jacobian(x);
  const double denom = std::max(1.0, an.norm());
  CHECK((fd - an).norm() / denom <= 1e-5);
}

}  // namespace

TEST_CASE("slow twist basics") {
  SUBCASE("zero angle functions give the identity") {
    std::vector<TwistBlock> blocks{{0, 1, AngleFunction::constant(0.0)}};
    const auto map = slow_twist(Mat::Identity(2, 2), blocks);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
      const Vec x = sample_in_ball(rng, Vec::Zero(2), 3.0);
      CHECK((map.evaluate(x) - x).norm() <= 1e-14);
    }
  }
  SUBCASE("exp(-10 t) twist leaves far points essentially fixed") {
    std::vector<TwistBlock> blocks{{0, 1, AngleFunction::exp_decay(1.0, 10.0)}};
    const auto map = slow_twist(Mat::Identity(2, 2), blocks);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
      Vec x = sample_unit_sphere(rng, 2) * (5.0 + i * 0.5);
      CHECK((map.evaluate(x) - x).norm() < 1e-20);
    }
  }
  SUBCASE("fast twist violates condition A") {
    std::vector<TwistBlock> blocks{{0, 1, AngleFunction::linear(1.0)}};
    CHECK_THROWS_AS(slow_twist(Mat::Identity(2, 2), blocks), ConditionAViolated);
    const auto forced = slow_twist(Mat::Identity(2, 2), blocks, true);
    CHECK(std::isinf(forced.claimed_epsilon()));
  }
}

TEST_CASE("slide basics") {
  SUBCASE("zero field is the identity") {
    const auto map = slide(DisplacementField::constant(Vec::Zero(2)));
    CHECK((map.evaluate(v2(0.3, -2.0)) - v2(0.3, -2.0)).norm() == 0.0);
  }
  SUBCASE("constant field is a translation with zero distortion") {
    const auto map = slide(DisplacementField::constant(v2(0.4, -0.1)));
    const auto audit =
        distortion_audit(map, Region::ball(Vec::Zero(2), 3.0), 64, 99);
    CHECK(audit.sup_jacobian_defect <= 1e-12);
    CHECK(audit.sup_pair_ratio_defect <= 1e-12);
  }
  SUBCASE("demo field has finite audited distortion") {
    const auto field = DisplacementField::reciprocal_exp(1.0, 0.5, 1.0);
    const auto map = slide(field);
    const auto audit =
        distortion_audit(map, Region::ball(Vec::Zero(2), 5.0), 200, 7);
    CHECK(audit.sup_jacobian_defect <=
          kBuilderAuditConstant * field.gradient_bound());
    CHECK(audit.sup_jacobian_defect > 0.0);
  }
  SUBCASE("steep field violates condition B") {
    CHECK_THROWS_AS(slide(DisplacementField::reciprocal_exp(10.0, 0.0, 1.0)),
                    ConditionBViolated);
  }
}

TEST_CASE("jacobians match finite differences at random probes") {
  std::mt19937_64 rng(5);
  std::vector<SmoothMap> maps;
  maps.push_back(slow_twist(oracle::random_rotation(rng, 3),
                            {{0, 1, AngleFunction::exp_decay(0.7, 2.0)}}));
  maps.push_back(slide(DisplacementField::reciprocal_exp(0.8, 0.4, 1.5)));
  maps.push_back(make_motion(oracle::random_motion(rng, 2)));
  maps.push_back(localize_rotation(oracle::random_rotation(rng, 2), 0.5, 400.0, 0.5));
  for (const auto& map : maps) {
    const int d = map.dim();
    for (int i = 0; i < 100; ++i) {
      const Vec x = sample_in_ball(rng, Vec::Zero(d), 3.0);
      check_jacobian_matches_fd(map, x, 1.0);
    }
  }
}

TEST_CASE("jacobian of identity and motion") {
  const auto id = make_identity(3);
  CHECK((id.jacobian(Vec::Zero(3)) - Mat::Identity(3, 3)).norm() == 0.0);
  std::mt19937_64 rng(6);
  const auto motion = oracle::random_motion(rng, 3);
  const auto m = make_motion(motion);
  CHECK((m.jacobian(Vec::Ones(3)) - motion.linear).norm() == 0.0);
}

TEST_CASE("localize_rotation") {
  std::mt19937_64 rng(8);
  const double eps = 0.1;
  const double c1 = 1.0;
  const double c2 = std::exp(M_PI / (2.0 * eps));
  Mat rot(2, 2);
  rot << 0, -1, 1, 0;  // rotation by pi/2
  const auto map = localize_rotation(rot, c1, c2, eps);

  SUBCASE("exact rotation inside c1") {
    for (int i = 0; i < 50; ++i) {
      const Vec x = sample_in_ball(rng, Vec::Zero(2), c1);
      CHECK((map.evaluate(x) - rot * x).norm() <= 1e-14 * std::max(1.0, x.norm()));
    }
  }
  SUBCASE("exact identity outside c2") {
    for (int i = 0; i < 50; ++i) {
      const Vec x = sample_unit_sphere(rng, 2) * (c2 * (1.0 + i * 0.1));
      CHECK((map.evaluate(x) - x).norm() <= 1e-14 * x.norm());
    }
  }
  SUBCASE("audited distortion is of order eps") {
    const auto audit =
        distortion_audit(map, Region::ball(Vec::Zero(2), 2.0 * c2), 400, 17);
    CHECK(audit.sup_jacobian_defect <= 8.0 * eps);
  }
  SUBCASE("identity rotation returns identity map") {
    const auto idm = localize_rotation(Mat::Identity(3, 3), 1.0, 10.0, 0.1);
    CHECK(idm.node().type() == "identity");
  }
  SUBCASE("infeasible ratio is rejected with the required ratio") {
    CHECK_THROWS_AS(localize_rotation(rot, 1.0, 2.0, 0.01), RatioInfeasible);
  }
}

TEST_CASE("localize_motion") {
  std::mt19937_64 rng(9);
  const double eps = 0.1;
  SUBCASE("identity motion") {
    const auto map =
        localize_motion(EuclideanMotion::identity(2), 1.0, 100.0, eps);
    CHECK(map.node().type() == "identity");
  }
  SUBCASE("small translation only: slide") {
    const double c3 = 1.0, c4 = 20.0;
    Vec t = v2(eps * c3 / 10.0, 0.0);
    const auto map =
        localize_motion(EuclideanMotion::pure_translation(t), c3, c4, eps);
    // equals the motion inside c3
    for (int i = 0; i < 20; ++i) {
      const Vec x = sample_in_ball(rng, Vec::Zero(2), c3);
      CHECK((map.evaluate(x) - (x + t)).norm() <= 1e-14);
    }
    // identity outside c4
    for (int i = 0; i < 20; ++i) {
      const Vec x = sample_unit_sphere(rng, 2) * (c4 + i);
      CHECK((map.evaluate(x) - x).norm() <= 1e-14 * x.norm());
    }
    const auto audit =
        distortion_audit(map, Region::ball(Vec::Zero(2), 2 * c4), 300, 23);
    CHECK(audit.sup_jacobian_defect <= eps);
  }
  SUBCASE("full motion equals A inside and identity outside") {
    const double c3 = 1.0;
    const double c4 = std::exp(2.0 * M_PI / eps);
    Mat rot(2, 2);
    const double a = 0.8;
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const EuclideanMotion motion(rot, v2(0.01, -0.02));
    const auto map = localize_motion(motion, c3, c4, eps);
    for (int i = 0; i < 30; ++i) {
      const Vec x = sample_in_ball(rng, Vec::Zero(2), c3);
      CHECK((map.evaluate(x) - motion.apply(x)).norm() <= 1e-12);
    }
    for (int i = 0; i < 30; ++i) {
      const Vec x = sample_unit_sphere(rng, 2) * c4 * (1.5 + i);
      CHECK((map.evaluate(x) - x).norm() <= 1e-12 * x.norm());
    }
  }
  SUBCASE("oversized translation rejected") {
    CHECK_THROWS_AS(
        localize_motion(EuclideanMotion::pure_translation(v2(1.0, 0.0)), 1.0,
                        10.0, 0.01),
        TranslationInfeasible);
  }
}

TEST_CASE("point mover") {
  std::mt19937_64 rng(10);
  const double eps = 0.1;
  const double c6 = 1.0, c7 = 50.0;
  SUBCASE("no move: identity") {
    const Vec x = v2(0.3, 0.2);
    const auto map = point_mover(x, x, c6, c7, eps);
    CHECK((map.evaluate(v2(5, 5)) - v2(5, 5)).norm() == 0.0);
  }
  SUBCASE("equal radii realized by a localized rotation") {
    const Vec x = v2(0.5, 0.0);
    Vec y = v2(0.5 * std::cos(0.08), 0.5 * std::sin(0.08));
    const auto map = point_mover(x, y, c6, c7, eps);
    CHECK((map.evaluate(x) - y).norm() <= 1e-12);
    const auto audit =
        distortion_audit(map, Region::ball(Vec::Zero(2), 2 * c7), 300, 29);
    CHECK(audit.sup_jacobian_defect <= 8.0 * eps);
    // outside c7: identity
    for (int i = 0; i < 20; ++i) {
      const Vec z = sample_unit_sphere(rng, 2) * (c7 * (1.0 + 0.3 * i));
      CHECK((map.evaluate(z) - z).norm() <= 1e-13 * z.norm());
    }
  }
  SUBCASE("general small displacement hits the target exactly") {
    for (int i = 0; i < 20; ++i) {
      const Vec x = sample_in_ball(rng, Vec::Zero(2), c6);
      Vec delta = sample_in_ball(rng, Vec::Zero(2), eps * c6 / 2.0);
      const Vec y = x + delta;
      if (y.norm() > c6) continue;
      const auto map = point_mover(x, y, c6, c7, eps);
      CHECK((map.evaluate(x) - y).norm() <= 1e-12);
      for (int j = 0; j < 5; ++j) {
        const Vec z = sample_unit_sphere(rng, 2) * (c7 * (1.0 + j));
        CHECK((map.evaluate(z) - z).norm() <= 1e-13 * z.norm());
      }
    }
  }
  SUBCASE("oversized move rejected") {
    CHECK_THROWS_AS(point_mover(v2(0.5, 0), v2(0.8, 0), c6, 2.0, 0.001),
                    MoveInfeasible);
  }
}

TEST_CASE("distortion audit of rigid motions is zero") {
  std::mt19937_64 rng(12);
  const auto map = make_motion(oracle::random_motion(rng, 3));
  const auto audit = distortion_audit(map, Region::ball(Vec::Zero(3), 5.0), 200, 1);
  CHECK(audit.sup_jacobian_defect <= 1e-12);
  CHECK(audit.sup_pair_ratio_defect <= 1e-12);
}

TEST_CASE("composition audit roughly adds") {
  std::mt19937_64 rng(14);
  const auto f =
      slow_twist(Mat::Identity(2, 2), {{0, 1, AngleFunction::exp_decay(0.05, 1.0)}});
  const auto g = slide(DisplacementField::reciprocal_exp(0.05, 0.02, 1.0));
  const Region region = Region::ball(Vec::Zero(2), 4.0);
  const auto af = distortion_audit(f, region, 300, 3);
  const auto ag = distortion_audit(g, region, 300, 3);
  const auto afg = distortion_audit(make_composite({f, g}), region, 300, 3);
  CHECK(afg.sup_jacobian_defect <=
        3.0 * (af.sup_jacobian_defect + ag.sup_jacobian_defect));
  // pair ratios of audited maps stay within (1 +- C eps)
  CHECK(afg.sup_pair_ratio_defect <=
        3.0 * (af.sup_jacobian_defect + ag.sup_jacobian_defect));
}

TEST_CASE("bmo rotation audit") {
  std::mt19937_64 rng(15);
  SUBCASE("rigid motion: zero residual and tails") {
    const auto map = make_motion(oracle::random_motion(rng, 2));
    const auto audit = bmo_rotation_audit(map, Vec::Zero(2), 1.0, 60);
    CHECK(audit.mean_residual <= 1e-12);
    for (double t : audit.tail_fractions) CHECK(t == 0.0);
  }
  SUBCASE("slow twist: mean residual of order eps, decaying tails") {
    // calibrated so the audited defect is about 1e-2
    const double target = 1e-2;
    const double amp = target / (10.0 * std::exp(-1.0) * 2.5);
    const auto map = slow_twist(Mat::Identity(2, 2),
                                {{0, 1, AngleFunction::exp_decay(amp, 10.0)}});
    const auto jac_audit =
        distortion_audit(map, Region::ball(Vec::Zero(2), 1.0), 500, 41);
    const auto audit = bmo_rotation_audit(map, Vec::Zero(2), 1.0, 120);
    CHECK(audit.mean_residual <= jac_audit.sup_jacobian_defect);
    CHECK(audit.mean_residual > 0.0);
    for (int i = 0; i + 1 < 4; ++i) {
      CHECK(audit.tail_fractions[i] >= audit.tail_fractions[i + 1]);
    }
  }
}

TEST_CASE("smooth map serialization round-trips") {
  std::mt19937_64 rng(16);
  std::vector<SmoothMap> maps;
  maps.push_back(make_identity(2));
  maps.push_back(make_motion(oracle::random_motion(rng, 3)));
  maps.push_back(slow_twist(oracle::random_rotation(rng, 2),
                            {{0, 1, AngleFunction::exp_decay(0.3, 2.0)}}));
  maps.push_back(slide(DisplacementField::radial_bump(v2(0.1, 0.2), 0.5, 2.0,
                                                      v2(0.05, -0.02))));
  maps.push_back(point_mover(v2(0.2, 0.1), v2(0.25, 0.12), 1.0, 50.0, 0.2));
  maps.push_back(make_composite({maps[2], maps[3]}));
  for (const auto& map : maps) {
    const Json j = map.to_json();
    const SmoothMap back = SmoothMap::from_json(j);
    for (int i = 0; i < 25; ++i) {
      const Vec x = sample_in_ball(rng, Vec::Zero(map.dim()), 3.0);
      CHECK((map.evaluate(x) - back.evaluate(x)).norm() == 0.0);
    }
    CHECK(j.dump() == back.to_json().dump());
  }
}
