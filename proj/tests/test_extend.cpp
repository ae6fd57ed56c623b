#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isokit/extend_finite.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace isokit;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Rigid instance with bounded relative perturbation on the images.
struct PlantedInstance {
  PointConfig domain;
  PointConfig images;
};

PlantedInstance plant(std::mt19937_64& rng, int d, int k, double noise,
                      double min_sep = 0.25) {
  while (true) {
    auto e = oracle::random_config(rng, d, k);
    if (k >= 2 && e.separation() < min_sep * e.diameter()) continue;
    const auto motion = oracle::random_motion(rng, d);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Vec> z;
    for (const Vec& x : e.points) {
      Vec y = motion.apply(x);
      if (noise > 0.0) {
        Vec delta(d);
        for (int i = 0; i < d; ++i) delta[i] = n(rng);
        y += noise * e.diameter() * delta / std::max(delta.norm(), 1e-12);
      }
      z.push_back(y);
    }
    return {std::move(e), PointConfig(d, std::move(z))};
  }
}

}  // namespace

TEST_CASE("pigeonhole partition") {
  SUBCASE("two points become singletons") {
    PointConfig x(1, {v1(0), v1(1)});
    const auto part = pigeonhole_partition(x, 0.1);
    CHECK(part.clusters.size() == 2);
    CHECK(part.scale_exponent >= 10);
  }
  SUBCASE("near-coincident pair is clustered together") {
    PointConfig x(1, {v1(0), v1(1e-15), v1(1)});
    const auto part = pigeonhole_partition(x, 0.1);
    CHECK(part.clusters.size() == 2);
    bool found = false;
    for (const auto& c : part.clusters) {
      if (c.size() == 2) {
        CHECK(((c[0] == 0 && c[1] == 1) || (c[0] == 1 && c[1] == 0)));
        found = true;
      }
    }
    CHECK(found);
  }
  SUBCASE("well separated points are all singletons") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      auto x = oracle::random_config(rng, 3, 8);
      if (x.separation() < std::pow(0.1, 9) * x.diameter()) continue;
      const auto part = pigeonhole_partition(x, 0.1);
      CHECK(part.clusters.size() == static_cast<std::size_t>(x.size()));
    }
  }
  SUBCASE("both theorem inequalities hold on random configs") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 200; ++trial) {
      const int d = 1 + static_cast<int>(rng() % 3);
      const int k = 2 + static_cast<int>(rng() % 11);
      auto x = oracle::random_config(rng, d, k);
      // inject occasional tight pairs across scales
      if (trial % 3 == 0 && k >= 3) {
        x.points[1] = x.points[0] + 1e-13 * Vec::Ones(d);
      }
      if (x.diameter() <= 0.0) continue;
      const auto part = pigeonhole_partition(x, 0.1);  // verifies internally
      CHECK(part.scale_exponent >= 10);
      CHECK(part.scale_exponent <= 100 + k * (k - 1) / 2);
      std::size_t total = 0;
      for (const auto& c : part.clusters) total += c.size();
      CHECK(total == static_cast<std::size_t>(k));
    }
  }
}

TEST_CASE("scaled clustering") {
  const double eps = 0.5;
  SUBCASE("two far points become singletons with tau in the bracket") {
    PointConfig s(2, {v2(0, 0), v2(1, 0)});
    const auto part = scaled_clustering(s, eps, 5);
    CHECK(part.clusters.size() == 2);
    CHECK(part.tau >= std::exp(-(5.0 * 10 + 5.0) / eps) * 1.0);
    CHECK(part.tau <= std::exp(-1.0 / eps) * 1.0);
  }
  SUBCASE("tight pair plus far point clusters the pair") {
    const double gap = std::exp(-6.0 / eps);  // below exp(-5/eps) tau scale
    PointConfig s(2, {v2(0, 0), v2(gap * std::exp(-1.0 / eps), 0), v2(1, 0)});
    const auto part = scaled_clustering(s, eps, 5);
    bool has_pair = false;
    for (const auto& c : part.clusters) has_pair = has_pair || c.size() == 2;
    CHECK(has_pair);
  }
  SUBCASE("single point is a precondition violation") {
    PointConfig s(2, {v2(0, 0)});
    CHECK_THROWS_AS(scaled_clustering(s, eps, 5), InsufficientPoints);
  }
}

TEST_CASE("extend_finite basics") {
  std::mt19937_64 rng(7);
  SUBCASE("k = 1 with fixed point is the identity") {
    PointConfig e(2, {v2(0.3, 0.4)});
    const auto result = extend_finite(e, e, 0.1);
    CHECK(result.interpolation_error == 0.0);
    CHECK(result.map.node().type() == "identity");
  }
  SUBCASE("k exceeding D is refused loudly") {
    PointConfig e(2, {v2(0, 0), v2(1, 0), v2(0, 1)});
    CHECK_THROWS_AS(extend_finite(e, e, 0.1), KExceedsD);
  }
  SUBCASE("distortion beyond the feasibility window is rejected") {
    PointConfig e(2, {v2(0, 0), v2(1, 0)});
    PointConfig z(2, {v2(0, 0), v2(1.5, 0)});
    CHECK_THROWS_AS(extend_finite(e, z, 0.05), DeltaTooLarge);
  }
  SUBCASE("exact rotation of a pair (k=2, D=2) interpolates and audits") {
    const double eps = 0.05;
    PointConfig e(2, {v2(0, 0), v2(0.8, 0.1)});
    Mat rot(2, 2);
    const double a = 0.12;
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    std::vector<Vec> z;
    for (const Vec& x : e.points) z.push_back(rot * x);  // fixes y1 = 0
    const auto result = extend_finite(e, PointConfig(2, z), eps);
    CHECK(result.interpolation_error <= 1e-9 * e.diameter());
    CHECK(result.audited_epsilon <= eps);
    // far-field identity
    for (int i = 0; i < 20; ++i) {
      const Vec x = result.far_field_center +
                    sample_unit_sphere(rng, 2) *
                        (result.far_field_radius * (1.0 + 0.3 * i) + 1.0);
      CHECK((result.map.evaluate(x) - x).norm() <= 1e-12 * x.norm());
    }
  }
  SUBCASE("slightly stretched pair interpolates; far field within 10/lambda") {
    const double eps = 0.05;
    const double delta = 1e-6;
    PointConfig e(2, {v2(0, 0), v2(1, 0)});
    PointConfig z(2, {v2(0, 0), v2(1.0 + delta, 0)});
    const auto result = extend_finite(e, z, eps);
    CHECK(result.interpolation_error <= 1e-9);
    CHECK(result.far_field_radius <= 10.0 / 0.01 * e.diameter());
    const Vec probe = v2(10.0 / 0.01, 0.0);
    CHECK((result.map.evaluate(probe) - probe).norm() <= 1e-12 * probe.norm());
  }
}

TEST_CASE("extend_finite random feasible instances") {
  std::mt19937_64 rng(11);
  const double eps = 0.05;
  int built = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 3);
    const int k = 1 + static_cast<int>(rng() % std::min(d, 4));
    auto inst = plant(rng, d, k, eps / 64.0 / 4.0, 0.3);
    ExtendOptions opt;
    opt.audit_samples = 160;
    const auto result = extend_finite(inst.domain, inst.images, eps, opt);
    ++built;
    CHECK(result.interpolation_error <=
          1e-9 * std::max(inst.domain.diameter(), 1.0));
    CHECK(result.audited_epsilon <= eps);
    // far field agrees with the outer motion
    for (int i = 0; i < 5; ++i) {
      const Vec x = result.far_field_center +
                    sample_unit_sphere(rng, d) * result.far_field_radius *
                        (1.1 + i);
      CHECK((result.map.evaluate(x) - result.outer_motion.apply(x)).norm() <=
            1e-9 * std::max(1.0, x.norm()));
    }
  }
  CHECK(built == 40);
}

TEST_CASE("fixed point rigidity") {
  // When some y_i = z_i the map is the identity far out (not a translation).
  std::mt19937_64 rng(13);
  const double eps = 0.05;
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3;
    auto inst = plant(rng, d, 3, 0.0, 0.3);
    // force a fixed point at index 1 by translating the images
    const Vec shift = inst.domain.points[1] - inst.images.points[1];
    for (Vec& z : inst.images.points) z += shift;
    const auto result = extend_finite(inst.domain, inst.images, eps);
    CHECK(result.outer_motion.is_identity(0.0));
    for (int i = 0; i < 5; ++i) {
      const Vec x = result.far_field_center +
                    sample_unit_sphere(rng, d) * result.far_field_radius * 1.5;
      CHECK((result.map.evaluate(x) - x).norm() <= 1e-12 * std::max(1.0, x.norm()));
    }
  }
}

TEST_CASE("near reflection extension") {
  // E close to a hyperplane, unit diameter, well separated.
  std::mt19937_64 rng(17);
  std::vector<Vec> pts{v2(0, 0), v2(0.5, 1e-5), v2(1.0, -1e-5)};
  PointConfig e(2, pts);
  const double diam = e.diameter();
  for (Vec& p : e.points) p /= diam;
  const double tau = e.separation();
  const double eps = 0.1;
  const double eta = 5e-3;
  const auto map = near_reflection_extension(e, tau, eta, eps);

  SUBCASE("fixes E pointwise, improper Jacobian there") {
    for (const Vec& z : e.points) {
      CHECK((map.evaluate(z) - z).norm() <= 1e-12);
      CHECK(map.jacobian(z).determinant() < 0.0);
    }
  }
  SUBCASE("audit on a moderate ball") {
    const auto audit =
        distortion_audit(map, Region::ball(v2(0.5, 0), 30.0), 300, 5);
    CHECK(audit.sup_jacobian_defect <= 8.0 * eps);
  }
  SUBCASE("far from E the map is an improper motion") {
    // probe-fit the far motion on a sphere around a far point
    const Vec far_center = v2(0.5, 25.0);
    std::vector<Vec> xs{far_center};
    std::vector<Vec> ys{map.evaluate(far_center)};
    for (int i = 0; i < 2; ++i) {
      Vec x = far_center;
      x[i] += 1.0;
      xs.push_back(x);
      ys.push_back(map.evaluate(x));
    }
    const auto aff = affine_interpolant(xs, ys);
    CHECK(aff.det_sign == -1);
    for (int i = 0; i < 10; ++i) {
      const Vec x = far_center + sample_in_ball(rng, Vec::Zero(2), 2.0);
      CHECK((map.evaluate(x) - aff.apply(x)).norm() <= 1e-9);
    }
  }
  SUBCASE("nondegenerate set is NotThin") {
    PointConfig bad(2, {v2(0, 0), v2(1, 0), v2(0.5, 0.9)});
    CHECK_THROWS_AS(near_reflection_extension(bad, 0.5, 1e-2, 0.9), NotThin);
  }
}

TEST_CASE("glue") {
  const double eps = 0.35;
  const int d = 2;
  PointConfig e(d, {v2(0, 0), v2(1, 0)});
  const double tau = 1.0;
  SUBCASE("identity maps glue to the identity") {
    std::vector<SmoothMap> per{make_identity(d), make_identity(d)};
    const auto glued = glue(per, make_identity(d), e, tau, eps);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 30; ++i) {
      const Vec x = sample_in_ball(rng, v2(0.5, 0), 3.0);
      CHECK((glued.evaluate(x) - x).norm() <= 1e-14 * (1.0 + x.norm()));
    }
  }
  SUBCASE("point mover inside one patch ball, identity outside") {
    const double b1 = std::exp(-4.0 / eps) * tau;
    // a mover that fixes z keeps the z-agreement with the outer identity
    std::vector<SmoothMap> per;
    per.push_back(point_mover(Vec::Zero(2), Vec::Zero(2), 0.5 * b1, b1, eps));
    per.push_back(make_identity(d));
    const auto glued = glue(per, make_identity(d), e, tau, eps);
    const double b2 = std::exp(-3.0 / eps) * tau;
    const Vec probe = v2(0.4 * b2, 0);
    CHECK((glued.evaluate(probe) - per[0].evaluate(probe)).norm() <= 1e-15);
    const Vec far = v2(0.5, 4.0);
    CHECK((glued.evaluate(far) - far).norm() == 0.0);
  }
  SUBCASE("disagreement at a point is reported") {
    std::vector<SmoothMap> per{
        make_motion(EuclideanMotion::pure_translation(v2(0.5, 0))),
        make_identity(d)};
    CHECK_THROWS_AS(glue(per, make_identity(d), e, tau, eps), GlueMismatch);
  }
}

TEST_CASE("extend_with_properness") {
  std::mt19937_64 rng(23);
  const double eps = 0.35;
  PropernessOptions opt;
  opt.c_k = 1.0;        // desk-scale delta = exp(-1/eps)
  opt.c_k_prime = 1.0;  // eta = exp(-1/eps)
  opt.audit_samples = 120;

  SUBCASE("restriction of a proper motion extends with a map, no refusal") {
    for (int trial = 0; trial < 6; ++trial) {
      const int d = 2;
      const int k = 4 + static_cast<int>(rng() % 3);
      auto e = oracle::random_config(rng, d, k);
      if (e.separation() < 0.2 * e.diameter()) continue;
      const auto motion = oracle::random_motion(rng, d);
      std::vector<Vec> z;
      for (const Vec& x : e.points) z.push_back(motion.apply(x));
      const auto result =
          extend_with_properness(e, PointConfig(d, z), eps, 10, opt);
      CHECK_FALSE(result.refusal.has_value());
      CHECK(result.map.valid());
      CHECK(result.interpolation_error <= 1e-9 * e.diameter());
      // far field agrees with the reported outer motion
      for (int i = 0; i < 3; ++i) {
        const Vec x = result.far_field_center +
                      sample_unit_sphere(rng, d) *
                          (result.far_field_radius * 1.2 + e.diameter());
        CHECK((result.map.evaluate(x) - result.outer_motion.apply(x)).norm() <=
              1e-8 * std::max(1.0, x.norm()));
      }
    }
  }

  SUBCASE("planted positive and negative blocks yield refusal with witnesses") {
    // Rigid simplex far from a reflected simplex; cross distances distorted
    // by at most ~diam/L, within the desk-scale delta window.
    const int d = 2;
    std::vector<Vec> pts{v2(0, 0), v2(1, 0), v2(0.4, 0.9)};
    const double far = 40.0;
    std::vector<Vec> pts2{v2(far, 0.1), v2(far + 1, 0), v2(far + 0.4, 0.8)};
    std::vector<Vec> domain = pts;
    domain.insert(domain.end(), pts2.begin(), pts2.end());
    std::vector<Vec> images = pts;  // identity on the first simplex
    for (const Vec& p : pts2) {
      Vec q = p;
      q[1] = -q[1] + 0.18;  // reflect the second simplex about y = 0.09
      images.push_back(q);
    }
    PointConfig e(d, domain), z(d, images);
    const auto prof = distortion_profile(e, z);
    REQUIRE(prof.max_ratio <= 1.0 + std::exp(-opt.c_k / eps));
    const auto result = extend_with_properness(e, z, eps, 10, opt);
    CHECK(result.refusal.has_value());
    CHECK_FALSE(result.map.valid());
    CHECK(result.refusal->positive_block.size() == d + 1);
    CHECK(result.refusal->negative_block.size() == d + 1);
  }

  SUBCASE("negative-only instance extends with an improper map") {
    const int d = 2;
    std::vector<Vec> pts{v2(0, 0), v2(1, 0), v2(0.4, 0.9)};
    std::vector<Vec> images;
    for (const Vec& p : pts) {
      Vec q = p;
      q[1] = -q[1];
      images.push_back(q);
    }
    PointConfig e(d, pts), z(d, images);
    const auto result = extend_with_properness(e, z, eps, 10, opt);
    CHECK_FALSE(result.refusal.has_value());
    CHECK(result.map.valid());
    CHECK(result.interpolation_error <= 1e-8 * e.diameter());
    CHECK(result.map.jacobian(v2(0.3, 0.2)).determinant() < 0.0);
  }

  SUBCASE("D+1 points with perturbed distances always extend") {
    for (int trial = 0; trial < 6; ++trial) {
      const int d = 2;
      auto inst = plant(rng, d, d + 1, 1e-7, 0.35);
      const auto result =
          extend_with_properness(inst.domain, inst.images, eps, d + 1, opt);
      CHECK_FALSE(result.refusal.has_value());
      CHECK(result.map.valid());
      CHECK(result.interpolation_error <= 1e-7 * inst.domain.diameter());
    }
  }
}

TEST_CASE("path distances") {
  PointConfig chain(1, {v1(0), v1(1), v1(2)});
  CHECK(path_distance(chain, 1.0, 0, 2) == doctest::Approx(2.0));
  CHECK(path_distance(chain, 2.0, 0, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(path_distance(chain, std::numeric_limits<double>::infinity(), 0, 2) ==
        doctest::Approx(1.0));

  // monotonicity: K^inf <= K^p <= k^{1/p} K^inf
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = oracle::random_config(rng, 2, 6);
    const double kinf =
        path_distance(x, std::numeric_limits<double>::infinity(), 0, 5);
    for (double p : {1.0, 2.0, 4.0}) {
      const double kp = path_distance(x, p, 0, 5);
      CHECK(kinf <= kp * (1.0 + 1e-12));
      CHECK(kp <= std::pow(6.0, 1.0 / p) * kinf * (1.0 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("glued maps pass a bijectivity-level pair audit") {
  // two points with disjoint B4 balls, per-point movers that fix each z
  const double eps = 0.35;
  PointConfig e(2, {v2(0, 0), v2(1, 0)});
  const double tau = 1.0;
  const double b1 = std::exp(-4.0 / eps) * tau;
  std::vector<SmoothMap> per;
  per.push_back(point_mover(Vec::Zero(2), Vec::Zero(2), 0.5 * b1, b1, eps));
  per.push_back(make_identity(2));  // movers are origin-centered
  const auto glued = glue(per, make_identity(2), e, tau, eps);
  const auto audit =
      distortion_audit(glued, Region::ball(v2(0.5, 0), 3.0), 400, 77);
  CHECK(audit.sup_pair_ratio_defect < 1.0);  // sampled injectivity sanity
}
