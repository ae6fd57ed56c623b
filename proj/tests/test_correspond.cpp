#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isokit/correspondence.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace isokit;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// 1 x 2 rectangle and the non-congruent "T" configuration with the same
// distance multiset {1, 1, 2, 2, sqrt5, sqrt5}.
PointConfig rectangle_config() {
  return PointConfig(2, {v2(0, 0), v2(1, 0), v2(0, 2), v2(1, 2)});
}

PointConfig tshape_config() {
  return PointConfig(2, {v2(0, 0), v2(1, 0), v2(0, 2), v2(-1, 0)});
}

struct PlantedMatch {
  PointConfig p, q;
  std::vector<int> truth;  // p index -> q index
};

PlantedMatch plant_match(std::mt19937_64& rng, int n, double noise) {
  PlantedMatch out;
  while (true) {
    out.p = oracle::random_config(rng, 2, n);
    if (out.p.separation() > 0.15 * out.p.diameter()) break;
  }
  const auto motion = oracle::random_motion(rng, 2);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Vec> q(static_cast<std::size_t>(n), Vec::Zero(2));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Vec y = motion.apply(out.p.points[static_cast<std::size_t>(i)]);
    if (noise > 0.0) {
      // displacements scaled by the separation keep the pairwise ratios
      // within (1 +- 2 noise) even for the closest pair
      Vec d(2);
      d << gauss(rng), gauss(rng);
      y += noise * out.p.separation() * d / std::max(d.norm(), 1e-12);
    }
    q[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = y;
  }
  out.q = PointConfig(2, std::move(q));
  out.truth = perm;
  return out;
}

}  // namespace

TEST_CASE("heron and quad areas") {
  CHECK(heron_area(3, 4, 5) == doctest::Approx(6.0));
  SUBCASE("unit square") {
    const auto q = quad_area({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)});
    CHECK(q.area == doctest::Approx(1.0));
    CHECK(q.r == doctest::Approx(std::sqrt(2.0)));
    CHECK_FALSE(q.nonconvex_flagged);
  }
  SUBCASE("1 x 2 rectangle") {
    const auto q = quad_area({v2(0, 0), v2(1, 0), v2(1, 2), v2(0, 2)});
    CHECK(q.area == doctest::Approx(2.0));
    CHECK(q.r == doctest::Approx(std::sqrt(5.0)));
    CHECK(q.s == doctest::Approx(std::sqrt(5.0)));
  }
  SUBCASE("areas are rigid-motion invariant") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const auto c = oracle::random_config(rng, 2, 4);
      const auto motion = oracle::random_motion(rng, 2);
      std::array<Vec, 4> a{c.points[0], c.points[1], c.points[2], c.points[3]};
      std::array<Vec, 4> b{motion.apply(c.points[0]), motion.apply(c.points[1]),
                           motion.apply(c.points[2]), motion.apply(c.points[3])};
      CHECK(quad_area(a).area ==
            doctest::Approx(quad_area(b).area).epsilon(1e-10));
      const double ha = heron_area((a[0] - a[1]).norm(), (a[0] - a[2]).norm(),
                                   (a[1] - a[2]).norm());
      const double hb = heron_area((b[0] - b[1]).norm(), (b[0] - b[2]).norm(),
                                   (b[1] - b[2]).norm());
      CHECK(ha == doctest::Approx(hb).epsilon(1e-10));
    }
  }
}

TEST_CASE("triangle interval property (Thm 20.1 forward direction)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int draws = 0;
  while (draws < 10000) {
    // random Q triangle with a nondegenerate shape
    const auto q = oracle::random_config(rng, 2, 3);
    const double dq1 = (q.points[0] - q.points[1]).norm();
    const double dq2 = (q.points[0] - q.points[2]).norm();
    const double dq3 = (q.points[1] - q.points[2]).norm();
    if (std::min({dq1, dq2, dq3}) < 1e-3) continue;
    const double E = 0.05 * unif(rng);
    // EP-consistent P distances
    const double dp1 = dq1 * (1.0 + E * (2.0 * unif(rng) - 1.0));
    const double dp2 = dq2 * (1.0 + E * (2.0 * unif(rng) - 1.0));
    const double dp3 = dq3 * (1.0 + E * (2.0 * unif(rng) - 1.0));
    // the distances may not form a triangle; Heron clamps to zero area then
    const double area = heron_area(dp1, dp2, dp3);
    const auto interval = triangle_area_interval(dq1, dq2, dq3, E);
    ++draws;
    CHECK(interval.contains_area(area));
  }
}

TEST_CASE("quad interval property (Thm 20.2 forward direction)") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int draws = 0;
  while (draws < 10000) {
    const auto qc = oracle::random_config(rng, 2, 4);
    const auto base = quad_area({qc.points[0], qc.points[1], qc.points[2],
                                 qc.points[3]});
    if (base.nonconvex_flagged || base.area < 1e-3) continue;
    const double E = 0.05 * unif(rng);
    // role-stable draws: require clear gaps between the top-two distances
    // and the sides so the r/s/(a..d) assignment survives the perturbation
    std::array<double, 6> ds{base.r,        base.s,        base.sides[0],
                             base.sides[1], base.sides[2], base.sides[3]};
    if (base.s * (1.0 - 2.0 * E) <=
        *std::max_element(ds.begin() + 2, ds.end()) * (1.0 + 2.0 * E)) {
      continue;
    }
    // perturb each distance within EP, keeping the role assignment
    const double r_p = base.r * (1.0 + E * (2.0 * unif(rng) - 1.0));
    const double s_p = base.s * (1.0 + E * (2.0 * unif(rng) - 1.0));
    std::array<double, 4> sides_p{};
    for (int i = 0; i < 4; ++i) {
      sides_p[static_cast<std::size_t>(i)] =
          base.sides[static_cast<std::size_t>(i)] *
          (1.0 + E * (2.0 * unif(rng) - 1.0));
    }
    const double S = sides_p[0] * sides_p[0] + sides_p[2] * sides_p[2] -
                     sides_p[1] * sides_p[1] - sides_p[3] * sides_p[3];
    const double t =
        4.0 * std::max(r_p, s_p) * std::max(r_p, s_p) * std::min(r_p, s_p) *
            std::min(r_p, s_p) -
        S * S;
    const double area = t > 0.0 ? 0.25 * std::sqrt(t) : 0.0;
    const auto interval = quad_area_interval(base, E);
    ++draws;
    CHECK(interval.contains_area(area));
  }
}

TEST_CASE("distance multiset comparison") {
  std::mt19937_64 rng(13);
  SUBCASE("rigid copies are Equal") {
    auto p = oracle::random_config(rng, 2, 6);
    const auto motion = oracle::random_motion(rng, 2);
    std::vector<Vec> q;
    for (const Vec& x : p.points) q.push_back(motion.apply(x));
    CHECK(distance_multiset_compare(p, PointConfig(2, q), 1e-9).equal);
  }
  SUBCASE("the rectangle/T pair has equal multisets but is not congruent") {
    const auto report =
        distance_multiset_compare(rectangle_config(), tshape_config(), 1e-9);
    CHECK(report.equal);
    // not congruent: no full-size correspondence exists
    const auto matches =
        correspondence_search(rectangle_config(), tshape_config(), {},
                              SearchMethod::GraphBacktrack);
    REQUIRE_FALSE(matches.empty());
    CHECK(matches.front().matched_count == 3);  // n - 1 after one exclusion
    CHECK(matches.front().residual <= 1e-9);
  }
  SUBCASE("perturbation beyond tolerance reports offending distances") {
    auto p = oracle::random_config(rng, 2, 5);
    auto q = p;
    q.points[2][0] += 0.1 * p.diameter();
    const auto report = distance_multiset_compare(p, q, 1e-6);
    CHECK_FALSE(report.equal);
    CHECK_FALSE(report.unmatched.empty());
  }
}

TEST_CASE("area tables") {
  std::mt19937_64 rng(17);
  SUBCASE("congruent configs at E=0 have empty A2/B2") {
    auto p = oracle::random_config(rng, 2, 6);
    const auto motion = oracle::random_motion(rng, 2);
    std::vector<Vec> qpts;
    for (const Vec& x : p.points) qpts.push_back(motion.apply(x));
    PointConfig q(2, qpts);
    const auto tri = triangle_area_tables(p, q, {});
    for (char m : tri.p_matched) CHECK(m == 1);
    for (char m : tri.q_matched) CHECK(m == 1);
    const auto quad = quad_area_tables(p, q, {});
    for (char m : quad.p_matched) CHECK(m == 1);
    for (char m : quad.q_matched) CHECK(m == 1);
  }
  SUBCASE("E > 0 keeps true matches inside the interval") {
    std::mt19937_64 rng2(19);
    auto inst = plant_match(rng2, 6, 1e-3 / 4.0);
    ToleranceModel tol;
    tol.E = 1e-3;
    const auto tri = triangle_area_tables(inst.p, inst.q, tol);
    for (char m : tri.p_matched) CHECK(m == 1);
  }
}

TEST_CASE("correspondence search recovers planted permutations") {
  std::mt19937_64 rng(23);
  SUBCASE("exact rigid instances, both methods, n = 8") {
    for (int trial = 0; trial < 10; ++trial) {
      auto inst = plant_match(rng, 8, 0.0);
      for (auto method : {SearchMethod::GraphBacktrack, SearchMethod::TenStep}) {
        const auto results = correspondence_search(inst.p, inst.q, {}, method);
        REQUIRE_FALSE(results.empty());
        const auto& best = results.front();
        CHECK(best.matched_count == 8);
        CHECK(best.residual <= 1e-9 * inst.p.diameter());
        bool truth_found = false;
        for (const auto& r : results) {
          if (r.permutation == inst.truth) truth_found = true;
        }
        CHECK(truth_found);
      }
    }
  }
  SUBCASE("distorted instances with E = 1e-3") {
    for (int trial = 0; trial < 6; ++trial) {
      auto inst = plant_match(rng, 7, 1e-3 / 4.0);
      ToleranceModel tol;
      tol.E = 1e-3;
      for (auto method : {SearchMethod::GraphBacktrack, SearchMethod::TenStep}) {
        const auto results = correspondence_search(inst.p, inst.q, tol, method);
        REQUIRE_FALSE(results.empty());
        CHECK(results.front().matched_count == 7);
        CHECK(results.front().residual <= 10.0 * 1e-3 * inst.p.diameter());
      }
    }
  }
  SUBCASE("ten-step full-size results are confirmed by the backtracker") {
    for (int trial = 0; trial < 6; ++trial) {
      auto inst = plant_match(rng, 6, 0.0);
      const auto ten =
          correspondence_search(inst.p, inst.q, {}, SearchMethod::TenStep);
      const auto graph =
          correspondence_search(inst.p, inst.q, {}, SearchMethod::GraphBacktrack);
      REQUIRE_FALSE(ten.empty());
      REQUIRE_FALSE(graph.empty());
      for (const auto& t : ten) {
        if (t.matched_count != inst.p.size()) continue;
        bool found = false;
        for (const auto& g : graph) found = found || g.permutation == t.permutation;
        CHECK(found);
      }
    }
  }
  SUBCASE("planted bad point yields an n-1 correspondence") {
    auto inst = plant_match(rng, 7, 0.0);
    // corrupt one target point beyond any tolerance
    inst.q.points[static_cast<std::size_t>(inst.truth[3])] +=
        v2(0.37 * inst.p.diameter(), 0.21 * inst.p.diameter());
    const auto results =
        correspondence_search(inst.p, inst.q, {}, SearchMethod::GraphBacktrack);
    REQUIRE_FALSE(results.empty());
    CHECK(results.front().matched_count == 6);
    CHECK(results.front().residual <= 1e-9 * inst.p.diameter());
    REQUIRE(results.front().bad_points.size() == 1);
    CHECK(results.front().bad_points[0] == 3);
  }
}

TEST_CASE("align after match") {
  std::mt19937_64 rng(29);
  SUBCASE("identity on identical configs") {
    auto p = oracle::random_config(rng, 2, 5);
    std::vector<int> id(5);
    std::iota(id.begin(), id.end(), 0);
    const auto fit = align_after_match(p, p, id);
    CHECK(fit.max_point_error <= 1e-12);
    CHECK(fit.motion.is_identity(1e-12));
  }
  SUBCASE("planted rigid instance recovers the motion") {
    auto inst = plant_match(rng, 6, 0.0);
    const auto fit = align_after_match(inst.p, inst.q, inst.truth);
    CHECK(fit.max_point_error <= 1e-10 * inst.p.diameter());
  }
}
