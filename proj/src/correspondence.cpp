#include "isokit/correspondence.hpp"

#include "map_nodes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace isokit {

double heron_area(double a, double b, double c) {
  // Kahan's numerically stable ordering
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  const double t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  return t > 0.0 ? 0.25 * std::sqrt(t) : 0.0;
}

TriangleInterval triangle_area_interval(double dq1, double dq2, double dq3,
                                        double E) {
  TriangleInterval out;
  const double sp = dq1 + dq2 + dq3;
  const double alpha[3] = {sp - 2.0 * dq1, sp - 2.0 * dq2, sp - 2.0 * dq3};
  const double beta[3] = {(sp + 2.0 * dq1) * E, (sp + 2.0 * dq2) * E,
                          (sp + 2.0 * dq3) * E};
  const double s_exact = sp * alpha[0] * alpha[1] * alpha[2];  // 16 B^2
  out.b_squared = std::max(0.0, s_exact / 16.0);
  double lo_prod = sp * (1.0 - E), hi_prod = sp * (1.0 + E);
  for (int i = 0; i < 3; ++i) {
    lo_prod *= std::max(0.0, alpha[i] - beta[i]);
    hi_prod *= alpha[i] + beta[i];
  }
  out.h1 = s_exact - lo_prod;
  out.h2 = hi_prod - s_exact;
  out.lo = std::max(0.0, out.b_squared - out.h1 / 16.0);
  out.hi = out.b_squared + out.h2 / 16.0;
  return out;
}

QuadArea quad_area(const std::array<Vec, 4>& points) {
  // six pairwise distances, indexed by vertex pairs
  struct Edge {
    int u, v;
    double d;
  };
  std::array<Edge, 6> edges;
  int e = 0;
  for (int u = 0; u < 4; ++u) {
    for (int v = u + 1; v < 4; ++v) {
      edges[static_cast<std::size_t>(e++)] = {u, v, (points[static_cast<std::size_t>(u)] -
                                                     points[static_cast<std::size_t>(v)])
                                                        .norm()};
    }
  }
  // r, s: the two largest (ties broken by edge order, deterministically)
  std::array<int, 6> order{0, 1, 2, 3, 4, 5};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return edges[static_cast<std::size_t>(a)].d > edges[static_cast<std::size_t>(b)].d;
  });
  QuadArea out;
  const Edge& er = edges[static_cast<std::size_t>(order[0])];
  const Edge& es = edges[static_cast<std::size_t>(order[1])];
  out.r = er.d;
  out.s = es.d;
  // the convex case has vertex-disjoint diagonals
  const bool diagonals_disjoint =
      er.u != es.u && er.u != es.v && er.v != es.u && er.v != es.v;
  if (!diagonals_disjoint) out.nonconvex_flagged = true;

  // remaining four edges, lexicographic; a = first, c = the edge disjoint
  // from a; b, d the other two
  std::vector<Edge> rest;
  for (int i = 2; i < 6; ++i) rest.push_back(edges[static_cast<std::size_t>(order[i])]);
  std::sort(rest.begin(), rest.end(), [](const Edge& x, const Edge& y) {
    return x.u != y.u ? x.u < y.u : x.v < y.v;
  });
  const Edge a = rest[0];
  int c_idx = -1;
  for (int i = 1; i < 4; ++i) {
    const Edge& cand = rest[static_cast<std::size_t>(i)];
    if (cand.u != a.u && cand.u != a.v && cand.v != a.u && cand.v != a.v) {
      c_idx = i;
      break;
    }
  }
  if (c_idx < 0) {
    // cannot happen on K4 minus two edges, but stay deterministic
    c_idx = 1;
    out.nonconvex_flagged = true;
  }
  std::array<double, 4> sides{};
  sides[0] = a.d;
  sides[2] = rest[static_cast<std::size_t>(c_idx)].d;
  int slot = 1;
  for (int i = 1; i < 4; ++i) {
    if (i == c_idx) continue;
    sides[static_cast<std::size_t>(slot)] = rest[static_cast<std::size_t>(i)].d;
    slot += 2;
  }
  out.sides = sides;
  const double S = sides[0] * sides[0] + sides[2] * sides[2] -
                   sides[1] * sides[1] - sides[3] * sides[3];
  const double t = 4.0 * out.r * out.r * out.s * out.s - S * S;
  out.area = t > 0.0 ? 0.25 * std::sqrt(t) : 0.0;
  return out;
}

QuadInterval quad_area_interval(const QuadArea& q, double E) {
  QuadInterval out;
  const double a = q.sides[0], b = q.sides[1], c = q.sides[2], d = q.sides[3];
  const double S = a * a + c * c - b * b - d * d;
  const double S_tilde = a * a + b * b + c * c + d * d;
  const double rs2 = q.r * q.r * q.s * q.s;
  out.b_squared = std::max(0.0, (4.0 * rs2 - S * S) / 16.0);
  const double one_plus_e2 = (1.0 + E * E);
  // S in [S(1+E^2) - 2E S~, S(1+E^2) + 2E S~]; -S^2 accordingly
  const double s_lo = S * one_plus_e2 - 2.0 * E * S_tilde;
  const double s_hi = S * one_plus_e2 + 2.0 * E * S_tilde;
  double s2_hi = std::max(s_lo * s_lo, s_hi * s_hi);
  double s2_lo = (s_lo <= 0.0 && s_hi >= 0.0) ? 0.0 : std::min(s_lo * s_lo, s_hi * s_hi);
  const double em4 = std::pow(1.0 - E, 4), ep4 = std::pow(1.0 + E, 4);
  const double sixteen_a2_lo = 4.0 * rs2 * em4 - s2_hi;
  const double sixteen_a2_hi = 4.0 * rs2 * ep4 - s2_lo;
  const double ref = (4.0 * rs2 - S * S) * one_plus_e2 * one_plus_e2;
  out.h1_hat = ref - sixteen_a2_lo;
  out.h2_hat = sixteen_a2_hi - ref;
  out.lo = std::max(0.0, sixteen_a2_lo / 16.0);
  out.hi = std::max(0.0, sixteen_a2_hi / 16.0);
  return out;
}

MultisetReport distance_multiset_compare(const PointConfig& P,
                                         const PointConfig& Q, double tol) {
  if (P.size() != Q.size()) throw DimensionMismatch("size mismatch");
  if (P.size() < 2) throw InsufficientPoints("need >= 2 points");
  std::vector<double> dp, dq;
  for (int i = 0; i < P.size(); ++i) {
    for (int j = i + 1; j < P.size(); ++j) {
      dp.push_back((P.points[i] - P.points[j]).norm());
      dq.push_back((Q.points[i] - Q.points[j]).norm());
    }
  }
  std::sort(dp.begin(), dp.end());
  std::sort(dq.begin(), dq.end());
  const double scale = std::max(P.diameter(), Q.diameter());
  MultisetReport report;
  report.equal = true;
  for (std::size_t i = 0; i < dp.size(); ++i) {
    if (std::abs(dp[i] - dq[i]) > tol * scale) {
      report.equal = false;
      if (report.unmatched.size() < 16) report.unmatched.emplace_back(dp[i], dq[i]);
    }
  }
  return report;
}

namespace {

template <std::size_t N>
std::vector<std::array<int, N>> tuples_of(int n) {
  std::vector<std::array<int, N>> out;
  std::array<int, N> idx;
  for (std::size_t i = 0; i < N; ++i) idx[i] = static_cast<int>(i);
  if (n < static_cast<int>(N)) return out;
  while (true) {
    out.push_back(idx);
    int i = static_cast<int>(N) - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - static_cast<int>(N) + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < N; ++j) {
      idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

double triangle_area_of(const PointConfig& c, const std::array<int, 3>& t) {
  return heron_area((c.points[static_cast<std::size_t>(t[0])] -
                     c.points[static_cast<std::size_t>(t[1])])
                        .norm(),
                    (c.points[static_cast<std::size_t>(t[0])] -
                     c.points[static_cast<std::size_t>(t[2])])
                        .norm(),
                    (c.points[static_cast<std::size_t>(t[1])] -
                     c.points[static_cast<std::size_t>(t[2])])
                        .norm());
}

std::array<double, 3> triangle_sides_of(const PointConfig& c,
                                        const std::array<int, 3>& t) {
  return {(c.points[static_cast<std::size_t>(t[0])] -
           c.points[static_cast<std::size_t>(t[1])])
              .norm(),
          (c.points[static_cast<std::size_t>(t[0])] -
           c.points[static_cast<std::size_t>(t[2])])
              .norm(),
          (c.points[static_cast<std::size_t>(t[1])] -
           c.points[static_cast<std::size_t>(t[2])])
              .norm()};
}

}  // namespace

AreaTables<3> triangle_area_tables(const PointConfig& P, const PointConfig& Q,
                                   const ToleranceModel& tol) {
  if (P.size() < 3 || Q.size() < 3) throw InsufficientPoints("need n >= 3");
  AreaTables<3> tables;
  tables.p_tuples = tuples_of<3>(P.size());
  tables.q_tuples = tuples_of<3>(Q.size());
  const double diam = std::max(P.diameter(), Q.diameter());
  const double area_tol = tol.area_tol > 0.0 ? tol.area_tol : 1e-9 * diam * diam;
  for (const auto& t : tables.p_tuples) tables.p_areas.push_back(triangle_area_of(P, t));
  for (const auto& t : tables.q_tuples) tables.q_areas.push_back(triangle_area_of(Q, t));
  tables.p_matched.assign(tables.p_tuples.size(), 0);
  tables.q_matched.assign(tables.q_tuples.size(), 0);
  for (std::size_t i = 0; i < tables.p_tuples.size(); ++i) {
    for (std::size_t j = 0; j < tables.q_tuples.size(); ++j) {
      bool match;
      if (tol.E <= 0.0) {
        match = std::abs(tables.p_areas[i] - tables.q_areas[j]) <= area_tol;
      } else {
        const auto sides = triangle_sides_of(Q, tables.q_tuples[j]);
        match = triangle_area_interval(sides[0], sides[1], sides[2], tol.E)
                    .contains_area(tables.p_areas[i]);
      }
      if (match) {
        tables.p_matched[i] = 1;
        tables.q_matched[j] = 1;
      }
    }
  }
  return tables;
}

AreaTables<4> quad_area_tables(const PointConfig& P, const PointConfig& Q,
                               const ToleranceModel& tol) {
  if (P.size() < 4 || Q.size() < 4) throw InsufficientPoints("need n >= 4");
  AreaTables<4> tables;
  tables.p_tuples = tuples_of<4>(P.size());
  tables.q_tuples = tuples_of<4>(Q.size());
  const double diam = std::max(P.diameter(), Q.diameter());
  const double area_tol = tol.area_tol > 0.0 ? tol.area_tol : 1e-9 * diam * diam;
  std::vector<QuadArea> p_quads, q_quads;
  for (const auto& t : tables.p_tuples) {
    p_quads.push_back(quad_area({P.points[static_cast<std::size_t>(t[0])],
                                 P.points[static_cast<std::size_t>(t[1])],
                                 P.points[static_cast<std::size_t>(t[2])],
                                 P.points[static_cast<std::size_t>(t[3])]}));
    tables.p_areas.push_back(p_quads.back().area);
  }
  for (const auto& t : tables.q_tuples) {
    q_quads.push_back(quad_area({Q.points[static_cast<std::size_t>(t[0])],
                                 Q.points[static_cast<std::size_t>(t[1])],
                                 Q.points[static_cast<std::size_t>(t[2])],
                                 Q.points[static_cast<std::size_t>(t[3])]}));
    tables.q_areas.push_back(q_quads.back().area);
  }
  tables.p_matched.assign(tables.p_tuples.size(), 0);
  tables.q_matched.assign(tables.q_tuples.size(), 0);
  for (std::size_t i = 0; i < tables.p_tuples.size(); ++i) {
    for (std::size_t j = 0; j < tables.q_tuples.size(); ++j) {
      bool match;
      if (tol.E <= 0.0) {
        match = std::abs(tables.p_areas[i] - tables.q_areas[j]) <= area_tol;
      } else {
        match = quad_area_interval(q_quads[j], tol.E).contains_area(tables.p_areas[i]);
      }
      if (match) {
        tables.p_matched[i] = 1;
        tables.q_matched[j] = 1;
      }
    }
  }
  return tables;
}

MotionFit align_after_match(const PointConfig& P, const PointConfig& Q,
                            std::span<const int> permutation) {
  std::vector<Vec> ps, qs;
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    if (permutation[i] < 0) continue;
    ps.push_back(P.points[i]);
    qs.push_back(Q.points[static_cast<std::size_t>(permutation[i])]);
  }
  if (ps.empty()) throw InsufficientPoints("empty permutation");
  const auto result =
      orthogonal_procrustes(PointConfig(P.dim, ps), PointConfig(Q.dim, qs));
  MotionFit fit;
  fit.motion = result.motion;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    fit.max_point_error =
        std::max(fit.max_point_error, (qs[i] - fit.motion.apply(ps[i])).norm());
  }
  return fit;
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

namespace {

struct SearchContext {
  const PointConfig& P;
  const PointConfig& Q;
  Mat dp, dq;
  double E = 0.0;
  double dist_tol = 0.0;  // absolute tolerance at E = 0

  bool edge_compatible(int i, int j, int qi, int qj) const {
    const double a = dp(i, j), b = dq(qi, qj);
    if (E <= 0.0) return std::abs(a - b) <= dist_tol;
    if (b <= 0.0) return a <= 0.0;
    const double ratio = a / b;
    return ratio >= 1.0 - E && ratio <= 1.0 + E;
  }
};

// Exhaustive distance-compatible assignment search with a bound on the
// number of excluded points; collects all assignments of maximal size.
struct Backtracker {
  const SearchContext& ctx;
  int n;
  int max_exclusions;
  int best_size = 0;
  std::vector<std::vector<int>> results;
  std::vector<int> current;
  std::vector<char> used;
  std::size_t result_cap;

  Backtracker(const SearchContext& c, int exclusions, std::size_t cap)
      : ctx(c),
        n(c.P.size()),
        max_exclusions(exclusions),
        current(static_cast<std::size_t>(n), -1),
        used(static_cast<std::size_t>(c.Q.size()), 0),
        result_cap(cap) {}

  void run() { descend(0, 0, 0); }

  void descend(int i, int assigned, int excluded) {
    if (assigned + (n - i) < best_size) return;  // cannot beat the best
    if (i == n) {
      if (assigned < 3) return;
      if (assigned > best_size) {
        best_size = assigned;
        results.clear();
      }
      if (assigned == best_size && results.size() < result_cap) {
        results.push_back(current);
      }
      return;
    }
    for (int q = 0; q < ctx.Q.size(); ++q) {
      if (used[static_cast<std::size_t>(q)]) continue;
      bool ok = true;
      for (int j = 0; j < i && ok; ++j) {
        if (current[static_cast<std::size_t>(j)] < 0) continue;
        ok = ctx.edge_compatible(j, i, current[static_cast<std::size_t>(j)], q);
      }
      if (!ok) continue;
      current[static_cast<std::size_t>(i)] = q;
      used[static_cast<std::size_t>(q)] = 1;
      descend(i + 1, assigned + 1, excluded);
      used[static_cast<std::size_t>(q)] = 0;
      current[static_cast<std::size_t>(i)] = -1;
    }
    if (excluded < max_exclusions) descend(i + 1, assigned, excluded + 1);
  }
};

Correspondence finish(const SearchContext& ctx, const std::vector<int>& perm) {
  Correspondence c;
  c.permutation = perm;
  std::vector<int> matched;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= 0) {
      ++c.matched_count;
      matched.push_back(static_cast<int>(i));
    } else {
      c.bad_points.push_back(static_cast<int>(i));
    }
  }
  const MotionFit fit = align_after_match(ctx.P, ctx.Q, perm);
  c.motion = fit.motion;
  c.residual = fit.max_point_error;
  // matched-triangle evidence over the correspondence domain (capped)
  for (std::size_t a = 0; a < matched.size() && c.evidence.size() < 20; ++a) {
    for (std::size_t b = a + 1; b < matched.size() && c.evidence.size() < 20; ++b) {
      for (std::size_t d = b + 1; d < matched.size() && c.evidence.size() < 20; ++d) {
        Correspondence::Evidence ev;
        ev.p_tuple = {matched[a], matched[b], matched[d]};
        ev.q_tuple = {perm[static_cast<std::size_t>(matched[a])],
                      perm[static_cast<std::size_t>(matched[b])],
                      perm[static_cast<std::size_t>(matched[d])]};
        ev.area = heron_area(ctx.dp(matched[a], matched[b]),
                             ctx.dp(matched[a], matched[d]),
                             ctx.dp(matched[b], matched[d]));
        c.evidence.push_back(ev);
      }
    }
  }
  return c;
}

// Every vertex bijection between two triangles whose side assignments are
// edge-compatible: 1 for scalene, 2 for isosceles, 6 for equilateral.
std::vector<std::array<int, 3>> triangle_matchings(const SearchContext& ctx,
                                                   const std::array<int, 3>& tp,
                                                   const std::array<int, 3>& tq) {
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<std::array<int, 3>> out;
  for (const auto& perm : perms) {
    bool ok = true;
    for (int a = 0; a < 3 && ok; ++a) {
      for (int b = a + 1; b < 3 && ok; ++b) {
        ok = ctx.edge_compatible(tp[static_cast<std::size_t>(a)],
                                 tp[static_cast<std::size_t>(b)],
                                 tq[static_cast<std::size_t>(perm[a])],
                                 tq[static_cast<std::size_t>(perm[b])]);
      }
    }
    if (ok) {
      out.push_back({tq[static_cast<std::size_t>(perm[0])],
                     tq[static_cast<std::size_t>(perm[1])],
                     tq[static_cast<std::size_t>(perm[2])]});
    }
  }
  return out;
}

std::vector<Correspondence> graph_backtrack(const SearchContext& ctx,
                                            const SearchOptions& options) {
  std::vector<Correspondence> out;
  const int n = ctx.P.size();
  for (int exclusions = 0; exclusions <= n - 3; ++exclusions) {
    Backtracker bt(ctx, exclusions,
                   static_cast<std::size_t>(options.max_results) * 4);
    bt.run();
    if (!bt.results.empty() && bt.best_size >= n - exclusions) {
      for (const auto& perm : bt.results) out.push_back(finish(ctx, perm));
      return out;
    }
    if (!bt.results.empty() && exclusions == n - 3) {
      for (const auto& perm : bt.results) out.push_back(finish(ctx, perm));
      return out;
    }
  }
  return out;
}

std::vector<Correspondence> ten_step(const SearchContext& ctx,
                                     const ToleranceModel& tol,
                                     const SearchOptions& options) {
  const int n = ctx.P.size();
  const AreaTables<3> tables = triangle_area_tables(ctx.P, ctx.Q, tol);

  // Step 1: discard points that appear only in unmatched triangles.
  std::vector<char> p_alive(static_cast<std::size_t>(n), 0);
  std::vector<char> q_alive(static_cast<std::size_t>(ctx.Q.size()), 0);
  for (std::size_t t = 0; t < tables.p_tuples.size(); ++t) {
    if (!tables.p_matched[t]) continue;
    for (int v : tables.p_tuples[t]) p_alive[static_cast<std::size_t>(v)] = 1;
  }
  for (std::size_t t = 0; t < tables.q_tuples.size(); ++t) {
    if (!tables.q_matched[t]) continue;
    for (int v : tables.q_tuples[t]) q_alive[static_cast<std::size_t>(v)] = 1;
  }

  // Matched-area processing order: ascending multiplicity, then area (the
  // paper's "modes" ordering made deterministic).
  struct Group {
    double area = 0.0;
    std::vector<std::size_t> p_idx;
    std::vector<std::size_t> q_idx;
  };
  std::vector<Group> groups;
  {
    const double diam = std::max(ctx.P.diameter(), ctx.Q.diameter());
    const double area_tol =
        tol.area_tol > 0.0 ? tol.area_tol : 1e-9 * diam * diam;
    const double bucket =
        tol.E > 0.0 ? std::max(tol.E * diam * diam, area_tol) : area_tol;
    std::vector<std::size_t> order(tables.p_tuples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return tables.p_areas[a] < tables.p_areas[b];
    });
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const std::size_t t = order[oi];
      if (!tables.p_matched[t]) continue;
      if (!groups.empty() && std::abs(groups.back().area - tables.p_areas[t]) <=
                                 bucket) {
        groups.back().p_idx.push_back(t);
      } else {
        Group g;
        g.area = tables.p_areas[t];
        g.p_idx.push_back(t);
        groups.push_back(std::move(g));
      }
    }
    for (Group& g : groups) {
      for (std::size_t t = 0; t < tables.q_tuples.size(); ++t) {
        if (!tables.q_matched[t]) continue;
        bool in_range;
        if (tol.E <= 0.0) {
          in_range = std::abs(tables.q_areas[t] - g.area) <= bucket;
        } else {
          const auto sides = triangle_sides_of(ctx.Q, tables.q_tuples[t]);
          in_range = triangle_area_interval(sides[0], sides[1], sides[2], tol.E)
                         .contains_area(g.area);
        }
        if (in_range) g.q_idx.push_back(t);
      }
    }
    std::stable_sort(groups.begin(), groups.end(), [](const Group& a,
                                                      const Group& b) {
      const std::size_t ma = a.p_idx.size() * a.q_idx.size();
      const std::size_t mb = b.p_idx.size() * b.q_idx.size();
      return ma != mb ? ma < mb : a.area < b.area;
    });
  }

  // Beam of partial permutations, combined triangle by triangle with full
  // cross-distance verification on every union.
  std::set<std::vector<int>> beam;
  beam.insert(std::vector<int>(static_cast<std::size_t>(n), -1));
  bool overflow = false;
  for (const Group& group : groups) {
    for (std::size_t pt : group.p_idx) {
      const auto& tp = tables.p_tuples[pt];
      bool skip = false;
      for (int v : tp) {
        if (!p_alive[static_cast<std::size_t>(v)]) skip = true;
      }
      if (skip) continue;
      std::set<std::vector<int>> next = beam;
      for (std::size_t qt : group.q_idx) {
        const auto& tq = tables.q_tuples[qt];
        for (const auto& image : triangle_matchings(ctx, tp, tq)) {
          for (const std::vector<int>& partial : beam) {
            std::vector<int> merged = partial;
            bool ok = true;
            for (int a = 0; a < 3 && ok; ++a) {
              const int pi = tp[static_cast<std::size_t>(a)];
              const int qi = image[static_cast<std::size_t>(a)];
              if (merged[static_cast<std::size_t>(pi)] == qi) continue;
              if (merged[static_cast<std::size_t>(pi)] != -1) {
                ok = false;
                break;
              }
              for (int other = 0; other < n && ok; ++other) {
                if (merged[static_cast<std::size_t>(other)] == qi) ok = false;
              }
              if (!ok) break;
              // cross-distance checks against everything already assigned
              for (int other = 0; other < n && ok; ++other) {
                const int qo = merged[static_cast<std::size_t>(other)];
                if (qo < 0 || other == pi) continue;
                ok = ctx.edge_compatible(other, pi, qo, qi);
              }
              if (ok) merged[static_cast<std::size_t>(pi)] = qi;
            }
            if (ok) next.insert(std::move(merged));
            if (next.size() > static_cast<std::size_t>(options.beam_cap)) {
              overflow = true;
              break;
            }
          }
          if (overflow) break;
        }
        if (overflow) break;
      }
      if (overflow) break;
      beam = std::move(next);
    }
    if (overflow) break;
  }
  if (overflow) return graph_backtrack(ctx, options);

  int best = 0;
  for (const auto& perm : beam) {
    int size = 0;
    for (int v : perm) size += v >= 0 ? 1 : 0;
    best = std::max(best, size);
  }
  std::vector<Correspondence> out;
  if (best < 3) return out;
  for (const auto& perm : beam) {
    int size = 0;
    for (int v : perm) size += v >= 0 ? 1 : 0;
    if (size == best && out.size() < static_cast<std::size_t>(options.max_results)) {
      out.push_back(finish(ctx, perm));
    }
  }
  return out;
}

}  // namespace

std::vector<Correspondence> correspondence_search(const PointConfig& P,
                                                  const PointConfig& Q,
                                                  const ToleranceModel& tol,
                                                  SearchMethod method,
                                                  const SearchOptions& options) {
  if (P.size() != Q.size()) throw DimensionMismatch("configs must match in size");
  if (P.size() < 3) throw InsufficientPoints("need n >= 3");
  if (method == SearchMethod::TenStep && P.dim != 2) {
    throw DimensionMismatch("the ten-step search assumes D = 2");
  }
  if (method == SearchMethod::GraphBacktrack && P.size() > options.graph_budget) {
    throw BudgetExceeded("n exceeds the backtracking budget");
  }
  SearchContext ctx{P, Q, pairwise_distances(P), pairwise_distances(Q), tol.E,
                    tol.distance_tol > 0.0
                        ? tol.distance_tol
                        : 1e-9 * std::max(P.diameter(), Q.diameter())};

  std::vector<Correspondence> results = method == SearchMethod::TenStep
                                            ? ten_step(ctx, tol, options)
                                            : graph_backtrack(ctx, options);

  // Bad-point fallback: pair-exclusion loop when nothing of size n-1 exists.
  const int n = P.size();
  int best = 0;
  for (const auto& c : results) best = std::max(best, c.matched_count);
  if (options.bad_point_fallback && best < n - 1 && n > 3 &&
      n <= options.graph_budget) {
    // O(n^2) pair-exclusion loop: strike one q point, allow one p exclusion.
    for (int j = 0; j < n && best < n - 1; ++j) {
      Backtracker bt(ctx, 1, 8);
      bt.used[static_cast<std::size_t>(j)] = 1;
      bt.run();
      for (const auto& perm : bt.results) {
        int size = 0;
        for (int v : perm) size += v >= 0 ? 1 : 0;
        if (size >= n - 1 && size > best) {
          results.clear();
          results.push_back(finish(ctx, perm));
          best = size;
        }
      }
    }
  }

  std::sort(results.begin(), results.end(),
            [](const Correspondence& a, const Correspondence& b) {
              if (a.matched_count != b.matched_count) {
                return a.matched_count > b.matched_count;
              }
              return a.permutation < b.permutation;
            });
  // relabeling-criterion sanity (vertex-induced edge maps always satisfy the
  // shared-vertex condition; assert it on full matches when n != 4)
  for (const auto& c : results) {
    if (c.matched_count == n && n != 4) {
      for (int i = 0; i < n; ++i) {
        if (c.permutation[static_cast<std::size_t>(i)] < 0) {
          throw Error("full correspondence with an excluded point");
        }
      }
    }
  }
  return results;
}

Json Correspondence::to_json() const {
  Json j;
  j["permutation"] = permutation;
  j["matched_count"] = matched_count;
  j["residual"] = residual;
  j["bad_points"] = bad_points;
  j["motion"] = Json{{"linear", nodes::mat_to_json(motion.linear)},
                     {"translation", nodes::vec_to_json(motion.translation)}};
  Json ev = Json::array();
  for (const Evidence& e : evidence) {
    ev.push_back(Json{{"p_tuple", e.p_tuple}, {"q_tuple", e.q_tuple}, {"area", e.area}});
  }
  j["evidence"] = ev;
  return j;
}

}  // namespace isokit
