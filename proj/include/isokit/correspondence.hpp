#ifndef ISOKIT_CORRESPONDENCE_HPP
#define ISOKIT_CORRESPONDENCE_HPP

#include "isokit/procrustes.hpp"
#include "isokit/smooth_map.hpp"

#include <array>
#include <optional>

namespace isokit {

// Pairwise distance ratios confined to [1-E, 1+E] (property EP); E = 0
// collapses every interval to exact equality.
struct ToleranceModel {
  double E = 0.0;
  // absolute tolerances for exact-equality matching at E = 0
  double area_tol = 0.0;      // defaults to 1e-9 * diam^2
  double distance_tol = 0.0;  // defaults to 1e-9 * diam
};

double heron_area(double a, double b, double c);

// Interval for the squared area of a triangle EP-compatible with sides
// (dq1, dq2, dq3): [max(0, B^2 - H1/16), B^2 + H2/16].
struct TriangleInterval {
  double b_squared = 0.0;
  double h1 = 0.0, h2 = 0.0;
  double lo = 0.0, hi = 0.0;  // bounds on the squared area
  bool contains_area(double area) const {
    const double a2 = area * area;
    return a2 >= lo && a2 <= hi;
  }
};
TriangleInterval triangle_area_interval(double dq1, double dq2, double dq3,
                                        double E);

// Quadrilateral area from the six pairwise distances: r, s the two largest,
// a, c the opposite-edge pair among the rest.
struct QuadArea {
  double area = 0.0;
  double r = 0.0, s = 0.0;
  std::array<double, 4> sides{};  // a, b, c, d
  bool nonconvex_flagged = false; // r or s adjacent, or ties broke the roles
};
QuadArea quad_area(const std::array<Vec, 4>& points);

struct QuadInterval {
  double b_squared = 0.0;
  double h1_hat = 0.0, h2_hat = 0.0;
  double lo = 0.0, hi = 0.0;
  bool contains_area(double area) const {
    const double a2 = area * area;
    return a2 >= lo && a2 <= hi;
  }
};
QuadInterval quad_area_interval(const QuadArea& q, double E);

struct MultisetReport {
  bool equal = false;
  // offending (dp, dq) pairs when unequal, capped
  std::vector<std::pair<double, double>> unmatched;
};

MultisetReport distance_multiset_compare(const PointConfig& P,
                                         const PointConfig& Q, double tol);

// Matched/unmatched area partitions (A1/B1 and A2/B2).
template <std::size_t N>
struct AreaTables {
  std::vector<std::array<int, N>> p_tuples, q_tuples;
  std::vector<double> p_areas, q_areas;
  std::vector<char> p_matched, q_matched;
};

AreaTables<3> triangle_area_tables(const PointConfig& P, const PointConfig& Q,
                                   const ToleranceModel& tol);
AreaTables<4> quad_area_tables(const PointConfig& P, const PointConfig& Q,
                               const ToleranceModel& tol);

struct Correspondence {
  std::vector<int> permutation;  // P index -> Q index, -1 when excluded
  int matched_count = 0;
  double residual = 0.0;  // post-Procrustes max point error over the matches
  EuclideanMotion motion;
  std::vector<int> bad_points;  // excluded P indices
  // matched triangle evidence: P tuple, Q tuple, area
  struct Evidence {
    std::array<int, 3> p_tuple{};
    std::array<int, 3> q_tuple{};
    double area = 0.0;
  };
  std::vector<Evidence> evidence;

  Json to_json() const;
};

enum class SearchMethod { TenStep, GraphBacktrack };

struct SearchOptions {
  int graph_budget = 14;     // max n for the backtracking search
  int beam_cap = 10000;      // live partial permutations in the ten-step scan
  int max_results = 16;
  bool bad_point_fallback = true;  // pair-exclusion loop when below n-1
};

// Candidate correspondences of maximal size, each finished with a Procrustes
// alignment; an empty list when nothing of size >= 3 exists.
std::vector<Correspondence> correspondence_search(const PointConfig& P,
                                                  const PointConfig& Q,
                                                  const ToleranceModel& tol,
                                                  SearchMethod method,
                                                  const SearchOptions& options = {});

MotionFit align_after_match(const PointConfig& P, const PointConfig& Q,
                            std::span<const int> permutation);

}  // namespace isokit

#endif  // ISOKIT_CORRESPONDENCE_HPP
