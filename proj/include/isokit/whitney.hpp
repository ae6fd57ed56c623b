#ifndef ISOKIT_WHITNEY_HPP
#define ISOKIT_WHITNEY_HPP

#include "isokit/distortion.hpp"

#include <optional>
#include <unordered_map>

namespace isokit {

// Compact set presented by a membership oracle with analytic distance where
// available.  Admissibility: every nearby exterior point sees an interior
// ball of comparable radius at comparable distance.
class AdmissibleSet {
 public:
  enum class Kind { Ball, UnionOfBalls, Box, Segment, Oracle };

  static AdmissibleSet ball(const Vec& center, double radius);
  static AdmissibleSet union_of_balls(std::vector<std::pair<Vec, double>> balls);
  static AdmissibleSet box(const Vec& lo, const Vec& hi);
  static AdmissibleSet segment(const Vec& a, const Vec& b);  // zero-thickness rod
  static AdmissibleSet oracle(std::function<bool(const Vec&)> membership,
                              const Vec& bbox_lo, const Vec& bbox_hi,
                              double resolution);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(bbox_lo_.size()); }
  bool contains(const Vec& x) const;
  double distance(const Vec& x) const;         // dist(x, E)
  double signed_distance(const Vec& x) const;  // negative inside
  double diameter() const;
  const Vec& bbox_lo() const { return bbox_lo_; }
  const Vec& bbox_hi() const { return bbox_hi_; }

  // Interior ball B(z, r) subset E with |z - x| <= c1 d(x), r >= c2 d(x).
  std::optional<std::pair<Vec, double>> inward_ball(const Vec& x, double c1,
                                                    double c2) const;
  // The largest interior ball this set can exhibit (the "far" ball).
  std::optional<std::pair<Vec, double>> far_ball() const;

  Json to_json() const;
  static AdmissibleSet from_json(const Json& j);

 private:
  Kind kind_ = Kind::Ball;
  std::vector<std::pair<Vec, double>> balls_;  // Ball / UnionOfBalls
  Vec box_lo_, box_hi_;                        // Box
  Vec seg_a_, seg_b_;                          // Segment
  std::function<bool(const Vec&)> membership_;
  double resolution_ = 0.0;
  Vec bbox_lo_, bbox_hi_;
};

struct AdmissibilityReport {
  bool pass = false;
  std::optional<Vec> witness;  // uncovered probe on failure
  int probes_checked = 0;
};

// Deterministic-lattice verification of the admissibility constants.
AdmissibilityReport check_admissible(const AdmissibleSet& set, int probes_per_axis,
                                     double c0, double c1, double c2);

struct WhitneyCube {
  Vec center;
  double side = 0.0;
  bool small_cube = false;
  Vec ball_center;           // per-cube interior ball (small cubes)
  double ball_radius = 0.0;
  EuclideanMotion motion;    // A_nu (set by select_cube_motions)
  bool has_motion = false;
};

struct WhitneyCoverParams {
  double keep_hi = 2.0;     // keep when diam(Q) <= d(center)/keep_hi
  double keep_lo = 8.0;     // expected diam(Q) >= d(center)/keep_lo
  double floor_side = 0.0;  // 0: derived from eta
  double c0 = 0.0;          // 0: diameter/4
  double c1 = 2.0;
  double c2 = 0.25;
};

class WhitneyCover {
 public:
  WhitneyCover() = default;

  const std::vector<WhitneyCube>& cubes() const { return cubes_; }
  std::vector<WhitneyCube>& cubes() { return cubes_; }
  const AdmissibleSet& set() const { return *set_; }
  double gap_width() const { return gap_width_; }
  double eta() const { return eta_; }
  void set_eta(double eta) { eta_ = eta; }
  double c0() const { return c0_; }
  double c3() const { return c3_; }
  const EuclideanMotion& far_motion() const { return far_motion_; }
  const std::pair<Vec, double>& far_ball() const { return far_ball_; }

  // Indices of cubes whose bump support (the 2x dilate) contains x.
  std::vector<int> touching(const Vec& x) const;

  // Sum_nu beta_nu Theta_nu(x); zero off the covered region and on E.
  double regularized_distance(const Vec& x) const;

  friend WhitneyCover whitney_cubes(const AdmissibleSet& set,
                                    const WhitneyCoverParams& params, double eta);
  friend void select_cube_motions(WhitneyCover& cover, const SmoothMap& phi);
  friend class WhitneyBlendNode;
  Json to_json(bool with_motions) const;
  static WhitneyCover from_json(const Json& j);

 private:
  void index_cubes();
  std::shared_ptr<const AdmissibleSet> set_;
  std::vector<WhitneyCube> cubes_;
  double eta_ = 0.0;
  double c0_ = 0.0;
  double c3_ = 0.0;
  double gap_width_ = 0.0;
  Vec root_lo_;
  EuclideanMotion far_motion_;
  std::pair<Vec, double> far_ball_{Vec(), 0.0};
  bool has_motions_ = false;
  // per-level uniform grids for O(1) touching-cube lookup
  struct Level {
    double side = 0.0;
    std::unordered_map<std::int64_t, int> grid;
  };
  std::vector<Level> levels_;
};

// Dyadic subdivision of the complement near E; cube sidelength comparable to
// the distance to E, bounded overlap of the dilates.
WhitneyCover whitney_cubes(const AdmissibleSet& set,
                           const WhitneyCoverParams& params = {}, double eta = 0.0);

// Per-cube Euclidean motions from the Gram-Schmidt frame of phi over the
// cube's interior ball; all big cubes share the far ball's motion.
void select_cube_motions(WhitneyCover& cover, const SmoothMap& phi);

struct WhitneyReport {
  bool ok = false;
  std::string failure;
  double phi_audit = 0.0;            // jacobian defect of phi near E
  double partition_defect = 0.0;     // |1 - sum| over probes
  int max_overlap = 0;               // touching-support count over probes
  double consistency_constant = 0.0; // |A_mu - A_nu| / (eps delta) over overlaps
  double near_agreement = 0.0;       // max |Phi - phi| where delta < eta
  double far_agreement = 0.0;        // max |Phi - A_inf| where d >= c0
  double jacobian_defect = 0.0;      // global ||J^T J - I|| over probes
};

struct WhitneyExtension {
  SmoothMap map;  // invalid when report.ok is false
  WhitneyReport report;
};

// The blended extension Theta_in phi + sum Theta_nu A_nu; post-hoc checks
// fill the report, and failures return the diagnostic report without a map.
WhitneyExtension whitney_extend(const AdmissibleSet& set, const SmoothMap& phi,
                                double epsilon, double eta = 0.0,
                                const WhitneyCoverParams& params = {});

}  // namespace isokit

#endif  // ISOKIT_WHITNEY_HPP
