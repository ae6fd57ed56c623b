#ifndef ISOKIT_DISTORTION_HPP
#define ISOKIT_DISTORTION_HPP

#include "isokit/smooth_map.hpp"

namespace isokit {

// ---------------------------------------------------------------------------
// Angle functions for slow twists.  Condition A: sup_t t|f'(t)| stays below
// the caller's bound.
// ---------------------------------------------------------------------------

struct AngleFunction {
  enum class Kind { Constant, ExpDecay, SmoothLogRamp, Linear, Quadratic };

  Kind kind = Kind::Constant;
  double amplitude = 0.0;  // a
  double rate = 0.0;       // c (ExpDecay)
  double r1 = 0.0, r2 = 0.0;  // SmoothLogRamp: a for t<=r1, 0 for t>=r2

  static AngleFunction constant(double a);
  static AngleFunction exp_decay(double a, double c);
  // C-infinity ramp, linear in log t between r1 and r2 up to the smooth step.
  static AngleFunction smooth_log_ramp(double a, double r1, double r2);
  static AngleFunction linear(double a);     // fast twist (condition A fails)
  static AngleFunction quadratic(double a);  // fast twist (condition A fails)

  double value(double t) const;
  double deriv(double t) const;
  // Analytic sup of t|f'(t)|; infinity for the fast kinds.
  double condition_a_bound() const;

  Json to_json() const;
  static AngleFunction from_json(const Json& j);
};

struct TwistBlock {
  int axis0 = 0;
  int axis1 = 1;
  AngleFunction angle;
};

// Audit constants relating a builder's parameter bound to its claimed
// distortion: |J^T J - I| <= 2b + b^2 for both twists and slides.
inline constexpr double kBuilderAuditConstant = 3.0;

// Localized rotations run their angle ramps at up to this multiple of the
// requested epsilon, so audits land at C*eps with C <= 8.
inline constexpr double kTwistBudgetFactor = 3.0;

// Smallest log(c2/c1) for which a localized rotation with the given largest
// block angle meets the distortion budget.
inline double localize_required_logspan(double max_angle, double epsilon) {
  return kSmoothStepDerivMax * max_angle / (kTwistBudgetFactor * epsilon);
}

// x -> F^T St(|x|) F x with St block-diagonal in the given 2x2 blocks.
// Condition A is checked analytically and on a log-spaced grid; violations
// raise ConditionAViolated unless force_fast is set (for the fast-twist
// negative illustrations).
SmoothMap slow_twist(const Mat& frame, std::vector<TwistBlock> blocks,
                     bool force_fast = false);

// ---------------------------------------------------------------------------
// Slides: x -> x + f(x) for a small closed-form displacement field.
// ---------------------------------------------------------------------------

struct DisplacementField {
  enum class Kind { Constant, RadialBump, ReciprocalExp };

  Kind kind = Kind::Constant;
  Vec vector;       // Constant / RadialBump
  Vec center;       // RadialBump
  double r1 = 0.0, r2 = 0.0;  // RadialBump: full inside r1, zero outside r2
  double a = 0.0, b = 0.0, c = 0.0;  // ReciprocalExp (D=2 demo field)

  static DisplacementField constant(const Vec& v);
  static DisplacementField radial_bump(const Vec& center, double r1, double r2,
                                       const Vec& v);
  // (a/(1+x0^2), b*exp(-c*sqrt(x1^2+1e-30)))
  static DisplacementField reciprocal_exp(double a, double b, double c);

  int dim() const;
  Vec value(const Vec& x) const;
  Mat jacobian(const Vec& x) const;
  // Analytic sup of the Jacobian norm.
  double gradient_bound() const;

  Json to_json() const;
  static DisplacementField from_json(const Json& j);
};

// Jacobian bound is verified on a probe grid; bound >= 1 raises
// ConditionBViolated (the map could fail to be a diffeomorphism).
SmoothMap slide(const DisplacementField& field);

// ---------------------------------------------------------------------------
// Localized motions (slow-twist/slide composites).
// ---------------------------------------------------------------------------

// f = M exactly on |x| <= c1, identity on |x| >= c2, distortion <= epsilon.
// Raises RatioInfeasible when log(c2/c1) cannot absorb the rotation angles.
SmoothMap localize_rotation(const Mat& rotation, double c1, double c2,
                            double epsilon);

// f = A exactly on |x| <= c3, identity on |x| >= c4.
SmoothMap localize_motion(const EuclideanMotion& motion, double c3, double c4,
                          double epsilon);

// f(x) = x_to exactly, identity outside |y| >= c7, distortion <= epsilon.
// Requires |x_from| <= c6 and a displacement small relative to epsilon*c6.
SmoothMap point_mover(const Vec& x_from, const Vec& x_to, double c6, double c7,
                      double epsilon);

// ---------------------------------------------------------------------------
// Audits.
// ---------------------------------------------------------------------------

struct Region {
  enum class Kind { Ball, Box };
  Kind kind = Kind::Ball;
  Vec center;      // Ball
  double radius = 0.0;
  Vec lo, hi;      // Box

  static Region ball(const Vec& center, double radius);
  static Region box(const Vec& lo, const Vec& hi);
  int dim() const;
  Vec sample(std::mt19937_64& rng) const;
};

struct DistortionAudit {
  double sup_jacobian_defect = 0.0;   // max ||J^T J - I||_2 over samples
  double sup_pair_ratio_defect = 0.0; // max |log(|f(x)-f(y)| / |x-y|)|
};

DistortionAudit distortion_audit(const SmoothMap& map, const Region& region,
                                 int n_samples, std::uint64_t seed);

struct BmoAudit {
  Mat rotation;            // M_B in O(D)
  double mean_residual = 0.0;
  std::array<double, 4> tail_fractions{};  // residual > {1,2,4,8} * mean
};

// Grid audit of f' against the best orthogonal approximation of its mean.
BmoAudit bmo_rotation_audit(const SmoothMap& map, const Vec& center, double radius,
                            int grid_resolution);

// Canonical-form decomposition of M in SO(D): frame F and per-plane angles
// with M = F^T R F, R block-diagonal 2x2 rotations (angles in (-pi, pi]).
struct RotationBlocks {
  Mat frame;
  std::vector<std::pair<int, int>> planes;
  std::vector<double> angles;
};
RotationBlocks so_canonical_blocks(const Mat& rotation);

}  // namespace isokit

#endif  // ISOKIT_DISTORTION_HPP
