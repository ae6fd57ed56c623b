#ifndef ISOKIT_PROCRUSTES_HPP
#define ISOKIT_PROCRUSTES_HPP

#include "isokit/geometry.hpp"

namespace isokit {

// x -> Mx + x0 with M orthogonal.
struct EuclideanMotion {
  Mat linear;
  Vec translation;
  bool proper = true;

  EuclideanMotion() = default;
  EuclideanMotion(Mat M, Vec x0);

  static EuclideanMotion identity(int dim);
  static EuclideanMotion pure_translation(const Vec& t);

  int dim() const { return static_cast<int>(translation.size()); }
  Vec apply(const Vec& x) const { return linear * x + translation; }
  EuclideanMotion inverse() const;
  // this after other: x -> this(other(x)).
  EuclideanMotion compose(const EuclideanMotion& other) const;
  bool is_identity(double tol = 0.0) const;
};

// General affine map; the linear part may be singular (flagged by det_sign).
struct AffineMap {
  Mat linear;
  Vec translation;
  int det_sign = 0;  // +1, -1, or 0 when singular

  Vec apply(const Vec& x) const { return linear * x + translation; }
};

struct ProcrustesResult {
  EuclideanMotion motion;
  double residual = 0.0;  // sqrt(sum of squared point errors)
};

// Least-squares Euclidean motion min sum |q_i - A(p_i)|^2 over O(D),
// by SVD of the centered cross-covariance.
ProcrustesResult orthogonal_procrustes(const PointConfig& P, const PointConfig& Q);

struct MotionFit {
  EuclideanMotion motion;
  double max_point_error = 0.0;
};

// Least-squares motion; when require_proper holds and the unconstrained
// optimum is improper, the optimum is reflected across a hyperplane through
// the fitted images (free of charge whenever the cross-covariance is rank
// deficient, in particular whenever k <= D).  Nondegenerate improper-only
// instances raise ProperInfeasible.
MotionFit fit_euclidean_motion(const PointConfig& P, const PointConfig& Q,
                               bool require_proper);

struct NearReflection {
  EuclideanMotion motion;       // improper
  double max_displacement = 0.0;  // max over E of |A(x) - x|
};

// For a unit-diameter set E with V_D(E) <= eta^D: the reflection through a
// hyperplane containing a maximal lower-order simplex of E.
NearReflection fit_near_reflection(const PointConfig& E, double eta);

// Unique affine map with A(xs_i) = images_i; xs must be affinely independent.
AffineMap affine_interpolant(std::span<const Vec> xs, std::span<const Vec> images);

enum class BlockClass { Positive, Negative, NotABlock };

// D+1-tuple classification: a tuple is an eta-block when its simplex volume
// clears eta^D * diam^D and the affine interpolant is nonsingular; the sign
// of det classifies it.
BlockClass classify_eta_block(std::span<const Vec> tuple, std::span<const Vec> images,
                              double eta);

}  // namespace isokit

#endif  // ISOKIT_PROCRUSTES_HPP
