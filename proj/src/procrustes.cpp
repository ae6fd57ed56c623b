#include "isokit/procrustes.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace isokit {

EuclideanMotion::EuclideanMotion(Mat M, Vec x0)
    : linear(std::move(M)), translation(std::move(x0)) {
  if (linear.rows() != linear.cols() || linear.rows() != translation.size()) {
    throw DimensionMismatch("motion shape mismatch");
  }
  const double orth_defect =
      (linear.transpose() * linear - Mat::Identity(linear.rows(), linear.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (orth_defect > 1e-8) {
    throw Degenerate("linear part is not orthogonal (defect " +
                     std::to_string(orth_defect) + ")");
  }
  proper = linear.determinant() > 0.0;
}

EuclideanMotion EuclideanMotion::identity(int dim) {
  EuclideanMotion m;
  m.linear = Mat::Identity(dim, dim);
  m.translation = Vec::Zero(dim);
  m.proper = true;
  return m;
}

EuclideanMotion EuclideanMotion::pure_translation(const Vec& t) {
  EuclideanMotion m;
  m.linear = Mat::Identity(t.size(), t.size());
  m.translation = t;
  m.proper = true;
  return m;
}

EuclideanMotion EuclideanMotion::inverse() const {
  EuclideanMotion m;
  m.linear = linear.transpose();
  m.translation = -(linear.transpose() * translation);
  m.proper = proper;
  return m;
}

EuclideanMotion EuclideanMotion::compose(const EuclideanMotion& other) const {
  EuclideanMotion m;
  m.linear = linear * other.linear;
  m.translation = linear * other.translation + translation;
  m.proper = (proper == other.proper);
  return m;
}

bool EuclideanMotion::is_identity(double tol) const {
  const double lin =
      (linear - Mat::Identity(linear.rows(), linear.cols())).cwiseAbs().maxCoeff();
  return lin <= tol && translation.cwiseAbs().maxCoeff() <= tol;
}

namespace {

// Deterministic sign convention: the largest-magnitude entry of each left
// singular vector is made positive (ties broken by first index).
void canonicalize_svd(Mat& U, Mat& V) {
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      if (std::abs(U(i, j)) > best) {
        best = std::abs(U(i, j));
        arg = i;
      }
    }
    if (U(arg, j) < 0.0) {
      U.col(j) *= -1.0;
      V.col(j) *= -1.0;
    }
  }
}

struct SvdFit {
  Mat U, V;
  Vec sigma;
  Vec p_bar, q_bar;
};

SvdFit centered_svd(const PointConfig& P, const PointConfig& Q) {
  const int n = P.size();
  const int d = P.dim;
  if (n != Q.size() || P.dim != Q.dim) throw DimensionMismatch("P/Q mismatch");
  if (n < 1) throw InsufficientPoints("need >= 1 point");
  Vec p_bar = Vec::Zero(d), q_bar = Vec::Zero(d);
  for (int i = 0; i < n; ++i) {
    p_bar += P.points[i];
    q_bar += Q.points[i];
  }
  p_bar /= n;
  q_bar /= n;
  Mat H = Mat::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    H += (Q.points[i] - q_bar) * (P.points[i] - p_bar).transpose();
  }
  Eigen::JacobiSVD<Mat> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdFit fit;
  fit.U = svd.matrixU();
  fit.V = svd.matrixV();
  fit.sigma = svd.singularValues();
  canonicalize_svd(fit.U, fit.V);
  fit.p_bar = p_bar;
  fit.q_bar = q_bar;
  return fit;
}

EuclideanMotion motion_from_svd(const SvdFit& fit, bool flip_smallest) {
  const int d = static_cast<int>(fit.p_bar.size());
  Mat S = Mat::Identity(d, d);
  if (flip_smallest) S(d - 1, d - 1) = -1.0;
  Mat M = fit.U * S * fit.V.transpose();
  Vec t = fit.q_bar - M * fit.p_bar;
  return EuclideanMotion(std::move(M), std::move(t));
}

}  // namespace

ProcrustesResult orthogonal_procrustes(const PointConfig& P, const PointConfig& Q) {
  const SvdFit fit = centered_svd(P, Q);
  ProcrustesResult result;
  result.motion = motion_from_svd(fit, false);
  double ss = 0.0;
  for (int i = 0; i < P.size(); ++i) {
    ss += (Q.points[i] - result.motion.apply(P.points[i])).squaredNorm();
  }
  result.residual = std::sqrt(ss);
  return result;
}

MotionFit fit_euclidean_motion(const PointConfig& P, const PointConfig& Q,
                               bool require_proper) {
  const SvdFit fit = centered_svd(P, Q);
  EuclideanMotion motion = motion_from_svd(fit, false);
  if (require_proper && !motion.proper) {
    const double sigma_max = fit.sigma.size() ? fit.sigma[0] : 0.0;
    const double sigma_min = fit.sigma.size() ? fit.sigma[fit.sigma.size() - 1] : 0.0;
    const bool rank_deficient = sigma_min <= 1e-10 * std::max(sigma_max, 1.0);
    if (rank_deficient) {
      // Flipping the null direction composes with a reflection fixing the
      // affine span of the fitted images; the optimum is unchanged.
      motion = motion_from_svd(fit, true);
    } else if (P.size() <= P.dim) {
      // k <= D always yields a rank-deficient cross-covariance; reaching
      // here means sigma_min is merely small, flip anyway.
      motion = motion_from_svd(fit, true);
    } else {
      throw ProperInfeasible(
          "improper optimum on a full-rank instance with k > D");
    }
  }
  MotionFit out;
  out.motion = std::move(motion);
  for (int i = 0; i < P.size(); ++i) {
    out.max_point_error = std::max(
        out.max_point_error, (Q.points[i] - out.motion.apply(P.points[i])).norm());
  }
  return out;
}

NearReflection fit_near_reflection(const PointConfig& E, double eta) {
  const int d = E.dim;
  const double diam = E.diameter();
  if (E.size() < 1) throw InsufficientPoints("empty set");
  const double scale = std::pow(eta, d) * std::pow(diam, d);
  if (E.size() >= d + 1) {
    const SimplexVolumeResult vd = max_simplex_volume(E, d);
    if (vd.volume > scale) {
      throw NotThin("V_D = " + std::to_string(vd.volume) + " exceeds eta^D diam^D = " +
                    std::to_string(scale));
    }
  }

  // Find l with V_{l-1} > eta^{l-1} diam^{l-1} and V_l <= eta^l diam^l;
  // V_1 = diam clears the threshold at l-1 = 1 since eta < 1.
  int l = d;
  std::vector<int> witness{0};
  if (E.size() >= 2) {
    for (int cand = 2; cand <= d; ++cand) {
      if (E.size() < cand + 1) {
        l = cand;
        break;
      }
      const SimplexVolumeResult v = max_simplex_volume(E, cand);
      if (v.volume <= std::pow(eta * diam, cand)) {
        l = cand;
        break;
      }
      l = cand + 1;
    }
    const int span_order = l - 1;
    if (E.size() >= span_order + 1 && span_order >= 1) {
      witness = max_simplex_volume(E, span_order).witness;
    }
  }

  // Hyperplane through witness[0] containing the witness span; remaining
  // normal direction: least-variance direction of E in the span complement.
  const Vec origin = E.points[witness[0]];
  Mat span(d, static_cast<int>(witness.size()) - 1);
  for (std::size_t i = 1; i < witness.size(); ++i) {
    span.col(static_cast<int>(i) - 1) = E.points[witness[i]] - origin;
  }
  // Orthonormal basis W of the complement of the span.
  Mat q = Mat::Identity(d, d);
  if (span.cols() > 0) {
    Eigen::JacobiSVD<Mat> svd(span, Eigen::ComputeFullU);
    q = svd.matrixU();
  }
  const int span_rank = static_cast<int>(span.cols());
  Mat complement = q.rightCols(d - span_rank);

  // Project E onto the complement and take the least-variance direction.
  Mat proj(static_cast<int>(E.points.size()), d - span_rank);
  for (int i = 0; i < E.size(); ++i) {
    proj.row(i) = ((E.points[i] - origin).transpose() * complement);
  }
  Vec normal_in_complement;
  if (d - span_rank == 1) {
    normal_in_complement = Vec::Ones(1);
  } else {
    Eigen::JacobiSVD<Mat> svd(proj, Eigen::ComputeFullV);
    normal_in_complement = svd.matrixV().col(d - span_rank - 1);
  }
  Vec normal = complement * normal_in_complement;
  normal.normalize();
  // Deterministic orientation.
  {
    Eigen::Index arg = 0;
    normal.cwiseAbs().maxCoeff(&arg);
    if (normal[arg] < 0.0) normal = -normal;
  }

  Mat reflect = Mat::Identity(d, d) - 2.0 * normal * normal.transpose();
  Vec t = origin - reflect * origin;
  NearReflection out;
  out.motion = EuclideanMotion(std::move(reflect), std::move(t));
  for (const Vec& x : E.points) {
    out.max_displacement =
        std::max(out.max_displacement, (out.motion.apply(x) - x).norm());
  }
  return out;
}

AffineMap affine_interpolant(std::span<const Vec> xs, std::span<const Vec> images) {
  if (xs.size() != images.size() || xs.empty()) {
    throw DimensionMismatch("xs/images mismatch");
  }
  const int d = static_cast<int>(xs[0].size());
  if (static_cast<int>(xs.size()) != d + 1) {
    throw DimensionMismatch("need exactly D+1 points");
  }
  Mat X(d, d), Y(d, d);
  for (int i = 0; i < d; ++i) {
    X.col(i) = xs[i + 1] - xs[0];
    Y.col(i) = images[i + 1] - images[0];
  }
  Eigen::FullPivLU<Mat> lu(X);
  if (!lu.isInvertible()) {
    throw Degenerate("input points are affinely dependent");
  }
  AffineMap map;
  map.linear = Y * lu.inverse();
  map.translation = images[0] - map.linear * xs[0];
  const double det = map.linear.determinant();
  const double scale = map.linear.cwiseAbs().maxCoeff();
  if (std::abs(det) <= 1e-12 * std::max(1.0, std::pow(scale, d))) {
    map.det_sign = 0;
  } else {
    map.det_sign = det > 0.0 ? 1 : -1;
  }
  return map;
}

BlockClass classify_eta_block(std::span<const Vec> tuple, std::span<const Vec> images,
                              double eta) {
  const int d = static_cast<int>(tuple[0].size());
  if (static_cast<int>(tuple.size()) != d + 1 || images.size() != tuple.size()) {
    throw DimensionMismatch("need D+1 tuple and images");
  }
  double diam = 0.0;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    for (std::size_t j = i + 1; j < tuple.size(); ++j) {
      diam = std::max(diam, (tuple[i] - tuple[j]).norm());
    }
  }
  const double vol = simplex_volume(tuple);
  if (vol < std::pow(eta * diam, d)) return BlockClass::NotABlock;
  AffineMap interp;
  try {
    interp = affine_interpolant(tuple, images);
  } catch (const Degenerate&) {
    return BlockClass::NotABlock;
  }
  if (interp.det_sign == 0) return BlockClass::NotABlock;
  return interp.det_sign > 0 ? BlockClass::Positive : BlockClass::Negative;
}

}  // namespace isokit
