#include "isokit/distortion.hpp"

#include "map_nodes.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace isokit {

// --- AngleFunction ---------------------------------------------------------

AngleFunction AngleFunction::constant(double a) {
  AngleFunction f;
  f.kind = Kind::Constant;
  f.amplitude = a;
  return f;
}

AngleFunction AngleFunction::exp_decay(double a, double c) {
  AngleFunction f;
  f.kind = Kind::ExpDecay;
  f.amplitude = a;
  f.rate = c;
  return f;
}

AngleFunction AngleFunction::smooth_log_ramp(double a, double r1, double r2) {
  if (!(0.0 < r1 && r1 < r2)) throw RatioInfeasible("need 0 < r1 < r2");
  AngleFunction f;
  f.kind = Kind::SmoothLogRamp;
  f.amplitude = a;
  f.r1 = r1;
  f.r2 = r2;
  return f;
}

AngleFunction AngleFunction::linear(double a) {
  AngleFunction f;
  f.kind = Kind::Linear;
  f.amplitude = a;
  return f;
}

AngleFunction AngleFunction::quadratic(double a) {
  AngleFunction f;
  f.kind = Kind::Quadratic;
  f.amplitude = a;
  return f;
}

double AngleFunction::value(double t) const {
  switch (kind) {
    case Kind::Constant:
      return amplitude;
    case Kind::ExpDecay:
      return amplitude * std::exp(-rate * t);
    case Kind::SmoothLogRamp: {
      if (t <= r1) return amplitude;
      if (t >= r2) return 0.0;
      const double u = std::log(r2 / t) / std::log(r2 / r1);
      return amplitude * smooth_step(u);
    }
    case Kind::Linear:
      return amplitude * t;
    case Kind::Quadratic:
      return amplitude * t * t;
  }
  return 0.0;
}

double AngleFunction::deriv(double t) const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::ExpDecay:
      return -amplitude * rate * std::exp(-rate * t);
    case Kind::SmoothLogRamp: {
      if (t <= r1 || t >= r2) return 0.0;
      const double logspan = std::log(r2 / r1);
      const double u = std::log(r2 / t) / logspan;
      return -amplitude * smooth_step_deriv(u) / (logspan * t);
    }
    case Kind::Linear:
      return amplitude;
    case Kind::Quadratic:
      return 2.0 * amplitude * t;
  }
  return 0.0;
}

double AngleFunction::condition_a_bound() const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::ExpDecay:
      // sup of a*c*t*exp(-c t) is a/e at t = 1/c.
      return std::abs(amplitude) * std::exp(-1.0);
    case Kind::SmoothLogRamp:
      return std::abs(amplitude) * kSmoothStepDerivMax / std::log(r2 / r1);
    case Kind::Linear:
    case Kind::Quadratic:
      return std::abs(amplitude) == 0.0
                 ? 0.0
                 : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

Json AngleFunction::to_json() const {
  static const char* names[] = {"constant", "exp_decay", "smooth_log_ramp", "linear",
                                "quadratic"};
  return Json{{"kind", names[static_cast<int>(kind)]},
              {"amplitude", amplitude},
              {"rate", rate},
              {"r1", r1},
              {"r2", r2}};
}

AngleFunction AngleFunction::from_json(const Json& j) {
  AngleFunction f;
  const std::string kind = j.at("kind");
  if (kind == "constant") f.kind = Kind::Constant;
  else if (kind == "exp_decay") f.kind = Kind::ExpDecay;
  else if (kind == "smooth_log_ramp") f.kind = Kind::SmoothLogRamp;
  else if (kind == "linear") f.kind = Kind::Linear;
  else if (kind == "quadratic") f.kind = Kind::Quadratic;
  else throw ParseError("unknown angle function kind '" + kind + "'");
  f.amplitude = j.value("amplitude", 0.0);
  f.rate = j.value("rate", 0.0);
  f.r1 = j.value("r1", 0.0);
  f.r2 = j.value("r2", 0.0);
  return f;
}

// --- SlowTwistNode ---------------------------------------------------------

namespace nodes {

SlowTwistNode::SlowTwistNode(Mat frame, std::vector<TwistBlock> blocks)
    : frame_(std::move(frame)), blocks_(std::move(blocks)) {
  const int d = static_cast<int>(frame_.rows());
  std::vector<bool> used(d, false);
  for (const TwistBlock& b : blocks_) {
    if (b.axis0 < 0 || b.axis1 < 0 || b.axis0 >= d || b.axis1 >= d ||
        b.axis0 == b.axis1 || used[b.axis0] || used[b.axis1]) {
      throw DimensionMismatch("twist blocks must use disjoint axis pairs");
    }
    used[b.axis0] = used[b.axis1] = true;
  }
}

Mat SlowTwistNode::st_matrix(double r) const {
  const int d = dim();
  Mat st = Mat::Identity(d, d);
  for (const TwistBlock& b : blocks_) {
    const double f = b.angle.value(r);
    const double c = std::cos(f), s = std::sin(f);
    st(b.axis0, b.axis0) = c;
    st(b.axis0, b.axis1) = s;
    st(b.axis1, b.axis0) = -s;
    st(b.axis1, b.axis1) = c;
  }
  return st;
}

Mat SlowTwistNode::st_deriv(double r) const {
  const int d = dim();
  Mat ds = Mat::Zero(d, d);
  for (const TwistBlock& b : blocks_) {
    const double f = b.angle.value(r);
    const double fp = b.angle.deriv(r);
    const double c = std::cos(f), s = std::sin(f);
    ds(b.axis0, b.axis0) = -s * fp;
    ds(b.axis0, b.axis1) = c * fp;
    ds(b.axis1, b.axis0) = -c * fp;
    ds(b.axis1, b.axis1) = -s * fp;
  }
  return ds;
}

Vec SlowTwistNode::evaluate(const Vec& x) const {
  const Vec y = frame_ * x;
  return frame_.transpose() * (st_matrix(x.norm()) * y);
}

Mat SlowTwistNode::jacobian(const Vec& x) const {
  const double r = x.norm();
  const Vec y = frame_ * x;
  Mat jg = st_matrix(r);
  if (r > 1e-300) {
    jg += (st_deriv(r) * y) * (y.transpose() / r);
  }
  return frame_.transpose() * jg * frame_;
}

}  // namespace nodes

// --- DisplacementField -----------------------------------------------------

DisplacementField DisplacementField::constant(const Vec& v) {
  DisplacementField f;
  f.kind = Kind::Constant;
  f.vector = v;
  return f;
}

DisplacementField DisplacementField::radial_bump(const Vec& center, double r1,
                                                 double r2, const Vec& v) {
  if (!(0.0 <= r1 && r1 < r2)) throw RatioInfeasible("need 0 <= r1 < r2");
  DisplacementField f;
  f.kind = Kind::RadialBump;
  f.center = center;
  f.r1 = r1;
  f.r2 = r2;
  f.vector = v;
  return f;
}

DisplacementField DisplacementField::reciprocal_exp(double a, double b, double c) {
  DisplacementField f;
  f.kind = Kind::ReciprocalExp;
  f.a = a;
  f.b = b;
  f.c = c;
  return f;
}

int DisplacementField::dim() const {
  switch (kind) {
    case Kind::Constant:
      return static_cast<int>(vector.size());
    case Kind::RadialBump:
      return static_cast<int>(center.size());
    case Kind::ReciprocalExp:
      return 2;
  }
  return 0;
}

Vec DisplacementField::value(const Vec& x) const {
  switch (kind) {
    case Kind::Constant:
      return vector;
    case Kind::RadialBump: {
      const double t = (x - center).norm();
      return vector * radial_cutoff(t, r1, r2);
    }
    case Kind::ReciprocalExp: {
      Vec v(2);
      v[0] = a / (1.0 + x[0] * x[0]);
      v[1] = b * std::exp(-c * std::sqrt(x[1] * x[1] + 1e-30));
      return v;
    }
  }
  return Vec();
}

Mat DisplacementField::jacobian(const Vec& x) const {
  const int d = dim();
  switch (kind) {
    case Kind::Constant:
      return Mat::Zero(d, d);
    case Kind::RadialBump: {
      const Vec u = x - center;
      const double t = u.norm();
      Mat j = Mat::Zero(d, d);
      if (t > 1e-300) {
        j = vector * (radial_cutoff_deriv(t, r1, r2) / t) * u.transpose();
      }
      return j;
    }
    case Kind::ReciprocalExp: {
      Mat j = Mat::Zero(2, 2);
      j(0, 0) = -2.0 * a * x[0] / ((1.0 + x[0] * x[0]) * (1.0 + x[0] * x[0]));
      const double t = std::sqrt(x[1] * x[1] + 1e-30);
      j(1, 1) = -b * c * std::exp(-c * t) * (x[1] / t);
      return j;
    }
  }
  return Mat();
}

double DisplacementField::gradient_bound() const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::RadialBump:
      return vector.norm() * kSmoothStepDerivMax / (r2 - r1);
    case Kind::ReciprocalExp:
      // |d/dx a/(1+x^2)| <= 0.65|a|; |d/dx b e^{-c|x|}| <= |b c|.
      return std::max(0.65 * std::abs(a), std::abs(b * c));
  }
  return 0.0;
}

Json DisplacementField::to_json() const {
  static const char* names[] = {"constant", "radial_bump", "reciprocal_exp"};
  Json j{{"kind", names[static_cast<int>(kind)]}};
  if (kind == Kind::Constant || kind == Kind::RadialBump) {
    j["vector"] = nodes::vec_to_json(vector);
  }
  if (kind == Kind::RadialBump) {
    j["center"] = nodes::vec_to_json(center);
    j["r1"] = r1;
    j["r2"] = r2;
  }
  if (kind == Kind::ReciprocalExp) {
    j["a"] = a;
    j["b"] = b;
    j["c"] = c;
  }
  return j;
}

DisplacementField DisplacementField::from_json(const Json& j) {
  const std::string kind = j.at("kind");
  if (kind == "constant") return constant(nodes::vec_from_json(j.at("vector")));
  if (kind == "radial_bump") {
    return radial_bump(nodes::vec_from_json(j.at("center")), j.at("r1"), j.at("r2"),
                       nodes::vec_from_json(j.at("vector")));
  }
  if (kind == "reciprocal_exp") {
    return reciprocal_exp(j.at("a"), j.at("b"), j.at("c"));
  }
  throw ParseError("unknown displacement field kind '" + kind + "'");
}

// --- builders --------------------------------------------------------------

SmoothMap slow_twist(const Mat& frame, std::vector<TwistBlock> blocks,
                     bool force_fast) {
  const int d = static_cast<int>(frame.rows());
  const double orth =
      (frame.transpose() * frame - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
  if (orth > 1e-8) throw Degenerate("twist frame must be orthogonal");

  double bound = 0.0;
  for (const TwistBlock& b : blocks) {
    bound = std::max(bound, b.angle.condition_a_bound());
    // Grid verification of condition A on a log-spaced grid.
    double grid_sup = 0.0;
    for (int i = 0; i <= 240; ++i) {
      const double t = std::pow(10.0, -12.0 + i * 0.1);
      grid_sup = std::max(grid_sup, t * std::abs(b.angle.deriv(t)));
    }
    bound = std::max(bound, grid_sup);
  }
  if (!force_fast && !std::isfinite(bound)) {
    throw ConditionAViolated("t|f'(t)| is unbounded for a fast angle function");
  }
  auto node = std::make_shared<nodes::SlowTwistNode>(frame, std::move(blocks));
  const double eps = std::isfinite(bound) ? kBuilderAuditConstant * bound
                                          : std::numeric_limits<double>::infinity();
  return SmoothMap(std::move(node), eps);
}

SmoothMap slide(const DisplacementField& field) {
  double bound = field.gradient_bound();
  // Probe-grid verification of the Jacobian bound.
  std::mt19937_64 rng(0x511d3u);
  const int d = field.dim();
  const double scale =
      field.kind == DisplacementField::Kind::RadialBump ? 2.0 * field.r2 : 10.0;
  Vec origin = field.kind == DisplacementField::Kind::RadialBump
                   ? field.center
                   : Vec::Zero(d);
  for (int i = 0; i < 200; ++i) {
    const Vec x = sample_in_ball(rng, origin, scale);
    bound = std::max(bound, field.jacobian(x).norm());
  }
  if (bound >= 1.0) {
    throw ConditionBViolated("sup|f'| = " + std::to_string(bound) +
                             " >= 1; not a slide");
  }
  return SmoothMap(std::make_shared<nodes::SlideNode>(field),
                   kBuilderAuditConstant * bound);
}

RotationBlocks so_canonical_blocks(const Mat& rotation) {
  const int d = static_cast<int>(rotation.rows());
  const double orth =
      (rotation.transpose() * rotation - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
  if (orth > 1e-8) throw Degenerate("not an orthogonal matrix");
  if (rotation.determinant() < 0.0) throw Degenerate("not in SO(D)");

  Eigen::RealSchur<Mat> schur(rotation);
  Mat u = schur.matrixU();
  Mat t = schur.matrixT();

  RotationBlocks out;
  out.frame = Mat(d, d);
  std::vector<int> minus_ones;
  std::vector<std::pair<int, double>> pending;  // (axis0, angle), axis1 = axis0+1
  int i = 0;
  std::vector<Vec> basis;
  while (i < d) {
    const bool is_block = (i + 1 < d) && std::abs(t(i + 1, i)) > 1e-10;
    if (is_block) {
      const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
      const double s = 0.5 * (t(i, i + 1) - t(i + 1, i));
      double angle = std::atan2(s, c);
      if (angle <= -M_PI) angle = M_PI;
      basis.push_back(u.col(i));
      basis.push_back(u.col(i + 1));
      pending.emplace_back(static_cast<int>(basis.size()) - 2, angle);
      i += 2;
    } else {
      if (t(i, i) < 0.0) {
        minus_ones.push_back(i);
      } else {
        basis.push_back(u.col(i));
      }
      ++i;
    }
  }
  // det > 0 forces an even count of -1 eigenvalues; pair them into pi-blocks.
  for (std::size_t k = 0; k + 1 < minus_ones.size(); k += 2) {
    basis.push_back(u.col(minus_ones[k]));
    basis.push_back(u.col(minus_ones[k + 1]));
    pending.emplace_back(static_cast<int>(basis.size()) - 2, M_PI);
  }
  if (minus_ones.size() % 2 != 0) {
    throw Degenerate("odd count of -1 eigenvalues; matrix not in SO(D)");
  }
  for (int k = 0; k < d; ++k) out.frame.row(k) = basis[k].transpose();
  for (const auto& [axis0, angle] : pending) {
    out.planes.emplace_back(axis0, axis0 + 1);
    out.angles.push_back(angle);
  }
  // Sanity: frame^T * St(full angles) * frame reproduces the input.
  Mat st = Mat::Identity(d, d);
  for (std::size_t k = 0; k < out.angles.size(); ++k) {
    const double c = std::cos(out.angles[k]), s = std::sin(out.angles[k]);
    const auto [a0, a1] = out.planes[k];
    st(a0, a0) = c;
    st(a0, a1) = s;
    st(a1, a0) = -s;
    st(a1, a1) = c;
  }
  const Mat rebuilt = out.frame.transpose() * st * out.frame;
  if ((rebuilt - rotation).cwiseAbs().maxCoeff() > 1e-9) {
    throw Degenerate("canonical-form reconstruction failed");
  }
  return out;
}

SmoothMap localize_rotation(const Mat& rotation, double c1, double c2,
                            double epsilon) {
  const int d = static_cast<int>(rotation.rows());
  if (!(0.0 < c1 && c1 < c2)) throw RatioInfeasible("need 0 < c1 < c2");
  const RotationBlocks blocks = so_canonical_blocks(rotation);
  double max_angle = 0.0;
  for (double a : blocks.angles) max_angle = std::max(max_angle, std::abs(a));
  if (max_angle <= 1e-15) return make_identity(d).with_claimed_epsilon(0.0);

  const double logspan = std::log(c2 / c1);
  const double needed = localize_required_logspan(max_angle, epsilon);
  if (logspan < needed) {
    throw RatioInfeasible("log(c2/c1) = " + std::to_string(logspan) +
                          " but the rotation needs >= " + std::to_string(needed) +
                          " (c1/c2 <= " + std::to_string(std::exp(-needed)) + ")");
  }

  std::vector<TwistBlock> twist_blocks;
  for (std::size_t k = 0; k < blocks.angles.size(); ++k) {
    if (std::abs(blocks.angles[k]) <= 1e-15) continue;
    TwistBlock b;
    b.axis0 = blocks.planes[k].first;
    b.axis1 = blocks.planes[k].second;
    b.angle = AngleFunction::smooth_log_ramp(blocks.angles[k], c1, c2);
    twist_blocks.push_back(b);
  }
  return slow_twist(blocks.frame, std::move(twist_blocks));
}

SmoothMap localize_motion(const EuclideanMotion& motion, double c3, double c4,
                          double epsilon) {
  const int d = motion.dim();
  if (!(0.0 < c3 && c3 < c4)) throw RatioInfeasible("need 0 < c3 < c4");
  if (!motion.proper) throw Degenerate("localize_motion needs a proper motion");
  const double trans = motion.translation.norm();
  if (trans > epsilon * c3) {
    throw TranslationInfeasible("|x0| = " + std::to_string(trans) +
                                " exceeds epsilon*c3 = " +
                                std::to_string(epsilon * c3));
  }
  const bool has_rotation =
      (motion.linear - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-14;
  std::vector<SmoothMap> parts;
  if (has_rotation) {
    parts.push_back(localize_rotation(motion.linear, c3, c4, epsilon / 2.0));
  }
  if (trans > 0.0) {
    parts.push_back(slide(DisplacementField::radial_bump(Vec::Zero(d), c3, c4,
                                                         motion.translation)));
  }
  if (parts.empty()) return make_identity(d);
  return make_composite(std::move(parts));
}

namespace {

// Rotation by the angle between u and v in their common plane (identity on
// the orthogonal complement).
Mat plane_rotation(const Vec& u, const Vec& v) {
  const int d = static_cast<int>(u.size());
  Vec e1 = u.normalized();
  Vec w = v - v.dot(e1) * e1;
  Mat r = Mat::Identity(d, d);
  const double wn = w.norm();
  if (wn < 1e-300) return r;
  Vec e2 = w / wn;
  const double cos_a = std::clamp(v.normalized().dot(e1), -1.0, 1.0);
  const double sin_a = std::clamp(v.normalized().dot(e2), -1.0, 1.0);
  // r = I + (cos-1)(e1 e1^T + e2 e2^T) + sin (e2 e1^T - e1 e2^T)
  r += (cos_a - 1.0) * (e1 * e1.transpose() + e2 * e2.transpose());
  r += sin_a * (e2 * e1.transpose() - e1 * e2.transpose());
  return r;
}

}  // namespace

SmoothMap point_mover(const Vec& x_from, const Vec& x_to, double c6, double c7,
                      double epsilon) {
  const int d = static_cast<int>(x_from.size());
  if (!(0.0 < c6 && c6 < c7)) throw RatioInfeasible("need 0 < c6 < c7");
  if (x_from.norm() > c6) {
    throw MoveInfeasible("|x| = " + std::to_string(x_from.norm()) +
                         " exceeds c6 = " + std::to_string(c6));
  }
  const double move = (x_to - x_from).norm();
  if (move == 0.0) {
    return SmoothMap(std::make_shared<nodes::PointMoverNode>(
                         x_from, x_to, c6, c7, epsilon, make_identity(d)),
                     0.0);
  }
  if (move > epsilon * c6) {
    throw MoveInfeasible("|x - x'| = " + std::to_string(move) +
                         " exceeds epsilon*c6 = " + std::to_string(epsilon * c6));
  }

  const double rf = x_from.norm(), rt = x_to.norm();
  SmoothMap impl;
  // Rotation route needs both radii away from 0 and a well-defined plane.
  double angle = 0.0;
  bool plane_ok = false;
  if (rf > 0.05 * c6 && rt > 0.05 * c6) {
    const double cos_a =
        std::clamp(x_from.normalized().dot(x_to.normalized()), -1.0, 1.0);
    angle = std::acos(cos_a);
    plane_ok = angle < 0.98 * M_PI;  // antipodal pairs fall back to a slide
  }
  if (plane_ok && std::abs(rf - rt) <= 1e-13 * c6) {
    // Same radius: realize by a localized rotation alone.
    const double logspan_needed = localize_required_logspan(angle, epsilon);
    if (std::log(c7 / c6) >= logspan_needed && angle > 1e-15) {
      impl = localize_rotation(plane_rotation(x_from, x_to), c6, c7, epsilon);
    }
  }
  if (!impl.valid() && plane_ok) {
    // Rotate onto the ray of x_to, then slide radially the remaining gap.
    const double c_mid = std::sqrt(c6 * c7);
    const Vec x_hat = x_to * (rf / rt);
    const double logspan_needed = localize_required_logspan(angle, epsilon / 2.0);
    const double rho = c7 - c6;
    const double slide_defect =
        (x_to - x_hat).norm() * kSmoothStepDerivMax / (rho / 2.0);
    if (std::log(c_mid / c6) >= logspan_needed && slide_defect <= epsilon / 2.0) {
      std::vector<SmoothMap> parts;
      if (angle > 1e-15) {
        parts.push_back(
            localize_rotation(plane_rotation(x_from, x_to), c6, c_mid, epsilon / 2.0));
      }
      if ((x_to - x_hat).norm() > 0.0) {
        parts.push_back(slide(
            DisplacementField::radial_bump(x_hat, rho / 2.0, rho, x_to - x_hat)));
      }
      if (!parts.empty()) impl = make_composite(std::move(parts));
    }
  }
  if (!impl.valid()) {
    // Bump slide: always available for moves small relative to c7 - c6.
    const double rho = c7 - x_from.norm();
    const double defect = move * kSmoothStepDerivMax / (rho / 2.0);
    if (defect > epsilon) {
      throw MoveInfeasible("bump slide defect " + std::to_string(defect) +
                           " exceeds epsilon " + std::to_string(epsilon));
    }
    impl = slide(DisplacementField::radial_bump(x_from, rho / 2.0, rho,
                                                x_to - x_from));
  }
  const double eps = impl.claimed_epsilon();
  return SmoothMap(std::make_shared<nodes::PointMoverNode>(x_from, x_to, c6, c7,
                                                           epsilon, std::move(impl)),
                   eps);
}

// --- audits ----------------------------------------------------------------

Region Region::ball(const Vec& center, double radius) {
  Region r;
  r.kind = Kind::Ball;
  r.center = center;
  r.radius = radius;
  return r;
}

Region Region::box(const Vec& lo, const Vec& hi) {
  Region r;
  r.kind = Kind::Box;
  r.lo = lo;
  r.hi = hi;
  return r;
}

int Region::dim() const {
  return kind == Kind::Ball ? static_cast<int>(center.size())
                            : static_cast<int>(lo.size());
}

Vec Region::sample(std::mt19937_64& rng) const {
  return kind == Kind::Ball ? sample_in_ball(rng, center, radius)
                            : sample_in_box(rng, lo, hi);
}

DistortionAudit distortion_audit(const SmoothMap& map, const Region& region,
                                 int n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw InsufficientPoints("audit needs >= 2 samples");
  const int d = region.dim();
  std::mt19937_64 rng(seed);
  std::vector<Vec> xs(n_samples);
  for (int i = 0; i < n_samples; ++i) xs[i] = region.sample(rng);
  std::vector<Vec> fx(n_samples);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_samples; ++i) fx[i] = map.evaluate(xs[i]);

  DistortionAudit audit;
  const auto jac_defect = [&](std::int64_t i) {
    const Mat j = map.jacobian(xs[static_cast<std::size_t>(i)]);
    const Mat g = j.transpose() * j - Mat::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
  };
  audit.sup_jacobian_defect =
      std::max(0.0, deterministic_parallel_max(n_samples, jac_defect).value);

  const double scale =
      region.kind == Region::Kind::Ball ? region.radius : (region.hi - region.lo).norm();
  const auto row_defect = [&](std::int64_t i) {
    double worst = 0.0;
    for (std::int64_t j = 0; j < i; ++j) {
      const double dx =
          (xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)]).norm();
      if (dx < 1e-12 * scale) continue;
      const double df =
          (fx[static_cast<std::size_t>(i)] - fx[static_cast<std::size_t>(j)]).norm();
      if (df <= 0.0) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, std::abs(std::log(df / dx)));
    }
    return worst;
  };
  audit.sup_pair_ratio_defect =
      std::max(0.0, deterministic_parallel_max(n_samples, row_defect).value);
  return audit;
}

BmoAudit bmo_rotation_audit(const SmoothMap& map, const Vec& center, double radius,
                            int grid_resolution) {
  const int d = static_cast<int>(center.size());
  // Deterministic lattice over the bounding box, restricted to the ball.
  std::vector<Vec> grid;
  std::vector<int> idx(d, 0);
  const int n = grid_resolution;
  while (true) {
    Vec x(d);
    for (int k = 0; k < d; ++k) {
      x[k] = center[k] + radius * (2.0 * (idx[k] + 0.5) / n - 1.0);
    }
    if ((x - center).norm() <= radius) grid.push_back(x);
    int k = 0;
    while (k < d && ++idx[k] == n) idx[k++] = 0;
    if (k == d) break;
  }
  std::vector<Mat> jacobians(grid.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(grid.size()); ++i) {
    jacobians[static_cast<std::size_t>(i)] =
        map.jacobian(grid[static_cast<std::size_t>(i)]);
  }
  Mat mean = Mat::Zero(d, d);
  for (const Mat& j : jacobians) mean += j;
  mean /= static_cast<double>(jacobians.size());

  // Orthogonal Procrustes fit: polar factor of the mean Jacobian.
  Eigen::JacobiSVD<Mat> svd(mean, Eigen::ComputeFullU | Eigen::ComputeFullV);
  BmoAudit audit;
  audit.rotation = svd.matrixU() * svd.matrixV().transpose();

  std::vector<double> residuals(jacobians.size());
  for (std::size_t i = 0; i < jacobians.size(); ++i) {
    residuals[i] = (jacobians[i] - audit.rotation).norm();
  }
  audit.mean_residual =
      deterministic_parallel_sum(static_cast<std::int64_t>(residuals.size()),
                                 [&](std::int64_t i) {
                                   return residuals[static_cast<std::size_t>(i)];
                                 }) /
      static_cast<double>(residuals.size());
  const double lambdas[4] = {1.0, 2.0, 4.0, 8.0};
  for (int k = 0; k < 4; ++k) {
    std::int64_t count = 0;
    for (double r : residuals) {
      if (r > lambdas[k] * audit.mean_residual) ++count;
    }
    audit.tail_fractions[static_cast<std::size_t>(k)] =
        static_cast<double>(count) / static_cast<double>(residuals.size());
  }
  return audit;
}

// --- registry --------------------------------------------------------------

namespace nodes {

void ensure_builtin_nodes_registered() {
  static const bool once = [] {
    register_node_factory("identity", [](const Json& j) {
      return std::make_shared<IdentityNode>(j.at("dim").get<int>());
    });
    register_node_factory("motion", [](const Json& j) {
      return std::make_shared<MotionNode>(EuclideanMotion(
          mat_from_json(j.at("linear")), vec_from_json(j.at("translation"))));
    });
    register_node_factory("slide", [](const Json& j) {
      return std::make_shared<SlideNode>(
          DisplacementField::from_json(j.at("field")));
    });
    register_node_factory("slow_twist", [](const Json& j) {
      std::vector<TwistBlock> blocks;
      for (const Json& b : j.at("blocks")) {
        TwistBlock tb;
        tb.axis0 = b.at("axis0");
        tb.axis1 = b.at("axis1");
        tb.angle = AngleFunction::from_json(b.at("angle"));
        blocks.push_back(tb);
      }
      return std::make_shared<SlowTwistNode>(mat_from_json(j.at("frame")),
                                             std::move(blocks));
    });
    register_node_factory("composite", [](const Json& j) {
      std::vector<SmoothMap> maps;
      for (const Json& m : j.at("maps")) maps.emplace_back(node_from_json(m));
      return std::make_shared<CompositeNode>(std::move(maps));
    });
    register_node_factory("patched_union", [](const Json& j) {
      std::vector<PatchRegion> regions;
      for (const Json& r : j.at("regions")) {
        PatchRegion pr;
        pr.center = vec_from_json(r.at("center"));
        pr.radius = r.at("radius");
        pr.inner = SmoothMap(node_from_json(r.at("inner")));
        regions.push_back(std::move(pr));
      }
      return std::make_shared<PatchedUnionNode>(std::move(regions),
                                                SmoothMap(node_from_json(j.at("outer"))));
    });
    register_node_factory("point_mover", [](const Json& j) {
      const SmoothMap rebuilt =
          point_mover(vec_from_json(j.at("from")), vec_from_json(j.at("to")),
                      j.at("c6"), j.at("c7"), j.at("epsilon"));
      return rebuilt.node_ptr();
    });
    return true;
  }();
  (void)once;
}

}  // namespace nodes

}  // namespace isokit
