#include "isokit/whitney.hpp"

#include "map_nodes.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace isokit {

// --- AdmissibleSet ----------------------------------------------------------

AdmissibleSet AdmissibleSet::ball(const Vec& center, double radius) {
  AdmissibleSet s;
  s.kind_ = Kind::Ball;
  s.balls_ = {{center, radius}};
  s.bbox_lo_ = center.array() - radius;
  s.bbox_hi_ = center.array() + radius;
  return s;
}

AdmissibleSet AdmissibleSet::union_of_balls(
    std::vector<std::pair<Vec, double>> balls) {
  if (balls.empty()) throw Error("empty union of balls");
  AdmissibleSet s;
  s.kind_ = Kind::UnionOfBalls;
  s.bbox_lo_ = balls[0].first.array() - balls[0].second;
  s.bbox_hi_ = balls[0].first.array() + balls[0].second;
  for (const auto& [c, r] : balls) {
    s.bbox_lo_ = s.bbox_lo_.cwiseMin(Vec(c.array() - r));
    s.bbox_hi_ = s.bbox_hi_.cwiseMax(Vec(c.array() + r));
  }
  s.balls_ = std::move(balls);
  return s;
}

AdmissibleSet AdmissibleSet::box(const Vec& lo, const Vec& hi) {
  AdmissibleSet s;
  s.kind_ = Kind::Box;
  s.box_lo_ = lo;
  s.box_hi_ = hi;
  s.bbox_lo_ = lo;
  s.bbox_hi_ = hi;
  return s;
}

AdmissibleSet AdmissibleSet::segment(const Vec& a, const Vec& b) {
  AdmissibleSet s;
  s.kind_ = Kind::Segment;
  s.seg_a_ = a;
  s.seg_b_ = b;
  s.bbox_lo_ = a.cwiseMin(b);
  s.bbox_hi_ = a.cwiseMax(b);
  return s;
}

AdmissibleSet AdmissibleSet::oracle(std::function<bool(const Vec&)> membership,
                                    const Vec& bbox_lo, const Vec& bbox_hi,
                                    double resolution) {
  AdmissibleSet s;
  s.kind_ = Kind::Oracle;
  s.membership_ = std::move(membership);
  s.bbox_lo_ = bbox_lo;
  s.bbox_hi_ = bbox_hi;
  s.resolution_ = resolution;
  return s;
}

bool AdmissibleSet::contains(const Vec& x) const {
  if (kind_ == Kind::Oracle) return membership_(x);
  return signed_distance(x) <= 0.0;
}

double AdmissibleSet::signed_distance(const Vec& x) const {
  switch (kind_) {
    case Kind::Ball:
      return (x - balls_[0].first).norm() - balls_[0].second;
    case Kind::UnionOfBalls: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [c, r] : balls_) best = std::min(best, (x - c).norm() - r);
      return best;
    }
    case Kind::Box: {
      bool is_inside = true;
      double out2 = 0.0;
      double inside = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < box_lo_[i]) {
          is_inside = false;
          out2 += (box_lo_[i] - x[i]) * (box_lo_[i] - x[i]);
        } else if (x[i] > box_hi_[i]) {
          is_inside = false;
          out2 += (x[i] - box_hi_[i]) * (x[i] - box_hi_[i]);
        } else {
          inside = std::max(inside, -std::min(x[i] - box_lo_[i], box_hi_[i] - x[i]));
        }
      }
      return is_inside ? inside : std::sqrt(out2);
    }
    case Kind::Segment: {
      const Vec d = seg_b_ - seg_a_;
      const double t = std::clamp(
          d.squaredNorm() > 0 ? (x - seg_a_).dot(d) / d.squaredNorm() : 0.0, 0.0,
          1.0);
      return (x - (seg_a_ + t * d)).norm();
    }
    case Kind::Oracle: {
      if (membership_(x)) return 0.0;
      // lattice-projected distance at the declared resolution
      double best = std::numeric_limits<double>::infinity();
      const int n = std::max(2, static_cast<int>(std::ceil(
                                    (bbox_hi_ - bbox_lo_).maxCoeff() / resolution_)));
      std::vector<int> idx(dim(), 0);
      while (true) {
        Vec p(dim());
        for (int k = 0; k < dim(); ++k) {
          p[k] = bbox_lo_[k] + (bbox_hi_[k] - bbox_lo_[k]) * idx[k] / (n - 1);
        }
        if (membership_(p)) best = std::min(best, (x - p).norm());
        int k = 0;
        while (k < dim() && ++idx[k] == n) idx[k++] = 0;
        if (k == dim()) break;
      }
      return best;
    }
  }
  return 0.0;
}

double AdmissibleSet::distance(const Vec& x) const {
  return std::max(0.0, signed_distance(x));
}

double AdmissibleSet::diameter() const {
  switch (kind_) {
    case Kind::Ball:
      return 2.0 * balls_[0].second;
    case Kind::UnionOfBalls: {
      double best = 0.0;
      for (const auto& [c1, r1] : balls_) {
        for (const auto& [c2, r2] : balls_) {
          best = std::max(best, (c1 - c2).norm() + r1 + r2);
        }
      }
      return best;
    }
    case Kind::Box:
      return (box_hi_ - box_lo_).norm();
    case Kind::Segment:
      return (seg_b_ - seg_a_).norm();
    case Kind::Oracle:
      return (bbox_hi_ - bbox_lo_).norm();
  }
  return 0.0;
}

std::optional<std::pair<Vec, double>> AdmissibleSet::inward_ball(const Vec& x,
                                                                 double c1,
                                                                 double c2) const {
  const double d = distance(x);
  if (d <= 0.0) return std::nullopt;
  switch (kind_) {
    case Kind::Ball:
    case Kind::UnionOfBalls: {
      const std::pair<Vec, double>* best = nullptr;
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& b : balls_) {
        const double bd = (x - b.first).norm() - b.second;
        if (bd < best_d) {
          best_d = bd;
          best = &b;
        }
      }
      const Vec dir = (x - best->first).normalized();
      const double r = std::min((c1 - 1.0) * d, best->second / 2.0);
      if (r < c2 * d) return std::nullopt;
      return std::make_pair(Vec(best->first + (best->second - r) * dir), r);
    }
    case Kind::Box: {
      const double inradius = 0.5 * (box_hi_ - box_lo_).minCoeff();
      const double r = std::min(
          (c1 - 1.0) * d / std::sqrt(static_cast<double>(dim())), inradius / 2.0);
      if (r < c2 * d) return std::nullopt;
      const Vec z =
          x.cwiseMax(Vec(box_lo_.array() + r)).cwiseMin(Vec(box_hi_.array() - r));
      return std::make_pair(z, r);
    }
    case Kind::Segment:
      return std::nullopt;  // no interior ball: thin rods are not admissible
    case Kind::Oracle: {
      // deterministic candidate lattice of centers, radii from large to small
      for (int rs = 4; rs >= 1; --rs) {
        const double r = c2 * d * rs;
        std::vector<int> idx(dim(), 0);
        const int n = 5;
        while (true) {
          Vec z = x;
          for (int k = 0; k < dim(); ++k) {
            z[k] += ((idx[k] - (n - 1) / 2.0) / ((n - 1) / 2.0)) * (c1 - 1.0) * d;
          }
          bool ok = (z - x).norm() <= c1 * d && membership_(z);
          // ball-inclusion check on an axis + diagonal sample of the sphere
          for (int k = 0; k < dim() && ok; ++k) {
            for (double sgn : {-1.0, 1.0}) {
              Vec p = z;
              p[k] += sgn * r;
              if (!membership_(p)) {
                ok = false;
                break;
              }
            }
          }
          if (ok) return std::make_pair(z, r);
          int k = 0;
          while (k < dim() && ++idx[k] == n) idx[k++] = 0;
          if (k == dim()) break;
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<std::pair<Vec, double>> AdmissibleSet::far_ball() const {
  switch (kind_) {
    case Kind::Ball:
      return std::make_pair(balls_[0].first, 0.95 * balls_[0].second);
    case Kind::UnionOfBalls: {
      const auto best = std::max_element(
          balls_.begin(), balls_.end(),
          [](const auto& a, const auto& b) { return a.second < b.second; });
      return std::make_pair(best->first, 0.95 * best->second);
    }
    case Kind::Box: {
      const double inradius = 0.5 * (box_hi_ - box_lo_).minCoeff();
      return std::make_pair(Vec(0.5 * (box_lo_ + box_hi_)), 0.95 * inradius);
    }
    case Kind::Segment:
      return std::nullopt;
    case Kind::Oracle: {
      // deepest lattice point by axis reach
      const int n = 17;
      Vec best_z;
      double best_d = 0.0;
      std::vector<int> idx(dim(), 0);
      while (true) {
        Vec p(dim());
        for (int k = 0; k < dim(); ++k) {
          p[k] = bbox_lo_[k] + (bbox_hi_[k] - bbox_lo_[k]) * (idx[k] + 0.5) / n;
        }
        if (membership_(p)) {
          double depth = std::numeric_limits<double>::infinity();
          for (int k = 0; k < dim(); ++k) {
            const double step = (bbox_hi_[k] - bbox_lo_[k]) / (4.0 * n);
            for (double sgn : {-1.0, 1.0}) {
              double reach = 0.0;
              Vec q = p;
              while (reach < bbox_hi_[k] - bbox_lo_[k]) {
                q[k] = p[k] + sgn * (reach + step);
                if (!membership_(q)) break;
                reach += step;
              }
              depth = std::min(depth, reach);
            }
          }
          if (depth > best_d) {
            best_d = depth;
            best_z = p;
          }
        }
        int k = 0;
        while (k < dim() && ++idx[k] == n) idx[k++] = 0;
        if (k == dim()) break;
      }
      if (best_d <= 0.0) return std::nullopt;
      return std::make_pair(best_z, 0.7 * best_d);
    }
  }
  return std::nullopt;
}

AdmissibilityReport check_admissible(const AdmissibleSet& set, int probes_per_axis,
                                     double c0, double c1, double c2) {
  AdmissibilityReport report;
  const int d = set.dim();
  const double diam = set.diameter();
  const Vec margin = Vec::Constant(d, c0 * diam * 1.5);
  const Vec lo = set.bbox_lo() - margin;
  const Vec hi = set.bbox_hi() + margin;
  std::vector<int> idx(d, 0);
  report.pass = true;
  while (true) {
    Vec x(d);
    for (int k = 0; k < d; ++k) {
      x[k] = lo[k] + (hi[k] - lo[k]) * (idx[k] + 0.5) / probes_per_axis;
    }
    const double dist = set.distance(x);
    if (dist > 0.0 && dist <= c0 * diam) {
      ++report.probes_checked;
      if (!set.inward_ball(x, c1, c2)) {
        report.pass = false;
        report.witness = x;
        return report;
      }
    }
    int k = 0;
    while (k < d && ++idx[k] == probes_per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  return report;
}

// --- Whitney cubes ----------------------------------------------------------

namespace {

std::int64_t cell_key(const std::vector<std::int64_t>& cell) {
  std::int64_t key = 1469598103934665603LL;
  for (std::int64_t c : cell) {
    key ^= c + 0x9e3779b97f4a7c15LL;
    key *= 1099511628211LL;
  }
  return key;
}

std::vector<std::int64_t> cube_cell(const Vec& center, const Vec& root_lo,
                                    double side) {
  std::vector<std::int64_t> cell(center.size());
  for (Eigen::Index k = 0; k < center.size(); ++k) {
    cell[static_cast<std::size_t>(k)] =
        static_cast<std::int64_t>(std::llround((center[k] - root_lo[k]) / side - 0.5));
  }
  return cell;
}

}  // namespace

void WhitneyCover::index_cubes() {
  levels_.clear();
  for (int i = 0; i < static_cast<int>(cubes_.size()); ++i) {
    const double side = cubes_[static_cast<std::size_t>(i)].side;
    Level* level = nullptr;
    for (Level& l : levels_) {
      if (std::abs(l.side - side) < 1e-12 * side) {
        level = &l;
        break;
      }
    }
    if (!level) {
      levels_.push_back(Level{side, {}});
      level = &levels_.back();
    }
    level->grid[cell_key(
        cube_cell(cubes_[static_cast<std::size_t>(i)].center, root_lo_, side))] = i;
  }
}

std::vector<int> WhitneyCover::touching(const Vec& x) const {
  const int d = static_cast<int>(x.size());
  std::vector<int> out;
  for (const Level& level : levels_) {
    std::vector<std::int64_t> base(d);
    for (int k = 0; k < d; ++k) {
      base[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(
          std::floor((x[k] - root_lo_[k]) / level.side));
    }
    std::vector<int> offs(d, -1);
    while (true) {
      std::vector<std::int64_t> cell(d);
      for (int k = 0; k < d; ++k) {
        cell[static_cast<std::size_t>(k)] = base[static_cast<std::size_t>(k)] + offs[k];
      }
      const auto it = level.grid.find(cell_key(cell));
      if (it != level.grid.end()) {
        const WhitneyCube& q = cubes_[static_cast<std::size_t>(it->second)];
        if ((x - q.center).cwiseAbs().maxCoeff() < q.side) out.push_back(it->second);
      }
      int k = 0;
      while (k < d && ++offs[k] == 2) offs[k++] = -1;
      if (k == d) break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace whitney_detail {

// C-infinity tensor bump: 1 on the cube, support the 2x dilate.
double cube_bump(const WhitneyCube& q, const Vec& x) {
  double b = 1.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    b *= radial_cutoff(std::abs(x[k] - q.center[k]), q.side / 2.0, q.side);
    if (b == 0.0) return 0.0;
  }
  return b;
}

Vec cube_bump_gradient(const WhitneyCube& q, const Vec& x, double b) {
  const int d = static_cast<int>(x.size());
  Vec g = Vec::Zero(d);
  if (b == 0.0) return g;
  for (int k = 0; k < d; ++k) {
    const double t = std::abs(x[k] - q.center[k]);
    const double fk = radial_cutoff(t, q.side / 2.0, q.side);
    if (fk == 0.0) return Vec::Zero(d);
    const double dfk = (x[k] >= q.center[k] ? 1.0 : -1.0) *
                       radial_cutoff_deriv(t, q.side / 2.0, q.side);
    g[k] = b / fk * dfk;
  }
  return g;
}

}  // namespace whitney_detail

using whitney_detail::cube_bump;
using whitney_detail::cube_bump_gradient;

double WhitneyCover::regularized_distance(const Vec& x) const {
  const auto touch = touching(x);
  if (touch.empty()) return 0.0;
  double s = 0.0, weighted = 0.0;
  for (int i : touch) {
    const WhitneyCube& q = cubes_[static_cast<std::size_t>(i)];
    const double b = cube_bump(q, x);
    s += b;
    weighted += q.side * b;
  }
  if (s <= 0.0) return 0.0;
  return weighted / s;
}

WhitneyCover whitney_cubes(const AdmissibleSet& set, const WhitneyCoverParams& params,
                           double eta) {
  const int d = set.dim();
  const double diam = set.diameter();
  const double c0 = params.c0 > 0.0 ? params.c0 : diam / 4.0;
  WhitneyCover cover;
  cover.set_ = std::make_shared<AdmissibleSet>(set);
  cover.c0_ = c0;
  cover.eta_ = eta > 0.0 ? eta : c0 / 100.0;
  cover.c3_ = c0 / (6.0 * std::sqrt(static_cast<double>(d)));
  const double floor_side =
      params.floor_side > 0.0 ? params.floor_side : cover.eta_ / 32.0;

  const Vec mid = 0.5 * (set.bbox_lo() + set.bbox_hi());
  const double side = (set.bbox_hi() - set.bbox_lo()).maxCoeff() + 6.0 * c0;
  cover.root_lo_ = mid.array() - side / 2.0;

  struct Item {
    Vec center;
    double side;
  };
  std::deque<Item> queue;
  queue.push_back({mid, side});
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  while (!queue.empty()) {
    const Item item = queue.front();
    queue.pop_front();
    const double cube_diam = sqrt_d * item.side;
    const double dist = set.distance(item.center);
    if (cube_diam <= dist / params.keep_hi) {
      WhitneyCube q;
      q.center = item.center;
      q.side = item.side;
      cover.cubes_.push_back(std::move(q));
      continue;
    }
    if (item.side / 2.0 < floor_side) {
      // unresolved at the floor: cubes straddling the boundary widen the gap
      if (set.signed_distance(item.center) > -cube_diam / 2.0) {
        cover.gap_width_ = std::max(cover.gap_width_, cube_diam);
      }
      continue;
    }
    std::vector<int> corner(d, 0);
    while (true) {
      Vec c = item.center;
      for (int k = 0; k < d; ++k) c[k] += (corner[k] ? 0.25 : -0.25) * item.side;
      queue.push_back({c, item.side / 2.0});
      int k = 0;
      while (k < d && ++corner[k] == 2) corner[k++] = 0;
      if (k == d) break;
    }
  }
  if (cover.gap_width_ > cover.eta_ / 2.0) {
    throw CoverageGap("unresolved cubes near the boundary leave a gap of width " +
                      std::to_string(cover.gap_width_) + " vs eta = " +
                      std::to_string(cover.eta_));
  }
  cover.index_cubes();
  return cover;
}

void select_cube_motions(WhitneyCover& cover, const SmoothMap& phi) {
  const AdmissibleSet& set = *cover.set_;
  const int d = set.dim();
  const auto far = set.far_ball();
  if (!far) throw CoverageGap("set exhibits no interior ball");
  cover.far_ball_ = *far;

  const auto gram_schmidt_motion = [&](const Vec& z, double r) {
    Mat u(d, d);
    const Vec fz = phi.evaluate(z);
    for (int i = 0; i < d; ++i) {
      Vec zi = z;
      zi[i] += r;
      u.col(i) = (phi.evaluate(zi) - fz) / r;
    }
    Eigen::HouseholderQR<Mat> qr(u);
    Mat q = qr.householderQ();
    const Mat rfac = q.transpose() * u;
    for (int i = 0; i < d; ++i) {
      if (rfac(i, i) < 0.0) q.col(i) *= -1.0;
    }
    return EuclideanMotion(q, fz - q * z);
  };

  cover.far_motion_ = gram_schmidt_motion(far->first, far->second);
  std::vector<std::string> errors(cover.cubes_.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(cover.cubes_.size()); ++i) {
    WhitneyCube& q = cover.cubes_[static_cast<std::size_t>(i)];
    q.small_cube = q.side <= cover.c3_;
    if (!q.small_cube) {
      q.ball_center = far->first;
      q.ball_radius = far->second;
      q.motion = cover.far_motion_;
      q.has_motion = true;
      continue;
    }
    const auto ball = set.inward_ball(q.center, 2.0, 0.25);
    if (!ball) {
      errors[static_cast<std::size_t>(i)] =
          "no interior ball for a small cube at distance " +
          std::to_string(set.distance(q.center));
      continue;
    }
    q.ball_center = ball->first;
    q.ball_radius = ball->second;
    q.motion = gram_schmidt_motion(ball->first, ball->second);
    q.has_motion = true;
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw CoverageGap(e);
  }
  cover.has_motions_ = true;
}

// --- blend node -------------------------------------------------------------

class WhitneyBlendNode final : public MapNode {
 public:
  WhitneyBlendNode(std::shared_ptr<const WhitneyCover> cover, SmoothMap phi)
      : cover_(std::move(cover)), phi_(std::move(phi)) {}

  int dim() const override { return cover_->set().dim(); }

  Vec evaluate(const Vec& x) const override {
    const AdmissibleSet& set = cover_->set();
    if (set.distance(x) >= cover_->c0()) return cover_->far_motion().apply(x);
    const auto touch = cover_->touching(x);
    double s = 0.0;
    std::vector<double> bumps(touch.size());
    for (std::size_t t = 0; t < touch.size(); ++t) {
      bumps[t] = cube_bump(cover_->cubes()[static_cast<std::size_t>(touch[t])], x);
      s += bumps[t];
    }
    double delta = 0.0;
    if (s > 0.0) {
      for (std::size_t t = 0; t < touch.size(); ++t) {
        delta +=
            cover_->cubes()[static_cast<std::size_t>(touch[t])].side * bumps[t] / s;
      }
    }
    const double chi = radial_cutoff(delta, cover_->eta(), 2.0 * cover_->eta());
    if (chi == 1.0) return phi_.evaluate(x);
    Vec out = chi * phi_.evaluate(x);
    for (std::size_t t = 0; t < touch.size(); ++t) {
      if (bumps[t] == 0.0) continue;
      const WhitneyCube& q = cover_->cubes()[static_cast<std::size_t>(touch[t])];
      out += ((1.0 - chi) * bumps[t] / s) * q.motion.apply(x);
    }
    return out;
  }

  Mat jacobian(const Vec& x) const override {
    const AdmissibleSet& set = cover_->set();
    const int d = dim();
    if (set.distance(x) >= cover_->c0()) return cover_->far_motion().linear;
    const auto touch = cover_->touching(x);
    const std::size_t n = touch.size();
    double s = 0.0;
    std::vector<double> bumps(n);
    std::vector<Vec> grads(n);
    Vec grad_s = Vec::Zero(d);
    for (std::size_t t = 0; t < n; ++t) {
      const WhitneyCube& q = cover_->cubes()[static_cast<std::size_t>(touch[t])];
      bumps[t] = cube_bump(q, x);
      grads[t] = cube_bump_gradient(q, x, bumps[t]);
      s += bumps[t];
      grad_s += grads[t];
    }
    double delta = 0.0;
    Vec grad_delta = Vec::Zero(d);
    if (s > 0.0) {
      for (std::size_t t = 0; t < n; ++t) {
        const WhitneyCube& q = cover_->cubes()[static_cast<std::size_t>(touch[t])];
        delta += q.side * bumps[t] / s;
        grad_delta += q.side * (grads[t] * s - bumps[t] * grad_s) / (s * s);
      }
    }
    const double chi = radial_cutoff(delta, cover_->eta(), 2.0 * cover_->eta());
    if (chi == 1.0) return phi_.jacobian(x);
    const double dchi = radial_cutoff_deriv(delta, cover_->eta(), 2.0 * cover_->eta());
    const Vec grad_chi = dchi * grad_delta;

    Mat j = chi * phi_.jacobian(x) + phi_.evaluate(x) * grad_chi.transpose();
    for (std::size_t t = 0; t < n; ++t) {
      const WhitneyCube& q = cover_->cubes()[static_cast<std::size_t>(touch[t])];
      const double theta = bumps[t] / s;
      const Vec grad_theta = (grads[t] * s - bumps[t] * grad_s) / (s * s);
      const double w = (1.0 - chi) * theta;
      const Vec grad_w = -grad_chi * theta + (1.0 - chi) * grad_theta;
      j += w * q.motion.linear + q.motion.apply(x) * grad_w.transpose();
    }
    return j;
  }

  std::string type() const override { return "whitney_blend"; }

  Json to_json() const override {
    return Json{{"type", "whitney_blend"},
                {"cover", cover_->to_json(true)},
                {"phi", phi_.node().to_json()}};
  }

  const WhitneyCover& cover() const { return *cover_; }
  const SmoothMap& phi() const { return phi_; }

 private:
  std::shared_ptr<const WhitneyCover> cover_;
  SmoothMap phi_;
};

// --- serialization ----------------------------------------------------------

Json WhitneyCover::to_json(bool with_motions) const {
  Json cubes = Json::array();
  for (const WhitneyCube& q : cubes_) {
    Json jq{{"center", nodes::vec_to_json(q.center)}, {"side", q.side}};
    if (with_motions && q.has_motion) {
      jq["small"] = q.small_cube;
      jq["ball_center"] = nodes::vec_to_json(q.ball_center);
      jq["ball_radius"] = q.ball_radius;
      jq["linear"] = nodes::mat_to_json(q.motion.linear);
      jq["translation"] = nodes::vec_to_json(q.motion.translation);
    }
    cubes.push_back(std::move(jq));
  }
  Json j{{"set", set_->to_json()},
         {"cubes", cubes},
         {"eta", eta_},
         {"c0", c0_},
         {"c3", c3_},
         {"gap_width", gap_width_},
         {"root_lo", nodes::vec_to_json(root_lo_)},
         {"has_motions", has_motions_}};
  if (has_motions_) {
    j["far_motion"] = Json{{"linear", nodes::mat_to_json(far_motion_.linear)},
                           {"translation", nodes::vec_to_json(far_motion_.translation)}};
    j["far_ball"] = Json{{"center", nodes::vec_to_json(far_ball_.first)},
                         {"radius", far_ball_.second}};
  }
  return j;
}

WhitneyCover WhitneyCover::from_json(const Json& j) {
  WhitneyCover cover;
  cover.set_ = std::make_shared<AdmissibleSet>(AdmissibleSet::from_json(j.at("set")));
  cover.eta_ = j.at("eta");
  cover.c0_ = j.at("c0");
  cover.c3_ = j.at("c3");
  cover.gap_width_ = j.at("gap_width");
  cover.root_lo_ = nodes::vec_from_json(j.at("root_lo"));
  cover.has_motions_ = j.at("has_motions");
  for (const Json& jq : j.at("cubes")) {
    WhitneyCube q;
    q.center = nodes::vec_from_json(jq.at("center"));
    q.side = jq.at("side");
    if (jq.contains("linear")) {
      q.small_cube = jq.at("small");
      q.ball_center = nodes::vec_from_json(jq.at("ball_center"));
      q.ball_radius = jq.at("ball_radius");
      q.motion = EuclideanMotion(nodes::mat_from_json(jq.at("linear")),
                                 nodes::vec_from_json(jq.at("translation")));
      q.has_motion = true;
    }
    cover.cubes_.push_back(std::move(q));
  }
  if (cover.has_motions_) {
    cover.far_motion_ =
        EuclideanMotion(nodes::mat_from_json(j.at("far_motion").at("linear")),
                        nodes::vec_from_json(j.at("far_motion").at("translation")));
    cover.far_ball_ = {nodes::vec_from_json(j.at("far_ball").at("center")),
                       j.at("far_ball").at("radius")};
  }
  cover.index_cubes();
  return cover;
}

Json AdmissibleSet::to_json() const {
  Json j;
  switch (kind_) {
    case Kind::Ball:
      j["kind"] = "ball";
      j["center"] = nodes::vec_to_json(balls_[0].first);
      j["radius"] = balls_[0].second;
      break;
    case Kind::UnionOfBalls: {
      j["kind"] = "union_of_balls";
      Json arr = Json::array();
      for (const auto& [c, r] : balls_) {
        arr.push_back(Json{{"center", nodes::vec_to_json(c)}, {"radius", r}});
      }
      j["balls"] = arr;
      break;
    }
    case Kind::Box:
      j["kind"] = "box";
      j["lo"] = nodes::vec_to_json(box_lo_);
      j["hi"] = nodes::vec_to_json(box_hi_);
      break;
    case Kind::Segment:
      j["kind"] = "segment";
      j["a"] = nodes::vec_to_json(seg_a_);
      j["b"] = nodes::vec_to_json(seg_b_);
      break;
    case Kind::Oracle:
      throw Error("oracle sets are not serializable");
  }
  return j;
}

AdmissibleSet AdmissibleSet::from_json(const Json& j) {
  const std::string kind = j.at("kind");
  if (kind == "ball") {
    return ball(nodes::vec_from_json(j.at("center")), j.at("radius"));
  }
  if (kind == "union_of_balls") {
    std::vector<std::pair<Vec, double>> balls;
    for (const Json& b : j.at("balls")) {
      balls.emplace_back(nodes::vec_from_json(b.at("center")), b.at("radius"));
    }
    return union_of_balls(std::move(balls));
  }
  if (kind == "box") {
    return box(nodes::vec_from_json(j.at("lo")), nodes::vec_from_json(j.at("hi")));
  }
  if (kind == "segment") {
    return segment(nodes::vec_from_json(j.at("a")), nodes::vec_from_json(j.at("b")));
  }
  throw ParseError("unknown set kind '" + kind + "'");
}

void ensure_whitney_node_registered() {
  static const bool once = [] {
    register_node_factory("whitney_blend", [](const Json& j) {
      auto cover =
          std::make_shared<WhitneyCover>(WhitneyCover::from_json(j.at("cover")));
      SmoothMap phi(node_from_json(j.at("phi")));
      return std::make_shared<WhitneyBlendNode>(std::move(cover), std::move(phi));
    });
    return true;
  }();
  (void)once;
}

// --- whitney_extend ---------------------------------------------------------

WhitneyExtension whitney_extend(const AdmissibleSet& set, const SmoothMap& phi,
                                double epsilon, double eta,
                                const WhitneyCoverParams& params) {
  WhitneyExtension result;
  WhitneyReport& report = result.report;
  const int d = set.dim();
  try {
    WhitneyCover cover = whitney_cubes(set, params, eta);

    // Hypothesis check: phi's distortion on a neighborhood of E.
    {
      std::mt19937_64 rng(0xf1a57u);
      double worst = 0.0;
      int found = 0;
      const Vec lo = set.bbox_lo().array() - 2.0 * cover.eta();
      const Vec hi = set.bbox_hi().array() + 2.0 * cover.eta();
      for (int i = 0; i < 6000 && found < 500; ++i) {
        const Vec x = sample_in_box(rng, lo, hi);
        if (set.distance(x) > 2.0 * cover.eta()) continue;
        ++found;
        const Mat j = phi.jacobian(x);
        Eigen::SelfAdjointEigenSolver<Mat> eig(j.transpose() * j -
                                               Mat::Identity(d, d));
        worst = std::max(worst, eig.eigenvalues().cwiseAbs().maxCoeff());
      }
      report.phi_audit = worst;
      if (worst > kBuilderAuditConstant * epsilon) {
        report.failure = "phi distortion near E (" + std::to_string(worst) +
                         ") exceeds the budget " +
                         std::to_string(kBuilderAuditConstant * epsilon);
        return result;
      }
    }

    select_cube_motions(cover, phi);

    // Overlap-consistency measurement (|A_mu - A_nu| <= C eps delta form).
    {
      std::mt19937_64 rng(0xc0a57u);
      double constant = 0.0;
      const Vec lo = set.bbox_lo().array() - cover.c0();
      const Vec hi = set.bbox_hi().array() + cover.c0();
      for (int i = 0; i < 2000; ++i) {
        const Vec x = sample_in_box(rng, lo, hi);
        const auto touch = cover.touching(x);
        if (touch.size() < 2) continue;
        const double delta = std::max(cover.regularized_distance(x), 1e-300);
        for (std::size_t a = 0; a < touch.size(); ++a) {
          for (std::size_t b = a + 1; b < touch.size(); ++b) {
            const auto& qa = cover.cubes()[static_cast<std::size_t>(touch[a])];
            const auto& qb = cover.cubes()[static_cast<std::size_t>(touch[b])];
            const double gap = (qa.motion.apply(x) - qb.motion.apply(x)).norm();
            constant = std::max(constant, gap / (epsilon * delta));
          }
        }
      }
      report.consistency_constant = constant;
    }

    auto cover_ptr = std::make_shared<const WhitneyCover>(std::move(cover));
    SmoothMap map(std::make_shared<WhitneyBlendNode>(cover_ptr, phi),
                  kBuilderAuditConstant * epsilon);

    // Post-hoc guarantees on probes.
    std::mt19937_64 rng(0x9057u);
    const double diam = set.diameter();
    const Vec lo = set.bbox_lo().array() - 1.5 * cover_ptr->c0() - 0.1 * diam;
    const Vec hi = set.bbox_hi().array() + 1.5 * cover_ptr->c0() + 0.1 * diam;
    for (int i = 0; i < 2000; ++i) {
      const Vec x = sample_in_box(rng, lo, hi);
      const double delta = cover_ptr->regularized_distance(x);
      const double dist = set.distance(x);
      const Vec fx = map.evaluate(x);
      if (delta < cover_ptr->eta() && dist < cover_ptr->c0()) {
        report.near_agreement =
            std::max(report.near_agreement, (fx - phi.evaluate(x)).norm());
      }
      if (dist >= cover_ptr->c0()) {
        report.far_agreement = std::max(
            report.far_agreement, (fx - cover_ptr->far_motion().apply(x)).norm());
      }
      if (dist > 0.0) {
        const auto touch = cover_ptr->touching(x);
        double s = 0.0;
        int active = 0;
        for (int t : touch) {
          const double b =
              cube_bump(cover_ptr->cubes()[static_cast<std::size_t>(t)], x);
          s += b;
          if (b > 0.0) ++active;
        }
        const double chi =
            radial_cutoff(delta, cover_ptr->eta(), 2.0 * cover_ptr->eta());
        const double total = chi + (s > 0.0 ? (1.0 - chi) : 0.0);
        report.partition_defect =
            std::max(report.partition_defect, std::abs(1.0 - total));
        report.max_overlap = std::max(report.max_overlap, active);
      }
      const Mat j = map.jacobian(x);
      Eigen::SelfAdjointEigenSolver<Mat> eig(j.transpose() * j - Mat::Identity(d, d));
      report.jacobian_defect =
          std::max(report.jacobian_defect, eig.eigenvalues().cwiseAbs().maxCoeff());
    }
    if (report.near_agreement > 1e-12 * std::max(1.0, diam)) {
      report.failure = "blend deviates from phi near E";
      return result;
    }
    if (report.far_agreement > 1e-12 * std::max(1.0, diam)) {
      report.failure = "blend deviates from the far motion";
      return result;
    }
    report.ok = true;
    result.map = std::move(map);
    return result;
  } catch (const Error& e) {
    report.failure = e.what();
    return result;
  }
}

}  // namespace isokit
