#include "isokit/extend_finite.hpp"

#include "map_nodes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace isokit {

namespace {

PointConfig subset(const PointConfig& config, const std::vector<int>& idx) {
  std::vector<Vec> pts;
  pts.reserve(idx.size());
  for (int i : idx) pts.push_back(config.points[i]);
  return PointConfig(config.dim, std::move(pts));
}

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  void join(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<std::vector<int>> closure_clusters(const PointConfig& X, double threshold) {
  const int n = X.size();
  DisjointSet ds(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((X.points[i] - X.points[j]).norm() <= threshold) ds.join(i, j);
    }
  }
  std::vector<std::vector<int>> clusters;
  std::vector<int> root_of(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = ds.find(i);
    if (root_of[r] < 0) {
      root_of[r] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[root_of[r]].push_back(i);
  }
  return clusters;
}

double cluster_distance(const PointConfig& X, const std::vector<int>& a,
                        const std::vector<int>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (int i : a) {
    for (int j : b) best = std::min(best, (X.points[i] - X.points[j]).norm());
  }
  return best;
}

double cluster_diameter(const PointConfig& X, const std::vector<int>& c) {
  double best = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      best = std::max(best, (X.points[c[i]] - X.points[c[j]]).norm());
    }
  }
  return best;
}

}  // namespace

ClusterPartition pigeonhole_partition(const PointConfig& X, double eta) {
  const int k = X.size();
  if (k < 2) throw InsufficientPoints("pigeonhole_partition needs >= 2 points");
  if (!(eta > 0.0 && eta <= 0.1)) throw Error("eta must lie in (0, 1/10]");
  const double diam = X.diameter();
  if (diam <= 0.0) throw CoincidentPoints("all points coincide");

  const Mat dist = pairwise_distances(X);
  const int l_max = 100 + k * (k - 1) / 2;
  int chosen = -1;
  for (int l = 10; l <= l_max; ++l) {
    const double lo = std::pow(eta, l) * diam;
    const double hi = std::pow(eta, l - 1) * diam;
    bool empty = true;
    for (int i = 0; i < k && empty; ++i) {
      for (int j = i + 1; j < k; ++j) {
        if (dist(i, j) > lo && dist(i, j) <= hi) {
          empty = false;
          break;
        }
      }
    }
    if (empty) {
      chosen = l;
      break;
    }
  }
  if (chosen < 0) throw Error("pigeonhole search failed (cannot happen)");

  ClusterPartition part;
  part.scale_exponent = chosen;
  part.clusters = closure_clusters(X, std::pow(eta, chosen) * diam);

  // Both theorem inequalities verified before return.
  const double diam_bound = std::pow(eta, chosen) * diam;
  const double sep_bound = std::pow(eta, chosen - 1) * diam;
  for (std::size_t a = 0; a < part.clusters.size(); ++a) {
    if (cluster_diameter(X, part.clusters[a]) > diam_bound * (1.0 + 1e-12)) {
      throw Error("pigeonhole cluster diameter bound violated");
    }
    for (std::size_t b = a + 1; b < part.clusters.size(); ++b) {
      if (cluster_distance(X, part.clusters[a], part.clusters[b]) <
          sep_bound * (1.0 - 1e-12)) {
        throw Error("pigeonhole cluster separation bound violated");
      }
    }
  }
  return part;
}

ClusterPartition scaled_clustering(const PointConfig& S, double epsilon, int K) {
  const int k = S.size();
  if (k < 2) throw InsufficientPoints("scaled_clustering needs >= 2 points");
  if (k > K) throw KExceeded("card(S) exceeds K");
  const double diam = S.diameter();
  if (diam <= 0.0) throw CoincidentPoints("all points coincide");

  const Mat dist = pairwise_distances(S);
  const int j_max = 5 * (K * (K - 1) / 2) + 5;
  int chosen = -1;
  for (int j = 1; j <= j_max; ++j) {
    const double tau = std::exp(-static_cast<double>(j) / epsilon) * diam;
    const double thresh = std::exp(-5.0 / epsilon) * tau;
    if (tau <= 0.0) break;  // double underflow: epsilon too small for this K
    bool empty = true;
    for (int a = 0; a < k && empty; ++a) {
      for (int b = a + 1; b < k; ++b) {
        if (dist(a, b) > thresh && dist(a, b) <= tau) {
          empty = false;
          break;
        }
      }
    }
    if (empty) {
      chosen = j;
      break;
    }
  }
  if (chosen < 0) {
    throw RatioInfeasible("no clustering scale representable at this epsilon/K");
  }

  ClusterPartition part;
  part.tau = std::exp(-static_cast<double>(chosen) / epsilon) * diam;
  const double thresh = std::exp(-5.0 / epsilon) * part.tau;
  part.clusters = closure_clusters(S, thresh);

  for (std::size_t a = 0; a < part.clusters.size(); ++a) {
    if (static_cast<int>(part.clusters[a].size()) > K - 1) {
      throw Error("scaled cluster cardinality bound violated");
    }
    if (cluster_diameter(S, part.clusters[a]) > thresh * (1.0 + 1e-12)) {
      throw Error("scaled cluster diameter bound violated");
    }
    for (std::size_t b = a + 1; b < part.clusters.size(); ++b) {
      if (cluster_distance(S, part.clusters[a], part.clusters[b]) <
          part.tau * (1.0 - 1e-12)) {
        throw Error("scaled cluster separation bound violated");
      }
    }
  }
  return part;
}

// ---------------------------------------------------------------------------
// extend_finite: the pigeonhole recursion.
// ---------------------------------------------------------------------------

namespace {

// A motion localized around `center`: equals `motion` on |x-center| <= c3,
// identity on |x-center| >= c4, with the radii chosen for the given defect
// budget.  Returns the map and the chosen outer radius c4.
struct LocalizedMotion {
  SmoothMap map;
  double outer_radius = 0.0;
};

LocalizedMotion localize_motion_at(const EuclideanMotion& motion, const Vec& center,
                                   double c3, double defect_budget) {
  // Local coordinates u = x - center.
  EuclideanMotion local;
  local.linear = motion.linear;
  local.translation = motion.apply(center) - center;
  local.proper = motion.proper;
  if (!motion.proper) throw Degenerate("cannot localize an improper motion");

  double max_angle = 0.0;
  for (double a : so_canonical_blocks(local.linear).angles) {
    max_angle = std::max(max_angle, std::abs(a));
  }
  // b = 2*angle/logspan; with b = 0.4*budget the defect 2b + b^2 stays below
  // 0.9*budget, and exp(logspan) stays within double range down to
  // budget ~ 0.02 even for angles up to pi.
  double c4 = 2.0 * c3;
  if (max_angle > 1e-15) {
    const double logspan =
        kSmoothStepDerivMax * max_angle / (0.4 * defect_budget);
    if (logspan > 690.0) {
      throw RatioInfeasible(
          "far-field radius exp(" + std::to_string(logspan) +
          ") for a rotation by " + std::to_string(max_angle) +
          " at budget " + std::to_string(defect_budget) +
          " is not representable in double precision");
    }
    c4 = std::max(c4, c3 * std::exp(logspan));
  }
  const double trans_defect =
      local.translation.norm() * kSmoothStepDerivMax / (c4 - c3);
  if (trans_defect > defect_budget / 2.0) {
    throw TranslationInfeasible("translation defect " + std::to_string(trans_defect) +
                                " exceeds budget " + std::to_string(defect_budget));
  }

  std::vector<SmoothMap> parts;
  parts.push_back(make_motion(EuclideanMotion::pure_translation(-center)));
  parts.push_back(localize_motion(local, c3, c4, defect_budget));
  parts.push_back(make_motion(EuclideanMotion::pure_translation(center)));
  LocalizedMotion out;
  out.map = make_composite(std::move(parts));
  out.outer_radius = c4;
  return out;
}

struct CoreExtension {
  SmoothMap map;
  double far_radius = 0.0;  // identity beyond B(anchor, far_radius)
};

// Well-separated base construction (anchored: y[0] == z[0]).
CoreExtension well_separated_extension(const PointConfig& E, const PointConfig& Z,
                                       double budget, const ExtendOptions& opt) {
  (void)opt;
  const int d = E.dim;
  const int k = E.size();
  const Vec anchor = E.points[0];
  CoreExtension out;
  if (k == 1) {
    out.map = make_identity(d);
    out.far_radius = 0.0;
    return out;
  }
  const double diam = E.diameter();
  const double sep = E.separation();

  // Proper motion fit on the representatives (legal: k <= D).
  const MotionFit fit = fit_euclidean_motion(E, Z, /*require_proper=*/true);

  // Disjoint mover balls around the fitted images, sized by the measured
  // separation; each mover must absorb its residual within the budget.
  const double mover_outer = 0.4 * sep;
  std::vector<SmoothMap> movers;
  double mover_defect = 0.0;
  for (int i = 0; i < k; ++i) {
    const Vec from = fit.motion.apply(E.points[i]);
    const Vec v = Z.points[i] - from;
    if (v.norm() == 0.0) continue;
    const double defect =
        v.norm() * kSmoothStepDerivMax / (mover_outer - mover_outer / 2.0);
    if (defect > budget / 2.0) {
      throw DeltaTooLarge("mover for point " + std::to_string(i) + " needs defect " +
                          std::to_string(defect) + " > budget " +
                          std::to_string(budget / 2.0) +
                          "; input distortion too large for this epsilon");
    }
    mover_defect = std::max(mover_defect, defect);
    movers.push_back(slide(
        DisplacementField::radial_bump(from, mover_outer / 2.0, mover_outer, v)));
  }

  // Localize the motion around the anchor; movers live inside B(anchor, ~2 diam),
  // so c3 = 4 diam leaves an agreement annulus [3,4]*diam.
  const double c3 = 4.0 * diam;
  const LocalizedMotion localized =
      localize_motion_at(fit.motion, anchor, c3, budget / 2.0);

  // Inner map: motion then movers (supports pairwise disjoint).
  std::vector<SmoothMap> inner_parts;
  inner_parts.push_back(make_motion(fit.motion));
  for (SmoothMap& m : movers) inner_parts.push_back(std::move(m));
  SmoothMap inner = make_composite(std::move(inner_parts));

  PatchRegion region;
  region.center = anchor;
  region.radius = 3.5 * diam;
  region.inner = std::move(inner);
  out.map = make_patched_union({std::move(region)}, localized.map,
                               /*verify_boundaries=*/true, 16, 1e-9);
  out.far_radius = localized.outer_radius;
  return out;
}

// Recursive construction (anchored: y[0] == z[0]).
CoreExtension anchored_extension(const PointConfig& E, const PointConfig& Z,
                                 double budget, const ExtendOptions& opt) {
  const int d = E.dim;
  const int k = E.size();
  CoreExtension out;
  if (k == 1) {
    out.map = make_identity(d);
    return out;
  }
  const double diam = E.diameter();
  const ClusterPartition part = pigeonhole_partition(E, opt.lambda);

  if (static_cast<int>(part.clusters.size()) == k) {
    return well_separated_extension(E, Z, budget, opt);
  }

  // Representatives: lowest index per cluster; the anchor's cluster is led
  // by index 0.
  std::vector<int> reps;
  for (const auto& cluster : part.clusters) {
    reps.push_back(*std::min_element(cluster.begin(), cluster.end()));
  }
  std::sort(reps.begin(), reps.end());
  const PointConfig e_rep = subset(E, reps);
  const PointConfig z_rep = subset(Z, reps);

  const double phi0_budget = 0.35 * budget;
  const double sub_budget = 0.6 * budget;
  CoreExtension phi0 = (e_rep.size() == 1)
                           ? CoreExtension{make_identity(d), 0.0}
                           : well_separated_extension(e_rep, z_rep, phi0_budget, opt);

  // Images of all points under phi0; representative images hit their targets.
  std::vector<Vec> moved(k);
  for (int i = 0; i < k; ++i) moved[i] = phi0.map.evaluate(E.points[i]);

  const double cluster_sep =
      std::pow(opt.lambda, part.scale_exponent - 1) * diam;
  std::vector<PatchRegion> regions;
  for (std::size_t c = 0; c < part.clusters.size(); ++c) {
    const auto& cluster = part.clusters[c];
    if (cluster.size() < 2) continue;
    std::vector<int> order = cluster;  // representative first
    std::swap(order[0],
              *std::find(order.begin(), order.end(),
                         *std::min_element(order.begin(), order.end())));
    std::vector<Vec> sub_pts, sub_targets;
    for (int i : order) {
      sub_pts.push_back(moved[i]);
      sub_targets.push_back(Z.points[i]);
    }
    PointConfig sub_e(d, std::move(sub_pts));
    PointConfig sub_z(d, std::move(sub_targets));
    // Anchor exactness: phi0 interpolates the representative.
    if ((sub_e.points[0] - sub_z.points[0]).norm() > 1e-9 * diam) {
      throw Error("representative not interpolated by the base extension");
    }
    sub_z.points[0] = sub_e.points[0];  // absorb fp dust at the anchor
    CoreExtension sub = anchored_extension(sub_e, sub_z, sub_budget, opt);

    PatchRegion region;
    region.center = sub_e.points[0];
    const double sub_diam = sub_e.diameter();
    region.radius = std::max(sub.far_radius * 1.05,
                             0.5 / std::sqrt(opt.lambda) * sub_diam);
    if (2.0 * region.radius > 0.9 * cluster_sep) {
      throw RatioInfeasible(
          "cluster patch balls would overlap; the per-cluster far field (" +
          std::to_string(region.radius) + ") exceeds the separation scale (" +
          std::to_string(cluster_sep) + ")");
    }
    region.inner = sub.map;
    regions.push_back(std::move(region));
  }

  const Vec anchor = E.points[0];
  if (regions.empty()) {
    out = phi0;
    return out;
  }
  double reach = 0.0;
  for (const PatchRegion& r : regions) {
    reach = std::max(reach, (r.center - anchor).norm() + r.radius);
  }
  SmoothMap patched = make_patched_union(std::move(regions), make_identity(d),
                                         /*verify_boundaries=*/true, 16, 1e-9);
  out.map = make_composite({phi0.map, std::move(patched)});
  out.far_radius = std::max(phi0.far_radius, reach * 1.05);
  return out;
}

}  // namespace

ExtensionResult extend_finite(const PointConfig& E, const PointConfig& images,
                              double epsilon, const ExtendOptions& options) {
  const int d = E.dim;
  const int k = E.size();
  if (k < 1) throw InsufficientPoints("empty configuration");
  if (k != images.size() || images.dim != d) {
    throw DimensionMismatch("E/images mismatch");
  }
  if (k > d) {
    throw KExceedsD("k = " + std::to_string(k) + " exceeds D = " + std::to_string(d) +
                    "; unrestricted extension is obstructed beyond k = D");
  }

  ExtensionResult result;
  result.outer_motion = EuclideanMotion::identity(d);
  if (k >= 2) {
    const double delta = epsilon * options.delta_factor;
    const auto prof = distortion_profile(E, images);
    if (prof.max_ratio > 1.0 + delta || prof.min_ratio < 1.0 / (1.0 + delta)) {
      throw DeltaTooLarge("distortion profile [" + std::to_string(prof.min_ratio) +
                          ", " + std::to_string(prof.max_ratio) +
                          "] outside the delta = " + std::to_string(delta) +
                          " feasibility window");
    }
  }

  const double diam = k >= 2 ? E.diameter() : 1.0;

  // Anchor at a fixed point of the correspondence when one exists; otherwise
  // translate the images so the first point is fixed and compose back.
  double coord_scale = std::max(diam, 1.0);
  for (const Vec& p : E.points) coord_scale = std::max(coord_scale, p.cwiseAbs().maxCoeff());
  for (const Vec& p : images.points) coord_scale = std::max(coord_scale, p.cwiseAbs().maxCoeff());
  int anchor_idx = 0;
  double anchor_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const double gap = (images.points[i] - E.points[i]).norm();
    if (gap < anchor_gap) {
      anchor_gap = gap;
      anchor_idx = i;
    }
  }
  if (anchor_gap > 1e-13 * coord_scale) anchor_idx = 0;  // no fixed point
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::swap(order[0], order[anchor_idx]);
  PointConfig e_ord = subset(E, order);
  PointConfig z_ord = subset(images, order);
  Vec shift = z_ord.points[0] - e_ord.points[0];
  if (anchor_gap <= 1e-13 * coord_scale) shift.setZero();  // fixed point: snap
  const bool shifted = shift.norm() > 0.0;
  for (Vec& z : z_ord.points) z -= shift;
  z_ord.points[0] = e_ord.points[0];

  const double core_budget = shifted ? 0.95 * epsilon : epsilon;
  CoreExtension core = anchored_extension(e_ord, z_ord, core_budget, options);

  result.map = shifted
                   ? make_composite({core.map, make_motion(EuclideanMotion::pure_translation(shift))})
                   : core.map;
  result.far_field_center = e_ord.points[0];
  result.far_field_radius = core.far_radius;
  result.outer_motion = shifted ? EuclideanMotion::pure_translation(shift)
                                : EuclideanMotion::identity(d);
  for (int i = 0; i < k; ++i) {
    result.interpolation_error =
        std::max(result.interpolation_error,
                 (result.map.evaluate(E.points[i]) - images.points[i]).norm());
  }
  if (options.run_audit) {
    const Region region =
        Region::ball(result.far_field_center,
                     2.0 / options.lambda * std::max(diam, 1e-12));
    const auto audit =
        distortion_audit(result.map, region, options.audit_samples, options.audit_seed);
    result.audited_epsilon = audit.sup_jacobian_defect;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Near-reflection extension and gluing.
// ---------------------------------------------------------------------------

namespace {

struct NearReflectionCore {
  SmoothMap map;
  EuclideanMotion far_motion;  // improper
};

// Scale-covariant core of the near-reflection extension: fixes E pointwise,
// equals a motion on B(z, tau/10) around each z, and the improper near
// reflection once every bump has died out.
NearReflectionCore near_reflection_core(const PointConfig& E, double tau,
                                        double eta, double epsilon) {
  const double diam = E.size() >= 2 ? E.diameter() : 1.0;
  if (E.size() >= 2 && E.separation() < tau * (1.0 - 1e-12)) {
    throw Error("separation below tau");
  }
  if (eta * diam > 0.5 * tau * epsilon) {
    throw RatioInfeasible("need eta < c tau epsilon; got eta = " +
                          std::to_string(eta) + ", tau*eps = " +
                          std::to_string(tau * epsilon));
  }
  const NearReflection nr = fit_near_reflection(E, eta);  // throws NotThin

  // Cutoff slide: full displacement z - A(z) on B(z, tau/10), zero beyond
  // B(z, tau/5); supports pairwise disjoint by the tau-separation.
  std::vector<SmoothMap> parts;
  parts.push_back(make_motion(nr.motion));
  for (const Vec& z : E.points) {
    const Vec v = z - nr.motion.apply(z);
    if (v.norm() == 0.0) continue;
    const double defect = v.norm() * kSmoothStepDerivMax / (tau / 10.0);
    if (defect > kBuilderAuditConstant * epsilon) {
      throw RatioInfeasible("reflection residual too large for the slide budget");
    }
    parts.push_back(
        slide(DisplacementField::radial_bump(z, tau / 10.0, tau / 5.0, v)));
  }
  NearReflectionCore out;
  out.map = make_composite(std::move(parts));
  out.far_motion = nr.motion;
  return out;
}

}  // namespace

SmoothMap near_reflection_extension(const PointConfig& E, double tau, double eta,
                                    double epsilon) {
  if (E.size() >= 2 && std::abs(E.diameter() - 1.0) > 0.25) {
    throw Error("caller must normalize diam(E) to 1");
  }
  return near_reflection_core(E, tau, eta, epsilon).map;
}

namespace {

// Fit the Euclidean motion a map equals near a sphere around `center` by
// probing the center and D axis points; verified on extra samples.
EuclideanMotion probe_motion(const SmoothMap& map, const Vec& center, double radius,
                             const std::string& what) {
  const int d = map.dim();
  std::vector<Vec> xs{center};
  std::vector<Vec> ys{map.evaluate(center)};
  for (int i = 0; i < d; ++i) {
    Vec x = center;
    x[i] += radius;
    xs.push_back(x);
    ys.push_back(map.evaluate(x));
  }
  const AffineMap affine = affine_interpolant(xs, ys);
  // Polar-orthogonalize to absorb probe round-off.
  Eigen::JacobiSVD<Mat> svd(affine.linear, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat m = svd.matrixU() * svd.matrixV().transpose();
  if ((m - affine.linear).cwiseAbs().maxCoeff() > 1e-6) {
    throw GlueMismatch(what + " is not a Euclidean motion near the probe sphere");
  }
  EuclideanMotion motion(m, ys[0] - m * xs[0]);
  std::mt19937_64 rng(0x9a0bu);
  for (int s = 0; s < 8; ++s) {
    const Vec x = center + radius * sample_unit_sphere(rng, d);
    if ((map.evaluate(x) - motion.apply(x)).norm() > 1e-7 * std::max(1.0, radius)) {
      throw GlueMismatch(what + " disagrees with its probed motion at a sample");
    }
  }
  return motion;
}

}  // namespace

SmoothMap glue(const std::vector<SmoothMap>& per_point_maps,
               const SmoothMap& outer_map, const PointConfig& E, double tau,
               double epsilon) {
  const int k = E.size();
  if (static_cast<int>(per_point_maps.size()) != k) {
    throw DimensionMismatch("one map per point required");
  }
  const double b1 = std::exp(-4.0 / epsilon) * tau;
  const double b2 = std::exp(-3.0 / epsilon) * tau;
  const double b3 = std::exp(-2.0 / epsilon) * tau;
  const double b4 = std::exp(-1.0 / epsilon) * tau;
  if (b1 <= 0.0) throw RatioInfeasible("gluing radii underflow at this epsilon");

  std::vector<PatchRegion> inner_regions;
  std::vector<PatchRegion> transition_regions;
  for (int i = 0; i < k; ++i) {
    const Vec& z = E.points[i];
    const SmoothMap& phi_z = per_point_maps[i];
    const double agree =
        (phi_z.evaluate(z) - outer_map.evaluate(z)).norm();
    if (agree > 1e-9 * std::max(1.0, tau)) {
      throw GlueMismatch("per-point and outer maps disagree at point " +
                         std::to_string(i) + " by " + std::to_string(agree));
    }
    const EuclideanMotion a_z =
        probe_motion(phi_z, z, 0.5 * (b1 + b2), "per-point map " + std::to_string(i));
    const EuclideanMotion a_star =
        probe_motion(outer_map, z, 0.5 * b4, "outer map near point " + std::to_string(i));
    if (!a_z.proper || !a_star.proper) {
      throw GlueMismatch("gluing requires proper motions on both sides");
    }

    // Transition between A_z (inside b2) and A*_z (outside b3): localize
    // A*_z^{-1} A_z over the [b2, b3] band, whose log width 1/eps absorbs
    // any O(1) rotation mismatch at O(eps) distortion.
    const EuclideanMotion n = a_star.inverse().compose(a_z);
    EuclideanMotion n_local;
    n_local.linear = n.linear;
    n_local.translation = n.apply(z) - z;
    n_local.proper = n.proper;
    double mismatch_angle = 0.0;
    for (double a : so_canonical_blocks(n_local.linear).angles) {
      mismatch_angle = std::max(mismatch_angle, std::abs(a));
    }
    // localize_motion preconditions, rearranged for the fixed band:
    const double eps_arg = std::max(
        {epsilon, 1.05 * 2.0 * localize_required_logspan(mismatch_angle, 1.0) /
                      std::log(b3 / b2),
         1.05 * n_local.translation.norm() / b2});
    std::vector<SmoothMap> tr_parts;
    tr_parts.push_back(make_motion(EuclideanMotion::pure_translation(-z)));
    tr_parts.push_back(localize_motion(n_local, b2, b3, eps_arg));
    tr_parts.push_back(make_motion(EuclideanMotion::pure_translation(z)));
    tr_parts.push_back(make_motion(a_star));
    SmoothMap transition = make_composite(std::move(tr_parts));

    PatchRegion inner;
    inner.center = z;
    inner.radius = b2;
    inner.inner = phi_z;
    inner_regions.push_back(std::move(inner));

    PatchRegion mid;
    mid.center = z;
    mid.radius = b4;
    mid.inner = std::move(transition);
    transition_regions.push_back(std::move(mid));
  }

  std::vector<PatchRegion> regions;
  for (PatchRegion& r : inner_regions) regions.push_back(std::move(r));
  for (PatchRegion& r : transition_regions) regions.push_back(std::move(r));
  return make_patched_union(std::move(regions), outer_map,
                            /*verify_boundaries=*/true, 12, 1e-6);
}

// ---------------------------------------------------------------------------
// extend_with_properness.
// ---------------------------------------------------------------------------

namespace {

struct BlockScan {
  std::optional<std::vector<int>> positive;
  std::optional<std::vector<int>> negative;
};

BlockScan scan_eta_blocks(const PointConfig& E, const PointConfig& Z, double eta) {
  BlockScan scan;
  const int d = E.dim;
  const int k = E.size();
  if (k < d + 1) return scan;
  std::vector<int> idx(d + 1);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<Vec> tuple, images;
    for (int i : idx) {
      tuple.push_back(E.points[i]);
      images.push_back(Z.points[i]);
    }
    const BlockClass cls = classify_eta_block(tuple, images, eta);
    if (cls == BlockClass::Positive && !scan.positive) scan.positive = idx;
    if (cls == BlockClass::Negative && !scan.negative) scan.negative = idx;
    if (scan.positive && scan.negative) break;
    int i = d;
    while (i >= 0 && idx[i] == k - (d + 1) + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j <= d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return scan;
}

struct ProperCore {
  SmoothMap map;
  EuclideanMotion far_motion;
  double far_radius = 0.0;  // beyond B(anchor, far_radius) the map is far_motion
  Vec anchor;
};

// Per-representative pipeline: motion fit, cutoff-slide correction, optional
// near-reflection composition when the fitted motion is improper.
ProperCore representative_pipeline(const PointConfig& E, const PointConfig& Z,
                                   double epsilon, double eta,
                                   const PropernessOptions& opt) {
  (void)opt;
  const int d = E.dim;
  const int k = E.size();
  ProperCore out;
  out.anchor = E.points[0];
  if (k == 1) {
    const Vec t = Z.points[0] - E.points[0];
    out.map = make_motion(EuclideanMotion::pure_translation(t));
    out.far_motion = EuclideanMotion::pure_translation(t);
    out.far_radius = 0.0;
    return out;
  }
  const double diam = E.diameter();
  const double sep = E.separation();

  const ProcrustesResult uncon = orthogonal_procrustes(E, Z);
  EuclideanMotion fit = uncon.motion;
  SmoothMap pre_reflection;          // composed first when the fit is improper
  EuclideanMotion pre_far_motion = EuclideanMotion::identity(d);
  double pre_reach = 0.0;

  if (!fit.proper) {
    // Thin sets take the near-reflection route; otherwise the positive-block
    // geometry forces a proper fit at comparable residual.
    bool thin = true;
    if (k >= d + 1) {
      const double vd = max_simplex_volume(E, d).volume;
      thin = vd <= std::pow(eta * diam, d);
    }
    if (thin) {
      // An improper map fixing E pointwise; the composite with the improper
      // fit restores a proper total map.
      const NearReflectionCore refl = near_reflection_core(E, sep, eta, epsilon);
      pre_reflection = refl.map;
      pre_far_motion = refl.far_motion;
      for (const Vec& z : E.points) {
        pre_reach = std::max(pre_reach, (z - out.anchor).norm() + sep / 5.0);
      }
    } else {
      fit = fit_euclidean_motion(E, Z, /*require_proper=*/true).motion;
    }
  }

  // Cutoff-slide correction: displacement A^{-1}(z_i) - y_i near each y_i
  // (the near-reflection, when present, fixes E pointwise first).
  const EuclideanMotion inv = fit.inverse();
  std::vector<SmoothMap> parts;
  if (pre_reflection.valid()) parts.push_back(pre_reflection);
  double slide_reach = 0.0;
  for (int i = 0; i < k; ++i) {
    const Vec v = inv.apply(Z.points[i]) - E.points[i];
    if (v.norm() == 0.0) continue;
    const double defect = v.norm() * kSmoothStepDerivMax / (sep / 100.0);
    if (defect > kBuilderAuditConstant * epsilon) {
      throw DeltaTooLarge("correction slide for point " + std::to_string(i) +
                          " needs defect " + std::to_string(defect) +
                          "; distortion too large for this epsilon/tau");
    }
    parts.push_back(slide(
        DisplacementField::radial_bump(E.points[i], sep / 100.0, sep / 50.0, v)));
    slide_reach =
        std::max(slide_reach, (E.points[i] - out.anchor).norm() + sep / 50.0);
  }
  parts.push_back(make_motion(fit));
  out.map = parts.size() == 1 ? parts[0] : make_composite(std::move(parts));
  // Far away every bump has died out: the map is fit (or fit o reflection).
  out.far_motion = pre_reflection.valid() ? fit.compose(pre_far_motion) : fit;
  out.far_radius = std::max({slide_reach, pre_reach, 1e-12 * diam});
  return out;
}

ProperCore properness_core(const PointConfig& E, const PointConfig& Z,
                           double epsilon, int K, double eta,
                           const PropernessOptions& opt, int depth) {
  const int k = E.size();
  ProperCore out;
  if (k == 1) {
    return representative_pipeline(E, Z, epsilon, eta, opt);
  }
  if (depth > K + 2) throw Error("properness recursion failed to terminate");

  const ClusterPartition part = scaled_clustering(E, epsilon, K);
  std::vector<int> reps;
  for (const auto& cluster : part.clusters) {
    reps.push_back(*std::min_element(cluster.begin(), cluster.end()));
  }
  std::sort(reps.begin(), reps.end());
  const PointConfig e_rep = subset(E, reps);
  const PointConfig z_rep = subset(Z, reps);

  // Outer map on the representatives.
  ProperCore outer = representative_pipeline(e_rep, z_rep, epsilon, eta, opt);

  if (static_cast<int>(part.clusters.size()) == k) {
    // All singletons: the outer map already interpolates everything.
    return outer;
  }

  // Per-point maps: singleton clusters use the outer map's local motion with
  // an exact interpolation offset (same rotation keeps transitions small);
  // larger clusters recurse at cardinality <= K-1.
  std::vector<SmoothMap> per_point;
  for (std::size_t c = 0; c < part.clusters.size(); ++c) {
    const auto& cluster = part.clusters[c];
    const int rep = *std::min_element(cluster.begin(), cluster.end());
    const Vec& z = E.points[rep];
    if (cluster.size() == 1) {
      const double probe_r = std::min(0.25 * std::exp(-1.0 / epsilon) * part.tau,
                                      e_rep.separation() / 200.0);
      const EuclideanMotion local = probe_motion(outer.map, z, probe_r, "outer map");
      EuclideanMotion matched = local;
      matched.translation += Z.points[rep] - local.apply(z);
      per_point.push_back(make_motion(matched));
    } else {
      std::vector<int> order = cluster;
      std::swap(order[0], *std::find(order.begin(), order.end(), rep));
      ProperCore sub = properness_core(subset(E, order), subset(Z, order), epsilon,
                                       K - 1, eta, opt, depth + 1);
      const double b1 = std::exp(-4.0 / epsilon) * part.tau;
      if (sub.far_radius > 0.9 * b1) {
        throw RatioInfeasible(
            "cluster map far field " + std::to_string(sub.far_radius) +
            " exceeds the gluing inner radius " + std::to_string(b1));
      }
      per_point.push_back(sub.map);
    }
  }

  SmoothMap glued = glue(per_point, outer.map, e_rep, part.tau, epsilon);
  out.map = std::move(glued);
  out.far_motion = outer.far_motion;
  out.anchor = outer.anchor;
  double reach = outer.far_radius;
  for (int i : reps) {
    reach = std::max(reach, (E.points[i] - outer.anchor).norm() +
                                std::exp(-1.0 / epsilon) * part.tau);
  }
  out.far_radius = reach;
  return out;
}

}  // namespace

ExtensionResult extend_with_properness(const PointConfig& E,
                                       const PointConfig& images, double epsilon,
                                       int K, const PropernessOptions& options) {
  const int d = E.dim;
  const int k = E.size();
  if (k < 1) throw InsufficientPoints("empty configuration");
  if (k > K) throw KExceeded("card(E) = " + std::to_string(k) + " exceeds K");
  if (k != images.size()) throw DimensionMismatch("E/images mismatch");

  const double c_k = options.c_k > 0 ? options.c_k : 5.0 + K;
  const double c_k_prime = options.c_k_prime > 0 ? options.c_k_prime : 5.0 + K;
  const double delta = std::exp(-c_k / epsilon);
  const double eta = std::exp(-c_k_prime / epsilon);

  if (k >= 2) {
    const auto prof = distortion_profile(E, images);
    if (prof.max_ratio > 1.0 + delta || prof.min_ratio < 1.0 / (1.0 + delta)) {
      throw DeltaTooLarge("distortion profile outside delta = exp(-C_K/eps) = " +
                          std::to_string(delta));
    }
  }

  ExtensionResult result;
  result.outer_motion = EuclideanMotion::identity(d);
  result.far_field_center = E.points[0];

  const BlockScan scan = scan_eta_blocks(E, images, eta);
  if (scan.positive && scan.negative) {
    RefusalWitness witness;
    witness.positive_block = *scan.positive;
    witness.negative_block = *scan.negative;
    result.refusal = witness;
    return result;
  }

  PointConfig domain = E;
  PointConfig targets = images;
  const bool reflected = scan.negative.has_value();
  Mat refl = Mat::Identity(d, d);
  refl(0, 0) = -1.0;
  if (reflected) {
    // Only negative blocks: extend phi o (reflection) instead, compose back.
    for (Vec& p : domain.points) p = refl * p;
  }

  ProperCore core =
      properness_core(domain, targets, epsilon, K, eta, options, 0);
  SmoothMap map = core.map;
  if (reflected) {
    map = make_composite({make_motion(EuclideanMotion(refl, Vec::Zero(d))), map});
  }

  result.map = map;
  result.outer_motion =
      reflected ? core.far_motion.compose(EuclideanMotion(refl, Vec::Zero(d)))
                : core.far_motion;
  result.far_field_center = reflected ? Vec(refl * core.anchor) : core.anchor;
  result.far_field_radius = core.far_radius;
  for (int i = 0; i < k; ++i) {
    result.interpolation_error =
        std::max(result.interpolation_error,
                 (result.map.evaluate(E.points[i]) - images.points[i]).norm());
  }
  if (options.run_audit) {
    const double diam = k >= 2 ? E.diameter() : 1.0;
    const auto audit = distortion_audit(
        result.map, Region::ball(result.far_field_center, 30.0 * diam),
        options.audit_samples, options.audit_seed);
    result.audited_epsilon = audit.sup_jacobian_defect;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Path distances.
// ---------------------------------------------------------------------------

double path_distance(const PointConfig& X, double p, int i, int j) {
  const int n = X.size();
  if (i < 0 || j < 0 || i >= n || j >= n) throw DimensionMismatch("bad indices");
  if (i == j) return 0.0;
  const bool minimax = std::isinf(p);
  if (!minimax && p < 1.0) throw Error("p must be >= 1 or infinity");

  const Mat dist = pairwise_distances(X);
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  cost[i] = 0.0;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  queue.emplace(0.0, i);
  while (!queue.empty()) {
    const auto [c, u] = queue.top();
    queue.pop();
    if (c > cost[u]) continue;
    for (int v = 0; v < n; ++v) {
      if (v == u) continue;
      const double step = minimax ? std::max(c, dist(u, v))
                                  : c + std::pow(dist(u, v), p);
      if (step < cost[v]) {
        cost[v] = step;
        queue.emplace(step, v);
      }
    }
  }
  return minimax ? cost[j] : std::pow(cost[j], 1.0 / p);
}

Json ExtensionResult::to_json() const {
  Json j;
  j["schemaVersion"] = 1;
  if (refusal) {
    j["refusal"] = Json{{"positive_block", refusal->positive_block},
                        {"negative_block", refusal->negative_block}};
  } else {
    j["map"] = map.to_json();
    j["interpolation_error"] = interpolation_error;
    j["audited_epsilon"] = audited_epsilon;
    j["outer_motion"] = Json{{"linear", nodes::mat_to_json(outer_motion.linear)},
                             {"translation", nodes::vec_to_json(outer_motion.translation)}};
    j["far_field_center"] = nodes::vec_to_json(far_field_center);
    j["far_field_radius"] = far_field_radius;
  }
  return j;
}

}  // namespace isokit
