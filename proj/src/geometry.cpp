#include "isokit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isokit {

PointConfig::PointConfig(int d, std::vector<Vec> pts, std::vector<std::string> lbls)
    : dim(d), points(std::move(pts)), labels(std::move(lbls)) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) {
      throw DimensionMismatch("point " + std::to_string(i) + " has length " +
                              std::to_string(points[i].size()) + ", expected " +
                              std::to_string(dim));
    }
  }
  if (!labels.empty() && labels.size() != points.size()) {
    throw DimensionMismatch("labels must be empty or one per point");
  }
}

double PointConfig::diameter() const {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      best = std::max(best, (points[i] - points[j]).norm());
    }
  }
  return best;
}

double PointConfig::separation() const {
  if (points.size() < 2) throw InsufficientPoints("separation needs >= 2 points");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      best = std::min(best, (points[i] - points[j]).norm());
    }
  }
  return best;
}

Mat pairwise_distances(const PointConfig& config) {
  const int n = config.size();
  if (n < 1) throw InsufficientPoints("pairwise_distances needs >= 1 point");
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (config.points[i] - config.points[j]).norm();
    }
  }
  return d;
}

double simplex_volume(std::span<const Vec> vertices) {
  if (vertices.empty()) throw InsufficientPoints("simplex_volume needs vertices");
  const int l = static_cast<int>(vertices.size()) - 1;
  const int d = static_cast<int>(vertices[0].size());
  if (l == 0) return 0.0;
  if (l > d) throw DimensionMismatch("simplex order exceeds ambient dimension");
  Mat edges(d, l);
  for (int i = 0; i < l; ++i) edges.col(i) = vertices[i + 1] - vertices[0];
  const Mat gram = edges.transpose() * edges;
  double det = gram.determinant();
  if (det < 0.0) det = 0.0;  // round-off on degenerate tuples
  double factorial = 1.0;
  for (int i = 2; i <= l; ++i) factorial *= i;
  return std::sqrt(det) / factorial;
}

namespace {

// Enumerate (l+1)-subsets of {0..n-1} in lexicographic order.
bool next_combination(std::vector<int>& idx, int n) {
  const int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

SimplexVolumeResult max_simplex_volume(const PointConfig& config, int order,
                                       int max_card) {
  const int n = config.size();
  if (order < 1 || order > config.dim) {
    throw DimensionMismatch("order must be in [1, D]");
  }
  if (n < order + 1) throw InsufficientPoints("need >= order+1 points");
  if (n > max_card) {
    throw InsufficientPoints("exhaustive search capped at " +
                             std::to_string(max_card) +
                             " points; subsample explicitly");
  }

  // Collect tuples up front so the scan can be data-parallel with a
  // deterministic (first-attains-max) reduction.
  std::vector<std::vector<int>> tuples;
  std::vector<int> idx(order + 1);
  for (int i = 0; i <= order; ++i) idx[i] = i;
  do {
    tuples.push_back(idx);
  } while (next_combination(idx, n));

  const auto volume_of = [&](std::int64_t t) {
    std::vector<Vec> verts;
    verts.reserve(order + 1);
    for (int i : tuples[static_cast<std::size_t>(t)]) verts.push_back(config.points[i]);
    return simplex_volume(verts);
  };
  const IndexedMax best =
      deterministic_parallel_max(static_cast<std::int64_t>(tuples.size()), volume_of);

  SimplexVolumeResult result;
  result.order = order;
  result.volume = std::max(best.value, 0.0);
  result.witness = tuples[static_cast<std::size_t>(best.index)];
  return result;
}

DistortionProfile distortion_profile(const PointConfig& P, const PointConfig& Q,
                                     std::span<const int> pairing) {
  const int n = P.size();
  if (n != Q.size()) throw DimensionMismatch("configs must have equal cardinality");
  if (n < 2) throw InsufficientPoints("distortion_profile needs >= 2 points");
  std::vector<int> map(n);
  if (pairing.empty()) {
    for (int i = 0; i < n; ++i) map[i] = i;
  } else {
    if (static_cast<int>(pairing.size()) != n) {
      throw DimensionMismatch("pairing size mismatch");
    }
    std::vector<bool> seen(n, false);
    for (int i = 0; i < n; ++i) {
      if (pairing[i] < 0 || pairing[i] >= n || seen[pairing[i]]) {
        throw DimensionMismatch("pairing must be a bijection");
      }
      seen[pairing[i]] = true;
      map[i] = pairing[i];
    }
  }
  DistortionProfile prof{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dp = (P.points[i] - P.points[j]).norm();
      const double dq = (Q.points[map[i]] - Q.points[map[j]]).norm();
      if (dp == 0.0) throw CoincidentPoints("coincident points in P");
      const double r = dq / dp;
      prof.min_ratio = std::min(prof.min_ratio, r);
      prof.max_ratio = std::max(prof.max_ratio, r);
    }
  }
  return prof;
}

namespace {

Vec barycentric_point(std::span<const Vec> simplex, const std::vector<double>& w) {
  Vec x = Vec::Zero(simplex[0].size());
  for (std::size_t i = 0; i < simplex.size(); ++i) x += w[i] * simplex[i];
  return x;
}

}  // namespace

MinimaxAffineResult minimax_affine_on_simplex(
    const std::function<double(const Vec&)>& f, std::span<const Vec> simplex,
    int grid_samples) {
  const int d = static_cast<int>(simplex[0].size());
  if (static_cast<int>(simplex.size()) != d + 1) {
    throw DimensionMismatch("simplex needs D+1 vertices");
  }
  if (simplex_volume(simplex) <= 0.0) {
    throw Degenerate("simplex has zero volume");
  }

  // Secant hyperplane: solve for gradient/offset interpolating f at vertices.
  Mat A(d + 1, d + 1);
  Vec rhs(d + 1);
  for (int i = 0; i <= d; ++i) {
    A.row(i).head(d) = simplex[i].transpose();
    A(i, d) = 1.0;
    rhs[i] = f(simplex[i]);
  }
  const Vec sol = A.fullPivLu().solve(rhs);
  MinimaxAffineResult result;
  result.gradient = sol.head(d);
  result.offset = sol[d];

  const auto residual = [&](const Vec& x) {
    return f(x) - (result.gradient.dot(x) + result.offset);
  };

  // Barycentric lattice with about grid_samples nodes, then local shrinkage
  // around the extreme node.
  int m = 1;
  while (true) {
    double count = 1.0;
    for (int i = 1; i <= d; ++i) count *= static_cast<double>(m + i) / i;
    if (count >= grid_samples || m > 100000) break;
    ++m;
  }

  std::vector<double> best_w(d + 1, 1.0 / (d + 1));
  double best_abs = 0.0;
  double best_val = 0.0;
  std::vector<int> k(d + 1, 0);
  const std::function<void(int, int)> scan = [&](int coord, int remaining) {
    if (coord == d) {
      k[d] = remaining;
      std::vector<double> w(d + 1);
      for (int i = 0; i <= d; ++i) w[i] = static_cast<double>(k[i]) / m;
      const double r = residual(barycentric_point(simplex, w));
      if (std::abs(r) > best_abs) {
        best_abs = std::abs(r);
        best_val = r;
        best_w = w;
      }
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      k[coord] = v;
      scan(coord + 1, remaining - v);
    }
  };
  scan(0, m);

  // Local refinement: shrink a barycentric neighborhood around the best node.
  double radius = 1.0 / m;
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int round = 0; round < 8; ++round) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> w(d + 1);
      double total = 0.0;
      for (int i = 0; i <= d; ++i) {
        w[i] = std::max(0.0, best_w[i] + radius * unif(rng));
        total += w[i];
      }
      if (total <= 0.0) continue;
      for (int i = 0; i <= d; ++i) w[i] /= total;
      const double r = residual(barycentric_point(simplex, w));
      if (std::abs(r) > best_abs) {
        best_abs = std::abs(r);
        best_val = r;
        best_w = w;
      }
    }
    radius *= 0.5;
  }

  result.level_shift = best_val / 2.0;
  result.max_error = std::abs(result.level_shift);
  return result;
}

}  // namespace isokit
