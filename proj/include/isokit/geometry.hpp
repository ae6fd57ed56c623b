#ifndef ISOKIT_GEOMETRY_HPP
#define ISOKIT_GEOMETRY_HPP

#include "isokit/common.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace isokit {

// An ordered finite set of points in R^D with optional labels.
struct PointConfig {
  int dim = 0;
  std::vector<Vec> points;
  std::vector<std::string> labels;  // empty or one per point

  PointConfig() = default;
  PointConfig(int d, std::vector<Vec> pts, std::vector<std::string> lbls = {});

  int size() const { return static_cast<int>(points.size()); }
  double diameter() const;
  // Smallest pairwise distance; requires size() >= 2.
  double separation() const;
};

Mat pairwise_distances(const PointConfig& config);

// l-volume of the simplex with the given l+1 vertices, via the Gram
// determinant of the edge vectors (includes the 1/l! simplex normalization).
double simplex_volume(std::span<const Vec> vertices);

struct SimplexVolumeResult {
  int order = 0;        // l
  double volume = 0.0;  // max over all (l+1)-tuples
  std::vector<int> witness;
};

// Exhaustive maximum of the l-simplex volume over all (l+1)-tuples.
// Callers with more than `max_card` points must subsample explicitly.
SimplexVolumeResult max_simplex_volume(const PointConfig& config, int order,
                                       int max_card = 20);

struct DistortionProfile {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

// min/max over pairs i != j of |q_pair(i) - q_pair(j)| / |p_i - p_j|.
// `pairing` maps P-indices to Q-indices; empty means identity.
DistortionProfile distortion_profile(const PointConfig& P, const PointConfig& Q,
                                     std::span<const int> pairing = {});

struct MinimaxAffineResult {
  Vec gradient;          // f1(x) = gradient . x + offset
  double offset = 0.0;
  double level_shift = 0.0;  // Y; approximant is f1 + Y
  double max_error = 0.0;    // |Y|
};

// Best uniform affine approximant of a convex or concave f on a simplex:
// the vertex interpolant shifted by half the extreme value of f - f1.
// The extremum is located on a barycentric grid with local refinement.
MinimaxAffineResult minimax_affine_on_simplex(
    const std::function<double(const Vec&)>& f, std::span<const Vec> simplex,
    int grid_samples = 10000);

}  // namespace isokit

#endif  // ISOKIT_GEOMETRY_HPP
