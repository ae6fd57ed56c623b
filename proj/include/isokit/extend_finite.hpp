#ifndef ISOKIT_EXTEND_FINITE_HPP
#define ISOKIT_EXTEND_FINITE_HPP

#include "isokit/distortion.hpp"

#include <optional>

namespace isokit {

struct ClusterPartition {
  std::vector<std::vector<int>> clusters;  // disjoint index sets covering X
  int scale_exponent = 0;                  // l (pigeonhole form)
  double tau = 0.0;                        // separation (scaled form)
};

// Thm-5.5-style partition: smallest l in [10, 100 + C(k,2)] whose annulus
// (eta^l diam, eta^{l-1} diam] contains no pairwise distance, then the
// equivalence closure of |x - x'| <= eta^l diam.
ClusterPartition pigeonhole_partition(const PointConfig& X, double eta);

// Scaled clustering: tau in [exp(-C_K/eps) diam, exp(-1/eps) diam] with
// cluster diameters <= exp(-5/eps) tau and pairwise distance >= tau.
ClusterPartition scaled_clustering(const PointConfig& S, double epsilon, int K);

struct RefusalWitness {
  std::vector<int> positive_block;
  std::vector<int> negative_block;
};

struct ExtensionResult {
  SmoothMap map;  // invalid iff refusal holds
  double interpolation_error = 0.0;
  double audited_epsilon = 0.0;
  EuclideanMotion outer_motion;  // far-field motion (identity when none)
  Vec far_field_center;
  double far_field_radius = 0.0;  // map == outer_motion beyond this radius
  std::optional<RefusalWitness> refusal;

  Json to_json() const;
};

struct ExtendOptions {
  double lambda = 0.01;          // pigeonhole eta and far-field factor
  int m_cap = -1;                // separation exponent cap; -1: 100 + C(D,2)
  double delta_factor = 1.0 / 64.0;  // feasibility knob: delta = eps/64
  int audit_samples = 256;
  std::uint64_t audit_seed = 20177;
  bool run_audit = true;
};

// Extension of a delta-distorted correspondence on k <= D points to a global
// epsilon-distorted diffeomorphism, identity (or a single translation) far
// away.  Recursive pigeonhole construction; infeasible instances fail loudly.
ExtensionResult extend_finite(const PointConfig& E, const PointConfig& images,
                              double epsilon, const ExtendOptions& options = {});

// For a unit-diameter, tau-separated, eta-thin E: an improper-motion-like
// map fixing E pointwise, agreeing with motions near each point and with an
// improper motion far away.
SmoothMap near_reflection_extension(const PointConfig& E, double tau, double eta,
                                    double epsilon);

// Three-region gluing of per-point maps with an outer map.  Region radii
// B_i(z) = exp((i-5)/eps) tau as in the gluing theorem; transition maps are
// built by localizing A*_z^{-1} A_z.
SmoothMap glue(const std::vector<SmoothMap>& per_point_maps,
               const SmoothMap& outer_map, const PointConfig& E, double tau,
               double epsilon);

struct PropernessOptions {
  double c_k = -1.0;        // delta = exp(-C_K/eps); default 5 + K
  double c_k_prime = -1.0;  // eta = exp(-C'_K/eps); default 5 + K
  int audit_samples = 256;
  std::uint64_t audit_seed = 4242;
  bool run_audit = true;
};

// Orientation-aware extension for up to K points: eta-block scan, refusal on
// conflicting blocks, reflection trick for negative-only instances, and the
// clustering + per-representative pipeline + gluing otherwise.
ExtensionResult extend_with_properness(const PointConfig& E,
                                       const PointConfig& images, double epsilon,
                                       int K, const PropernessOptions& options = {});

// p-weighted shortest path distance through X (Dijkstra); p = infinity gives
// the longest-leg (minimax edge) distance.
double path_distance(const PointConfig& X, double p, int i, int j);

}  // namespace isokit

#endif  // ISOKIT_EXTEND_FINITE_HPP
