#ifndef ISOKIT_KERNELS_HPP
#define ISOKIT_KERNELS_HPP

// Data-parallel inner loops (OpenMP with deterministic block reductions) and
// their serial reference implementations.  The reference namespace is the
// test oracle and the benchmark baseline; results agree to tight tolerances
// independent of the thread count.

#include "isokit/common.hpp"

#include <span>

namespace isokit::kernels {

// Riesz s-energy: sum_{i<j} |x_i-x_j|^{-s}; s = 0 uses sum log(1/|x_i-x_j|).
double riesz_energy(std::span<const Vec> points, double s);

// Full gradient of the energy with respect to every point.
std::vector<Vec> riesz_gradient(std::span<const Vec> points, double s);

// Covering radius: max over cover points of the distance to the config.
double mesh_norm(std::span<const Vec> cover, std::span<const Vec> config);

// Smallest pairwise distance.
double min_pairwise_distance(std::span<const Vec> points);

// Mean of the monomial prod x_k^{alpha_k} over the configuration.
double monomial_mean(std::span<const Vec> points, std::span<const int> alpha);

}  // namespace isokit::kernels

namespace isokit::reference {

double riesz_energy(std::span<const Vec> points, double s);
std::vector<Vec> riesz_gradient(std::span<const Vec> points, double s);
double mesh_norm(std::span<const Vec> cover, std::span<const Vec> config);
double min_pairwise_distance(std::span<const Vec> points);
double monomial_mean(std::span<const Vec> points, std::span<const int> alpha);

}  // namespace isokit::reference

#endif  // ISOKIT_KERNELS_HPP
