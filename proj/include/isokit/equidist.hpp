#ifndef ISOKIT_EQUIDIST_HPP
#define ISOKIT_EQUIDIST_HPP

#include "isokit/geometry.hpp"

namespace isokit {

// S^D embedded in R^{D+1}, or the torus in R^3 with tube radius 1 around a
// circle of radius 2 (inner radius 1, outer radius 3).
class Manifold {
 public:
  enum class Kind { Sphere, Torus };

  static Manifold sphere(int intrinsic_dim);
  static Manifold torus();

  Kind kind() const { return kind_; }
  int intrinsic_dim() const { return intrinsic_dim_; }
  int ambient_dim() const { return ambient_dim_; }

  Vec project(const Vec& ambient) const;   // nearest manifold point
  double implicit_defect(const Vec& x) const;
  Vec sample(std::mt19937_64& rng) const;  // uniform-ish seeded sampler
  std::vector<Vec> dense_cover(int n) const;  // deterministic

 private:
  Kind kind_ = Kind::Sphere;
  int intrinsic_dim_ = 2;
  int ambient_dim_ = 3;
};

double riesz_energy(const PointConfig& config, double s);

struct EnergyReport {
  double s = 0.0;
  double energy = 0.0;
  double gradient_norm = 0.0;  // tangential, at the final iterate
  int iterations = 0;
  std::uint64_t seed = 0;
  int restarts = 1;
  bool monotone = true;  // energy non-increasing across accepted steps
};

struct OptimizeOptions {
  int max_iters = 1200;
  double grad_tol = 1e-8;
  int restarts = 1;
};

struct OptimizedConfig {
  PointConfig config;
  EnergyReport report;
};

// Projected gradient descent with Armijo backtracking (0.5/0.5) and manifold
// retraction; energy is non-increasing across accepted steps.  With multiple
// restarts the best local minimum is kept.
OptimizedConfig optimize_config(const Manifold& manifold, int k, double s,
                                int max_iters, std::uint64_t seed,
                                int restarts = 1);

struct ConfigMetrics {
  double min_distance = 0.0;       // raw smallest pairwise distance
  double separation_radius = 0.0;  // packing radius: min distance / 2
  double mesh_norm = 0.0;          // covering radius over the dense cover
  double mesh_ratio = 0.0;         // mesh_norm / separation_radius
  int dense_n = 0;
};

ConfigMetrics config_metrics(const Manifold& manifold, const PointConfig& config,
                             int dense_n = 200000);

// log-log regression slope of the measured separation against k.
double scaling_check(const Manifold& manifold, double s,
                     std::span<const int> k_list, std::uint64_t seed,
                     const OptimizeOptions& options = {});

struct Quadrature {
  enum class Kind { Exact, MonteCarlo };
  Kind kind = Kind::Exact;
  double exact_value = 0.0;
  int n = 0;
  std::uint64_t seed = 0;

  static Quadrature exact(double value);
  static Quadrature monte_carlo(int n, std::uint64_t seed);
};

double discrepancy(const Manifold& manifold, const PointConfig& config,
                   const std::function<double(const Vec&)>& f,
                   const Quadrature& quadrature);

// Exact normalized moment of the monomial x^alpha over S^{ambient-1}.
double sphere_monomial_moment(std::span<const int> alpha);

struct FiniteFieldConfig {
  PointConfig config;
  std::int64_t count = 0;
  std::int64_t formula_count = 0;
};

// All solutions of x_1^2 + ... + x_{D+1}^2 = 1 over F_p, center-lifted and
// normalized to S^D; the enumerated count must match the closed form.
FiniteFieldConfig finite_field_sphere(int D, std::int64_t p);

// +1 / -1 / 0 quadratic character by Euler's criterion.
int quadratic_character(std::int64_t a, std::int64_t p);

// Max moment defect over monomials with |alpha| <= t.
double design_test(const PointConfig& config, int t);
// Max defect over homogeneous monomials of degree exactly t (index form).
double design_index_defect(const PointConfig& config, int t);

}  // namespace isokit

#endif  // ISOKIT_EQUIDIST_HPP
