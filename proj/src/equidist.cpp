#include "isokit/equidist.hpp"

#include "isokit/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace isokit {

// --- Manifold ----------------------------------------------------------------

Manifold Manifold::sphere(int intrinsic_dim) {
  if (intrinsic_dim < 1) throw Error("sphere dimension must be >= 1");
  Manifold m;
  m.kind_ = Kind::Sphere;
  m.intrinsic_dim_ = intrinsic_dim;
  m.ambient_dim_ = intrinsic_dim + 1;
  return m;
}

Manifold Manifold::torus() {
  Manifold m;
  m.kind_ = Kind::Torus;
  m.intrinsic_dim_ = 2;
  m.ambient_dim_ = 3;
  return m;
}

Vec Manifold::project(const Vec& ambient) const {
  if (kind_ == Kind::Sphere) {
    const double n = ambient.norm();
    if (n < 1e-300) {
      Vec e = Vec::Zero(ambient_dim_);
      e[0] = 1.0;
      return e;
    }
    return ambient / n;
  }
  // torus ((2+cos u) cos v, (2+cos u) sin v, sin u)
  const double rho = std::hypot(ambient[0], ambient[1]);
  double cv = 1.0, sv = 0.0;
  if (rho > 1e-300) {
    cv = ambient[0] / rho;
    sv = ambient[1] / rho;
  }
  const double wr = rho - 2.0;  // radial offset from the core circle
  const double wz = ambient[2];
  const double wn = std::hypot(wr, wz);
  double cu = 1.0, su = 0.0;
  if (wn > 1e-300) {
    cu = wr / wn;
    su = wz / wn;
  }
  Vec p(3);
  p << (2.0 + cu) * cv, (2.0 + cu) * sv, su;
  return p;
}

double Manifold::implicit_defect(const Vec& x) const {
  if (kind_ == Kind::Sphere) return std::abs(x.norm() - 1.0);
  const double rho = std::hypot(x[0], x[1]);
  const double lhs = (rho - 2.0) * (rho - 2.0) + x[2] * x[2];
  return std::abs(lhs - 1.0);
}

Vec Manifold::sample(std::mt19937_64& rng) const {
  if (kind_ == Kind::Sphere) return sample_unit_sphere(rng, ambient_dim_);
  // torus: rejection in (u, v) with density (2 + cos u)/3
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (true) {
    const double u = 2.0 * M_PI * unif(rng);
    const double v = 2.0 * M_PI * unif(rng);
    if (3.0 * unif(rng) <= 2.0 + std::cos(u)) {
      Vec p(3);
      p << (2.0 + std::cos(u)) * std::cos(v), (2.0 + std::cos(u)) * std::sin(v),
          std::sin(u);
      return p;
    }
  }
}

std::vector<Vec> Manifold::dense_cover(int n) const {
  std::vector<Vec> cover;
  cover.reserve(static_cast<std::size_t>(n));
  if (kind_ == Kind::Sphere && intrinsic_dim_ == 1) {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * M_PI * i / n;
      Vec p(2);
      p << std::cos(a), std::sin(a);
      cover.push_back(p);
    }
    return cover;
  }
  if (kind_ == Kind::Sphere && intrinsic_dim_ == 2) {
    // Fibonacci lattice
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * i;
      Vec p(3);
      p << r * std::cos(a), r * std::sin(a), z;
      cover.push_back(p);
    }
    return cover;
  }
  if (kind_ == Kind::Torus) {
    // product grid weighted by circumference ratio (outer 2:1 tube)
    const int nu = std::max(2, static_cast<int>(std::sqrt(n / 2.0)));
    const int nv = std::max(2, n / nu);
    for (int i = 0; i < nu; ++i) {
      const double u = 2.0 * M_PI * (i + 0.5) / nu;
      for (int j = 0; j < nv; ++j) {
        const double v = 2.0 * M_PI * (j + 0.5) / nv;
        Vec p(3);
        p << (2.0 + std::cos(u)) * std::cos(v), (2.0 + std::cos(u)) * std::sin(v),
            std::sin(u);
        cover.push_back(p);
      }
    }
    return cover;
  }
  // S^D, D >= 3: deterministic Kronecker lattice on hyperspherical angles
  std::mt19937_64 rng(0x5eedc0ffeeULL);
  for (int i = 0; i < n; ++i) cover.push_back(sample_unit_sphere(rng, ambient_dim_));
  return cover;
}

// --- energy and optimization -------------------------------------------------

double riesz_energy(const PointConfig& config, double s) {
  if (s < 0.0) throw Error("s must be >= 0");
  const double e = kernels::riesz_energy(config.points, s);
  if (std::isinf(e)) throw CoincidentPoints("coincident points have infinite energy");
  return e;
}

namespace {

Vec tangent_project(const Manifold& m, const Vec& x, const Vec& g) {
  if (m.kind() == Manifold::Kind::Sphere) {
    return g - g.dot(x) * x;
  }
  // torus implicit F = (rho-2)^2 + z^2 - 1; normal = grad F
  const double rho = std::hypot(x[0], x[1]);
  Vec normal(3);
  if (rho < 1e-300) return g;
  normal << 2.0 * (rho - 2.0) * x[0] / rho, 2.0 * (rho - 2.0) * x[1] / rho,
      2.0 * x[2];
  const double nn = normal.squaredNorm();
  if (nn < 1e-300) return g;
  return g - (g.dot(normal) / nn) * normal;
}

struct RunResult {
  std::vector<Vec> points;
  double energy = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool monotone = true;  // energy non-increasing across accepted steps
};

std::vector<Vec> restart_initialization(const Manifold& manifold, int k,
                                        int restart, std::mt19937_64& rng) {
  // Restarts alternate between jittered low-discrepancy starts (which reach
  // the well-ordered basins) and fully random ones (diversity).
  std::vector<Vec> pts;
  if (restart % 3 == 2 || manifold.kind() == Manifold::Kind::Torus) {
    for (int i = 0; i < k; ++i) pts.push_back(manifold.sample(rng));
    return pts;
  }
  pts = manifold.dense_cover(k);
  // random global rotation is enough jitter at restart 0; later restarts add
  // per-point perturbations of a growing fraction of the cell size
  const double cell = 2.0 / std::sqrt(static_cast<double>(k));
  const double jitter = cell * 0.35 * (restart % 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat rot;
  {
    const int d = manifold.ambient_dim();
    Mat a(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) a(r, c) = normal(rng);
    }
    Eigen::HouseholderQR<Mat> qr(a);
    rot = qr.householderQ();
  }
  for (Vec& p : pts) {
    Vec q = rot * p;
    if (jitter > 0.0) {
      Vec noise(q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) noise[i] = normal(rng);
      q += jitter * noise;
    }
    p = manifold.project(q);
  }
  return pts;
}

RunResult descend_from(const Manifold& manifold, std::vector<Vec> pts, double s,
                       int max_iters, double grad_tol) {
  double energy = kernels::riesz_energy(pts, s);
  double step = 0.1;
  RunResult out;
  int iter = 0;
  double gnorm = 0.0;
  for (; iter < max_iters; ++iter) {
    const std::vector<Vec> grad = kernels::riesz_gradient(pts, s);
    std::vector<Vec> tangential(pts.size());
    double g2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      tangential[i] = tangent_project(manifold, pts[i], grad[i]);
      g2 += tangential[i].squaredNorm();
    }
    gnorm = std::sqrt(g2);
    if (gnorm <= grad_tol * static_cast<double>(pts.size())) break;
    // Armijo 0.5 / 0.5 backtracking with retraction
    bool accepted = false;
    for (int half = 0; half < 50; ++half) {
      std::vector<Vec> trial(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        trial[i] = manifold.project(pts[i] - step * tangential[i]);
      }
      const double trial_energy = kernels::riesz_energy(trial, s);
      if (trial_energy <= energy - 0.5 * step * g2) {
        if (trial_energy > energy) out.monotone = false;
        pts = std::move(trial);
        energy = trial_energy;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent step at double precision
    step = std::min(step * 1.3, 10.0);
  }
  out.points = std::move(pts);
  out.energy = energy;
  out.grad_norm = gnorm;
  out.iterations = iter;
  return out;
}

RunResult optimize_once(const Manifold& manifold, int k, double s, int max_iters,
                        std::mt19937_64& rng, double grad_tol, int restart) {
  return descend_from(manifold, restart_initialization(manifold, k, restart, rng),
                      s, max_iters, grad_tol);
}

// Covering/packing estimates on a fixed coarse cover, used only to choose
// among energy-tied local minima.
struct UniformityProbe {
  std::vector<Vec> cover;
  double ratio(const std::vector<Vec>& pts) const {
    const double sep = kernels::min_pairwise_distance(pts);
    return kernels::mesh_norm(cover, pts) / (sep / 2.0);
  }
  Vec worst_gap(const std::vector<Vec>& pts) const {
    double worst = -1.0;
    Vec witness = cover.front();
    for (const Vec& y : cover) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec& x : pts) best = std::min(best, (y - x).squaredNorm());
      if (best > worst) {
        worst = best;
        witness = y;
      }
    }
    return witness;
  }
};

}  // namespace

OptimizedConfig optimize_config(const Manifold& manifold, int k, double s,
                                int max_iters, std::uint64_t seed, int restarts) {
  if (k < 2) throw InsufficientPoints("optimize_config needs k >= 2");
  // Phase A: diverse restarts (rotated/jittered low-discrepancy and random).
  // Phase B: gap-surgery restarts seeded from the most uniform candidate so
  // far -- the tightest pair donates a point to the worst covering gap.
  // Local minima whose energies agree to ~1e-5 relative are ties at this
  // scale; among ties the most uniform configuration is returned.
  const int phase_a = k >= 12 && restarts >= 4 ? (restarts + 1) / 2 : restarts;
  const int phase_b = restarts - phase_a;

  struct Candidate {
    RunResult run;
    double ratio = std::numeric_limits<double>::infinity();
  };
  std::vector<Candidate> pool;
  UniformityProbe probe;
  if (phase_b > 0 || restarts > 1) {
    probe.cover = manifold.dense_cover(std::min(30000, 600 * k));
  }

  double best_energy = std::numeric_limits<double>::infinity();
  for (int r = 0; r < phase_a; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r) * 0x9e3779b9u);
    Candidate cand;
    cand.run = optimize_once(manifold, k, s, max_iters, rng, 1e-9, r);
    if (!probe.cover.empty()) cand.ratio = probe.ratio(cand.run.points);
    best_energy = std::min(best_energy, cand.run.energy);
    pool.push_back(std::move(cand));
  }

  const auto incumbent = [&]() -> const Candidate& {
    const Candidate* best = &pool.front();
    for (const Candidate& c : pool) {
      if (c.run.energy <= best_energy * (1.0 + 1e-5) && c.ratio < best->ratio) {
        best = &c;
      }
    }
    return *best;
  };

  for (int h = 0; h < phase_b; ++h) {
    std::vector<Vec> pts = incumbent().run.points;
    // tightest pair; members alternate across hops
    std::size_t ai = 0, aj = 1;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double d = (pts[i] - pts[j]).squaredNorm();
        if (d < dmin) {
          dmin = d;
          ai = i;
          aj = j;
        }
      }
    }
    pts[h % 2 == 0 ? ai : aj] = probe.worst_gap(pts);
    Candidate cand;
    cand.run = descend_from(manifold, std::move(pts), s,
                            std::max(200, (2 * max_iters) / 3), 1e-9);
    cand.ratio = probe.ratio(cand.run.points);
    best_energy = std::min(best_energy, cand.run.energy);
    pool.push_back(std::move(cand));
  }

  const Candidate* final_cand = &pool.front();
  if (pool.size() > 1) {
    for (const Candidate& c : pool) {
      const bool in_window = c.run.energy <= best_energy * (1.0 + 1e-5);
      const bool cur_in_window =
          final_cand->run.energy <= best_energy * (1.0 + 1e-5);
      if ((in_window && !cur_in_window) ||
          (in_window == cur_in_window &&
           (probe.cover.empty() ? c.run.energy < final_cand->run.energy
                                : c.ratio < final_cand->ratio))) {
        final_cand = &c;
      }
    }
  }

  OptimizedConfig best;
  best.config = PointConfig(manifold.ambient_dim(), final_cand->run.points);
  best.report.energy = final_cand->run.energy;
  best.report.gradient_norm = final_cand->run.grad_norm;
  best.report.iterations = final_cand->run.iterations;
  best.report.monotone = final_cand->run.monotone;
  best.report.s = s;
  best.report.seed = seed;
  best.report.restarts = restarts;
  return best;
}

ConfigMetrics config_metrics(const Manifold& manifold, const PointConfig& config,
                             int dense_n) {
  if (config.size() < 2) throw InsufficientPoints("metrics need >= 2 points");
  ConfigMetrics metrics;
  metrics.min_distance = kernels::min_pairwise_distance(config.points);
  metrics.separation_radius = metrics.min_distance / 2.0;
  const std::vector<Vec> cover = manifold.dense_cover(dense_n);
  metrics.dense_n = static_cast<int>(cover.size());
  metrics.mesh_norm = kernels::mesh_norm(cover, config.points);
  metrics.mesh_ratio = metrics.mesh_norm / metrics.separation_radius;
  return metrics;
}

double scaling_check(const Manifold& manifold, double s,
                     std::span<const int> k_list, std::uint64_t seed,
                     const OptimizeOptions& options) {
  if (k_list.size() < 3) throw Error("need at least 3 values of k");
  if (s <= manifold.intrinsic_dim()) {
    throw Error("separation scaling requires s > D");
  }
  std::vector<double> log_k, log_sep;
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    const auto opt = optimize_config(manifold, k_list[i], s, options.max_iters,
                                     seed + i, options.restarts);
    log_k.push_back(std::log(static_cast<double>(k_list[i])));
    log_sep.push_back(std::log(kernels::min_pairwise_distance(opt.config.points)));
  }
  // least-squares slope
  const double n = static_cast<double>(log_k.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_k.size(); ++i) {
    sx += log_k[i];
    sy += log_sep[i];
    sxx += log_k[i] * log_k[i];
    sxy += log_k[i] * log_sep[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// --- discrepancy and designs ---------------------------------------------------

Quadrature Quadrature::exact(double value) {
  Quadrature q;
  q.kind = Kind::Exact;
  q.exact_value = value;
  return q;
}

Quadrature Quadrature::monte_carlo(int n, std::uint64_t seed) {
  Quadrature q;
  q.kind = Kind::MonteCarlo;
  q.n = n;
  q.seed = seed;
  return q;
}

double discrepancy(const Manifold& manifold, const PointConfig& config,
                   const std::function<double(const Vec&)>& f,
                   const Quadrature& quadrature) {
  double integral = quadrature.exact_value;
  if (quadrature.kind == Quadrature::Kind::MonteCarlo) {
    std::mt19937_64 rng(quadrature.seed);
    double acc = 0.0;
    for (int i = 0; i < quadrature.n; ++i) acc += f(manifold.sample(rng));
    integral = acc / quadrature.n;
  }
  double mean = 0.0;
  for (const Vec& x : config.points) mean += f(x);
  mean /= config.size();
  return std::abs(integral - mean);
}

double sphere_monomial_moment(std::span<const int> alpha) {
  // normalized integral over S^{n-1}: zero when any exponent is odd, else
  // 2 prod Gamma(b_k) / Gamma(sum b_k) divided by the surface area.
  const int n = static_cast<int>(alpha.size());
  for (int a : alpha) {
    if (a % 2 != 0) return 0.0;
  }
  double log_num = std::log(2.0);
  double sum_b = 0.0;
  for (int a : alpha) {
    const double b = (a + 1.0) / 2.0;
    log_num += std::lgamma(b);
    sum_b += b;
  }
  log_num -= std::lgamma(sum_b);
  const double log_surface =
      std::log(2.0) + (n / 2.0) * std::log(M_PI) - std::lgamma(n / 2.0);
  return std::exp(log_num - log_surface);
}

// --- finite fields -------------------------------------------------------------

int quadratic_character(std::int64_t a, std::int64_t p) {
  a %= p;
  if (a < 0) a += p;
  if (a == 0) return 0;
  // Euler's criterion: a^{(p-1)/2} mod p
  std::int64_t result = 1, base = a, e = (p - 1) / 2;
  while (e > 0) {
    if (e & 1) result = result * base % p;
    base = base * base % p;
    e >>= 1;
  }
  return result == 1 ? 1 : -1;
}

FiniteFieldConfig finite_field_sphere(int D, std::int64_t p) {
  if (p < 3 || p % 2 == 0) throw Error("p must be an odd prime");
  for (std::int64_t q = 3; q * q <= p; q += 2) {
    if (p % q == 0) throw Error("p must be prime");
  }
  const int n = D + 1;
  double budget = 1.0;
  for (int i = 0; i < n; ++i) budget *= static_cast<double>(p);
  if (budget > 5e8) throw BudgetExceeded("p^{D+1} enumeration too large");

  // closed-form count via the quadratic character
  std::int64_t formula;
  if (D % 2 == 1) {
    std::int64_t pw = 1;
    for (int i = 0; i < (D - 1) / 2; ++i) pw *= p;
    const int sign = ((D + 1) / 2) % 2 == 0 ? 1 : -1;  // (-1)^{(D+1)/2}
    std::int64_t pd = 1;
    for (int i = 0; i < D; ++i) pd *= p;
    formula = pd - pw * quadratic_character(sign, p);
  } else {
    std::int64_t pw = 1;
    for (int i = 0; i < D / 2; ++i) pw *= p;
    const int sign = (D / 2) % 2 == 0 ? 1 : -1;  // (-1)^{D/2}
    std::int64_t pd = 1;
    for (int i = 0; i < D; ++i) pd *= p;
    formula = pd + pw * quadratic_character(sign, p);
  }

  // enumerate solutions of sum x_i^2 = 1 mod p
  std::vector<Vec> points;
  std::vector<std::int64_t> x(static_cast<std::size_t>(n), 0);
  std::int64_t count = 0;
  while (true) {
    std::int64_t acc = 0;
    for (int i = 0; i < n; ++i) acc = (acc + x[static_cast<std::size_t>(i)] *
                                                x[static_cast<std::size_t>(i)]) % p;
    if (acc % p == 1 % p) {
      ++count;
      // center lift to [-(p-1)/2, (p-1)/2], then normalize to S^D
      Vec v(n);
      for (int i = 0; i < n; ++i) {
        std::int64_t xi = x[static_cast<std::size_t>(i)];
        if (xi > (p - 1) / 2) xi -= p;
        v[i] = static_cast<double>(xi);
      }
      const double norm = v.norm();
      if (norm > 0.0) points.push_back(v / norm);
    }
    int i = 0;
    while (i < n && ++x[static_cast<std::size_t>(i)] == p) x[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  if (count != formula) {
    throw Error("enumerated count " + std::to_string(count) +
                " does not match the closed form " + std::to_string(formula));
  }
  FiniteFieldConfig out;
  out.config = PointConfig(n, std::move(points));
  out.count = count;
  out.formula_count = formula;
  return out;
}

namespace {

double max_moment_defect(const PointConfig& config, int degree, bool exact_degree) {
  const int n = config.dim;
  double worst = 0.0;
  std::vector<int> alpha(static_cast<std::size_t>(n), 0);
  // enumerate compositions of `remaining` into the n exponents
  const std::function<void(int, int)> scan = [&](int coord, int remaining) {
    if (coord == n - 1) {
      alpha[static_cast<std::size_t>(coord)] = remaining;
      const double mean = kernels::monomial_mean(config.points, alpha);
      const double moment = sphere_monomial_moment(alpha);
      worst = std::max(worst, std::abs(mean - moment));
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      alpha[static_cast<std::size_t>(coord)] = v;
      scan(coord + 1, remaining - v);
    }
  };
  if (exact_degree) {
    if (degree >= 1) scan(0, degree);
  } else {
    for (int total = 1; total <= degree; ++total) scan(0, total);
  }
  return worst;
}

}  // namespace

double design_test(const PointConfig& config, int t) {
  return max_moment_defect(config, t, false);
}

double design_index_defect(const PointConfig& config, int t) {
  return max_moment_defect(config, t, true);
}

}  // namespace isokit
