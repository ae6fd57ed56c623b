#include "isokit/common.hpp"

#include <algorithm>
#include <limits>

namespace isokit {

double deterministic_parallel_sum(std::int64_t n,
                                  const std::function<double(std::int64_t)>& term) {
  if (n <= 0) return 0.0;
  const std::int64_t nblocks = std::min<std::int64_t>(n, 512);
  std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    const std::int64_t lo = b * n / nblocks;
    const std::int64_t hi = (b + 1) * n / nblocks;
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) acc += term(i);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

IndexedMax deterministic_parallel_max(std::int64_t n,
                                      const std::function<double(std::int64_t)>& term) {
  IndexedMax result;
  if (n <= 0) return result;
  const std::int64_t nblocks = std::min<std::int64_t>(n, 512);
  std::vector<IndexedMax> partial(static_cast<std::size_t>(nblocks));
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    const std::int64_t lo = b * n / nblocks;
    const std::int64_t hi = (b + 1) * n / nblocks;
    IndexedMax best;
    for (std::int64_t i = lo; i < hi; ++i) {
      const double v = term(i);
      if (v > best.value) {
        best.value = v;
        best.index = i;
      }
    }
    partial[static_cast<std::size_t>(b)] = best;
  }
  for (const IndexedMax& p : partial) {
    if (p.value > result.value) result = p;
  }
  return result;
}

Vec sample_in_ball(std::mt19937_64& rng, const Vec& center, double radius) {
  const int d = static_cast<int>(center.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec dir(d);
  for (int i = 0; i < d; ++i) dir[i] = normal(rng);
  const double norm = dir.norm();
  if (norm == 0.0) return center;
  const double r = radius * std::pow(unif(rng), 1.0 / d);
  return center + (r / norm) * dir;
}

Vec sample_in_box(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
  Vec x(lo.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    x[i] = lo[i] + (hi[i] - lo[i]) * unif(rng);
  }
  return x;
}

Vec sample_unit_sphere(std::mt19937_64& rng, int dim_ambient) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec x(dim_ambient);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim_ambient; ++i) x[i] = normal(rng);
    norm = x.norm();
  } while (norm < 1e-12);
  return x / norm;
}

}  // namespace isokit
