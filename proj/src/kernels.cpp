#include "isokit/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace isokit::kernels {

namespace {

// flat row-major copy; the pair loops below run allocation-free
std::vector<double> flatten(std::span<const Vec> points, int& dim) {
  dim = points.empty() ? 0 : static_cast<int>(points[0].size());
  std::vector<double> flat(points.size() * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < dim; ++k) {
      flat[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)] =
          points[i][k];
    }
  }
  return flat;
}

}  // namespace

double riesz_energy(std::span<const Vec> points, double s) {
  const std::int64_t n = static_cast<std::int64_t>(points.size());
  int dim = 0;
  const std::vector<double> flat = flatten(points, dim);
  const double* data = flat.data();
  return deterministic_parallel_sum(n, [=](std::int64_t i) {
    double acc = 0.0;
    const double* pi = data + i * dim;
    for (std::int64_t j = 0; j < i; ++j) {
      const double* pj = data + j * dim;
      double r2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double diff = pi[k] - pj[k];
        r2 += diff * diff;
      }
      if (r2 <= 0.0) return std::numeric_limits<double>::infinity();
      if (s == 0.0) {
        acc -= 0.5 * std::log(r2);
      } else if (s == 1.0) {
        acc += 1.0 / std::sqrt(r2);
      } else if (s == 2.0) {
        acc += 1.0 / r2;
      } else if (s == 3.0) {
        acc += 1.0 / (r2 * std::sqrt(r2));
      } else if (s == 4.0) {
        acc += 1.0 / (r2 * r2);
      } else {
        acc += std::pow(r2, -s / 2.0);
      }
    }
    return acc;
  });
}

std::vector<Vec> riesz_gradient(std::span<const Vec> points, double s) {
  const std::int64_t n = static_cast<std::int64_t>(points.size());
  int dim = 0;
  const std::vector<double> flat = flatten(points, dim);
  const double* data = flat.data();
  std::vector<double> gflat(flat.size(), 0.0);
  double* gdata = gflat.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double* pi = data + i * dim;
    double* gi = gdata + i * dim;
    for (std::int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* pj = data + j * dim;
      double r2 = 0.0;
      double diff[8];
      if (dim > 8) throw Error("riesz_gradient supports dimension <= 8");
      for (int k = 0; k < dim; ++k) {
        diff[k] = pi[k] - pj[k];
        r2 += diff[k] * diff[k];
      }
      if (r2 <= 0.0) continue;
      double w;
      if (s == 0.0) {
        w = -1.0 / r2;
      } else if (s == 1.0) {
        w = -1.0 / (r2 * std::sqrt(r2));
      } else if (s == 2.0) {
        w = -2.0 / (r2 * r2);
      } else if (s == 3.0) {
        w = -3.0 / (r2 * r2 * std::sqrt(r2));
      } else if (s == 4.0) {
        w = -4.0 / (r2 * r2 * r2);
      } else {
        w = -s * std::pow(r2, -(s + 2.0) / 2.0);
      }
      for (int k = 0; k < dim; ++k) gi[k] += w * diff[k];
    }
  }
  std::vector<Vec> grad(static_cast<std::size_t>(n), Vec::Zero(dim));
  for (std::int64_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) {
      grad[static_cast<std::size_t>(i)][k] = gdata[i * dim + k];
    }
  }
  return grad;
}

double mesh_norm(std::span<const Vec> cover, std::span<const Vec> config) {
  int dim = 0;
  const std::vector<double> cov = flatten(cover, dim);
  const std::vector<double> cfg = flatten(config, dim);
  const double* cov_data = cov.data();
  const double* cfg_data = cfg.data();
  const std::int64_t m = static_cast<std::int64_t>(config.size());
  const auto worst = deterministic_parallel_max(
      static_cast<std::int64_t>(cover.size()), [=](std::int64_t i) {
        const double* y = cov_data + i * dim;
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j < m; ++j) {
          const double* x = cfg_data + j * dim;
          double r2 = 0.0;
          for (int k = 0; k < dim; ++k) {
            const double diff = y[k] - x[k];
            r2 += diff * diff;
          }
          best = std::min(best, r2);
        }
        return std::sqrt(best);
      });
  return std::max(worst.value, 0.0);
}

double min_pairwise_distance(std::span<const Vec> points) {
  const auto worst = deterministic_parallel_max(
      static_cast<std::int64_t>(points.size()), [&](std::int64_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j < i; ++j) {
          best = std::min(best, (points[static_cast<std::size_t>(i)] -
                                 points[static_cast<std::size_t>(j)])
                                    .norm());
        }
        return -best;  // max of negatives = min
      });
  return -worst.value;
}

double monomial_mean(std::span<const Vec> points, std::span<const int> alpha) {
  const std::int64_t n = static_cast<std::int64_t>(points.size());
  const double total = deterministic_parallel_sum(n, [&](std::int64_t i) {
    double term = 1.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      for (int e = 0; e < alpha[k]; ++e) {
        term *= points[static_cast<std::size_t>(i)][static_cast<Eigen::Index>(k)];
      }
    }
    return term;
  });
  return total / static_cast<double>(n);
}

}  // namespace isokit::kernels

namespace isokit::reference {

double riesz_energy(std::span<const Vec> points, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d = (points[i] - points[j]).norm();
      if (d <= 0.0) return std::numeric_limits<double>::infinity();
      acc += s == 0.0 ? -std::log(d) : std::pow(d, -s);
    }
  }
  return acc;
}

std::vector<Vec> riesz_gradient(std::span<const Vec> points, double s) {
  const int d = points.empty() ? 0 : static_cast<int>(points[0].size());
  std::vector<Vec> grad(points.size(), Vec::Zero(d));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      const Vec diff = points[i] - points[j];
      const double r2 = diff.squaredNorm();
      if (r2 <= 0.0) continue;
      if (s == 0.0) {
        grad[i] -= diff / r2;
      } else {
        grad[i] -= s * std::pow(r2, -(s + 2.0) / 2.0) * diff;
      }
    }
  }
  return grad;
}

double mesh_norm(std::span<const Vec> cover, std::span<const Vec> config) {
  double worst = 0.0;
  for (const Vec& y : cover) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& x : config) best = std::min(best, (y - x).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

double min_pairwise_distance(std::span<const Vec> points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      best = std::min(best, (points[i] - points[j]).norm());
    }
  }
  return best;
}

double monomial_mean(std::span<const Vec> points, std::span<const int> alpha) {
  double total = 0.0;
  for (const Vec& p : points) {
    double term = 1.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      for (int e = 0; e < alpha[k]; ++e) term *= p[static_cast<Eigen::Index>(k)];
    }
    total += term;
  }
  return total / static_cast<double>(points.size());
}

}  // namespace isokit::reference
