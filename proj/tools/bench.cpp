// Benchmark comparing the OpenMP kernels against the serial reference.

#include "isokit/geometry.hpp"
#include "isokit/kernels.hpp"

#include <chrono>
#include <cstdio>
#include <random>

using namespace isokit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<Vec> random_points(std::mt19937_64& rng, int d, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec p(d);
    for (int k = 0; k < d; ++k) p[k] = normal(rng);
    pts.push_back(p.normalized());
  }
  return pts;
}

template <class F>
double time_of(F&& f, int repeats) {
  const auto start = Clock::now();
  for (int r = 0; r < repeats; ++r) f();
  return seconds_since(start) / repeats;
}

void report(const char* name, double serial, double parallel, double rel_err) {
  std::printf("%-24s serial %8.4f s   omp %8.4f s   speedup %5.2fx   agree %.2e\n",
              name, serial, parallel, serial / parallel, rel_err);
}

}  // namespace

int main() {
  std::mt19937_64 rng(42);
  std::printf("kernel benchmark: serial reference vs OpenMP\n\n");

  {
    const auto pts = random_points(rng, 3, 1500);
    double es = 0.0, ep = 0.0;
    const double ts = time_of([&] { es = reference::riesz_energy(pts, 2.0); }, 3);
    const double tp = time_of([&] { ep = kernels::riesz_energy(pts, 2.0); }, 3);
    report("riesz_energy k=1500", ts, tp, std::abs(es - ep) / std::abs(es));
  }
  {
    const auto pts = random_points(rng, 3, 1200);
    std::vector<Vec> gs, gp;
    const double ts = time_of([&] { gs = reference::riesz_gradient(pts, 2.0); }, 3);
    const double tp = time_of([&] { gp = kernels::riesz_gradient(pts, 2.0); }, 3);
    double err = 0.0;
    for (std::size_t i = 0; i < gs.size(); ++i) {
      err = std::max(err, (gs[i] - gp[i]).norm() / (1.0 + gs[i].norm()));
    }
    report("riesz_gradient k=1200", ts, tp, err);
  }
  {
    const auto config = random_points(rng, 3, 400);
    const auto cover = random_points(rng, 3, 200000);
    double ms = 0.0, mp = 0.0;
    const double ts = time_of([&] { ms = reference::mesh_norm(cover, config); }, 2);
    const double tp = time_of([&] { mp = kernels::mesh_norm(cover, config); }, 2);
    report("mesh_norm 2e5 x 400", ts, tp, std::abs(ms - mp));
  }
  {
    const auto pts = random_points(rng, 3, 4000);
    double ds = 0.0, dp = 0.0;
    const double ts =
        time_of([&] { ds = reference::min_pairwise_distance(pts); }, 2);
    const double tp = time_of([&] { dp = kernels::min_pairwise_distance(pts); }, 2);
    report("min_distance k=4000", ts, tp, std::abs(ds - dp));
  }
  {
    // exhaustive simplex scan (parallel inside max_simplex_volume)
    std::vector<Vec> pts = random_points(rng, 3, 18);
    PointConfig config(3, pts);
    double vol = 0.0;
    const double tp = time_of([&] { vol = max_simplex_volume(config, 3).volume; }, 3);
    std::printf("%-24s exhaustive C(18,4) scan %8.4f s (volume %.6f)\n",
                "max_simplex_volume", tp, vol);
  }
  return 0;
}
