#ifndef ISOKIT_COMMON_HPP
#define ISOKIT_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace isokit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors.  Construction preconditions fail loudly; "refusal" outcomes are
// ordinary return values, never exceptions.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define ISOKIT_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

ISOKIT_DEFINE_ERROR(DimensionMismatch);
ISOKIT_DEFINE_ERROR(InsufficientPoints);
ISOKIT_DEFINE_ERROR(Degenerate);
ISOKIT_DEFINE_ERROR(ProperInfeasible);
ISOKIT_DEFINE_ERROR(NotThin);
ISOKIT_DEFINE_ERROR(ConditionAViolated);
ISOKIT_DEFINE_ERROR(ConditionBViolated);
ISOKIT_DEFINE_ERROR(RatioInfeasible);
ISOKIT_DEFINE_ERROR(TranslationInfeasible);
ISOKIT_DEFINE_ERROR(MoveInfeasible);
ISOKIT_DEFINE_ERROR(KExceedsD);
ISOKIT_DEFINE_ERROR(KExceeded);
ISOKIT_DEFINE_ERROR(DeltaTooLarge);
ISOKIT_DEFINE_ERROR(CoverageGap);
ISOKIT_DEFINE_ERROR(GlueMismatch);
ISOKIT_DEFINE_ERROR(CoincidentPoints);
ISOKIT_DEFINE_ERROR(ParseError);
ISOKIT_DEFINE_ERROR(BudgetExceeded);

#undef ISOKIT_DEFINE_ERROR

// ---------------------------------------------------------------------------
// C-infinity cutoff machinery.  The one bump family used everywhere: the
// normalized exp(-1/t) step.  smooth_step is exactly 0 for u <= 0 and
// exactly 1 for u >= 1, and its derivative peaks at 2 (attained at u = 1/2).
// ---------------------------------------------------------------------------

inline constexpr double kSmoothStepDerivMax = 2.0;

inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

inline double smooth_step_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  const double da = a / (u * u);
  const double db = b / ((1.0 - u) * (1.0 - u));
  const double s = a + b;
  return (da * b + a * db) / (s * s);
}

// 1 on [0, r1], 0 on [r2, inf); C-infinity in between.
inline double radial_cutoff(double t, double r1, double r2) {
  return smooth_step((r2 - t) / (r2 - r1));
}

inline double radial_cutoff_deriv(double t, double r1, double r2) {
  return -smooth_step_deriv((r2 - t) / (r2 - r1)) / (r2 - r1);
}

// ---------------------------------------------------------------------------
// Deterministic data-parallel reductions.  Work is split into a fixed block
// grid independent of the thread count; blocks are combined in index order,
// so results are bitwise reproducible for any OMP_NUM_THREADS.
// ---------------------------------------------------------------------------

double deterministic_parallel_sum(std::int64_t n,
                                  const std::function<double(std::int64_t)>& term);

// max with deterministic tie-break on the smallest index.
struct IndexedMax {
  double value = -std::numeric_limits<double>::infinity();
  std::int64_t index = -1;
};

IndexedMax deterministic_parallel_max(std::int64_t n,
                                      const std::function<double(std::int64_t)>& term);

// ---------------------------------------------------------------------------
// Seeded sampling helpers.
// ---------------------------------------------------------------------------

Vec sample_in_ball(std::mt19937_64& rng, const Vec& center, double radius);
Vec sample_in_box(std::mt19937_64& rng, const Vec& lo, const Vec& hi);
Vec sample_unit_sphere(std::mt19937_64& rng, int dim_ambient);

}  // namespace isokit

#endif  // ISOKIT_COMMON_HPP
