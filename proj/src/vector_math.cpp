#include "pgsbm/vector_math.hpp"

#include <cmath>
#include <numbers>

namespace pgsbm::vmath {

void softplus_shifted(const double* x, double shift, int count, double* out) {
#pragma omp simd
  for (int j = 0; j < count; ++j) {
    const double s = shift + x[j];
    out[j] = std::fmax(s, 0.0) + std::log1p(std::exp(-std::fabs(s)));
  }
}

void pg_exponential_mass(const double* z, int count, double* out) {
  constexpr double t = 0.64;
  constexpr double pi = std::numbers::pi;
  const double root = std::sqrt(1.0 / t);
#pragma omp simd
  for (int j = 0; j < count; ++j) {
    const double zj = std::fmin(z[j], 30.0);
    const double fz = 0.125 * pi * pi + 0.5 * zj * zj;
    const double b = root * (t * zj - 1.0);
    const double a = -root * (t * zj + 1.0);
    const double cb = 0.5 * std::erfc(-b / std::numbers::sqrt2);
    const double ca = 0.5 * std::erfc(-a / std::numbers::sqrt2);
    const double ez = std::exp(zj);
    const double q_over_p = 4.0 / pi * fz * std::exp(fz * t) * (cb / ez + ca * ez);
    out[j] = 1.0 / (1.0 + q_over_p);
  }
}

}  // namespace pgsbm::vmath
