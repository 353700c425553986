// Scalar reference kernels. These define the semantics the vector variants
// are tested against.

#include <cmath>

#include "lsfm/simd/kernels.hpp"

namespace lsfm::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_abs_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i]);
  return acc;
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void rotate_scalar(double* x, double* y, double c, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

GaussMoments gauss_moments_scalar(const double* r, const double* w, std::size_t n,
                                  double center, double t) {
  const double inv4t = 1.0 / (4.0 * t);
  GaussMoments m;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = r[i] - center;
    const double g = w[i] * std::exp(-(d * d) * inv4t);
    m.m0 += g;
    m.m1 += g * d;
  }
  return m;
}

void gauss_row_scalar(const double* r, const double* w, std::size_t n, double center,
                      double t, double* out) {
  const double inv4t = 1.0 / (4.0 * t);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = r[i] - center;
    out[i] = w[i] * std::exp(-(d * d) * inv4t);
  }
}

void exp_neg_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{dot_scalar,          sum_abs_scalar,   sum_squares_scalar,
                             axpy_scalar,         rotate_scalar,    gauss_moments_scalar,
                             gauss_row_scalar,    exp_neg_scalar};
  return t;
}

}  // namespace lsfm::simd
