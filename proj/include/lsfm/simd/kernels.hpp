#pragma once
// Data-parallel inner loops shared by the forward model, the linear-system
// code and the stability sweeps.
//
// Every kernel has a scalar reference implementation and (on x86-64) an
// AVX2/FMA variant. The variant is picked once at runtime from CPUID; the
// environment variable LSFM_INVLAB_SIMD=scalar|avx2 or set_backend() can
// force a choice. Variants agree with the scalar reference up to summation
// order and a few ulp in exp().

#include <cstddef>
#include <span>
#include <string_view>

namespace lsfm::simd {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);

/// Backend currently used by the free functions below.
Backend active_backend();

/// Best backend supported by this CPU and build.
Backend detected_backend();

/// Forces a backend; returns the previous one. Requesting avx2 on a machine
/// or build without it falls back to scalar.
Backend set_backend(Backend b);

bool backend_available(Backend b);

/// Moments of a weighted Gaussian around `center`:
///   m0 = sum_j w_j exp(-(r_j - c)^2 / (4t))
///   m1 = sum_j w_j exp(-(r_j - c)^2 / (4t)) * (r_j - c)
struct GaussMoments {
  double m0 = 0.0;
  double m1 = 0.0;
};

/// Function table implemented by each backend.
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_abs)(const double* a, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*rotate)(double* x, double* y, double c, double s, std::size_t n);
  GaussMoments (*gauss_moments)(const double* r, const double* w, std::size_t n,
                                double center, double t);
  void (*gauss_row)(const double* r, const double* w, std::size_t n, double center,
                    double t, double* out);
  void (*exp_neg)(const double* x, double* out, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(LSFM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable& table();
const KernelTable& table_for(Backend b);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return table().dot(a.data(), b.data(), a.size());
}
inline double sum_abs(std::span<const double> a) { return table().sum_abs(a.data(), a.size()); }
inline double sum_squares(std::span<const double> a) {
  return table().sum_squares(a.data(), a.size());
}
/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  table().axpy(alpha, x.data(), y.data(), x.size());
}
/// Plane rotation: (x, y) <- (c x - s y, s x + c y).
inline void rotate(std::span<double> x, std::span<double> y, double c, double s) {
  table().rotate(x.data(), y.data(), c, s, x.size());
}
inline GaussMoments gauss_moments(std::span<const double> r, std::span<const double> w,
                                  double center, double t) {
  return table().gauss_moments(r.data(), w.data(), r.size(), center, t);
}
/// out_j = w_j exp(-(r_j - center)^2 / (4t))
inline void gauss_row(std::span<const double> r, std::span<const double> w, double center,
                      double t, std::span<double> out) {
  table().gauss_row(r.data(), w.data(), r.size(), center, t, out.data());
}
/// out_j = exp(x_j) for x_j <= 0.
inline void exp_neg(std::span<const double> x, std::span<double> out) {
  table().exp_neg(x.data(), out.data(), x.size());
}

}  // namespace lsfm::simd
