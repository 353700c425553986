#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "lsfm/linsys.hpp"
#include "lsfm/simd/kernels.hpp"

namespace lsfm::linsys {

namespace {

// Columns of R (n x n, upper triangular) from Householder QR of a tall A,
// stored column-major.
std::vector<std::vector<double>> qr_r_columns(const Matrix& A) {
  const auto m = A.rows();
  const auto n = A.cols();
  std::vector<std::vector<double>> col(n, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j][i] = A(i, j);

  std::vector<double> v(m);
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += col[k][i] * col[k][i];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = col[k][k] > 0.0 ? -norm : norm;
    for (std::size_t i = k; i < m; ++i) v[i] = col[k][i];
    v[k] -= alpha;
    double vv = 0.0;
    for (std::size_t i = k; i < m; ++i) vv += v[i] * v[i];
    if (vv == 0.0) continue;
    for (std::size_t j = k; j < n; ++j) {
      double d = 0.0;
      for (std::size_t i = k; i < m; ++i) d += v[i] * col[j][i];
      const double f = 2.0 * d / vv;
      for (std::size_t i = k; i < m; ++i) col[j][i] -= f * v[i];
    }
  }
  for (auto& c : col) c.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = j + 1; i < n; ++i) col[j][i] = 0.0;
  return col;
}

}  // namespace

std::vector<double> singular_values(const Matrix& A) {
  if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("empty matrix");
  auto cols = qr_r_columns(A.rows() >= A.cols() ? A : A.transposed());
  const auto n = cols.size();

  // One-sided Jacobi: orthogonalise the columns pairwise.
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = simd::sum_squares(cols[p]);
        const double beta = simd::sum_squares(cols[q]);
        const double gamma = simd::dot(cols[p], cols[q]);
        if (gamma == 0.0 || std::fabs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double tn = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + tn * tn);
        simd::rotate(cols[p], cols[q], c, c * tn);
      }
    if (!rotated) break;
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = std::sqrt(simd::sum_squares(cols[j]));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

Conditioning condition_number(const Matrix& A) {
  if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("condition_number: empty matrix");
  if (std::all_of(A.data().begin(), A.data().end(), [](double v) { return v == 0.0; }))
    throw std::invalid_argument("condition_number: matrix is identically zero");
  const auto sv = singular_values(A);
  Conditioning c;
  c.sigma_max = sv.front();
  c.sigma_min = sv.back();
  c.infinite = c.sigma_min < 1e-14 * c.sigma_max;
  c.kappa = c.infinite ? std::numeric_limits<double>::infinity() : c.sigma_max / c.sigma_min;
  return c;
}

Conditioning system_condition_number(const Matrix& A) {
  auto c = condition_number(A);
  if (A.rows() < A.cols()) {
    c.sigma_min = 0.0;
    c.infinite = true;
    c.kappa = std::numeric_limits<double>::infinity();
  }
  return c;
}

}  // namespace lsfm::linsys
