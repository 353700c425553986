#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lsfm/linsys.hpp"
#include "lsfm/simd/kernels.hpp"

namespace lsfm::linsys {

ReconstructionResult sart(const Matrix& A, std::span<const double> b, const SartOptions& opt) {
  if (!(opt.omega > 0.0 && opt.omega < 2.0))
    throw std::invalid_argument("SART relaxation omega must lie in (0, 2)");
  if (b.size() != A.rows()) throw std::invalid_argument("SART: b length differs from row count");
  if (!opt.x0.empty() && opt.x0.size() != A.cols())
    throw std::invalid_argument("SART: x0 length differs from column count");

  const auto m = A.rows();
  const auto n = A.cols();
  std::vector<double> row_sum(m), col_sum(n, 0.0);
  std::vector<double> absrow(n);
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = A.row(i);
    row_sum[i] = simd::sum_abs(r);
    for (std::size_t j = 0; j < n; ++j) absrow[j] = std::fabs(r[j]);
    simd::axpy(1.0, absrow, col_sum);
  }

  ReconstructionResult res;
  res.omega = opt.omega;
  res.nonneg = opt.nonneg;
  res.mu_hat = opt.x0.empty() ? std::vector<double>(n, 0.0) : opt.x0;
  auto& x = res.mu_hat;
  if (opt.nonneg)
    for (double& v : x) v = std::max(v, 0.0);

  const double bnorm = std::sqrt(simd::sum_squares(b));
  double bw = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (row_sum[i] > 0.0) bw += b[i] * b[i] / row_sum[i];
  bw = std::sqrt(bw);
  const double bscale = bnorm > 0.0 ? bnorm : 1.0;
  const double bwscale = bw > 0.0 ? bw : 1.0;

  std::vector<double> r(m);
  auto residual = [&]() {
    const auto ax = A.apply(x);
    double w = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      r[i] = b[i] - ax[i];
      if (row_sum[i] > 0.0) w += r[i] * r[i] / row_sum[i];
    }
    res.residual_history.push_back(std::sqrt(simd::sum_squares(r)) / bscale);
    res.weighted_residual_history.push_back(std::sqrt(w) / bwscale);
    return res.residual_history.back();
  };

  double rel = residual();
  for (std::size_t sweep = 0; sweep < opt.max_sweeps && rel >= opt.tol; ++sweep) {
    for (std::size_t i = 0; i < m; ++i) r[i] = row_sum[i] > 0.0 ? r[i] / row_sum[i] : 0.0;
    const auto g = A.apply_transpose(r);
    for (std::size_t j = 0; j < n; ++j) {
      if (col_sum[j] > 0.0) x[j] += opt.omega * g[j] / col_sum[j];
      if (opt.nonneg) x[j] = std::max(x[j], 0.0);
    }
    ++res.iterations;
    rel = residual();
  }
  return res;
}

}  // namespace lsfm::linsys
