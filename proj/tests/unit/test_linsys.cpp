#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "lsfm/linsys.hpp"

using namespace lsfm;
using namespace lsfm::linsys;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto m = rows.size();
  const auto n = rows.begin()->size();
  Matrix A(m, n);
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double v : r) A(i, j++) = v;
    ++i;
  }
  return A;
}

Matrix random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Matrix A(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) A(i, j) = d(rng);
  return A;
}

Eigen::VectorXd eigen_singular_values(const Matrix& A) {
  Eigen::MatrixXd E(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) E(i, j) = A(i, j);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(E).singularValues();
}

phantom::Phantom dataset(phantom::DatasetKind k, std::size_t n = 64, std::uint64_t seed = 7) {
  phantom::DatasetParams p;
  p.kind = k;
  p.grid.nx = p.grid.ny = n;
  return phantom::make_phantom(p, seed);
}

}  // namespace

TEST(Matrix, ApplyAndTranspose) {
  const auto A = from_rows({{1, 2, 3}, {4, 5, 6}});
  const std::vector<double> x{1, 0, -1}, y{1, 2};
  EXPECT_EQ(A.apply(x), (std::vector<double>{-2, -2}));
  EXPECT_EQ(A.apply_transpose(y), (std::vector<double>{9, 12, 15}));
  EXPECT_EQ(A.transposed().apply(y), A.apply_transpose(y));
  EXPECT_EQ(A.scaled(2.0)(1, 2), 12.0);
  EXPECT_THROW(A.apply(y), std::invalid_argument);
}

TEST(Svd, GoldenRatioExample) {
  const auto c = condition_number(from_rows({{1, 1}, {0, 1}}));
  EXPECT_NEAR(c.kappa, (3.0 + std::sqrt(5.0)) / 2.0, 1e-12);
  EXPECT_NEAR(c.kappa, 2.618034, 5e-7);
  EXPECT_FALSE(c.infinite);
}

TEST(Svd, IdentityAndRankDeficient) {
  EXPECT_NEAR(condition_number(from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})).kappa, 1.0, 1e-14);
  const auto c = condition_number(from_rows({{1, 2}, {2, 4}, {3, 6}}));
  EXPECT_TRUE(c.infinite);
  EXPECT_TRUE(std::isinf(c.kappa));
  EXPECT_THROW(condition_number(Matrix(3, 2)), std::invalid_argument);
  EXPECT_THROW(condition_number(Matrix()), std::invalid_argument);
}

TEST(Svd, MatchesEigenOracle) {
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{5, 5}, {40, 12}, {12, 40}, {128, 64}}) {
    const auto A = random_matrix(m, n, m * 131 + n);
    const auto sv = singular_values(A);
    const auto ref = eigen_singular_values(A);
    ASSERT_EQ(sv.size(), static_cast<std::size_t>(ref.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) EXPECT_NEAR(sv[k], ref(k), 1e-10 * ref(0));
    for (std::size_t k = 1; k < sv.size(); ++k) EXPECT_GE(sv[k - 1], sv[k]);
  }
}

TEST(Svd, GradedMatrixMatchesEigen) {
  auto A = random_matrix(30, 10, 5);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 10; ++j) A(i, j) *= std::pow(10.0, -static_cast<double>(j));
  const auto sv = singular_values(A);
  const auto ref = eigen_singular_values(A);
  for (std::size_t k = 0; k < sv.size(); ++k) EXPECT_NEAR(sv[k] / ref(k), 1.0, 1e-8);
}

TEST(Svd, ConditionInvariantUnderScalingAndTranspose) {
  const auto A = random_matrix(20, 8, 99);
  const double k = condition_number(A).kappa;
  for (double c : {1e-6, 0.5, 3.0, 1e6}) EXPECT_NEAR(condition_number(A.scaled(c)).kappa, k, 1e-10 * k);
  EXPECT_NEAR(condition_number(A.transposed()).kappa, k, 1e-10 * k);
}

TEST(Svd, RowDeletionNeverImprovesConditioning) {
  const auto A = random_matrix(30, 8, 4);
  double prev = condition_number(A).kappa;
  for (std::size_t keep = 28; keep >= 8; keep -= 4) {
    Matrix B(keep, 8);
    for (std::size_t i = 0; i < keep; ++i)
      for (std::size_t j = 0; j < 8; ++j) B(i, j) = A(i, j);
    const double k = condition_number(B).kappa;
    EXPECT_GE(k, prev * (1 - 1e-12));
    prev = k;
  }
}

TEST(System, BlockMatchesMeasure) {
  const auto ph = dataset(phantom::DatasetKind::disk_blobs);
  const forward::ForwardModel m(ph);
  const auto hs = ph.grid.height_grid().nodes();
  const auto blk = assemble_block(m, 0.9, hs, 1.5);
  ASSERT_EQ(blk.A.rows(), 2 * hs.size());
  ASSERT_EQ(blk.A.cols(), ph.grid.ny);
  for (std::size_t r = 0; r < blk.A.rows(); ++r) {
    const double p = m.measure(0.9, blk.height_of(r), blk.side_of(r), 1.5);
    EXPECT_NEAR(blk.b[r], p, 1e-15 + 1e-13 * std::fabs(p));
  }
  EXPECT_EQ(blk.mu, ph.mu_column(0.9));
  EXPECT_THROW(assemble_block(m, 0.9, std::vector<double>{0.95}, 1.0), std::invalid_argument);
  EXPECT_THROW(assemble_block(m, 0.9, std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST(System, FullSystemIsBlockDiagonal) {
  const auto ph = dataset(phantom::DatasetKind::disk_blobs, 64);
  const forward::ForwardModel m(ph);
  const std::vector<double> depths{0.6, 1.0, 1.4};
  const auto hs = ph.grid.height_grid().nodes();
  const auto F = assemble_full(m, depths, hs, 1.0);
  const auto rows = 2 * hs.size();
  const auto ny = ph.grid.ny;
  ASSERT_EQ(F.rows(), 3 * rows);
  ASSERT_EQ(F.cols(), 3 * ny);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto blk = assemble_block(m, depths[k], hs, 1.0);
    for (std::size_t i = 0; i < F.rows(); ++i)
      for (std::size_t j = 0; j < F.cols(); ++j) {
        const bool inside = i / rows == k && j / ny == k;
        if (inside) { EXPECT_EQ(F(i, j), blk.A(i % rows, j % ny)); }
      }
  }
  for (std::size_t i = 0; i < F.rows(); ++i)
    for (std::size_t j = 0; j < F.cols(); ++j)
      if (i / rows != j / ny) { EXPECT_EQ(F(i, j), 0.0); }
}

TEST(System, RestrictAndMasks) {
  const auto ph = dataset(phantom::DatasetKind::disk_blobs);
  const forward::ForwardModel m(ph);
  const auto hs = ph.grid.height_grid().nodes();
  const auto hit = std::find_if(ph.mu.begin(), ph.mu.end(), [](double v) { return v > 0.0; });
  ASSERT_NE(hit, ph.mu.end());
  const double s = ph.grid.x(static_cast<std::size_t>(hit - ph.mu.begin()) % ph.grid.nx);
  const auto blk = assemble_block(m, s, hs, 1.0);
  const auto cols = support_column_mask(blk.mu, 1);
  const auto v = restrict(blk, full_row_mask(blk), cols);
  const auto M = v.materialize();
  EXPECT_EQ(M.rows(), blk.A.rows());
  EXPECT_EQ(M.cols(), v.cols().size());
  for (std::size_t c = 0; c < v.cols().size(); ++c) EXPECT_EQ(v.truth()[c], blk.mu[v.cols()[c]]);
  EXPECT_EQ(v.rhs(blk.b), blk.b);
  EXPECT_THROW(restrict(blk, std::vector<std::uint8_t>(3, 1), cols), std::invalid_argument);
  EXPECT_THROW(restrict(blk, std::vector<std::uint8_t>(blk.A.rows(), 0), cols), std::invalid_argument);

  const forward::ObservationInterval oi{{-0.5, -0.2}, {0.3, 0.4}};
  const auto lm = limited_row_mask(blk, oi);
  for (std::size_t r = 0; r < lm.size(); ++r) {
    const bool expect = oi.contains(blk.heights[r % blk.m1()]);
    EXPECT_EQ(lm[r] != 0, expect);
  }
}

TEST(System, SupportAndRadiusMasks) {
  const std::vector<double> mu{0, 0, 1, 0, 0, 0, 2, 0};
  EXPECT_EQ(support_column_mask(mu), (std::vector<std::uint8_t>{0, 0, 1, 0, 0, 0, 1, 0}));
  EXPECT_EQ(support_column_mask(mu, 1), (std::vector<std::uint8_t>{0, 1, 1, 1, 0, 1, 1, 1}));
  const auto ph = dataset(phantom::DatasetKind::disk_blobs);
  std::size_t prev = 0;
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto mk = radius_column_mask(ph, 1.0, 1.0, 0.0, r);
    const auto cnt = static_cast<std::size_t>(std::accumulate(mk.begin(), mk.end(), 0));
    EXPECT_GE(cnt, prev);
    prev = cnt;
  }
}

TEST(System, LimitedIlluminationIsWorseConditioned) {
  for (auto kind : {phantom::DatasetKind::disk_blobs, phantom::DatasetKind::zebrafish}) {
    const auto ph = dataset(kind);
    const forward::ForwardModel m(ph);
    const auto hs = ph.grid.height_grid().nodes();
    for (double s : {0.85, 0.95}) {
      const auto blk = assemble_block(m, s, hs, 1.0);
      const auto prof = forward::detect_sigma_properties(m, s, heat::Side::left);
      const auto cols = radius_column_mask(ph, s, 1.0, 0.0, 0.5);
      const auto full = system_condition_number(restrict(blk, full_row_mask(blk), cols).materialize());
      const auto lim = system_condition_number(
          restrict(blk, limited_row_mask(blk, forward::observation_interval(prof)), cols).materialize());
      EXPECT_GE(lim.kappa, full.kappa * (1 - 1e-12)) << "s = " << s;
    }
  }
}

TEST(Poisson, DeterministicPerEntry) {
  EXPECT_EQ(poisson_sample(12.5, 3, 7), poisson_sample(12.5, 3, 7));
  EXPECT_EQ(poisson_sample(0.0, 3, 7), 0u);
  EXPECT_THROW(poisson_sample(-1.0, 0, 0), std::invalid_argument);
  const std::vector<double> b{0.1, 0.2, 0.0, 0.5};
  EXPECT_EQ(poissonize(b, 1e3, 9), poissonize(b, 1e3, 9));
  EXPECT_NE(poissonize(b, 1e3, 9), poissonize(b, 1e3, 10));
  EXPECT_THROW(poissonize(b, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(poissonize(std::vector<double>{-1.0}, 1.0, 1), std::invalid_argument);
}

TEST(Poisson, MeanAndVarianceMatch) {
  for (double mean : {0.7, 5.0, 29.0, 31.0, 400.0}) {
    const int N = 10000;
    double s = 0, s2 = 0;
    for (int k = 0; k < N; ++k) {
      const double v = static_cast<double>(poisson_sample(mean, 2024, static_cast<std::uint64_t>(k)));
      s += v;
      s2 += v * v;
    }
    const double m = s / N;
    const double var = s2 / N - m * m;
    EXPECT_NEAR(m, mean, 4.0 * std::sqrt(mean / N)) << "mean " << mean;
    EXPECT_NEAR(var / mean, 1.0, 0.08) << "mean " << mean;
  }
}

TEST(Poisson, LargeScaleDeviationVanishes) {
  std::vector<double> b(1000);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = 1.0 + static_cast<double>(i % 17);
  const auto nb = poissonize(b, 1e8, 5);
  double worst = 0;
  for (std::size_t i = 0; i < b.size(); ++i) worst = std::max(worst, std::fabs(nb[i] - b[i]) / b[i]);
  EXPECT_LT(worst, 1e-3);
}

TEST(Poisson, SampleMeanOfOneEntry) {
  const double bi = 0.37, scale = 100.0;
  const int N = 10000;
  double s = 0;
  for (int k = 0; k < N; ++k) s += poissonize(std::vector<double>{bi}, scale, static_cast<std::uint64_t>(k))[0];
  EXPECT_NEAR(s / N, bi, 3.0 * std::sqrt(bi / (scale * N)));
}

TEST(Sart, DiagonalSystem) {
  const auto A = from_rows({{2, 0}, {0, 1}});
  SartOptions o;
  o.max_sweeps = 200;
  const auto r = sart(A, std::vector<double>{2, 1}, o);
  EXPECT_NEAR(r.mu_hat[0], 1.0, 1e-10);
  EXPECT_NEAR(r.mu_hat[1], 1.0, 1e-10);
  EXPECT_LT(r.residual_history.back(), 1e-10);
  EXPECT_LE(r.iterations, 200u);
}

TEST(Sart, WeightedResidualIsMonotoneOnConsistentSystems) {
  for (double omega : {0.3, 1.0, 1.7}) {
    const auto A = random_matrix(40, 15, 3);
    Matrix P(40, 15);
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t j = 0; j < 15; ++j) P(i, j) = std::fabs(A(i, j));
    std::vector<double> x(15);
    for (std::size_t j = 0; j < 15; ++j) x[j] = 0.1 + 0.05 * static_cast<double>(j);
    const auto b = P.apply(x);
    SartOptions o;
    o.omega = omega;
    o.max_sweeps = 300;
    o.nonneg = false;
    const auto r = sart(P, b, o);
    for (std::size_t k = 1; k < r.weighted_residual_history.size(); ++k)
      EXPECT_LE(r.weighted_residual_history[k], r.weighted_residual_history[k - 1] * (1 + 1e-12));
    EXPECT_LT(r.residual_history.back(), r.residual_history.front());
  }
}

TEST(Sart, NonnegativeClip) {
  const auto A = from_rows({{1, 1}, {1, 2}});
  SartOptions o;
  const auto r = sart(A, std::vector<double>{1, 0}, o);
  for (double v : r.mu_hat) EXPECT_GE(v, 0.0);
  o.omega = 2.0;
  EXPECT_THROW(sart(A, std::vector<double>{1, 0}, o), std::invalid_argument);
}

TEST(Sart, ZeroRowsAndColumnsAreIgnored) {
  const auto A = from_rows({{1, 0, 0}, {0, 0, 0}, {0, 2, 0}});
  const auto r = sart(A, std::vector<double>{3, 5, 4});
  EXPECT_NEAR(r.mu_hat[0], 3.0, 1e-10);
  EXPECT_NEAR(r.mu_hat[1], 2.0, 1e-10);
  EXPECT_EQ(r.mu_hat[2], 0.0);
}

TEST(Sart, NoiselessDiskColumn) {
  const auto ph = dataset(phantom::DatasetKind::disk_blobs, 128);
  const forward::ForwardModel m(ph);
  const auto hs = ph.grid.height_grid().nodes();
  double s = 1.0;
  const auto blk = assemble_block(m, s, hs, 1.0);
  const auto v = restrict(blk, full_row_mask(blk), support_column_mask(blk.mu));
  const auto r = sart(v.materialize(), v.rhs(blk.b));
  EXPECT_LT(relative_error(r.mu_hat, v.truth()), 0.05);
}

TEST(RelativeError, Basics) {
  EXPECT_DOUBLE_EQ(relative_error(std::vector<double>{1, 1}, std::vector<double>{1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(std::vector<double>{0, 0}, std::vector<double>{3, 4}), 1.0);
  EXPECT_THROW(relative_error(std::vector<double>{0}, std::vector<double>{0}), std::invalid_argument);
}

TEST(Spearman, MatchesReferenceValues) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3, 4, 5, 6}, std::vector<double>{5, 6, 7, 8, 7, inf}),
              0.8986451052612952, 1e-14);
  EXPECT_NEAR(spearman(std::vector<double>{0.1, 0.2, 0.3, 0.4}, std::vector<double>{3, 1, 2, 2}),
              -0.316227766016838, 1e-14);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}), 1.0);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(SystemConditioning, WideMatricesAreInfinite) {
  const auto A = random_matrix(4, 6, 1);
  EXPECT_FALSE(condition_number(A).infinite);
  EXPECT_TRUE(system_condition_number(A).infinite);
  const auto B = random_matrix(6, 4, 1);
  EXPECT_EQ(system_condition_number(B).kappa, condition_number(B).kappa);
}
