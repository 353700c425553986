#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "lsfm/errors.hpp"
#include "lsfm/forward.hpp"

using namespace lsfm;
using namespace lsfm::forward;
using heat::Side;

namespace {

// Rectangle [0, 2] x [-0.9, 0.9]: every slice enters at x = 0.
phantom::Phantom slab(double psi, std::size_t n = 128) {
  phantom::DatasetParams p;
  p.grid.nx = p.grid.ny = n;
  auto obj = geom::ObjectShape::polygon(geom::Polygon{{{0.0, -0.9}, {2.0, -0.9}, {2.0, 0.9}, {0.0, 0.9}}});
  const auto mask = geom::rasterize(obj, p.grid).inside;
  const auto size = p.grid.size();
  phantom::Phantom ph{p, 0, p.grid, obj, mask, std::vector<double>(size, 0.0),
                      std::vector<double>(size, 0.0), std::vector<double>(size, 0.0),
                      std::vector<double>(size, 0.0)};
  for (std::size_t k = 0; k < size; ++k) ph.psi[k] = mask[k] ? psi : 0.0;
  return ph;
}

phantom::Phantom dataset(phantom::DatasetKind k, std::size_t n = 128, std::uint64_t seed = 7) {
  phantom::DatasetParams p;
  p.kind = k;
  p.grid.nx = p.grid.ny = n;
  return phantom::make_phantom(p, seed);
}

std::vector<double> sample_slopes(const SigmaProfile& p) {
  std::vector<double> d(p.ys.size() - 1);
  for (std::size_t k = 0; k + 1 < p.ys.size(); ++k)
    d[k] = (p.sigma[k + 1] - p.sigma[k]) / (p.ys[k + 1] - p.ys[k]);
  return d;
}

}  // namespace

TEST(Sigma, ZeroDiffusionGivesZero) {
  const auto ph = slab(0.0);
  const ForwardModel m(ph);
  EXPECT_EQ(m.sigma(1.0, 0.0, Side::left), 0.0);
}

TEST(Sigma, ConstantPsiPolynomialClosedForm) {
  const auto ph = slab(6.0);
  const ForwardModel m(ph);
  EXPECT_NEAR(m.sigma(1.0, 0.0, Side::left), 1.0, 1e-13);
  for (double s : {0.3, 0.77, 1.5})
    EXPECT_NEAR(m.sigma(s, 0.2, Side::left), s * s * s, 1e-12);
  EXPECT_NEAR(m.sigma(1.5, 0.2, Side::right), 0.125, 1e-13);
}

TEST(Sigma, DiskClosedForm) {
  const auto ph = testutil::disk_with_fields(128, 1.0, 0.0, 0.0);
  const ForwardModel m(ph);
  const double v = std::pow(0.88 - 0.2, 3) / 6.0;
  EXPECT_NEAR(v, 0.0524053, 5e-8);
  EXPECT_NEAR(m.sigma(0.88, 0.0, Side::left), v, 1e-14);
  for (double y : {-0.6, -0.3, 0.1, 0.45}) {
    const double g = 1.0 - std::sqrt(0.64 - y * y);
    EXPECT_NEAR(m.sigma(0.88, y, Side::left), std::pow(0.88 - g, 3) / 6.0, 1e-14);
  }
}

TEST(Sigma, ZeroExtensionOutsideVisibleSet) {
  const auto ph = testutil::disk_with_fields(128, 1.0, 1.0, 1.0, [](double, double) { return 1.0; });
  const ForwardModel m(ph);
  EXPECT_FALSE(m.visible(0.88, 0.795, Side::left));
  EXPECT_EQ(m.sigma(0.88, 0.795, Side::left), 0.0);
  EXPECT_EQ(m.sigma(0.88, 0.95, Side::left), 0.0);
  EXPECT_EQ(m.measure(0.88, 0.95, Side::left, 1.0), 0.0);
  EXPECT_EQ(m.attenuation_illum(0.88, 0.95, Side::left), 0.0);
  EXPECT_THROW(m.sigma(2.5, 0.0, Side::left), std::out_of_range);
  EXPECT_THROW(m.measure(1.0, -1.5, Side::left, 1.0), std::out_of_range);
}

TEST(SigmaPrime, VanishesAtCentreAndEndpoints) {
  const auto ph = testutil::disk_with_fields(128, 1.0, 0.0, 0.0);
  const ForwardModel m(ph);
  EXPECT_NEAR(m.sigma_prime(0.88, 0.0, Side::left), 0.0, 1e-10);
  const auto v = geom::visible_heights(ph.object, 0.88);
  EXPECT_NEAR(m.sigma_prime(0.88, v.y_lo + 1e-12, Side::left), 0.0, 1e-8);
}

TEST(SigmaPrime, MatchesClosedFormOnDisk) {
  const auto ph = testutil::disk_with_fields(128, 1.0, 0.0, 0.0);
  const ForwardModel m(ph);
  for (double y : {-0.7, -0.2, 0.3, 0.6}) {
    const double root = std::sqrt(0.64 - y * y);
    const double g = 1.0 - root;
    const double gp = y / root;
    EXPECT_NEAR(m.sigma_prime(0.88, y, Side::left), -gp * std::pow(0.88 - g, 2) / 2.0, 1e-9);
  }
}

TEST(SigmaPrime, FiniteDifferenceConsistency) {
  // psi linear in y and constant along each row: the blended field is exact.
  auto ph = testutil::disk_with_fields(128, 1.0, 0.0, 0.0);
  for (std::size_t j = 0; j < ph.grid.ny; ++j)
    for (std::size_t i = 0; i < ph.grid.nx; ++i) {
      const auto k = ph.grid.index(i, j);
      if (ph.object_mask[k]) ph.psi[k] = 1.0 + 0.5 * ph.grid.y(j);
    }
  const ForwardModel m(ph);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dy(-0.6, 0.6);
  for (int k = 0; k < 20; ++k) {
    const double y = dy(rng);
    for (auto side : {Side::left, Side::right}) {
      const double s = side == Side::left ? 0.9 : 1.1;
      const double an = m.sigma_prime(s, y, side);
      auto fd = [&](double d) { return (m.sigma(s, y + d, side) - m.sigma(s, y - d, side)) / (2 * d); };
      const double e1 = std::fabs(fd(2e-3) - an);
      const double e2 = std::fabs(fd(1e-3) - an);
      EXPECT_LT(e1, 1e-5 * (1 + std::fabs(an)));
      if (e1 > 1e-10) { EXPECT_GT(e1 / std::max(e2, 1e-300), 3.0) << "y = " << y; }
    }
  }
}

TEST(Attenuation, IlluminationPathIntegral) {
  const auto ph = testutil::disk_with_fields(128, 1.0, 1.0, 0.0);
  const ForwardModel m(ph);
  EXPECT_NEAR(m.attenuation_illum(0.88, 0.0, Side::left), 0.68, 1e-14);
  const auto zero = testutil::disk_with_fields(128, 1.0, 0.0, 0.0);
  EXPECT_EQ(ForwardModel(zero).attenuation_illum(0.88, 0.0, Side::left), 0.0);
}

TEST(Attenuation, IlluminationIsAdditiveAlongTheBeam) {
  auto ph = dataset(phantom::DatasetKind::zebrafish);
  const ForwardModel m(ph);
  const double y = 0.05;
  const double a1 = m.attenuation_illum(0.6, y, Side::left);
  const double a2 = m.attenuation_illum(0.9, y, Side::left);
  const double a3 = m.attenuation_illum(1.2, y, Side::left);
  EXPECT_GE(a2, a1);
  EXPECT_GE(a3, a2);
  // Constant lambda beyond the last change: increments scale with length.
  const auto flat = testutil::disk_with_fields(128, 1.0, 2.0, 0.0);
  const ForwardModel f(flat);
  const double d1 = f.attenuation_illum(0.9, y, Side::left) - f.attenuation_illum(0.6, y, Side::left);
  const double d2 = f.attenuation_illum(1.2, y, Side::left) - f.attenuation_illum(0.9, y, Side::left);
  EXPECT_NEAR(d1, 0.6, 1e-13);
  EXPECT_NEAR(d2, 0.6, 1e-13);
}

TEST(Attenuation, FluorescenceColumnIntegral) {
  const auto ph = testutil::disk_with_fields(128, 1.0, 0.0, 1.0);
  const ForwardModel m(ph);
  const double dy = ph.grid.dy();
  EXPECT_NEAR(m.attenuation_fluor(1.0, 0.0), 0.8, dy);
  double prev = 1e9;
  for (double r = -0.99; r <= 0.99; r += 0.01) {
    const double v = m.attenuation_fluor(1.0, r);
    EXPECT_LE(v, prev + 1e-15);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  const auto none = testutil::disk_with_fields(128, 1.0, 0.0, 0.0);
  EXPECT_EQ(ForwardModel(none).attenuation_fluor(1.0, 0.0), 0.0);
}

TEST(Measure, ZeroMuGivesZero) {
  const auto ph = testutil::disk_with_fields(128, 0.01, 1.0, 0.2);
  EXPECT_EQ(ForwardModel(ph).measure(0.9, 0.1, Side::left, 1.0), 0.0);
}

TEST(Measure, IdentifiesWithHeatSolution) {
  for (auto k : {phantom::DatasetKind::disk_blobs, phantom::DatasetKind::zebrafish}) {
    auto ph = dataset(k);
    std::fill(ph.lambda.begin(), ph.lambda.end(), 0.0);
    std::fill(ph.a.begin(), ph.a.end(), 0.0);
    const ForwardModel m(ph);
    for (double s : {0.7, 0.95}) {
      const heat::Profile1D u0(ph.grid.height_grid(), ph.mu_column(s));
      for (double y : {-0.5, -0.1, 0.2, 0.6}) {
        if (!m.visible(s, y, Side::left)) continue;
        const double sig = m.sigma(s, y, Side::left);
        EXPECT_NEAR(m.measure(s, y, Side::left, 1.0), heat::solve_heat(u0, y, sig), 1e-12);
      }
    }
  }
}

TEST(Measure, SingleCellIsOneQuadratureTerm) {
  auto ph = testutil::disk_with_fields(128, 0.01, 0.0, 0.0);
  const double s = 0.9;
  const auto i = ph.grid.column_of(s);
  const std::size_t j0 = 70;
  ph.mu[ph.grid.index(i, j0)] = 2.5;
  const ForwardModel m(ph);
  for (double y : {0.0, 0.1, 0.3}) {
    const double sig = m.sigma(s, y, Side::left);
    const double expect = 2.5 * ph.grid.dy() * heat::kernel_1d(ph.grid.y(j0) - y, sig);
    EXPECT_NEAR(m.measure(s, y, Side::left, 1.0), expect, 1e-14 + 1e-12 * expect);
  }
}

TEST(Measure, ZeroSigmaIsPointEvaluation) {
  auto ph = testutil::disk_with_fields(128, 0.01, 0.0, 0.0);
  const double s = 1.0 - 0.8;
  for (std::size_t j = 0; j < ph.grid.ny; ++j) ph.mu[ph.grid.index(ph.grid.column_of(s), j)] = 1.0;
  const ForwardModel m(ph);
  ASSERT_TRUE(m.visible(s, 0.0, Side::left));
  EXPECT_EQ(m.sigma(s, 0.0, Side::left), 0.0);
  EXPECT_NEAR(m.measure(s, 0.0, Side::left, 3.0), 3.0, 1e-14);
}

TEST(Measure, AttenuationAndGainScaling) {
  const auto ph = dataset(phantom::DatasetKind::zebrafish);
  const ForwardModel m(ph);
  const double s = 0.95, y = 0.1;
  EXPECT_NEAR(m.measure(s, y, Side::left, 4.0), 4.0 * m.measure(s, y, Side::left, 1.0), 1e-15);
  const auto w = m.row_weights(s, y, Side::left, 1.0);
  for (double v : w) EXPECT_GE(v, 0.0);
  const auto col = ph.mu_column(s);
  double dot = 0;
  for (std::size_t j = 0; j < w.size(); ++j) dot += w[j] * col[j];
  EXPECT_NEAR(m.measure(s, y, Side::left, 1.0), dot, 1e-15);
}

TEST(Measure, DependsOnlyOnItsOwnColumn) {
  auto ph = dataset(phantom::DatasetKind::disk_blobs);
  const double s = 0.9;
  std::vector<double> before;
  {
    const ForwardModel m(ph);
    for (double y = -0.7; y <= 0.7; y += 0.1) before.push_back(m.measure(s, y, Side::left, 1.0));
  }
  const auto own = ph.grid.column_of(s);
  std::mt19937_64 rng(2);
  for (std::size_t j = 0; j < ph.grid.ny; ++j)
    for (std::size_t i = 0; i < ph.grid.nx; ++i)
      if (i != own) ph.mu[ph.grid.index(i, j)] += std::uniform_real_distribution<double>(0, 1)(rng);
  const ForwardModel m(ph);
  std::size_t k = 0;
  for (double y = -0.7; y <= 0.7; y += 0.1) EXPECT_EQ(m.measure(s, y, Side::left, 1.0), before[k++]);
}

TEST(Measure, NonnegativeForNonnegativeMu) {
  const auto ph = dataset(phantom::DatasetKind::two_lobe);
  const ForwardModel m(ph);
  const std::vector<double> depths{0.5, 0.9, 1.3};
  const auto hs = ph.grid.height_grid().nodes();
  const auto set = measure_all(m, depths, hs, 1.0);
  ASSERT_EQ(set.p.size(), 3u);
  for (const auto& row : set.p) {
    ASSERT_EQ(row.size(), 2 * hs.size());
    for (double v : row) EXPECT_GE(v, 0.0);
  }
  EXPECT_EQ(set.p[1][5], m.measure(0.9, hs[5], Side::left, 1.0));
  EXPECT_EQ(set.p[1][hs.size() + 5], m.measure(0.9, hs[5], Side::right, 1.0));
}

TEST(AnalyzeSigma, TentProfile) {
  std::vector<double> ys, sig;
  for (int k = 0; k <= 20; ++k) {
    ys.push_back(-1.0 + 0.1 * k);
    sig.push_back(1.0 - std::fabs(ys.back()));
  }
  sig.front() = sig.back() = 0.0;
  const auto p = analyze_sigma_samples(ys, sig);
  EXPECT_NEAR(p.y_lo, -1.0, 1e-15);
  EXPECT_NEAR(p.y_hi, 1.0, 1e-15);
  EXPECT_NEAR(p.xi1, 1.0, 1e-12);
  EXPECT_NEAR(p.xi2, 1.0, 1e-12);
  EXPECT_NEAR(p.T1, 1.0, 1e-15);
  EXPECT_NEAR(p.T2, 1.0, 1e-15);
  EXPECT_NEAR(p.T, 1.0, 1e-15);
  EXPECT_NEAR(p.rho_left(0.5), -0.5, 1e-12);
  EXPECT_NEAR(p.rho_right(0.5), 0.5, 1e-12);
  const auto oi = observation_interval(p);
  EXPECT_NEAR(oi.left.lo, -1.0, 1e-12);
  EXPECT_NEAR(oi.left.hi, 0.0, 1e-12);
  EXPECT_NEAR(oi.right.lo, 0.0, 1e-12);
  EXPECT_NEAR(oi.right.hi, 1.0, 1e-12);
}

TEST(AnalyzeSigma, RetrimsTheTallerBranch) {
  std::vector<double> ys, sig;
  for (int k = 0; k <= 30; ++k) {
    const double y = k / 30.0;
    ys.push_back(y);
    // Peak 1 at y = 0.5, plateau at 0.7 on [0.6, 0.7].
    sig.push_back(y <= 0.5 ? 2 * y : (y < 0.6 - 1e-9 ? 1.0 - (y - 0.5) * 3.0 : (y <= 0.7 + 1e-9 ? 0.7 : 0.7 * (1 - y) / 0.3)));
  }
  sig.back() = 0.0;
  const auto p = analyze_sigma_samples(ys, sig);
  EXPECT_GT(p.T1_raw, p.T2_raw);
  EXPECT_DOUBLE_EQ(p.T, std::min(p.T1_raw, p.T2_raw));
  EXPECT_NEAR(p.rho_left(p.T), 0.5 * p.T, 1e-12);
  EXPECT_NEAR(p.rho_t_left.back(), p.rho_t_right.back(), 1e-15);
  for (double t = 0; t <= p.T; t += p.T / 17) {
    EXPECT_NEAR(p.rho_left(t), 0.5 * t, 1e-12);
  }
  EXPECT_THROW(p.rho_left(2 * p.T), std::domain_error);
}

TEST(AnalyzeSigma, MissingBranchIsNumericalFailure) {
  std::vector<double> ys, sig;
  for (int k = 0; k < 10; ++k) {
    ys.push_back(k);
    sig.push_back(k == 0 ? 0.0 : 1.0);
  }
  EXPECT_THROW(analyze_sigma_samples(ys, sig), NumericalFailure);
  EXPECT_THROW(analyze_sigma_samples({0, 1, 2}, {0, 1, 0}), std::invalid_argument);
  EXPECT_THROW(analyze_sigma_samples(std::vector<double>(10, 0.0), std::vector<double>(10, 0.0)),
               std::invalid_argument);
}

TEST(DetectSigma, DiskIsSymmetric) {
  const auto ph = dataset(phantom::DatasetKind::disk_blobs);
  const ForwardModel m(ph);
  for (double s : {0.5, 0.88}) {
    const auto p = detect_sigma_properties(m, s, Side::left);
    EXPECT_NEAR(p.T1_raw, p.T2_raw, 1e-10 * p.T);
    EXPECT_NEAR(p.argmax(), 0.0, ph.grid.dy());
    EXPECT_NEAR(p.y_lo, -p.y_hi, 1e-14);
    for (std::size_t k = 1; k + 1 < p.ys.size(); ++k) {
      if (p.ys[k] < -ph.grid.dy()) { EXPECT_GT(p.sigma_prime[k], 0.0); }
      if (p.ys[k] > ph.grid.dy()) { EXPECT_LT(p.sigma_prime[k], 0.0); }
    }
    for (std::size_t k = 0; k < p.rho_t_left.size(); ++k)
      EXPECT_NEAR(p.rho_left(p.rho_t_left[k]), p.rho_y_left[k], 1e-12);
  }
}

TEST(DetectSigma, BranchSignsOnAllDatasets) {
  const std::vector<std::pair<phantom::DatasetKind, std::vector<double>>> cases{
      {phantom::DatasetKind::disk_blobs, {0.4, 0.55, 0.7, 0.88, 0.95}},
      {phantom::DatasetKind::two_lobe, {0.6, 0.7, 0.8, 0.9, 1.0}},
      {phantom::DatasetKind::zebrafish, {0.85, 0.9, 0.95, 1.0, 1.05}}};
  for (const auto& [kind, depths] : cases) {
    const auto ph = dataset(kind);
    const ForwardModel m(ph);
    for (double s : depths) {
      const auto p = detect_sigma_properties(m, s, Side::left);
      const auto d = sample_slopes(p);
      const auto oi = observation_interval(p);
      for (std::size_t k = 0; k + 1 < p.ys.size(); ++k) {
        const double mid = 0.5 * (p.ys[k] + p.ys[k + 1]);
        if (p.ys[k + 1] <= oi.left.hi) { EXPECT_GT(d[k], 0.0) << "s = " << s << " y = " << mid; }
        if (p.ys[k] >= oi.right.lo) { EXPECT_LT(d[k], 0.0) << "s = " << s << " y = " << mid; }
      }
      EXPECT_DOUBLE_EQ(p.T, std::min(p.T1_raw, p.T2_raw));
      EXPECT_LE(oi.left.hi, oi.right.lo + 1e-12);
      EXPECT_GE(oi.left.lo, p.y_lo);
      EXPECT_LE(oi.right.hi, p.y_hi);
      EXPECT_NEAR(p.rho_left(p.T), oi.left.hi, 1e-12);
      EXPECT_NEAR(p.rho_right(p.T), oi.right.lo, 1e-12);
    }
  }
}

TEST(DetectSigma, TwoLobeBranchesDiffer) {
  const auto ph = dataset(phantom::DatasetKind::two_lobe);
  const ForwardModel m(ph);
  const auto p = detect_sigma_properties(m, 0.9, Side::left);
  EXPECT_GT(std::fabs(p.T1_raw - p.T2_raw), 1e-3 * p.T);
}

TEST(DetectSigma, EndpointOrderFallsTowardTheEdge) {
  const auto ph = dataset(phantom::DatasetKind::disk_blobs);
  const ForwardModel m(ph);
  const auto p = detect_sigma_properties(m, 0.88, Side::left);
  ASSERT_GE(p.endpoint_order.size(), 3u);
  EXPECT_LT(p.endpoint_order.front(), p.endpoint_order.back());
  EXPECT_LT(p.endpoint_order.front(), 0.0);
}

TEST(CurveTrace, RecoversHeatSolution) {
  auto ph = dataset(phantom::DatasetKind::disk_blobs, 256);
  const ForwardModel m(ph);
  const double s = 0.9;
  const auto p = detect_sigma_properties(m, s, Side::left);
  const auto c = curve_trace(p, m, 2.0);
  const auto u0 = m.effective_profile(s);
  for (std::size_t k = 0; k < c.ys.size(); ++k)
    EXPECT_NEAR(c.us[k], heat::solve_heat(u0, c.ys[k], c.ts[k]), 1e-8);
  EXPECT_THROW(curve_trace(p, m, 0.0), std::invalid_argument);

  std::fill(ph.lambda.begin(), ph.lambda.end(), 0.0);
  const ForwardModel bare(ph);
  const auto q = curve_trace(p, bare, 1.0);
  for (std::size_t k = 0; k < q.ys.size(); ++k)
    EXPECT_EQ(q.us[k], bare.measure(s, q.ys[k], Side::left, 1.0));
}
