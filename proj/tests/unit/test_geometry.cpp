#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lsfm/geometry.hpp"
#include "lsfm/phantom.hpp"

using namespace lsfm::geom;

namespace {

ObjectShape unit_disk() { return ObjectShape::disk(Disk{1.0, 0.0, 0.8}); }

ObjectShape disk_mask(std::size_t n) {
  CellGrid g;
  g.nx = g.ny = n;
  return ObjectShape::mask(rasterize(unit_disk(), g));
}

}  // namespace

TEST(CellGrid, CentresAndIndexing) {
  CellGrid g;
  g.nx = 4;
  g.ny = 2;
  EXPECT_DOUBLE_EQ(g.dx(), 0.5);
  EXPECT_DOUBLE_EQ(g.dy(), 1.0);
  EXPECT_DOUBLE_EQ(g.x(0), 0.25);
  EXPECT_DOUBLE_EQ(g.y(1), 0.5);
  EXPECT_EQ(g.index(3, 1), 7u);
  EXPECT_EQ(g.column_of(0.74), 1u);
  EXPECT_EQ(g.column_of(-1.0), 0u);
  EXPECT_EQ(g.column_of(5.0), 3u);
  EXPECT_EQ(g.row_of(0.2), 1u);
  const auto hg = g.height_grid();
  EXPECT_DOUBLE_EQ(hg.lo, -0.5);
  EXPECT_EQ(hg.size, 2u);
}

TEST(EntryDepth, DiskExamples) {
  const auto d = unit_disk();
  EXPECT_NEAR(*entry_depth(d, 0.0, Side::left), 0.2, 1e-15);
  EXPECT_NEAR(*entry_depth(d, 0.0, Side::right), 1.8, 1e-15);
  EXPECT_NEAR(*entry_depth(d, 0.8, Side::left), 1.0, 1e-15);
  EXPECT_FALSE(entry_depth(d, 0.9, Side::left).has_value());
  EXPECT_THROW(entry_depth(d, 1.5, Side::left), std::out_of_range);
}

TEST(EntryDepth, MaskMatchesDiskWithinOneCell) {
  const auto d = unit_disk();
  const auto m = disk_mask(512);
  const double cell = 2.0 / 512.0;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dy(-0.75, 0.75);
  for (int k = 0; k < 100; ++k) {
    const double y = dy(rng);
    for (auto side : {Side::left, Side::right}) {
      const auto a = entry_depth(d, y, side);
      const auto b = entry_depth(m, y, side);
      ASSERT_TRUE(a && b);
      EXPECT_NEAR(*a, *b, cell) << "y = " << y;
    }
  }
}

TEST(ObjectShape, RejectsDegenerateShapes) {
  EXPECT_THROW(ObjectShape::disk(Disk{1.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(ObjectShape::disk(Disk{1.0, 0.0, 1.5}), std::invalid_argument);
  EXPECT_THROW(ObjectShape::polygon(Polygon{{{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}}}),
               std::invalid_argument);
  EXPECT_THROW(ObjectShape::polygon(Polygon{{{0.1, 0.1}, {0.5, 0.5}}}), std::invalid_argument);
  CellGrid g;
  g.nx = g.ny = 8;
  EXPECT_THROW(ObjectShape::mask(Mask{g, std::vector<std::uint8_t>(64, 0)}), std::invalid_argument);
}

TEST(ObjectShape, PolygonEntryAndContains) {
  const auto sq = ObjectShape::polygon(Polygon{{{0.5, -0.5}, {1.5, -0.5}, {1.5, 0.5}, {0.5, 0.5}}});
  EXPECT_NEAR(*sq.entry(0.1, Side::left), 0.5, 1e-15);
  EXPECT_NEAR(*sq.entry(0.1, Side::right), 1.5, 1e-15);
  EXPECT_TRUE(sq.contains(1.0, 0.0));
  EXPECT_FALSE(sq.contains(1.6, 0.0));
  EXPECT_FALSE(sq.entry(0.7, Side::left).has_value());
}

TEST(VisibleHeights, DiskExamples) {
  const auto d = unit_disk();
  auto v = visible_heights(d, 1.0);
  EXPECT_FALSE(v.empty);
  EXPECT_NEAR(v.y_lo, -0.8, 1e-15);
  EXPECT_NEAR(v.y_hi, 0.8, 1e-15);

  v = visible_heights(d, 0.88);
  const double r = std::sqrt(0.8 * 0.8 - 0.12 * 0.12);
  EXPECT_NEAR(v.y_hi, r, 1e-14);
  EXPECT_NEAR(v.y_lo, -r, 1e-14);
  EXPECT_NEAR(r, 0.791, 5e-4);

  EXPECT_TRUE(visible_heights(d, 0.1).empty);
  EXPECT_TRUE(visible_heights(d, 1.9, Side::right).empty);
}

TEST(VisibleHeights, AnalyticMatchesDenseSampling) {
  const auto d = unit_disk();
  for (double s : {0.25, 0.5, 0.88, 1.3}) {
    const auto v = visible_heights(d, s, Side::left, 20001);
    double lo = 1e9, hi = -1e9;
    for (std::size_t k = 0; k < v.heights.size(); ++k)
      if (v.visible[k]) {
        lo = std::min(lo, v.heights[k]);
        hi = std::max(hi, v.heights[k]);
      }
    EXPECT_NEAR(v.y_lo, lo, 2e-4);
    EXPECT_NEAR(v.y_hi, hi, 2e-4);
  }
}

TEST(VisibleHeights, MonotoneInDepth) {
  for (const auto& obj : {unit_disk(), disk_mask(128),
                          ObjectShape::polygon(Polygon{lsfm::phantom::two_lobe_outline()})}) {
    for (auto side : {Side::left, Side::right}) {
      std::vector<std::uint8_t> prev;
      for (int k = 0; k <= 40; ++k) {
        const double s = side == Side::left ? 0.05 * k : 2.0 - 0.05 * k;
        const auto v = visible_heights(obj, s, side, 513);
        if (!prev.empty())
          for (std::size_t i = 0; i < prev.size(); ++i)
            if (prev[i]) { EXPECT_TRUE(v.visible[i]) << "s = " << s; }
        prev = v.visible;
      }
    }
  }
}

TEST(VisibleHeights, EndpointsSitOnTheEntryCurve) {
  const auto obj = ObjectShape::polygon(Polygon{lsfm::phantom::two_lobe_outline()});
  for (double s : {0.5, 0.8}) {
    const auto v = visible_heights(obj, s);
    ASSERT_FALSE(v.empty);
    EXPECT_NEAR(*entry_depth(obj, v.y_lo, Side::left), s, 2.0 / 128);
    EXPECT_NEAR(*entry_depth(obj, v.y_hi, Side::left), s, 2.0 / 128);
  }
}

TEST(ScanLimits, DiskAndMask) {
  const auto lim = scan_limits(unit_disk());
  EXPECT_DOUBLE_EQ(lim.s_minus, 0.2);
  EXPECT_DOUBLE_EQ(lim.s_plus, 1.8);
  const auto ml = scan_limits(disk_mask(256));
  EXPECT_NEAR(ml.s_minus, 0.2, 2.0 / 256);
  EXPECT_NEAR(ml.s_plus, 1.8, 2.0 / 256);
}

TEST(SampleGeometry, Shapes) {
  const std::vector<double> ys{-0.9, 0.0, 0.5};
  const auto g = sample_geometry(unit_disk(), ys);
  ASSERT_EQ(g.gamma_left.size(), 3u);
  EXPECT_FALSE(g.gamma_left[0].has_value());
  EXPECT_NEAR(*g.gamma_right[1], 1.8, 1e-15);
}

TEST(Erode, ShrinksBySquareNeighbourhood) {
  CellGrid g;
  g.nx = g.ny = 9;
  std::vector<std::uint8_t> in(81, 0);
  for (std::size_t j = 2; j <= 6; ++j)
    for (std::size_t i = 2; i <= 6; ++i) in[g.index(i, j)] = 1;
  const auto e1 = erode(g, in, 1);
  std::size_t count = 0;
  for (auto v : e1) count += v;
  EXPECT_EQ(count, 9u);
  EXPECT_TRUE(e1[g.index(3, 3)]);
  EXPECT_FALSE(e1[g.index(2, 4)]);
  const auto e0 = erode(g, in, 0);
  EXPECT_EQ(e0, in);
}
