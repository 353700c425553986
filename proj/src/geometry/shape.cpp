#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lsfm/geometry.hpp"

namespace lsfm::geom {

namespace {

constexpr double kTol = 1e-12;

void require_in_domain(double x_lo, double x_hi, double y_lo, double y_hi, const Domain& d) {
  if (x_lo < -kTol || x_hi > d.s1 + kTol || y_lo < -d.y1 - kTol || y_hi > d.y1 + kTol)
    throw std::invalid_argument("object [" + std::to_string(x_lo) + ", " + std::to_string(x_hi) +
                                "] x [" + std::to_string(y_lo) + ", " + std::to_string(y_hi) +
                                "] leaves the domain");
}

double polygon_area(const Polygon& p) {
  double a = 0.0;
  const auto n = p.vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& u = p.vertices[k];
    const auto& v = p.vertices[(k + 1) % n];
    a += u[0] * v[1] - v[0] * u[1];
  }
  return 0.5 * a;
}

std::optional<double> disk_entry(const Disk& d, double y, Side side) {
  const double dy = y - d.cy;
  if (std::fabs(dy) > d.r) return std::nullopt;
  const double h = std::sqrt(std::max(0.0, d.r * d.r - dy * dy));
  return side == Side::left ? d.cx - h : d.cx + h;
}

std::optional<double> polygon_entry(const Polygon& p, double y, Side side) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const auto n = p.vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = p.vertices[k];
    const auto& b = p.vertices[(k + 1) % n];
    const double ylo = std::min(a[1], b[1]);
    const double yhi = std::max(a[1], b[1]);
    if (y < ylo || y > yhi) continue;
    if (a[1] == b[1]) {
      lo = std::min({lo, a[0], b[0]});
      hi = std::max({hi, a[0], b[0]});
      continue;
    }
    const double x = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(lo <= hi)) return std::nullopt;
  return side == Side::left ? lo : hi;
}

// Crossing of one mask row: the cell edge between the last outside and the
// first inside centre.
std::optional<double> mask_row_entry(const Mask& m, std::size_t j, Side side) {
  const auto& g = m.grid;
  if (side == Side::left) {
    for (std::size_t i = 0; i < g.nx; ++i)
      if (m.inside[g.index(i, j)]) return static_cast<double>(i) * g.dx();
  } else {
    for (std::size_t i = g.nx; i-- > 0;)
      if (m.inside[g.index(i, j)]) return static_cast<double>(i + 1) * g.dx();
  }
  return std::nullopt;
}

std::optional<double> mask_entry(const Mask& m, double y, Side side) {
  const auto& g = m.grid;
  const double pos = (y - g.y(0)) / g.dy();
  const double last = static_cast<double>(g.ny - 1);
  if (pos <= 0.0) return mask_row_entry(m, 0, side);
  if (pos >= last) return mask_row_entry(m, g.ny - 1, side);
  const auto j0 = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(j0);
  const auto a = mask_row_entry(m, j0, side);
  const auto b = mask_row_entry(m, j0 + 1, side);
  if (a && b) return (1.0 - frac) * *a + frac * *b;
  if (a && frac <= 0.5) return a;
  if (b && frac >= 0.5) return b;
  return std::nullopt;
}

bool polygon_contains(const Polygon& p, double x, double y) {
  bool in = false;
  const auto n = p.vertices.size();
  for (std::size_t k = 0, l = n - 1; k < n; l = k++) {
    const auto& a = p.vertices[k];
    const auto& b = p.vertices[l];
    if ((a[1] > y) != (b[1] > y) && x < (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0])
      in = !in;
  }
  return in;
}

}  // namespace

std::size_t CellGrid::column_of(double xv) const {
  const double pos = std::floor(xv / dx());
  return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(nx - 1)));
}

std::size_t CellGrid::row_of(double yv) const {
  const double pos = std::floor((yv + domain.y1) / dy());
  return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(ny - 1)));
}

heat::UniformGrid CellGrid::height_grid() const { return heat::UniformGrid{y(0), dy(), ny}; }

ObjectShape ObjectShape::disk(Disk d, Domain domain) {
  if (!(d.r > 0.0) || !std::isfinite(d.r) || !std::isfinite(d.cx) || !std::isfinite(d.cy))
    throw std::invalid_argument("disk needs a positive finite radius, got r = " +
                                std::to_string(d.r));
  require_in_domain(d.cx - d.r, d.cx + d.r, d.cy - d.r, d.cy + d.r, domain);
  return ObjectShape(d, domain);
}

ObjectShape ObjectShape::polygon(Polygon p, Domain domain) {
  if (p.vertices.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  if (!(std::fabs(polygon_area(p)) > kTol))
    throw std::invalid_argument("polygon has an empty interior");
  double xl = 1e300, xh = -1e300, yl = 1e300, yh = -1e300;
  for (const auto& v : p.vertices) {
    xl = std::min(xl, v[0]);
    xh = std::max(xh, v[0]);
    yl = std::min(yl, v[1]);
    yh = std::max(yh, v[1]);
  }
  require_in_domain(xl, xh, yl, yh, domain);
  return ObjectShape(std::move(p), domain);
}

ObjectShape ObjectShape::mask(Mask m) {
  if (m.grid.nx < 2 || m.grid.ny < 2 || m.inside.size() != m.grid.size())
    throw std::invalid_argument("mask size does not match its grid");
  if (std::none_of(m.inside.begin(), m.inside.end(), [](std::uint8_t v) { return v != 0; }))
    throw std::invalid_argument("mask has an empty interior");
  const Domain d = m.grid.domain;
  return ObjectShape(std::move(m), d);
}

bool ObjectShape::contains(double x, double y) const {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return (x - s.cx) * (x - s.cx) + (y - s.cy) * (y - s.cy) < s.r * s.r;
        } else if constexpr (std::is_same_v<T, Polygon>) {
          return polygon_contains(s, x, y);
        } else {
          const auto& g = s.grid;
          if (x < 0.0 || x > g.domain.s1 || y < -g.domain.y1 || y > g.domain.y1) return false;
          return s.inside[g.index(g.column_of(x), g.row_of(y))] != 0;
        }
      },
      shape_);
}

std::optional<double> ObjectShape::entry(double y, Side side) const {
  return std::visit(
      [&](const auto& s) -> std::optional<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) return disk_entry(s, y, side);
        else if constexpr (std::is_same_v<T, Polygon>) return polygon_entry(s, y, side);
        else return mask_entry(s, y, side);
      },
      shape_);
}

std::array<double, 4> ObjectShape::bounding_box() const {
  return std::visit(
      [&](const auto& s) -> std::array<double, 4> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return {s.cx - s.r, s.cx + s.r, s.cy - s.r, s.cy + s.r};
        } else if constexpr (std::is_same_v<T, Polygon>) {
          std::array<double, 4> b{1e300, -1e300, 1e300, -1e300};
          for (const auto& v : s.vertices) {
            b[0] = std::min(b[0], v[0]);
            b[1] = std::max(b[1], v[0]);
            b[2] = std::min(b[2], v[1]);
            b[3] = std::max(b[3], v[1]);
          }
          return b;
        } else {
          const auto& g = s.grid;
          std::array<double, 4> b{1e300, -1e300, 1e300, -1e300};
          for (std::size_t j = 0; j < g.ny; ++j)
            for (std::size_t i = 0; i < g.nx; ++i) {
              if (!s.inside[g.index(i, j)]) continue;
              b[0] = std::min(b[0], static_cast<double>(i) * g.dx());
              b[1] = std::max(b[1], static_cast<double>(i + 1) * g.dx());
              b[2] = std::min(b[2], g.y(j) - 0.5 * g.dy());
              b[3] = std::max(b[3], g.y(j) + 0.5 * g.dy());
            }
          return b;
        }
      },
      shape_);
}

std::optional<double> entry_depth(const ObjectShape& object, double y, Side side) {
  const double y1 = object.domain().y1;
  if (!(y >= -y1 - kTol && y <= y1 + kTol))
    throw std::out_of_range("height y = " + std::to_string(y) + " lies outside [-" +
                            std::to_string(y1) + ", " + std::to_string(y1) + "]");
  return object.entry(y, side);
}

VisibleSet visible_heights(const ObjectShape& object, double s, Side side, std::size_t samples) {
  const auto& d = object.domain();
  if (!(s >= -kTol && s <= d.s1 + kTol))
    throw std::out_of_range("depth s = " + std::to_string(s) + " lies outside [0, " +
                            std::to_string(d.s1) + "]");
  if (samples < 3) throw std::invalid_argument("visible_heights needs at least 3 samples");

  auto visible = [&](double y) {
    const auto g = object.entry(y, side);
    if (!g) return false;
    return side == Side::left ? *g <= s : *g >= s;
  };

  VisibleSet out;
  out.heights.resize(samples);
  out.visible.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double y = -d.y1 + 2.0 * d.y1 * static_cast<double>(k) / static_cast<double>(samples - 1);
    out.heights[k] = y;
    out.visible[k] = visible(y) ? 1 : 0;
  }

  if (const auto* disk = std::get_if<Disk>(&object.shape())) {
    const double depth = side == Side::left ? s - (disk->cx - disk->r) : (disk->cx + disk->r) - s;
    if (depth < 0.0) return out;
    const double past = side == Side::left ? s - disk->cx : disk->cx - s;
    const double h = past >= 0.0 ? disk->r
                                 : std::sqrt(std::max(0.0, disk->r * disk->r - past * past));
    out.empty = false;
    out.y_lo = disk->cy - h;
    out.y_hi = disk->cy + h;
    return out;
  }

  std::size_t first = samples;
  std::size_t last = 0;
  for (std::size_t k = 0; k < samples; ++k)
    if (out.visible[k]) {
      first = std::min(first, k);
      last = k;
    }
  if (first == samples) return out;

  auto refine = [&](double outside, double inside) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (outside + inside);
      (visible(mid) ? inside : outside) = mid;
    }
    return inside;
  };
  out.empty = false;
  out.y_lo = first == 0 ? out.heights[0] : refine(out.heights[first - 1], out.heights[first]);
  out.y_hi = last + 1 == samples ? out.heights[last]
                                 : refine(out.heights[last + 1], out.heights[last]);
  return out;
}

ScanLimits scan_limits(const ObjectShape& object) {
  const auto b = object.bounding_box();
  return ScanLimits{b[0], b[1]};
}

Geometry sample_geometry(const ObjectShape& object, std::span<const double> heights) {
  Geometry g;
  g.heights.assign(heights.begin(), heights.end());
  for (double y : heights) {
    g.gamma_left.push_back(entry_depth(object, y, Side::left));
    g.gamma_right.push_back(entry_depth(object, y, Side::right));
  }
  g.limits = scan_limits(object);
  return g;
}

Mask rasterize(const ObjectShape& object, const CellGrid& grid) {
  Mask m{grid, std::vector<std::uint8_t>(grid.size(), 0)};
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i)
      m.inside[grid.index(i, j)] = object.contains(grid.x(i), grid.y(j)) ? 1 : 0;
  return m;
}

std::vector<std::uint8_t> erode(const CellGrid& grid, const std::vector<std::uint8_t>& inside,
                                std::size_t k) {
  std::vector<std::uint8_t> out(grid.size(), 0);
  const auto nx = static_cast<std::ptrdiff_t>(grid.nx);
  const auto ny = static_cast<std::ptrdiff_t>(grid.ny);
  const auto kk = static_cast<std::ptrdiff_t>(k);
  for (std::ptrdiff_t j = 0; j < ny; ++j)
    for (std::ptrdiff_t i = 0; i < nx; ++i) {
      bool ok = true;
      for (std::ptrdiff_t dj = -kk; ok && dj <= kk; ++dj)
        for (std::ptrdiff_t di = -kk; ok && di <= kk; ++di) {
          const auto a = i + di;
          const auto b = j + dj;
          ok = a >= 0 && a < nx && b >= 0 && b < ny &&
               inside[static_cast<std::size_t>(b * nx + a)] != 0;
        }
      out[static_cast<std::size_t>(j * nx + i)] = ok ? 1 : 0;
    }
  return out;
}

}  // namespace lsfm::geom
