#include "lsfm/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lsfm/errors.hpp"
#include "lsfm/random.hpp"

namespace lsfm::phantom {

namespace {

double ellipse(double x, double y, double cx, double cy, double ax, double ay) {
  const double u = (x - cx) / ax;
  const double v = (y - cy) / ay;
  return u * u + v * v;
}

double zebrafish_intensity(double x, double y) {
  double v = 0.0;
  if (y >= -0.5 && y <= 0.42) {
    const double mid = 0.97 + 0.03 * std::sin(1.5 * std::numbers::pi * y);
    const double half = 0.08 * (0.55 + 0.45 * (y + 0.5) / 0.92);
    const double d = std::fabs(x - mid);
    if (d <= half) v = std::max(v, 0.4);
    if (d <= 0.02) v = std::max(v, 0.7);
  }
  if (ellipse(x, y, 0.66, 0.30, 0.22, 0.12) <= 1.0) v = std::max(v, 0.6);
  if (ellipse(x, y, 0.56, 0.33, 0.05, 0.05) <= 1.0) v = std::max(v, 1.0);
  if (ellipse(x, y, 0.68, -0.27, 0.20, 0.12) <= 1.0) v = std::max(v, 0.85);
  return v;
}

void add_blobs(const DatasetParams& p, std::uint64_t seed, const geom::CellGrid& g,
               const std::vector<std::uint8_t>& allowed, std::vector<double>& mu,
               const std::function<bool(double, double)>& centre_ok) {
  const auto& b = p.blobs;
  if (!(b.radius_min > 0.0) || b.radius_max < b.radius_min)
    throw ConfigError("phantom.blobs.radius_min", "blob radii must satisfy 0 < min <= max");
  if (!(b.value_min >= 0.0) || b.value_max < b.value_min)
    throw ConfigError("phantom.blobs.value_min", "blob values must satisfy 0 <= min <= max");

  CounterRng rng(seed, 1);
  for (std::size_t k = 0; k < b.count; ++k) {
    double cx = 0.0, cy = 0.0;
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      cx = rng.uniform(0.0, g.domain.s1);
      cy = rng.uniform(-g.domain.y1, g.domain.y1);
      placed = centre_ok(cx, cy);
    }
    if (!placed) throw ConfigError("phantom.blobs.count", "no room to place blob centres");
    const double r = rng.uniform(b.radius_min, b.radius_max);
    const double val = rng.uniform(b.value_min, b.value_max);
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const auto idx = g.index(i, j);
        if (!allowed[idx]) continue;
        const double dx = g.x(i) - cx;
        const double dy = g.y(j) - cy;
        if (dx * dx + dy * dy < r * r) mu[idx] += val;
      }
  }
}

}  // namespace

std::vector<std::array<double, 2>> two_lobe_outline() {
  return {{1.00, -0.72}, {1.35, -0.62}, {1.60, -0.35}, {1.65, 0.00}, {1.58, 0.35},
          {1.35, 0.62},  {1.00, 0.70},  {0.62, 0.62},  {0.38, 0.42}, {0.30, 0.22},
          {0.42, 0.06},  {0.55, -0.02}, {0.42, -0.10}, {0.28, -0.28}, {0.34, -0.50},
          {0.60, -0.66}};
}

io::PgmImage zebrafish_image(std::size_t width, std::size_t height) {
  // The fish is drawn in the frame of the default mask box; mask_box rescales it.
  const std::array<double, 4> frame = DatasetParams{}.mask_box;
  io::PgmImage img{width, height, 255, std::vector<int>(width * height, 0)};
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      const double x = frame[0] + (static_cast<double>(c) + 0.5) / static_cast<double>(width) *
                                      (frame[1] - frame[0]);
      const double y = frame[3] - (static_cast<double>(r) + 0.5) / static_cast<double>(height) *
                                      (frame[3] - frame[2]);
      img.pixels[r * width + c] = static_cast<int>(std::lround(255.0 * zebrafish_intensity(x, y)));
    }
  return img;
}

std::vector<double> Phantom::mu_column(double s) const {
  const auto i = grid.column_of(s);
  std::vector<double> col(grid.ny);
  for (std::size_t j = 0; j < grid.ny; ++j) col[j] = mu[grid.index(i, j)];
  return col;
}

Phantom make_phantom(const DatasetParams& p, std::uint64_t seed) {
  const auto& g = p.grid;
  if (g.nx < 8 || g.ny < 8) throw ConfigError("grid.nx", "grid needs at least 8 x 8 cells");
  if (!(g.domain.s1 > 0.0) || !(g.domain.y1 > 0.0))
    throw ConfigError("grid.s1", "domain extents must be positive");
  if (p.margin_cells < 2)
    throw ConfigError("phantom.margin_cells", "mu must stay at least 2 cells inside the object");
  if (!(p.w1 > 0.0)) throw ConfigError("phantom.w1", "w1 must be positive");
  if (!(p.w2 >= 0.0)) throw ConfigError("phantom.w2", "w2 must be nonnegative");
  if (!(p.diffusion_ratio > 0.0))
    throw ConfigError("phantom.diffusion_ratio", "diffusion ratio must be positive");
  if (!(p.attenuation >= 0.0))
    throw ConfigError("phantom.attenuation", "attenuation must be nonnegative");

  auto object = [&]() {
    try {
      if (p.kind == DatasetKind::two_lobe)
        return geom::ObjectShape::polygon(
            geom::Polygon{p.polygon.empty() ? two_lobe_outline() : p.polygon}, g.domain);
      return geom::ObjectShape::disk(p.object_disk, g.domain);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(p.kind == DatasetKind::two_lobe ? "phantom.polygon" : "phantom.object_disk",
                        e.what());
    }
  }();

  const auto mask = geom::rasterize(object, g).inside;
  const auto inner = geom::erode(g, mask, p.margin_cells);
  std::vector<double> mu(g.size(), 0.0);

  switch (p.kind) {
    case DatasetKind::disk_blobs: {
      const auto& d = p.object_disk;
      const double rs = p.support_radius;
      if (!(rs > 0.0)) throw ConfigError("phantom.support_radius", "support radius must be positive");
      if (rs + static_cast<double>(p.margin_cells) * std::max(g.dx(), g.dy()) > d.r)
        throw ConfigError("phantom.support_radius",
                          "absorption support reaches within margin_cells of the boundary");
      std::vector<std::uint8_t> allowed(g.size(), 0);
      for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
          const double dx = g.x(i) - d.cx;
          const double dy = g.y(j) - d.cy;
          const auto k = g.index(i, j);
          allowed[k] = inner[k] && dx * dx + dy * dy < rs * rs;
        }
      add_blobs(p, seed, g, allowed, mu, [&](double x, double y) {
        return (x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) < rs * rs;
      });
      break;
    }
    case DatasetKind::two_lobe: {
      add_blobs(p, seed, g, inner, mu, [&](double x, double y) {
        if (x < 0.0 || x > g.domain.s1 || y < -g.domain.y1 || y > g.domain.y1) return false;
        return inner[g.index(g.column_of(x), g.row_of(y))] != 0;
      });
      break;
    }
    case DatasetKind::zebrafish: {
      const auto& box = p.mask_box;
      if (!(box[1] > box[0]) || !(box[3] > box[2]))
        throw ConfigError("phantom.mask_box", "mask box must have positive extent");
      if (!(p.mask_peak >= 0.0)) throw ConfigError("phantom.mask_peak", "mask peak must be >= 0");
      io::PgmImage img;
      if (p.mask_path.empty()) {
        img = zebrafish_image();
      } else {
        try {
          img = io::read_pgm(p.mask_path);
        } catch (const std::invalid_argument& e) {
          throw ConfigError("phantom.mask_path", e.what());
        }
      }
      for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
          const double x = g.x(i);
          const double y = g.y(j);
          if (x < box[0] || x >= box[1] || y <= box[2] || y > box[3]) continue;
          const auto c = std::min(img.width - 1, static_cast<std::size_t>(
                                                     (x - box[0]) / (box[1] - box[0]) *
                                                     static_cast<double>(img.width)));
          const auto r = std::min(img.height - 1, static_cast<std::size_t>(
                                                      (box[3] - y) / (box[3] - box[2]) *
                                                      static_cast<double>(img.height)));
          const double v = p.mask_peak * img.at(c, r) / img.maxval;
          if (v > 0.0 && !inner[g.index(i, j)])
            throw ConfigError("phantom.mask_box",
                              "mask reaches within margin_cells of the object boundary");
          mu[g.index(i, j)] = v;
        }
      break;
    }
    default:
      throw ConfigError("phantom.kind", "dataset kind must be 1, 2 or 3");
  }

  std::vector<double> lambda(g.size()), psi(g.size()), a(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double ind = mask[k] ? 1.0 : 0.0;
    lambda[k] = p.w1 * ind + (p.kind == DatasetKind::zebrafish ? p.w2 * mu[k] : 0.0);
    psi[k] = p.diffusion_ratio * lambda[k];
    a[k] = p.attenuation * ind;
  }
  Phantom out{p, seed, g, std::move(object), mask, std::move(mu), std::move(lambda),
              std::move(psi), std::move(a)};
  check_invariants(out);
  return out;
}

void check_invariants(const Phantom& p) {
  const auto& g = p.grid;
  const auto inner2 = geom::erode(g, p.object_mask, 2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(p.mu[k] >= 0.0) || !(p.lambda[k] >= 0.0) || !(p.a[k] >= 0.0))
      throw std::logic_error("phantom has a negative coefficient at cell " + std::to_string(k));
    if (p.object_mask[k] ? !(p.psi[k] > 0.0) : p.psi[k] != 0.0)
      throw std::logic_error("psi must be positive exactly on the object (cell " +
                             std::to_string(k) + ")");
    if (p.mu[k] > 0.0 && !inner2[k])
      throw std::logic_error("mu is supported within 2 cells of the boundary (cell " +
                             std::to_string(k) + ")");
  }
}

}  // namespace lsfm::phantom
