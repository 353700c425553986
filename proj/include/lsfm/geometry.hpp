#pragma once
// Object geometry for the two-sided light-sheet setup: the object lives in
// the box [0, s1] x [-y1, y1], beams travel along x at fixed height y and the
// detector pixel sits at depth s.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "lsfm/heat_core.hpp"

namespace lsfm::geom {

using heat::Side;

struct Domain {
  double s1 = 2.0;
  double y1 = 1.0;
};

/// nx x ny cell centres over the domain. Field index is j * nx + i, with i
/// the depth (x) index and j the height (y) index.
struct CellGrid {
  std::size_t nx = 128;
  std::size_t ny = 128;
  Domain domain;

  double dx() const { return domain.s1 / static_cast<double>(nx); }
  double dy() const { return 2.0 * domain.y1 / static_cast<double>(ny); }
  double x(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
  double y(std::size_t j) const { return -domain.y1 + (static_cast<double>(j) + 0.5) * dy(); }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  std::size_t size() const { return nx * ny; }
  /// Nearest column / row to a coordinate, clamped to the grid.
  std::size_t column_of(double x) const;
  std::size_t row_of(double y) const;
  /// Row centres as a uniform 1D grid.
  heat::UniformGrid height_grid() const;
};

struct Disk {
  double cx = 1.0;
  double cy = 0.0;
  double r = 0.8;
};

struct Polygon {
  std::vector<std::array<double, 2>> vertices;
};

struct Mask {
  CellGrid grid;
  std::vector<std::uint8_t> inside;
};

class ObjectShape {
 public:
  using Variant = std::variant<Disk, Polygon, Mask>;

  /// Throws std::invalid_argument for an empty interior or a shape leaving the domain.
  static ObjectShape disk(Disk d, Domain domain = {});
  static ObjectShape polygon(Polygon p, Domain domain = {});
  static ObjectShape mask(Mask m);

  const Variant& shape() const { return shape_; }
  const Domain& domain() const { return domain_; }
  bool contains(double x, double y) const;
  /// Raw entry point without domain checks; none when the slice misses.
  std::optional<double> entry(double y, Side side) const;
  std::array<double, 4> bounding_box() const;  // x_lo, x_hi, y_lo, y_hi

 private:
  ObjectShape(Variant v, Domain d) : shape_(std::move(v)), domain_(d) {}
  Variant shape_;
  Domain domain_;
};

/// Left: inf{x : (x, y) in object}; right: sup. Throws std::out_of_range for y
/// outside [-y1, y1].
std::optional<double> entry_depth(const ObjectShape& object, double y, Side side);

/// Heights whose beam reaches depth s: gamma_left(y) <= s (left) or
/// gamma_right(y) >= s (right).
struct VisibleSet {
  bool empty = true;
  double y_lo = 0.0;
  double y_hi = 0.0;
  std::vector<double> heights;
  std::vector<std::uint8_t> visible;
};

VisibleSet visible_heights(const ObjectShape& object, double s, Side side = Side::left,
                           std::size_t samples = 2049);

struct ScanLimits {
  double s_minus;
  double s_plus;
};

ScanLimits scan_limits(const ObjectShape& object);

/// Per-height entry depths sampled for export and plotting.
struct Geometry {
  std::vector<double> heights;
  std::vector<std::optional<double>> gamma_left;
  std::vector<std::optional<double>> gamma_right;
  ScanLimits limits;
};

Geometry sample_geometry(const ObjectShape& object, std::span<const double> heights);

/// Rasterises an object onto cell centres.
Mask rasterize(const ObjectShape& object, const CellGrid& grid);

/// Cells whose (2k+1)^2 neighbourhood lies inside the mask.
std::vector<std::uint8_t> erode(const CellGrid& grid, const std::vector<std::uint8_t>& inside,
                                std::size_t k);

}  // namespace lsfm::geom
