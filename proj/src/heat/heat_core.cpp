#include "lsfm/heat_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lsfm/parallel.hpp"
#include "lsfm/simd/kernels.hpp"

namespace lsfm::heat {

namespace {

constexpr double kSpacingTolerance = 1e-12;

bool in_support(double y, double lo, double hi, double step) {
  const double tol = 1e-9 * step;
  return y >= lo - tol && y <= hi + tol;
}

}  // namespace

std::vector<double> UniformGrid::nodes() const {
  std::vector<double> ys(size);
  for (std::size_t i = 0; i < size; ++i) ys[i] = at(i);
  return ys;
}

UniformGrid UniformGrid::spanning(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw std::invalid_argument("grid needs >= 2 nodes and hi > lo");
  return UniformGrid{lo, (hi - lo) / static_cast<double>(n - 1), n};
}

UniformGrid UniformGrid::from_nodes(std::span<const double> ys) {
  if (ys.size() < 2) throw std::invalid_argument("profile abscissae need at least 2 samples");
  const double step = (ys.back() - ys.front()) / static_cast<double>(ys.size() - 1);
  if (!(step > 0.0)) throw std::invalid_argument("profile abscissae must be strictly increasing");
  for (std::size_t i = 1; i < ys.size(); ++i) {
    const double d = ys[i] - ys[i - 1];
    if (!(d > 0.0)) throw std::invalid_argument("profile abscissae must be strictly increasing");
    const double expected = ys.front() + static_cast<double>(i) * step;
    const double scale = std::max({std::fabs(ys[i]), std::fabs(step), 1.0});
    if (std::fabs(ys[i] - expected) > kSpacingTolerance * scale * static_cast<double>(ys.size()))
      throw std::invalid_argument("profile abscissae must be uniformly spaced");
  }
  return UniformGrid{ys.front(), step, ys.size()};
}

Profile1D::Profile1D(UniformGrid grid, std::vector<double> values, double support_lo,
                     double support_hi)
    : grid_(grid), values_(std::move(values)), support_lo_(support_lo), support_hi_(support_hi) {
  build();
}

Profile1D::Profile1D(std::span<const double> ys, std::vector<double> values, double support_lo,
                     double support_hi)
    : Profile1D(UniformGrid::from_nodes(ys), std::move(values), support_lo, support_hi) {}

Profile1D::Profile1D(UniformGrid grid, std::vector<double> values)
    : Profile1D(grid, std::move(values), grid.lo, grid.hi()) {}

Profile1D Profile1D::sample(UniformGrid grid, const std::function<double(double)>& f, double lo,
                            double hi) {
  std::vector<double> v(grid.size, 0.0);
  for (std::size_t i = 0; i < grid.size; ++i) {
    const double y = grid.at(i);
    if (in_support(y, lo, hi, grid.step)) v[i] = f(y);
  }
  return Profile1D(grid, std::move(v), lo, hi);
}

void Profile1D::build() {
  if (grid_.size < 2 || !(grid_.step > 0.0))
    throw std::invalid_argument("profile grid needs >= 2 increasing samples");
  if (values_.size() != grid_.size)
    throw std::invalid_argument("profile has " + std::to_string(values_.size()) +
                                " values for " + std::to_string(grid_.size) + " abscissae");
  if (!(support_lo_ <= support_hi_)) throw std::invalid_argument("profile support is inverted");

  weights_.assign(grid_.size, 0.0);
  nodes_.clear();
  coeffs_.clear();
  std::size_t first = grid_.size;
  std::size_t last = 0;
  for (std::size_t i = 0; i < grid_.size; ++i) {
    if (!std::isfinite(values_[i])) throw std::invalid_argument("profile value is not finite");
    if (in_support(grid_.at(i), support_lo_, support_hi_, grid_.step)) {
      first = std::min(first, i);
      last = i;
    } else if (values_[i] != 0.0) {
      throw std::invalid_argument("profile is nonzero outside its declared support");
    }
  }
  if (first >= grid_.size || first == last) return;
  for (std::size_t i = first; i <= last; ++i) weights_[i] = grid_.step;
  weights_[first] *= 0.5;
  weights_[last] *= 0.5;
  for (std::size_t i = first; i <= last; ++i) {
    nodes_.push_back(grid_.at(i));
    coeffs_.push_back(weights_[i] * values_[i]);
  }
}

double Profile1D::interpolate(double y) const {
  const double pos = (y - grid_.lo) / grid_.step;
  if (pos < -1e-12 || pos > static_cast<double>(grid_.size - 1) + 1e-12) return 0.0;
  const double clamped = std::clamp(pos, 0.0, static_cast<double>(grid_.size - 1));
  const auto i = std::min(static_cast<std::size_t>(clamped), grid_.size - 2);
  const double frac = clamped - static_cast<double>(i);
  return (1.0 - frac) * values_[i] + frac * values_[i + 1];
}

bool Profile1D::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

bool Profile1D::is_nonnegative() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

Profile1D Profile1D::scaled(double a) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= a;
  return Profile1D(grid_, std::move(v), support_lo_, support_hi_);
}

double kernel_1d(double x, double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::domain_error("heat kernel needs a positive diffusion time, got t = " +
                            std::to_string(t));
  return std::exp(-(x * x) / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

double solve_heat(const Profile1D& u0, double y, double t) {
  if (t < 0.0 || !std::isfinite(t))
    throw std::domain_error("solve_heat needs t >= 0, got t = " + std::to_string(t));
  if (t == 0.0) return u0.interpolate(y);
  const auto m = simd::gauss_moments(u0.support_nodes(), u0.support_coefficients(), y, t);
  return m.m0 / std::sqrt(4.0 * std::numbers::pi * t);
}

HeatSample solve_heat_with_gradient(const Profile1D& u0, double y, double t) {
  if (!(t > 0.0)) throw std::domain_error("solve_heat_with_gradient needs t > 0");
  const auto m = simd::gauss_moments(u0.support_nodes(), u0.support_coefficients(), y, t);
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
  // d/dy exp(-(y-r)^2/4t) = exp(.) * (r - y) / (2t)
  return HeatSample{m.m0 * norm, m.m1 * norm / (2.0 * t)};
}

Profile1D evolve(const Profile1D& u0, double t, const UniformGrid& grid) {
  std::vector<double> v(grid.size);
  parallel_for(grid.size, [&](std::size_t j) { v[j] = solve_heat(u0, grid.at(j), t); });
  return Profile1D(grid, std::move(v));
}

SpaceTimeField::SpaceTimeField(UniformGrid grid, std::vector<double> ts, std::vector<double> values)
    : grid_(grid), ts_(std::move(ts)), values_(std::move(values)) {
  if (values_.size() != ts_.size() * grid_.size)
    throw std::invalid_argument("field values do not match time x space shape");
  for (std::size_t i = 1; i < ts_.size(); ++i)
    if (!(ts_[i] > ts_[i - 1])) throw std::invalid_argument("field times must be increasing");
}

std::span<const double> SpaceTimeField::row(std::size_t i) const {
  return {values_.data() + i * grid_.size, grid_.size};
}

std::size_t SpaceTimeField::time_index(double t) const {
  for (std::size_t i = 0; i < ts_.size(); ++i)
    if (std::fabs(ts_[i] - t) <= 1e-12 * std::max(1.0, std::fabs(t))) return i;
  throw std::out_of_range("time " + std::to_string(t) + " is not one of the field's times");
}

SpaceTimeField solve_field(const Profile1D& u0, std::span<const double> ts) {
  for (double t : ts)
    if (t < 0.0) throw std::domain_error("solve_field needs t >= 0");
  const auto& grid = u0.grid();
  std::vector<double> values(ts.size() * grid.size);
  parallel_for(ts.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < grid.size; ++j)
      values[i * grid.size + j] = solve_heat(u0, grid.at(j), ts[i]);
  });
  return SpaceTimeField(grid, std::vector<double>(ts.begin(), ts.end()), std::move(values));
}

UniformGrid widened_grid(const Profile1D& u0, double t_max) {
  const auto& g = u0.grid();
  const double pad = 12.0 * std::sqrt(4.0 * std::max(t_max, 0.0));
  const auto below = static_cast<std::size_t>(
      std::ceil(std::max(0.0, g.lo - (u0.support_lo() - pad)) / g.step));
  const auto above = static_cast<std::size_t>(
      std::ceil(std::max(0.0, (u0.support_hi() + pad) - g.hi()) / g.step));
  return UniformGrid{g.lo - static_cast<double>(below) * g.step, g.step, g.size + below + above};
}

}  // namespace lsfm::heat
