#pragma once
// Exact-kernel solver for u_t = u_yy on the real line and the norm / energy
// functionals built on it.
//
// A sampled initial profile is integrated against the Gaussian kernel with
// the composite trapezoid rule over its support. The discrete solution is
// therefore a finite sum of Gaussians: it solves the heat equation exactly
// and is linear in the samples of u0.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace lsfm::heat {

/// Uniformly spaced abscissae lo, lo + step, ..., lo + (size - 1) * step.
struct UniformGrid {
  double lo = 0.0;
  double step = 1.0;
  std::size_t size = 0;

  double at(std::size_t i) const { return lo + static_cast<double>(i) * step; }
  double hi() const { return at(size - 1); }
  std::vector<double> nodes() const;

  /// n nodes with both endpoints included.
  static UniformGrid spanning(double lo, double hi, std::size_t n);
  /// Validates strict increase and constant spacing (1e-12 relative).
  static UniformGrid from_nodes(std::span<const double> ys);
};

/// Sampled function with a declared support [support_lo, support_hi];
/// samples outside the support are exactly zero.
class Profile1D {
 public:
  Profile1D(UniformGrid grid, std::vector<double> values, double support_lo, double support_hi);
  Profile1D(std::span<const double> ys, std::vector<double> values, double support_lo,
            double support_hi);
  /// Support defaults to the whole grid.
  Profile1D(UniformGrid grid, std::vector<double> values);

  /// Samples f on the grid, zeroing nodes outside [lo, hi].
  static Profile1D sample(UniformGrid grid, const std::function<double(double)>& f, double lo,
                          double hi);

  const UniformGrid& grid() const { return grid_; }
  std::vector<double> ys() const { return grid_.nodes(); }
  const std::vector<double>& values() const { return values_; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }

  /// Linear interpolation; zero outside the grid.
  double interpolate(double y) const;

  /// Composite-trapezoid weights over the support nodes (zero elsewhere).
  const std::vector<double>& weights() const { return weights_; }
  /// Support nodes and weight * value products, the data the kernel sums read.
  std::span<const double> support_nodes() const { return nodes_; }
  std::span<const double> support_coefficients() const { return coeffs_; }

  bool is_zero() const;
  bool is_nonnegative() const;

  Profile1D scaled(double a) const;

 private:
  void build();

  UniformGrid grid_;
  std::vector<double> values_;
  double support_lo_ = 0.0;
  double support_hi_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> nodes_;
  std::vector<double> coeffs_;
};

/// Gaussian heat kernel exp(-x^2 / 4t) / sqrt(4 pi t). Throws std::domain_error
/// for t <= 0.
double kernel_1d(double x, double t);

/// u(y, t) for the initial profile u0; t = 0 interpolates u0.
double solve_heat(const Profile1D& u0, double y, double t);

struct HeatSample {
  double u = 0.0;
  double u_y = 0.0;
};

/// u and its spatial derivative, the latter from differentiating the kernel
/// under the integral. Requires t > 0.
HeatSample solve_heat_with_gradient(const Profile1D& u0, double y, double t);

/// u(., t) sampled on `grid`, returned as a profile supported on the whole grid.
Profile1D evolve(const Profile1D& u0, double t, const UniformGrid& grid);

/// Temperatures on a time x space lattice.
class SpaceTimeField {
 public:
  SpaceTimeField(UniformGrid grid, std::vector<double> ts, std::vector<double> values);

  const UniformGrid& grid() const { return grid_; }
  const std::vector<double>& times() const { return ts_; }
  std::size_t time_count() const { return ts_.size(); }
  std::span<const double> row(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const { return values_[i * grid_.size + j]; }
  const std::vector<double>& values() const { return values_; }

  /// Index of the row whose time equals t (1e-12 relative); throws otherwise.
  std::size_t time_index(double t) const;

 private:
  UniformGrid grid_;
  std::vector<double> ts_;
  std::vector<double> values_;
};

/// values[i][j] = solve_heat(u0, ys[j], ts[i]) on u0's own grid. Rows are
/// computed in parallel.
SpaceTimeField solve_field(const Profile1D& u0, std::span<const double> ts);

/// A grid wide enough that the solution at times up to t_max is negligible
/// beyond it: support +/- 12 sqrt(4 t_max), same spacing as u0.
UniformGrid widened_grid(const Profile1D& u0, double t_max);

// ---------------------------------------------------------------------------
// Norms

enum class NormKind { L1_space, L2_space, L2_spacetime, L1_curve };

struct Interval {
  double lo;
  double hi;
  static Interval whole_line();
};

struct Rectangle {
  Interval space;
  Interval time;
};

/// Per-height integrates |u| dy along the curve; per-time integrates |u| dt.
enum class CurveWeighting { per_height, per_time };

/// Samples (y_k, t_k, u(y_k, t_k)) along a curve, ordered by the curve parameter.
struct CurveSamples {
  std::vector<double> ys;
  std::vector<double> ts;
  std::vector<double> us;
};

struct CurveRegion {
  CurveWeighting weighting = CurveWeighting::per_height;
};

struct RegionNorm {
  NormKind kind;
  std::variant<Interval, Rectangle, CurveRegion> region;
  double value;
};

/// L1_space or L2_space of a profile over region (intersected with its support).
RegionNorm region_norm(const Profile1D& u, NormKind kind, Interval region);
/// L2_spacetime of a field over a rectangle inside its grid and time range.
RegionNorm region_norm(const SpaceTimeField& field, NormKind kind, Rectangle region);
/// L1_curve along sampled curve points.
RegionNorm region_norm(const CurveSamples& curve, CurveWeighting weighting);

/// Trapezoid integral of samples f on `grid` over [a, b] inside the grid; the
/// partial cells at either end use linear interpolation of f, which keeps the
/// rule exactly additive under interval splitting.
double trapezoid(const UniformGrid& grid, std::span<const double> f, double a, double b);

// ---------------------------------------------------------------------------
// Energies

enum class Side { left, right };

/// Left: 1/2 int_{grid lo}^{rho(t)} u(y,t)^2 dy. Right: the integral from rho(t)
/// to the grid end. t must be one of the field's times.
double exterior_energy(const SpaceTimeField& field, const std::function<double(double)>& rho,
                       double t, Side side = Side::left);

/// 1/2 ||u(., t)||^2 over the whole field grid.
double half_energy(const SpaceTimeField& field, double t);

/// Largest gap log N(t_i) - [lam log N(t_{i-1}) + (1 - lam) log N(t_{i+1})]
/// over interior times, N(t) = ||u(., t)||^2_{L2}. Positive values are
/// violations of log-convexity.
double log_convexity_check(const Profile1D& u0, std::span<const double> ts);

}  // namespace lsfm::heat
