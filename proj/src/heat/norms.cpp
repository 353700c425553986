#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lsfm/heat_core.hpp"
#include "lsfm/parallel.hpp"

namespace lsfm::heat {

namespace {

double sample_at(const UniformGrid& grid, std::span<const double> f, double x) {
  const double pos = std::clamp((x - grid.lo) / grid.step, 0.0, static_cast<double>(grid.size - 1));
  const auto i = std::min(static_cast<std::size_t>(pos), grid.size - 2);
  const double frac = pos - static_cast<double>(i);
  return (1.0 - frac) * f[i] + frac * f[i + 1];
}

void require_inside(const UniformGrid& grid, double a, double b, const char* what) {
  const double tol = 1e-9 * grid.step;
  if (a < grid.lo - tol || b > grid.hi() + tol)
    throw std::out_of_range(std::string(what) + " [" + std::to_string(a) + ", " +
                            std::to_string(b) + "] lies outside the sampled grid [" +
                            std::to_string(grid.lo) + ", " + std::to_string(grid.hi()) + "]");
}

// Trapezoid over possibly non-uniform abscissae xs with linear interpolation
// at partial end segments.
double trapezoid_nonuniform(std::span<const double> xs, std::span<const double> f, double a,
                            double b) {
  if (b <= a) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double x0 = std::max(xs[k], a);
    const double x1 = std::min(xs[k + 1], b);
    if (x1 <= x0) continue;
    const double h = xs[k + 1] - xs[k];
    const double f0 = f[k] + (f[k + 1] - f[k]) * (x0 - xs[k]) / h;
    const double f1 = f[k] + (f[k + 1] - f[k]) * (x1 - xs[k]) / h;
    acc += 0.5 * (f0 + f1) * (x1 - x0);
  }
  return acc;
}

}  // namespace

Interval Interval::whole_line() {
  return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
}

double trapezoid(const UniformGrid& grid, std::span<const double> f, double a, double b) {
  if (f.size() != grid.size) throw std::invalid_argument("trapezoid: sample count mismatch");
  require_inside(grid, a, b, "integration interval");
  a = std::max(a, grid.lo);
  b = std::min(b, grid.hi());
  if (b <= a) return 0.0;

  const double snap = 1e-10;
  double pa = (a - grid.lo) / grid.step;
  double pb = (b - grid.lo) / grid.step;
  if (std::fabs(pa - std::round(pa)) < snap) pa = std::round(pa);
  if (std::fabs(pb - std::round(pb)) < snap) pb = std::round(pb);
  const auto ia = static_cast<std::size_t>(std::ceil(pa));
  const auto ib = static_cast<std::size_t>(std::floor(pb));

  const double fa = sample_at(grid, f, a);
  const double fb = sample_at(grid, f, b);
  if (ia > ib) return 0.5 * (fa + fb) * (b - a);

  double acc = 0.5 * (fa + f[ia]) * (grid.at(ia) - a);
  for (std::size_t i = ia; i < ib; ++i) acc += 0.5 * (f[i] + f[i + 1]) * grid.step;
  acc += 0.5 * (f[ib] + fb) * (b - grid.at(ib));
  return acc;
}

RegionNorm region_norm(const Profile1D& u, NormKind kind, Interval region) {
  if (kind != NormKind::L1_space && kind != NormKind::L2_space)
    throw std::invalid_argument("profiles support only L1_space and L2_space norms");
  const auto& g = u.grid();
  const double tol = 1e-9 * g.step;
  if ((std::isfinite(region.lo) && (region.lo < g.lo - tol || region.lo > g.hi() + tol)) ||
      (std::isfinite(region.hi) && (region.hi < g.lo - tol || region.hi > g.hi() + tol)))
    throw std::out_of_range("norm region [" + std::to_string(region.lo) + ", " +
                            std::to_string(region.hi) + "] lies outside the sampled grid");
  const double a = std::max({region.lo, u.support_lo(), g.lo});
  const double b = std::min({region.hi, u.support_hi(), g.hi()});

  std::vector<double> f(u.values());
  for (double& v : f) v = (kind == NormKind::L1_space) ? std::fabs(v) : v * v;
  const double integral = (b > a) ? trapezoid(g, f, a, b) : 0.0;
  const double value = (kind == NormKind::L1_space) ? integral : std::sqrt(integral);
  return RegionNorm{kind, region, value};
}

RegionNorm region_norm(const SpaceTimeField& field, NormKind kind, Rectangle region) {
  if (kind != NormKind::L2_spacetime)
    throw std::invalid_argument("fields support the L2_spacetime norm over rectangles");
  const auto& ts = field.times();
  if (ts.empty()) throw std::invalid_argument("field has no time rows");
  require_inside(field.grid(), region.space.lo, region.space.hi, "space interval");
  const double ttol = 1e-12 * std::max(1.0, std::fabs(ts.back()));
  if (region.time.lo < ts.front() - ttol || region.time.hi > ts.back() + ttol)
    throw std::out_of_range("time interval lies outside the field's time range");

  std::vector<double> slice(ts.size());
  parallel_for(ts.size(), [&](std::size_t i) {
    auto r = field.row(i);
    std::vector<double> sq(r.begin(), r.end());
    for (double& v : sq) v *= v;
    slice[i] = trapezoid(field.grid(), sq, region.space.lo, region.space.hi);
  });
  const double t_lo = std::max(region.time.lo, ts.front());
  const double t_hi = std::min(region.time.hi, ts.back());
  const double integral = trapezoid_nonuniform(ts, slice, t_lo, t_hi);
  return RegionNorm{kind, region, std::sqrt(std::max(integral, 0.0))};
}

RegionNorm region_norm(const CurveSamples& curve, CurveWeighting weighting) {
  const auto n = curve.us.size();
  if (curve.ys.size() != n || curve.ts.size() != n)
    throw std::invalid_argument("curve samples have inconsistent lengths");
  const auto& param = (weighting == CurveWeighting::per_height) ? curve.ys : curve.ts;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k)
    acc += 0.5 * (std::fabs(curve.us[k]) + std::fabs(curve.us[k + 1])) *
           std::fabs(param[k + 1] - param[k]);
  return RegionNorm{NormKind::L1_curve, CurveRegion{weighting}, acc};
}

double exterior_energy(const SpaceTimeField& field, const std::function<double(double)>& rho,
                       double t, Side side) {
  const std::size_t i = field.time_index(t);
  const double r = rho(t);
  const auto& g = field.grid();
  if (!(r >= g.lo - 1e-9 * g.step && r <= g.hi() + 1e-9 * g.step))
    throw std::out_of_range("branch point rho(t) = " + std::to_string(r) +
                            " lies outside the field grid");
  auto row = field.row(i);
  std::vector<double> sq(row.begin(), row.end());
  for (double& v : sq) v *= v;
  return side == Side::left ? 0.5 * trapezoid(g, sq, g.lo, r) : 0.5 * trapezoid(g, sq, r, g.hi());
}

double half_energy(const SpaceTimeField& field, double t) {
  auto row = field.row(field.time_index(t));
  std::vector<double> sq(row.begin(), row.end());
  for (double& v : sq) v *= v;
  return 0.5 * trapezoid(field.grid(), sq, field.grid().lo, field.grid().hi());
}

double log_convexity_check(const Profile1D& u0, std::span<const double> ts) {
  if (ts.size() < 3) throw std::invalid_argument("log-convexity check needs at least 3 times");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0)) throw std::domain_error("log-convexity check needs positive times");
    if (i > 0 && !(ts[i] > ts[i - 1]))
      throw std::invalid_argument("log-convexity times must be increasing");
  }
  if (u0.is_zero()) throw std::domain_error("log-convexity check: u0 is identically zero");

  const double t_min = ts.front();
  const double t_max = ts.back();
  const double pad = 12.0 * std::sqrt(4.0 * t_max);
  const double step = std::min(u0.grid().step, std::sqrt(4.0 * t_min) / 10.0);
  const double lo = u0.support_lo() - pad;
  const double hi = u0.support_hi() + pad;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  const UniformGrid grid = UniformGrid::spanning(lo, hi, n);

  std::vector<double> log_n(ts.size());
  parallel_for(ts.size(), [&](std::size_t i) {
    std::vector<double> sq(grid.size);
    for (std::size_t j = 0; j < grid.size; ++j) {
      const double u = solve_heat(u0, grid.at(j), ts[i]);
      sq[j] = u * u;
    }
    const double norm = trapezoid(grid, sq, grid.lo, grid.hi());
    if (!(norm > 0.0)) throw std::domain_error("log-convexity check: zero L2 norm");
    log_n[i] = std::log(norm);
  });

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
    const double lam = (ts[i + 1] - ts[i]) / (ts[i + 1] - ts[i - 1]);
    worst = std::max(worst, log_n[i] - (lam * log_n[i - 1] + (1.0 - lam) * log_n[i + 1]));
  }
  return worst;
}

}  // namespace lsfm::heat
