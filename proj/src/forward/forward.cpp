#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lsfm/forward.hpp"
#include "lsfm/parallel.hpp"
#include "lsfm/simd/kernels.hpp"

namespace lsfm::forward {

namespace {

// int_{u_lo}^{u_hi} u^2 f(u) du with f linear, f(u_lo) = f_lo, f(u_hi) = f_hi.
double cubic_moment(double u_lo, double u_hi, double f_lo, double f_hi) {
  const double d = u_hi - u_lo;
  if (d <= 0.0) return 0.0;
  const double m2 = (u_hi * u_hi * u_hi - u_lo * u_lo * u_lo) / 3.0;
  const double m3 = (u_hi * u_hi * u_hi * u_hi - u_lo * u_lo * u_lo * u_lo) / 4.0 - u_lo * m2;
  return f_lo * m2 + (f_hi - f_lo) / d * m3;
}

// Piecewise-linear field through the cell centres x_i, constant beyond the
// first and last centre.
double value_at(std::span<const double> v, double x0, double dx, double x) {
  const double pos = (x - x0) / dx;
  const double last = static_cast<double>(v.size() - 1);
  if (pos <= 0.0) return v.front();
  if (pos >= last) return v.back();
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return (1.0 - f) * v[i] + f * v[i + 1];
}

// int_a^b |tau - s|^power v(tau) dtau (power 0 or 2) over the nodes a,
// centres in (a, b), b.
double integrate_row(std::span<const double> v, double x0, double dx, double a, double b, double s,
                     int power) {
  if (b <= a) return 0.0;
  double acc = 0.0;
  double prev = a;
  double fprev = value_at(v, x0, dx, a);
  const double first = std::ceil((a - x0) / dx);
  for (double k = std::max(first, 0.0);; k += 1.0) {
    double x = x0 + k * dx;
    if (x <= a) continue;
    const bool done = x >= b || k > static_cast<double>(v.size() - 1);
    if (done) x = b;
    const double fx = value_at(v, x0, dx, x);
    if (power == 0) {
      acc += 0.5 * (fprev + fx) * (x - prev);
    } else {
      const double ua = std::fabs(prev - s);
      const double ub = std::fabs(x - s);
      acc += ua <= ub ? cubic_moment(ua, ub, fprev, fx) : cubic_moment(ub, ua, fx, fprev);
    }
    prev = x;
    fprev = fx;
    if (done) break;
  }
  return acc;
}

}  // namespace

ForwardModel::ForwardModel(const phantom::Phantom& p) : p_(&p), nx_(p.grid.nx), ny_(p.grid.ny) {
  psi_ext_.assign(nx_ * ny_, 0.0);
  lambda_ext_.assign(nx_ * ny_, 0.0);
  row_has_object_.assign(ny_, 0);
  for (std::size_t j = 0; j < ny_; ++j) {
    std::size_t first = nx_, last = 0;
    for (std::size_t i = 0; i < nx_; ++i)
      if (p.object_mask[j * nx_ + i]) {
        first = std::min(first, i);
        last = i;
      }
    if (first == nx_) continue;
    row_has_object_[j] = 1;
    for (std::size_t i = 0; i < nx_; ++i) {
      const std::size_t src = i < first ? first : (i > last ? last : i);
      psi_ext_[j * nx_ + i] = p.psi[j * nx_ + src];
      lambda_ext_[j * nx_ + i] = p.lambda[j * nx_ + src];
    }
  }
}

std::optional<double> ForwardModel::gamma(double y, Side side) const {
  return geom::entry_depth(p_->object, y, side);
}

bool ForwardModel::visible(double s, double y, Side side) const {
  const auto g = gamma(y, side);
  if (!g) return false;
  return side == Side::left ? *g <= s : *g >= s;
}

void ForwardModel::check_point(double s, double y) const {
  const auto& d = grid().domain;
  if (!(s >= 0.0 && s <= d.s1))
    throw std::out_of_range("depth s = " + std::to_string(s) + " lies outside [0, " +
                            std::to_string(d.s1) + "]");
  if (!(y >= -d.y1 && y <= d.y1))
    throw std::out_of_range("height y = " + std::to_string(y) + " lies outside [-" +
                            std::to_string(d.y1) + ", " + std::to_string(d.y1) + "]");
}

double ForwardModel::path_integral(double s, double y, Side side, int power,
                                   bool derivative) const {
  check_point(s, y);
  const auto g = gamma(y, side);
  if (!g) return 0.0;
  const double a = side == Side::left ? *g : s;
  const double b = side == Side::left ? s : *g;
  if (b <= a) return 0.0;

  const auto& gr = grid();
  const auto& field = power == 2 ? psi_ext_ : lambda_ext_;

  // Rows and blend weight for a height, skipping rows that miss the object.
  auto blend = [&](double yy, std::vector<double>& out) {
    const double pos = std::clamp((yy - gr.y(0)) / gr.dy(), 0.0, static_cast<double>(ny_ - 1));
    auto j0 = std::min(static_cast<std::size_t>(pos), ny_ - 2);
    double f = pos - static_cast<double>(j0);
    auto j1 = j0 + 1;
    if (!row_has_object_[j0] && !row_has_object_[j1]) {
      std::size_t near = f < 0.5 ? j0 : j1;
      std::size_t best = ny_;
      for (std::size_t k = 0; k < ny_; ++k)
        if (row_has_object_[k] &&
            (best == ny_ || (k > near ? k - near : near - k) < (best > near ? best - near : near - best)))
          best = k;
      j0 = j1 = best;
      f = 0.0;
    } else if (!row_has_object_[j0]) {
      f = 1.0;
    } else if (!row_has_object_[j1]) {
      f = 0.0;
    }
    out.resize(nx_);
    for (std::size_t i = 0; i < nx_; ++i)
      out[i] = (1.0 - f) * field[j0 * nx_ + i] + f * field[j1 * nx_ + i];
  };

  std::vector<double> v;
  if (derivative) {
    std::vector<double> up, down;
    const double h = 0.5 * gr.dy();
    blend(y + h, up);
    blend(y - h, down);
    v.resize(nx_);
    for (std::size_t i = 0; i < nx_; ++i) v[i] = (up[i] - down[i]) / gr.dy();
  } else {
    blend(y, v);
  }
  const double integral = integrate_row(v, gr.x(0), gr.dx(), a, b, s, power);
  return power == 2 ? 0.5 * integral : integral;
}

double ForwardModel::sigma(double s, double y, Side side) const {
  return path_integral(s, y, side, 2, false);
}

double ForwardModel::attenuation_illum(double s, double y, Side side) const {
  return path_integral(s, y, side, 0, false);
}

double ForwardModel::sigma_prime(double s, double y, Side side) const {
  check_point(s, y);
  if (!visible(s, y, side)) return 0.0;
  const double g = *gamma(y, side);
  const auto& d = grid().domain;
  const double h = 1e-6;
  // One-sided near the ends of the slice range.
  auto gamma_or = [&](double yy) -> std::optional<double> {
    if (yy < -d.y1 || yy > d.y1) return std::nullopt;
    return gamma(yy, side);
  };
  const auto gp = gamma_or(y + h);
  const auto gm = gamma_or(y - h);
  double dgamma = 0.0;
  if (gp && gm) dgamma = (*gp - *gm) / (2.0 * h);
  else if (gp) dgamma = (*gp - g) / h;
  else if (gm) dgamma = (g - *gm) / h;

  // psi at the entry point, blended between rows like the integrand.
  const auto& gr = grid();
  const double pos = std::clamp((y - gr.y(0)) / gr.dy(), 0.0, static_cast<double>(ny_ - 1));
  const auto j0 = std::min(static_cast<std::size_t>(pos), ny_ - 2);
  double f = pos - static_cast<double>(j0);
  if (!row_has_object_[j0]) f = 1.0;
  if (!row_has_object_[j0 + 1]) f = 0.0;
  std::vector<double> row(nx_);
  for (std::size_t i = 0; i < nx_; ++i)
    row[i] = (1.0 - f) * psi_ext_[j0 * nx_ + i] + f * psi_ext_[(j0 + 1) * nx_ + i];
  const double psi_entry = value_at(row, gr.x(0), gr.dx(), g);

  const double dist = std::fabs(s - g);
  const double boundary = 0.5 * dgamma * dist * dist * psi_entry;
  const double interior = path_integral(s, y, side, 2, true);
  return side == Side::left ? -boundary + interior : boundary + interior;
}

double ForwardModel::attenuation_fluor(double s, double r) const {
  check_point(s, r);
  const auto& gr = grid();
  const auto i = column(s);
  std::vector<double> col(ny_);
  for (std::size_t j = 0; j < ny_; ++j) col[j] = p_->a[j * nx_ + i];
  return integrate_row(col, gr.y(0), gr.dy(), r, gr.domain.y1, 0.0, 0);
}

std::vector<double> ForwardModel::row_weights(double s, double y, Side side, double c) const {
  check_point(s, y);
  std::vector<double> w(ny_, 0.0);
  if (!visible(s, y, side)) return w;
  const auto& gr = grid();
  const double sig = sigma(s, y, side);
  const double scale = c * std::exp(-attenuation_illum(s, y, side));

  const auto i = column(s);
  std::vector<double> col(ny_);
  for (std::size_t j = 0; j < ny_; ++j) col[j] = p_->a[j * nx_ + i];
  std::vector<double> eff(ny_);
  for (std::size_t j = 0; j < ny_; ++j)
    eff[j] = std::exp(-integrate_row(col, gr.y(0), gr.dy(), gr.y(j), gr.domain.y1, 0.0, 0));

  if (sig > 0.0) {
    const auto hg = gr.height_grid();
    std::vector<double> r = hg.nodes();
    std::vector<double> tw(ny_, hg.step);
    tw.front() *= 0.5;
    tw.back() *= 0.5;
    for (std::size_t j = 0; j < ny_; ++j) tw[j] *= eff[j];
    simd::gauss_row(r, tw, y, sig, w);
    const double norm = scale / std::sqrt(4.0 * std::numbers::pi * sig);
    for (double& x : w) x *= norm;
  } else {
    const double pos = std::clamp((y - gr.y(0)) / gr.dy(), 0.0, static_cast<double>(ny_ - 1));
    const auto j0 = std::min(static_cast<std::size_t>(pos), ny_ - 2);
    const double f = pos - static_cast<double>(j0);
    w[j0] = scale * (1.0 - f) * eff[j0];
    w[j0 + 1] = scale * f * eff[j0 + 1];
  }
  return w;
}

double ForwardModel::measure(double s, double y, Side side, double c) const {
  const auto w = row_weights(s, y, side, c);
  const auto mu = p_->mu_column(s);
  return simd::dot(w, mu);
}

heat::Profile1D ForwardModel::effective_profile(double s) const {
  const auto& gr = grid();
  const auto i = column(s);
  std::vector<double> col(ny_);
  for (std::size_t j = 0; j < ny_; ++j) col[j] = p_->a[j * nx_ + i];
  std::vector<double> v(ny_);
  for (std::size_t j = 0; j < ny_; ++j)
    v[j] = p_->mu[j * nx_ + i] *
           std::exp(-integrate_row(col, gr.y(0), gr.dy(), gr.y(j), gr.domain.y1, 0.0, 0));
  return heat::Profile1D(gr.height_grid(), std::move(v));
}

double sigma(double s, double y, Side side, const phantom::Phantom& p) {
  return ForwardModel(p).sigma(s, y, side);
}
double sigma_prime(double s, double y, Side side, const phantom::Phantom& p) {
  return ForwardModel(p).sigma_prime(s, y, side);
}
double attenuation_illum(double s, double y, Side side, const phantom::Phantom& p) {
  return ForwardModel(p).attenuation_illum(s, y, side);
}
double attenuation_fluor(double s, double r, const phantom::Phantom& p) {
  return ForwardModel(p).attenuation_fluor(s, r);
}
double measure(double s, double y, Side side, const phantom::Phantom& p, double c) {
  return ForwardModel(p).measure(s, y, side, c);
}

MeasurementSet measure_all(const ForwardModel& model, std::span<const double> depths,
                           std::span<const double> heights, double c) {
  MeasurementSet m;
  m.depths.assign(depths.begin(), depths.end());
  m.heights.assign(heights.begin(), heights.end());
  m.c = c;
  m.p.assign(depths.size(), std::vector<double>(2 * heights.size(), 0.0));
  const auto n = heights.size();
  parallel_for(depths.size() * 2 * n, [&](std::size_t idx) {
    const auto k = idx / (2 * n);
    const auto rest = idx % (2 * n);
    const Side side = rest < n ? Side::left : Side::right;
    m.p[k][rest] = model.measure(depths[k], heights[rest % n], side, c);
  });
  return m;
}

}  // namespace lsfm::forward
