#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lsfm/errors.hpp"
#include "lsfm/forward.hpp"

namespace lsfm::forward {

namespace {

double interp_monotone(const std::vector<double>& ts, const std::vector<double>& ys, double t) {
  if (ts.empty()) throw std::logic_error("empty inverse branch");
  const double tmax = ts.back();
  if (t < 0.0 || t > tmax * (1.0 + 1e-12))
    throw std::domain_error("t = " + std::to_string(t) + " lies outside the branch range [0, " +
                            std::to_string(tmax) + "]");
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  if (it == ts.end()) return ys.back();
  if (it == ts.begin()) return ys.front();
  const auto k = static_cast<std::size_t>(it - ts.begin()) - 1;
  const double f = (t - ts[k]) / (ts[k + 1] - ts[k]);
  return ys[k] + f * (ys[k + 1] - ys[k]);
}

}  // namespace

double SigmaProfile::rho_left(double t) const { return interp_monotone(rho_t_left, rho_y_left, t); }

double SigmaProfile::rho_right(double t) const {
  return interp_monotone(rho_t_right, rho_y_right, t);
}

double SigmaProfile::argmax() const {
  const auto it = std::max_element(sigma.begin(), sigma.end());
  return ys[static_cast<std::size_t>(it - sigma.begin())];
}

SigmaProfile analyze_sigma_samples(std::vector<double> ys, std::vector<double> sigma,
                                   double tol_rel) {
  const auto n = ys.size();
  if (n < 8 || sigma.size() != n)
    throw std::invalid_argument("sigma profile needs at least 8 matching samples");
  for (std::size_t k = 1; k < n; ++k)
    if (!(ys[k] > ys[k - 1])) throw std::invalid_argument("sigma heights must be increasing");

  SigmaProfile p;
  const double smax = *std::max_element(sigma.begin(), sigma.end());
  if (!(smax > 0.0)) throw NumericalFailure("sigma vanishes on every sample");
  const double tol = tol_rel * smax;

  std::size_t first = n, last = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (sigma[k] > tol) {
      first = std::min(first, k);
      last = k;
    }
  const std::size_t lo = first > 0 ? first - 1 : first;
  const std::size_t hi = last + 1 < n ? last + 1 : last;

  std::size_t kl = lo;
  while (kl + 1 <= hi && sigma[kl + 1] > sigma[kl]) ++kl;
  if (kl == lo)
    throw NumericalFailure("no increasing branch of sigma starts at y_lo = " +
                           std::to_string(ys[lo]) + " (sigma-property iii)");
  std::size_t kr = hi;
  while (kr > lo && sigma[kr - 1] > sigma[kr]) --kr;
  if (kr == hi)
    throw NumericalFailure("no decreasing branch of sigma ends at y_hi = " +
                           std::to_string(ys[hi]) + " (sigma-property iii)");

  p.y_lo = ys[lo];
  p.y_hi = ys[hi];
  p.T1_raw = sigma[kl];
  p.T2_raw = sigma[kr];
  p.T = std::min(p.T1_raw, p.T2_raw);
  p.T1 = p.T2 = p.T;

  // Left branch: samples lo..kl, cut where sigma first reaches T.
  p.rho_t_left.push_back(0.0);
  p.rho_y_left.push_back(p.y_lo);
  for (std::size_t k = lo + 1; k <= kl; ++k) {
    if (sigma[k] >= p.T) {
      const double f = (p.T - sigma[k - 1]) / (sigma[k] - sigma[k - 1]);
      const double y = ys[k - 1] + f * (ys[k] - ys[k - 1]);
      p.rho_t_left.push_back(p.T);
      p.rho_y_left.push_back(y);
      break;
    }
    p.rho_t_left.push_back(sigma[k]);
    p.rho_y_left.push_back(ys[k]);
  }
  p.xi1 = p.rho_y_left.back() - p.y_lo;

  p.rho_t_right.push_back(0.0);
  p.rho_y_right.push_back(p.y_hi);
  for (std::size_t k = hi; k-- > kr;) {
    if (sigma[k] >= p.T) {
      const double f = (p.T - sigma[k + 1]) / (sigma[k] - sigma[k + 1]);
      const double y = ys[k + 1] + f * (ys[k] - ys[k + 1]);
      p.rho_t_right.push_back(p.T);
      p.rho_y_right.push_back(y);
      break;
    }
    p.rho_t_right.push_back(sigma[k]);
    p.rho_y_right.push_back(ys[k]);
  }
  p.xi2 = p.y_hi - p.rho_y_right.back();

  p.sigma_prime.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = k > 0 ? k - 1 : k;
    const std::size_t b = k + 1 < n ? k + 1 : k;
    p.sigma_prime[k] = (sigma[b] - sigma[a]) / (ys[b] - ys[a]);
  }
  for (std::size_t k = lo + 1; k <= kl && k <= lo + 8; ++k) {
    const double slope = (sigma[k] - sigma[k - 1]) / (ys[k] - ys[k - 1]);
    if (slope > 0.0 && sigma[k] > 0.0) p.endpoint_order.push_back(-std::log(slope) - 1.0 / sigma[k]);
  }

  p.ys = std::move(ys);
  p.sigma = std::move(sigma);
  return p;
}

SigmaProfile detect_sigma_properties(const ForwardModel& model, double s, Side side,
                                     double tol_rel) {
  const auto& gr = model.grid();
  const auto vis = geom::visible_heights(model.phantom().object, s, side);
  if (vis.empty) throw std::invalid_argument("no height reaches depth s = " + std::to_string(s));

  std::vector<double> ys{vis.y_lo};
  for (std::size_t j = 0; j < gr.ny; ++j) {
    const double y = gr.y(j);
    if (y > vis.y_lo && y < vis.y_hi) ys.push_back(y);
  }
  ys.push_back(vis.y_hi);
  if (ys.size() < 8)
    throw std::invalid_argument("Y_s at s = " + std::to_string(s) + " holds fewer than 8 samples");

  std::vector<double> sig(ys.size(), 0.0);
  for (std::size_t k = 1; k + 1 < ys.size(); ++k) sig[k] = model.sigma(s, ys[k], side);

  auto p = analyze_sigma_samples(ys, std::move(sig), tol_rel);
  p.s = s;
  p.side = side;
  for (std::size_t k = 0; k < p.ys.size(); ++k)
    p.sigma_prime[k] = (k == 0 || k + 1 == p.ys.size()) ? 0.0 : model.sigma_prime(s, p.ys[k], side);
  return p;
}

ObservationInterval observation_interval(const SigmaProfile& p) {
  return ObservationInterval{{p.y_lo, p.y_lo + p.xi1}, {p.y_hi - p.xi2, p.y_hi}};
}

heat::CurveSamples curve_trace(const SigmaProfile& profile, const ForwardModel& model, double c) {
  if (c == 0.0) throw std::invalid_argument("camera gain c must be nonzero");
  heat::CurveSamples out;
  for (std::size_t k = 0; k < profile.ys.size(); ++k) {
    const double y = profile.ys[k];
    const double p = model.measure(profile.s, y, profile.side, c);
    out.ys.push_back(y);
    out.ts.push_back(profile.sigma[k]);
    out.us.push_back(std::exp(model.attenuation_illum(profile.s, y, profile.side)) * p / c);
  }
  return out;
}

}  // namespace lsfm::forward
