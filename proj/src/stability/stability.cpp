#include <algorithm>
#include <limits>
#include <memory>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lsfm/parallel.hpp"
#include "lsfm/stability.hpp"

namespace lsfm::stability {

namespace {

void require_positive(double R, double t) {
  if (!(R > 0.0) || !std::isfinite(R))
    throw std::domain_error("support radius R must be positive, got " + std::to_string(R));
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::domain_error("time t must be positive, got " + std::to_string(t));
}

// First and last sample where u0 is nonzero.
std::pair<double, double> nonzero_extent(const heat::Profile1D& u0) {
  const auto& v = u0.values();
  std::size_t first = v.size(), last = 0;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] != 0.0) {
      first = std::min(first, k);
      last = k;
    }
  if (first == v.size()) return {0.0, 0.0};
  return {u0.grid().at(first), u0.grid().at(last)};
}

double l2_window(const heat::Profile1D& u0, double t, double a, double b, std::size_t n) {
  const auto grid = heat::UniformGrid::spanning(a, b, n);
  std::vector<double> sq(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = heat::solve_heat(u0, grid.at(j), t);
    sq[j] = u * u;
  }
  return std::sqrt(heat::trapezoid(grid, sq, a, b));
}

void check_family_member(const heat::Profile1D& u0, double R) {
  if (!u0.is_nonnegative()) throw std::invalid_argument("u0 must be nonnegative");
  const auto [lo, hi] = nonzero_extent(u0);
  const double tol = 1e-12 * std::max(1.0, R);
  if (lo < -R - tol || hi > R + tol)
    throw std::invalid_argument("u0 must be supported in [-R, R]");
}

// Natural cubic spline through (x_k, f_k).
struct Spline {
  std::vector<double> x, f, m;  // m: second derivatives

  Spline(std::vector<double> xs, std::vector<double> fs) : x(std::move(xs)), f(std::move(fs)) {
    const auto n = x.size();
    m.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> a(n), b(n), c(n), d(n);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double h0 = x[k] - x[k - 1];
      const double h1 = x[k + 1] - x[k];
      a[k] = h0;
      b[k] = 2.0 * (h0 + h1);
      c[k] = h1;
      d[k] = 6.0 * ((f[k + 1] - f[k]) / h1 - (f[k] - f[k - 1]) / h0);
    }
    for (std::size_t k = 2; k + 1 < n; ++k) {
      const double w = a[k] / b[k - 1];
      b[k] -= w * c[k - 1];
      d[k] -= w * d[k - 1];
    }
    for (std::size_t k = n - 2; k >= 1; --k) {
      m[k] = (d[k] - (k + 2 < n ? c[k] * m[k + 1] : 0.0)) / b[k];
      if (k == 1) break;
    }
  }

  std::size_t segment(double y) const {
    auto it = std::upper_bound(x.begin(), x.end(), y);
    auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x.begin() - 1, 0));
    return std::min(k, x.size() - 2);
  }

  double value(double y, std::size_t k) const {
    const double h = x[k + 1] - x[k];
    const double A = (x[k + 1] - y) / h;
    const double B = (y - x[k]) / h;
    return A * f[k] + B * f[k + 1] + ((A * A * A - A) * m[k] + (B * B * B - B) * m[k + 1]) * h * h / 6.0;
  }

  double slope(double y, std::size_t k) const {
    const double h = x[k + 1] - x[k];
    const double A = (x[k + 1] - y) / h;
    const double B = (y - x[k]) / h;
    return (f[k + 1] - f[k]) / h - (3.0 * A * A - 1.0) / 6.0 * h * m[k] +
           (3.0 * B * B - 1.0) / 6.0 * h * m[k + 1];
  }
};

// Pair sum over Gaussian-sum coefficients of
//   c_j c_k / (4 pi t) exp(-(r_j - r_k)^2 / 8t) * term(a, Z)
// with a = (r_k - r_j) / 2 and Z = rho - (r_j + r_k) / 2.
template <class Term>
double pair_sum(const heat::Profile1D& u0, double rho, double t, Term term) {
  const auto r = u0.support_nodes();
  const auto c = u0.support_coefficients();
  const double pre = 1.0 / (4.0 * std::numbers::pi * t);
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (c[j] == 0.0) continue;
    for (std::size_t k = j; k < r.size(); ++k) {
      if (c[k] == 0.0) continue;
      const double d = r[k] - r[j];
      const double e = std::exp(-d * d / (8.0 * t));
      if (e == 0.0) continue;
      const double v = c[j] * c[k] * pre * e * term(0.5 * d, rho - 0.5 * (r[j] + r[k]));
      acc += (j == k) ? v : 2.0 * v;
    }
  }
  return acc;
}

}  // namespace

double alpha_mass_leak(double R, double t) {
  require_positive(R, t);
  const double s = std::sqrt(4.0 * t);
  return 0.5 * (std::erfc(R / s) + std::erfc(3.0 * R / s));
}

double lemma_constant_c7(double R, double t) {
  return std::sqrt(4.0 * R) / (1.0 - alpha_mass_leak(R, t));
}

double lemma_constant_c8(double R, double t1, double t2) {
  require_positive(R, t1);
  if (!(t2 > t1)) throw std::domain_error("C8 needs t1 < t2");
  return lemma_constant_c7(R, t2) / std::sqrt(t2 - t1);
}

StabilityReport verify_lemma(double R, double t, const std::vector<heat::Profile1D>& family) {
  require_positive(R, t);
  if (family.empty()) throw std::invalid_argument("verify_lemma: empty family");
  for (const auto& u0 : family) check_family_member(u0, R);

  StabilityReport rep;
  rep.R = R;
  rep.t = t;
  rep.alpha = alpha_mass_leak(R, t);
  rep.C7 = lemma_constant_c7(R, t);
  rep.ratios.assign(family.size(), 0.0);
  parallel_for(family.size(), [&](std::size_t k) {
    const double l1 = heat::region_norm(family[k], heat::NormKind::L1_space,
                                        heat::Interval::whole_line()).value;
    const double l2 = l2_window(family[k], t, -2.0 * R, 2.0 * R, 1601);
    rep.ratios[k] = l2 > 0.0 ? l1 / l2 : 0.0;
  });
  rep.margin = std::numeric_limits<double>::infinity();
  for (double r : rep.ratios) {
    rep.margin = std::min(rep.margin, rep.C7 - r);
    if (rep.C7 - r < -1e-9 * rep.C7) ++rep.violations;
  }
  return rep;
}

StabilityReport verify_corollary(double R, double t1, double t2,
                                 const std::vector<heat::Profile1D>& family) {
  require_positive(R, t1);
  if (!(t2 > t1)) throw std::domain_error("corollary needs t1 < t2");
  if (family.empty()) throw std::invalid_argument("verify_corollary: empty family");
  for (const auto& u0 : family) check_family_member(u0, R);

  StabilityReport rep;
  rep.R = R;
  rep.t1 = t1;
  rep.t2 = t2;
  rep.alpha = alpha_mass_leak(R, t2);
  rep.C7 = lemma_constant_c7(R, t2);
  rep.C8 = lemma_constant_c8(R, t1, t2);
  rep.ratios.assign(family.size(), 0.0);
  const std::size_t nt = 41;
  parallel_for(family.size(), [&](std::size_t k) {
    const double l1 = heat::region_norm(family[k], heat::NormKind::L1_space,
                                        heat::Interval::whole_line()).value;
    std::vector<double> ts(nt), sq(nt);
    for (std::size_t i = 0; i < nt; ++i) {
      ts[i] = t1 + (t2 - t1) * static_cast<double>(i) / static_cast<double>(nt - 1);
      const double n = l2_window(family[k], ts[i], -2.0 * R, 2.0 * R, 801);
      sq[i] = n * n;
    }
    const auto tg = heat::UniformGrid::spanning(t1, t2, nt);
    const double st = std::sqrt(heat::trapezoid(tg, sq, t1, t2));
    rep.ratios[k] = st > 0.0 ? l1 / st : 0.0;
  });
  rep.margin = std::numeric_limits<double>::infinity();
  for (double r : rep.ratios) {
    rep.margin = std::min(rep.margin, rep.C8 - r);
    if (rep.C8 - r < -1e-9 * rep.C8) ++rep.violations;
  }
  return rep;
}

Branch linear_branch(double y0, double slope, double T) {
  return Branch{[=](double t) { return y0 + slope * t; }, [=](double) { return slope; }, T};
}

Branch smooth_left_branch(const forward::SigmaProfile& profile) {
  if (profile.rho_y_left.size() < 3)
    throw std::invalid_argument("left branch has fewer than 3 samples");
  auto spline = std::make_shared<Spline>(profile.rho_y_left, profile.rho_t_left);
  auto solve = [spline](double t) {
    const auto& f = spline->f;
    auto it = std::upper_bound(f.begin(), f.end(), t);
    auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - f.begin() - 1, 0));
    k = std::min(k, f.size() - 2);
    double a = spline->x[k];
    double b = spline->x[k + 1];
    for (int it2 = 0; it2 < 200 && b - a > 0.0; ++it2) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      (spline->value(mid, k) < t ? a : b) = mid;
    }
    return std::make_pair(0.5 * (a + b), k);
  };
  Branch br;
  br.T = profile.T;
  br.rho = [solve](double t) { return solve(t).first; };
  br.drho = [solve, spline](double t) {
    const auto [y, k] = solve(t);
    return 1.0 / spline->slope(y, k);
  };
  return br;
}

double exterior_energy_exact(const heat::Profile1D& u0, double rho, double t) {
  if (!(t > 0.0)) throw std::domain_error("exterior energy needs t > 0");
  const double s2t = std::sqrt(2.0 * t);
  const double E0 = std::sqrt(0.5 * std::numbers::pi * t);
  return 0.5 * pair_sum(u0, rho, t, [&](double, double Z) { return E0 * std::erfc(-Z / s2t); });
}

double exterior_gradient_energy_exact(const heat::Profile1D& u0, double rho, double t) {
  if (!(t > 0.0)) throw std::domain_error("exterior energy needs t > 0");
  const double s2t = std::sqrt(2.0 * t);
  const double E0 = std::sqrt(0.5 * std::numbers::pi * t);
  return pair_sum(u0, rho, t, [&](double a, double Z) {
    const double E = E0 * std::erfc(-Z / s2t);
    return ((t - a * a) * E - t * Z * std::exp(-Z * Z / (2.0 * t))) / (4.0 * t * t);
  });
}

EnergyIdentityResult energy_identity_check(const heat::Profile1D& u0, const Branch& branch,
                                           double dt, double t_lo, double t_hi,
                                           std::size_t n_times) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_lo - dt > 0.0) || !(t_hi >= t_lo) || n_times < 1)
    throw std::invalid_argument("energy identity time window must stay above dt");
  EnergyIdentityResult res;
  res.ts.resize(n_times);
  res.lhs.resize(n_times);
  res.rhs.resize(n_times);
  res.deviation.resize(n_times);
  parallel_for(n_times, [&](std::size_t i) {
    const double t = n_times == 1 ? t_lo
                                  : t_lo + (t_hi - t_lo) * static_cast<double>(i) /
                                               static_cast<double>(n_times - 1);
    const double ip = exterior_energy_exact(u0, branch.rho(t + dt), t + dt);
    const double im = exterior_energy_exact(u0, branch.rho(t - dt), t - dt);
    const double rho = branch.rho(t);
    const auto hs = heat::solve_heat_with_gradient(u0, rho, t);
    const double rhs = 0.5 * hs.u * hs.u * branch.drho(t) + hs.u * hs.u_y -
                       exterior_gradient_energy_exact(u0, rho, t);
    res.ts[i] = t;
    res.lhs[i] = (ip - im) / (2.0 * dt);
    res.rhs[i] = rhs;
    res.deviation[i] = std::fabs(res.lhs[i] - rhs);
  });
  res.max_deviation = *std::max_element(res.deviation.begin(), res.deviation.end());
  return res;
}

EnergyIdentityResult energy_identity_check(const heat::Profile1D& u0,
                                           const forward::SigmaProfile& profile, double dt,
                                           double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("support margin delta must be positive");
  if (!u0.is_zero()) {
    const auto [lo, hi] = nonzero_extent(u0);
    if (lo <= profile.y_lo + delta || hi >= profile.y_hi - delta)
      throw std::invalid_argument("u0 is not supported delta-inside (y_lo, y_hi)");
  }
  const auto br = smooth_left_branch(profile);
  return energy_identity_check(u0, br, dt, 0.1 * profile.T, 0.9 * profile.T);
}

std::optional<double> lipschitz_ratio(const heat::Profile1D& u0,
                                      const forward::SigmaProfile& profile, double T_prime,
                                      const LipschitzOptions& opt) {
  const double ta = opt.end_window * profile.T;
  const double tb = std::min(T_prime, (1.0 - opt.end_window) * profile.T);
  if (!(tb > ta)) throw std::invalid_argument("T' lies inside the excluded end window");
  const auto n = std::max<std::size_t>(opt.curve_samples, 2);
  heat::CurveSamples left, right;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = ta + (tb - ta) * static_cast<double>(k) / static_cast<double>(n - 1);
    const double yl = profile.rho_left(t);
    const double yr = profile.rho_right(t);
    left.ys.push_back(yl);
    left.ts.push_back(t);
    left.us.push_back(heat::solve_heat(u0, yl, t));
    right.ys.push_back(yr);
    right.ts.push_back(t);
    right.us.push_back(heat::solve_heat(u0, yr, t));
  }
  const double obs = heat::region_norm(left, opt.weighting).value +
                     heat::region_norm(right, opt.weighting).value;
  const double l1 =
      heat::region_norm(u0, heat::NormKind::L1_space, heat::Interval::whole_line()).value;
  if (l1 == 0.0) return 0.0;
  if (!(obs > 0.0)) return std::nullopt;
  return l1 / obs;
}

LipschitzSweep empirical_lipschitz(const forward::SigmaProfile& profile,
                                   const std::vector<heat::Profile1D>& family, double delta,
                                   const std::vector<double>& T_primes,
                                   const LipschitzOptions& opt) {
  if (!(delta > 0.0)) throw std::invalid_argument("support margin delta must be positive");
  for (const auto& u0 : family) {
    if (u0.is_zero()) continue;
    const auto [lo, hi] = nonzero_extent(u0);
    if (lo <= profile.y_lo + delta || hi >= profile.y_hi - delta)
      throw std::invalid_argument("family member is not supported delta-inside (y_lo, y_hi)");
  }
  LipschitzSweep sw;
  sw.T_primes = T_primes;
  sw.sup_ratio.assign(T_primes.size(), 0.0);
  std::vector<std::optional<double>> ratios(T_primes.size() * family.size());
  parallel_for(ratios.size(), [&](std::size_t idx) {
    const auto i = idx / family.size();
    const auto k = idx % family.size();
    ratios[idx] = lipschitz_ratio(family[k], profile, T_primes[i], opt);
  });
  for (std::size_t i = 0; i < T_primes.size(); ++i)
    for (std::size_t k = 0; k < family.size(); ++k) {
      const auto& r = ratios[i * family.size() + k];
      if (!r) {
        ++sw.flagged;
        continue;
      }
      sw.sup_ratio[i] = std::max(sw.sup_ratio[i], *r);
    }
  return sw;
}

std::vector<double> sliding_bump_ratios(const forward::SigmaProfile& profile, double half_width,
                                        const std::vector<double>& gaps,
                                        const heat::UniformGrid& grid,
                                        const LipschitzOptions& opt) {
  std::vector<double> out(gaps.size());
  parallel_for(gaps.size(), [&](std::size_t k) {
    const double c = profile.y_lo + gaps[k] + half_width;
    const auto u0 = bell_profile({Bell{c, half_width, 1.0}}, grid, c - half_width, c + half_width);
    const auto r = lipschitz_ratio(u0, profile, profile.T, opt);
    out[k] = r ? *r : std::numeric_limits<double>::infinity();
  });
  return out;
}

}  // namespace lsfm::stability
