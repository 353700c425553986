#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lsfm/random.hpp"
#include "lsfm/stability.hpp"

namespace lsfm::stability {

double bell_sum(const std::vector<Bell>& bells, double y) {
  double v = 0.0;
  for (const auto& b : bells) {
    const double d = (y - b.center) / b.half_width;
    if (std::fabs(d) < 1.0) v += 0.5 * b.height * (1.0 + std::cos(std::numbers::pi * d));
  }
  return v;
}

heat::Profile1D bell_profile(const std::vector<Bell>& bells, const heat::UniformGrid& grid,
                             double lo, double hi) {
  return heat::Profile1D::sample(grid, [&](double y) { return bell_sum(bells, y); }, lo, hi);
}

std::vector<std::vector<Bell>> random_bell_family(std::size_t count, double lo, double hi,
                                                  std::uint64_t seed) {
  if (!(hi > lo)) throw std::invalid_argument("bell family needs hi > lo");
  std::vector<std::vector<Bell>> family(count);
  const double half = 0.5 * (hi - lo);
  for (std::size_t k = 0; k < count; ++k) {
    CounterRng rng(seed, k);
    const auto n = 1 + static_cast<std::size_t>(5.0 * rng.uniform());
    for (std::size_t b = 0; b < n; ++b) {
      const double hw = rng.uniform(0.05, 0.5) * half;
      const double c = rng.uniform(lo + hw, hi - hw);
      const double h = rng.uniform(0.1, 1.0);
      family[k].push_back(Bell{c, hw, h});
    }
  }
  return family;
}

std::pair<double, double> fit_constant_curve(const std::vector<double>& Ts,
                                             const std::vector<double>& Cs) {
  if (Ts.size() != Cs.size() || Ts.size() < 2)
    throw std::invalid_argument("curve fit needs at least two (T, C) pairs");
  const auto n = static_cast<double>(Ts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < Ts.size(); ++k) {
    if (!(Ts[k] > 0.0) || !(Cs[k] > 0.0)) throw std::invalid_argument("curve fit needs T, C > 0");
    const double x = 1.0 / (Ts[k] * Ts[k]);
    const double y = std::log(Cs[k]) + 3.0 * std::log(Ts[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("curve fit needs distinct T values");
  const double b = (n * sxy - sx * sy) / den;
  return {(sy - b * sx) / n, b};
}

}  // namespace lsfm::stability
