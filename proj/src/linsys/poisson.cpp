#include <cmath>
#include <stdexcept>
#include <string>

#include "lsfm/linsys.hpp"
#include "lsfm/random.hpp"

namespace lsfm::linsys {

namespace {

std::uint64_t poisson_inversion(double mean, CounterRng& rng) {
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf && k < 10000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// Transformed rejection with squeeze (Hoermann's PTRS).
std::uint64_t poisson_ptrs(double mean, CounterRng& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

}  // namespace

std::uint64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t index) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw std::invalid_argument("Poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  CounterRng rng(seed, index);
  return mean < 30.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

std::vector<double> poissonize(std::span<const double> b, double photon_scale, std::uint64_t seed) {
  if (!(photon_scale > 0.0)) throw std::invalid_argument("photon_scale must be positive");
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] < 0.0)
      throw std::invalid_argument("poissonize: negative entry b[" + std::to_string(i) + "]");
    out[i] = static_cast<double>(poisson_sample(photon_scale * b[i], seed, i)) / photon_scale;
  }
  return out;
}

}  // namespace lsfm::linsys
