#pragma once
// Numerical checks of the observability constants for the 1D heat equation:
// the mass-leak bound, the exterior-energy identity along a monotone curve
// and empirical Lipschitz constants for curve observations.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lsfm/forward.hpp"
#include "lsfm/heat_core.hpp"

namespace lsfm::stability {

/// sup_{|r| <= R} int_{|y| > 2R} K(y - r, t) dy
///   = (erfc(R / sqrt(4t)) + erfc(3R / sqrt(4t))) / 2.
double alpha_mass_leak(double R, double t);

/// sqrt(4R) / (1 - alpha(R, t)).
double lemma_constant_c7(double R, double t);

/// sup_{t in [t1, t2]} C7(R, t) / sqrt(t2 - t1).
double lemma_constant_c8(double R, double t1, double t2);

// ---------------------------------------------------------------------------
// Test families

struct Bell {
  double center;
  double half_width;
  double height;
};

/// Sum of raised-cosine bells, each vanishing outside [center - hw, center + hw].
double bell_sum(const std::vector<Bell>& bells, double y);

/// Samples a bell sum on `grid` with declared support [lo, hi].
heat::Profile1D bell_profile(const std::vector<Bell>& bells, const heat::UniformGrid& grid,
                             double lo, double hi);

/// `count` random bell sums (1 to 5 bells each) supported in [lo, hi].
std::vector<std::vector<Bell>> random_bell_family(std::size_t count, double lo, double hi,
                                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Lemma check

struct StabilityReport {
  double R = 0.0;
  double t = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double alpha = 0.0;
  double C7 = 0.0;
  double C8 = 0.0;
  std::vector<double> ratios;
  double margin = 0.0;
  std::size_t violations = 0;
  std::vector<std::pair<double, double>> T_sweep;
  std::optional<std::uint64_t> seed;
};

/// ratio_k = ||u0_k||_L1 / ||u_k(., t)||_L2(-2R, 2R); margin = min(C7 - ratio).
/// Throws std::invalid_argument for an empty family or a u0 that is negative
/// or leaves [-R, R].
StabilityReport verify_lemma(double R, double t, const std::vector<heat::Profile1D>& family);

/// Same ratios against the space-time norm over 2B x (t1, t2) and C8.
StabilityReport verify_corollary(double R, double t1, double t2,
                                 const std::vector<heat::Profile1D>& family);

// ---------------------------------------------------------------------------
// Exterior energy along a branch

struct Branch {
  std::function<double(double)> rho;
  std::function<double(double)> drho;
  double T = 0.0;
};

/// rho(t) = y0 + slope * t.
Branch linear_branch(double y0, double slope, double T);

/// Left branch of a profile smoothed by a natural cubic spline of sigma(y)
/// through the branch samples and inverted exactly.
Branch smooth_left_branch(const forward::SigmaProfile& profile);

/// I_L(t) = 1/2 int_{-inf}^{rho} u(y, t)^2 dy in closed form for the Gaussian
/// sum u; also int_{-inf}^{rho} u_y^2.
double exterior_energy_exact(const heat::Profile1D& u0, double rho, double t);
double exterior_gradient_energy_exact(const heat::Profile1D& u0, double rho, double t);

struct EnergyIdentityResult {
  std::vector<double> ts;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> deviation;
  double max_deviation = 0.0;
};

/// Central difference of I_L at each t against
///   1/2 g^2 rho' + g u_y(rho, t) - int_{-inf}^{rho} u_y^2,   g = u(rho, t).
EnergyIdentityResult energy_identity_check(const heat::Profile1D& u0, const Branch& branch,
                                           double dt, double t_lo, double t_hi,
                                           std::size_t n_times = 21);

/// Profile version: requires supp u0 inside (y_lo + delta, y_hi - delta) and
/// checks t in [0.1 T, 0.9 T]. Throws std::invalid_argument for delta <= 0.
EnergyIdentityResult energy_identity_check(const heat::Profile1D& u0,
                                           const forward::SigmaProfile& profile, double dt,
                                           double delta);

// ---------------------------------------------------------------------------
// Empirical Lipschitz constants

struct LipschitzOptions {
  heat::CurveWeighting weighting = heat::CurveWeighting::per_time;
  std::size_t curve_samples = 400;
  /// Fraction of T excluded at either end of the branches.
  double end_window = 0.01;
};

/// ||u0||_L1 / ||u||_L1 over both branches truncated at sigma <= T_prime.
/// Returns nullopt when the observation norm vanishes for a nonzero u0.
std::optional<double> lipschitz_ratio(const heat::Profile1D& u0,
                                      const forward::SigmaProfile& profile, double T_prime,
                                      const LipschitzOptions& opt = {});

struct LipschitzSweep {
  std::vector<double> T_primes;
  std::vector<double> sup_ratio;
  std::size_t flagged = 0;
};

/// Sup over the family at each T'. Throws std::invalid_argument when a member
/// is not supported delta-inside (y_lo, y_hi).
LipschitzSweep empirical_lipschitz(const forward::SigmaProfile& profile,
                                   const std::vector<heat::Profile1D>& family, double delta,
                                   const std::vector<double>& T_primes,
                                   const LipschitzOptions& opt = {});

/// Single bells of fixed half-width whose left edge sits at y_lo + gap for
/// each gap; returns the ratio at full T for each.
std::vector<double> sliding_bump_ratios(const forward::SigmaProfile& profile, double half_width,
                                        const std::vector<double>& gaps,
                                        const heat::UniformGrid& grid,
                                        const LipschitzOptions& opt = {});

/// Least-squares fit log C = a + b / T^2 - 3 log T; returns (a, b).
std::pair<double, double> fit_constant_curve(const std::vector<double>& Ts,
                                             const std::vector<double>& Cs);

}  // namespace lsfm::stability
