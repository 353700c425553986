#pragma once
// Light-sheet forward model at one detector depth s: beam broadening
// sigma(s, y), attenuation along the beam and towards the camera, and the
// camera measurement p(s, y) as a Gaussian blur of mu(s, .).

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lsfm/heat_core.hpp"
#include "lsfm/phantom.hpp"

namespace lsfm::forward {

using heat::Side;

/// Precomputed row data for repeated queries on one phantom. Inside each row
/// psi and lambda are linear between cell centres; outside the object they
/// are extended by the nearest inside value, so the beam sees the object's
/// boundary value from its entry point onwards. Between rows the two
/// neighbouring rows are blended linearly in y.
class ForwardModel {
 public:
  explicit ForwardModel(const phantom::Phantom& p);

  const phantom::Phantom& phantom() const { return *p_; }
  const geom::CellGrid& grid() const { return p_->grid; }

  /// Entry depth for the side, or none.
  std::optional<double> gamma(double y, Side side) const;
  /// y in Y_s for the side.
  bool visible(double s, double y, Side side) const;

  /// 1/2 int (s - tau)^2 psi(tau, y) over the beam path; 0 when y is not in Y_s.
  double sigma(double s, double y, Side side) const;
  double sigma_prime(double s, double y, Side side) const;
  /// int lambda(tau, y) over the beam path; 0 when y is not in Y_s.
  double attenuation_illum(double s, double y, Side side) const;
  /// int_r^top a(s, tau) dtau along the detector column.
  double attenuation_fluor(double s, double r) const;

  /// Column index the detector at depth s reads.
  std::size_t column(double s) const { return grid().column_of(s); }

  /// Weights w with p(s, y) = dot(w, mu(s, .)) over the ny column cells.
  std::vector<double> row_weights(double s, double y, Side side, double c) const;

  /// Camera measurement p(s, y).
  double measure(double s, double y, Side side, double c) const;

  /// mu(s, r) exp(-int_r^top a) on the column: the initial profile the
  /// measurements see.
  heat::Profile1D effective_profile(double s) const;

 private:
  void check_point(double s, double y) const;
  double path_integral(double s, double y, Side side, int weight_power, bool derivative) const;

  const phantom::Phantom* p_;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> psi_ext_;
  std::vector<double> lambda_ext_;
  std::vector<std::uint8_t> row_has_object_;
};

// Convenience wrappers building a temporary model.
double sigma(double s, double y, Side side, const phantom::Phantom& p);
double sigma_prime(double s, double y, Side side, const phantom::Phantom& p);
double attenuation_illum(double s, double y, Side side, const phantom::Phantom& p);
double attenuation_fluor(double s, double r, const phantom::Phantom& p);
double measure(double s, double y, Side side, const phantom::Phantom& p, double c);

// ---------------------------------------------------------------------------
// Diffusion-time profiles

struct SigmaProfile {
  double s = 0.0;
  Side side = Side::left;
  std::vector<double> ys;
  std::vector<double> sigma;
  std::vector<double> sigma_prime;
  double y_lo = 0.0;
  double y_hi = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
  double T1 = 0.0;
  double T2 = 0.0;
  double T = 0.0;
  /// Untrimmed branch heights before equalising T1 and T2.
  double T1_raw = 0.0;
  double T2_raw = 0.0;
  /// Sampled inverse branches: rho_L(t) on [0, T] is increasing in t,
  /// rho_R(t) decreasing.
  std::vector<double> rho_t_left, rho_y_left;
  std::vector<double> rho_t_right, rho_y_right;
  /// log(1/sigma') - 1/sigma at the samples closest to y_lo (nearest first).
  std::vector<double> endpoint_order;

  double rho_left(double t) const;
  double rho_right(double t) const;
  /// argmax of the sampled sigma.
  double argmax() const;
};

/// Detects the support and monotone branches of sampled sigma values. ys must
/// be increasing; sigma must vanish at the first and last sample. Throws
/// NumericalFailure when no increasing run starts at y_lo (or no decreasing
/// run ends at y_hi).
SigmaProfile analyze_sigma_samples(std::vector<double> ys, std::vector<double> sigma,
                                   double tol_rel = 1e-14);

/// Samples sigma at the row centres inside Y_s plus the two endpoints of Y_s.
SigmaProfile detect_sigma_properties(const ForwardModel& model, double s, Side side,
                                     double tol_rel = 1e-14);

struct ObservationInterval {
  heat::Interval left;
  heat::Interval right;
  bool contains(double y) const {
    return (y > left.lo && y < left.hi) || (y > right.lo && y < right.hi);
  }
};

ObservationInterval observation_interval(const SigmaProfile& profile);

/// Points (y, sigma(y), u(y, sigma(y))) with u recovered from the
/// measurements: u = exp(int lambda) p / c.
heat::CurveSamples curve_trace(const SigmaProfile& profile, const ForwardModel& model, double c);

// ---------------------------------------------------------------------------
// Measurement sets

struct MeasurementSet {
  std::vector<double> depths;
  std::vector<double> heights;
  double c = 1.0;
  double photon_scale = 0.0;
  /// p[k][side * heights.size() + i] for depth k, side 0 = left, 1 = right.
  std::vector<std::vector<double>> p;
};

MeasurementSet measure_all(const ForwardModel& model, std::span<const double> depths,
                           std::span<const double> heights, double c);

}  // namespace lsfm::forward
