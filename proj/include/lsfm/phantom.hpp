#pragma once
// Synthetic datasets: object outline, absorption mu, optical coefficients
// lambda and psi = c * lambda, fluorescence attenuation a, all on cell centres.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lsfm/geometry.hpp"
#include "lsfm/io/pgm.hpp"

namespace lsfm::phantom {

enum class DatasetKind { disk_blobs = 1, two_lobe = 2, zebrafish = 3 };

struct BlobParams {
  std::size_t count = 12;
  double radius_min = 0.04;
  double radius_max = 0.12;
  double value_min = 0.4;
  double value_max = 1.0;
};

struct DatasetParams {
  DatasetKind kind = DatasetKind::disk_blobs;
  geom::CellGrid grid;
  geom::Disk object_disk{1.0, 0.0, 0.8};
  /// Outline for the two-lobe dataset; empty means two_lobe_outline().
  std::vector<std::array<double, 2>> polygon;
  /// Blob centres and blob mass stay inside this radius (disk dataset).
  double support_radius = 0.7;
  BlobParams blobs;
  /// mu must vanish within this many cells of the object boundary (>= 2).
  std::size_t margin_cells = 3;
  /// lambda = w1 on the object, plus w2 * mu for the zebrafish dataset.
  double w1 = 1.0;
  double w2 = 1.0;
  /// psi = diffusion_ratio * lambda.
  double diffusion_ratio = 0.01;
  double attenuation = 0.2;
  /// Zebrafish dataset: PGM mask file, empty for the built-in image.
  std::string mask_path;
  /// Placement of the mask image: x_lo, x_hi, y_lo, y_hi.
  std::array<double, 4> mask_box{0.3, 1.3, -0.6, 0.6};
  double mask_peak = 1.0;
};

std::vector<std::array<double, 2>> two_lobe_outline();

/// Procedural larva-like mask; pixels span mask_box when placed in a phantom.
io::PgmImage zebrafish_image(std::size_t width = 100, std::size_t height = 120);

struct Phantom {
  DatasetParams params;
  std::uint64_t seed;
  geom::CellGrid grid;
  geom::ObjectShape object;
  std::vector<std::uint8_t> object_mask;
  std::vector<double> mu;
  std::vector<double> lambda;
  std::vector<double> psi;
  std::vector<double> a;

  double mu_at(std::size_t i, std::size_t j) const { return mu[grid.index(i, j)]; }
  /// mu along the column nearest depth s.
  std::vector<double> mu_column(double s) const;
};

/// Throws lsfm::ConfigError for parameters that cannot produce a valid phantom.
Phantom make_phantom(const DatasetParams& params, std::uint64_t seed);

/// Nonnegativity, psi > 0 exactly on the object, and supp(mu) at least two
/// cells inside the object. Throws std::logic_error naming the violation.
void check_invariants(const Phantom& p);

}  // namespace lsfm::phantom
