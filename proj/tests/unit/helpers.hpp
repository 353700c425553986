#pragma once

#include <functional>

#include "lsfm/phantom.hpp"

namespace testutil {

inline lsfm::phantom::DatasetParams disk_params(std::size_t n = 128, std::size_t blobs = 12) {
  lsfm::phantom::DatasetParams p;
  p.grid.nx = p.grid.ny = n;
  p.blobs.count = blobs;
  return p;
}

/// Disk phantom with the given fields written on every cell of the object
/// (zero outside).
inline lsfm::phantom::Phantom disk_with_fields(std::size_t n, double psi, double lambda, double a,
                                               std::function<double(double, double)> mu = {}) {
  auto p = lsfm::phantom::make_phantom(disk_params(n, 0), 1);
  for (std::size_t j = 0; j < p.grid.ny; ++j)
    for (std::size_t i = 0; i < p.grid.nx; ++i) {
      const auto k = p.grid.index(i, j);
      const bool in = p.object_mask[k] != 0;
      p.psi[k] = in ? psi : 0.0;
      p.lambda[k] = in ? lambda : 0.0;
      p.a[k] = in ? a : 0.0;
      p.mu[k] = (in && mu) ? mu(p.grid.x(i), p.grid.y(j)) : 0.0;
    }
  return p;
}

}  // namespace testutil
