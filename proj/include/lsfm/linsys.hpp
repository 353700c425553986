#pragma once
// Per-depth linear systems A mu(s, .) = b, their conditioning, Poisson
// perturbation of the data and SART reconstruction.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lsfm/forward.hpp"

namespace lsfm::linsys {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transpose(std::span<const double> y) const;
  Matrix transposed() const;
  Matrix scaled(double c) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rows 0..m1-1 illuminate from the left at heights[i], rows m1..2m1-1 from
/// the right at the same heights. Heights outside Y_s give zero rows.
struct SystemBlock {
  double s = 0.0;
  std::vector<double> heights;
  Matrix A;
  std::vector<double> b;
  std::vector<double> mu;
  std::vector<std::uint8_t> row_mask;
  std::vector<std::uint8_t> column_mask;

  std::size_t m1() const { return heights.size(); }
  heat::Side side_of(std::size_t row) const { return row < m1() ? heat::Side::left : heat::Side::right; }
  double height_of(std::size_t row) const { return heights[row % m1()]; }
};

/// Throws std::invalid_argument when no height reaches depth s from either side.
SystemBlock assemble_block(const forward::ForwardModel& model, double s,
                           std::span<const double> heights, double c);

/// Block-diagonal system over several depths; columns are ordered depth-major.
Matrix assemble_full(const forward::ForwardModel& model, std::span<const double> depths,
                     std::span<const double> heights, double c);

/// Index view of a block; materialize() copies only the selected entries.
class BlockView {
 public:
  BlockView(const SystemBlock& block, std::vector<std::size_t> rows, std::vector<std::size_t> cols)
      : block_(&block), rows_(std::move(rows)), cols_(std::move(cols)) {}

  const std::vector<std::size_t>& rows() const { return rows_; }
  const std::vector<std::size_t>& cols() const { return cols_; }
  double at(std::size_t r, std::size_t c) const { return block_->A(rows_[r], cols_[c]); }
  Matrix materialize() const;
  std::vector<double> rhs(std::span<const double> b) const;
  std::vector<double> truth() const;

 private:
  const SystemBlock* block_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> cols_;
};

/// Throws std::invalid_argument for masks of the wrong size or an empty selection.
BlockView restrict(const SystemBlock& block, std::span<const std::uint8_t> row_mask,
                   std::span<const std::uint8_t> column_mask);

/// Rows of both sides whose illumination height lies in the observation interval.
std::vector<std::uint8_t> limited_row_mask(const SystemBlock& block,
                                           const forward::ObservationInterval& oi);
std::vector<std::uint8_t> full_row_mask(const SystemBlock& block);

/// Cells where mu(s, .) != 0, grown by `dilation` cells.
std::vector<std::uint8_t> support_column_mask(std::span<const double> mu, std::size_t dilation = 0);

/// Column cells within `radius` of (cx, cy) that lie inside the object.
std::vector<std::uint8_t> radius_column_mask(const phantom::Phantom& p, double s, double cx,
                                             double cy, double radius);

// ---------------------------------------------------------------------------
// Conditioning

/// Singular values in decreasing order (QR followed by one-sided Jacobi).
std::vector<double> singular_values(const Matrix& A);

struct Conditioning {
  double kappa = 0.0;
  bool infinite = false;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

/// kappa_2 = sigma_max / sigma_min; `infinite` when sigma_min < 1e-14 sigma_max.
/// Throws std::invalid_argument for an empty or all-zero matrix.
Conditioning condition_number(const Matrix& A);

/// Conditioning of A as a map from its columns: a matrix with fewer rows
/// than columns has a null space and is reported as infinite.
Conditioning system_condition_number(const Matrix& A);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Noise and reconstruction

std::uint64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t index);

/// b_i <- Poisson(scale * b_i) / scale, seeded per entry index.
std::vector<double> poissonize(std::span<const double> b, double photon_scale, std::uint64_t seed);

struct SartOptions {
  double omega = 1.0;
  std::size_t max_sweeps = 500;
  bool nonneg = true;
  double tol = 1e-10;
  std::vector<double> x0;
};

struct ReconstructionResult {
  std::vector<double> mu_hat;
  /// ||A x - b||_2 / ||b||_2 before the first sweep and after each sweep.
  std::vector<double> residual_history;
  /// Same with the W^-1 weighted norm, which SART decreases monotonically.
  std::vector<double> weighted_residual_history;
  std::size_t iterations = 0;
  double omega = 1.0;
  bool nonneg = true;
  std::optional<std::uint64_t> seed;
};

ReconstructionResult sart(const Matrix& A, std::span<const double> b, const SartOptions& opt = {});

double relative_error(std::span<const double> x, std::span<const double> truth);

}  // namespace lsfm::linsys
