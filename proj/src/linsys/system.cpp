#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lsfm/linsys.hpp"
#include "lsfm/parallel.hpp"
#include "lsfm/simd/kernels.hpp"

namespace lsfm::linsys {

std::vector<double> Matrix::apply(std::span<const double> x) const {
  if (x.size() != cols_) throw std::invalid_argument("matrix-vector size mismatch");
  std::vector<double> y(rows_);
  for (std::size_t i = 0; i < rows_; ++i) y[i] = simd::dot(row(i), x);
  return y;
}

std::vector<double> Matrix::apply_transpose(std::span<const double> y) const {
  if (y.size() != rows_) throw std::invalid_argument("matrix-vector size mismatch");
  std::vector<double> x(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    if (y[i] != 0.0) simd::axpy(y[i], row(i), x);
  return x;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::scaled(double c) const {
  Matrix m(*this);
  for (double& v : m.data_) v *= c;
  return m;
}

SystemBlock assemble_block(const forward::ForwardModel& model, double s,
                           std::span<const double> heights, double c) {
  if (heights.empty()) throw std::invalid_argument("assemble_block needs illumination heights");
  const auto& gr = model.grid();
  const auto m1 = heights.size();
  SystemBlock blk;
  blk.s = s;
  blk.heights.assign(heights.begin(), heights.end());
  blk.A = Matrix(2 * m1, gr.ny);

  bool any = false;
  for (double y : heights)
    any = any || model.visible(s, y, heat::Side::left) || model.visible(s, y, heat::Side::right);
  if (!any) throw std::invalid_argument("Y_s is empty at s = " + std::to_string(s));

  parallel_for(2 * m1, [&](std::size_t r) {
    const auto side = r < m1 ? heat::Side::left : heat::Side::right;
    const auto w = model.row_weights(s, heights[r % m1], side, c);
    std::copy(w.begin(), w.end(), blk.A.row(r).begin());
  });
  blk.mu = model.phantom().mu_column(s);
  blk.b = blk.A.apply(blk.mu);
  blk.row_mask.assign(2 * m1, 1);
  blk.column_mask.assign(gr.ny, 1);
  return blk;
}

Matrix assemble_full(const forward::ForwardModel& model, std::span<const double> depths,
                     std::span<const double> heights, double c) {
  const auto ny = model.grid().ny;
  const auto rows = 2 * heights.size();
  Matrix full(depths.size() * rows, depths.size() * ny);
  for (std::size_t k = 0; k < depths.size(); ++k) {
    const auto blk = assemble_block(model, depths[k], heights, c);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < ny; ++j) full(k * rows + i, k * ny + j) = blk.A(i, j);
  }
  return full;
}

Matrix BlockView::materialize() const {
  Matrix m(rows_.size(), cols_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (std::size_t c = 0; c < cols_.size(); ++c) m(r, c) = block_->A(rows_[r], cols_[c]);
  return m;
}

std::vector<double> BlockView::rhs(std::span<const double> b) const {
  std::vector<double> out(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) out[r] = b[rows_[r]];
  return out;
}

std::vector<double> BlockView::truth() const {
  std::vector<double> out(cols_.size());
  for (std::size_t c = 0; c < cols_.size(); ++c) out[c] = block_->mu[cols_[c]];
  return out;
}

BlockView restrict(const SystemBlock& block, std::span<const std::uint8_t> row_mask,
                   std::span<const std::uint8_t> column_mask) {
  if (row_mask.size() != block.A.rows() || column_mask.size() != block.A.cols())
    throw std::invalid_argument("mask sizes do not match the block");
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < row_mask.size(); ++i)
    if (row_mask[i]) rows.push_back(i);
  for (std::size_t j = 0; j < column_mask.size(); ++j)
    if (column_mask[j]) cols.push_back(j);
  if (rows.empty() || cols.empty()) throw std::invalid_argument("restricted block is empty");
  return BlockView(block, std::move(rows), std::move(cols));
}

std::vector<std::uint8_t> limited_row_mask(const SystemBlock& block,
                                           const forward::ObservationInterval& oi) {
  std::vector<std::uint8_t> mask(block.A.rows(), 0);
  for (std::size_t r = 0; r < mask.size(); ++r) mask[r] = oi.contains(block.height_of(r)) ? 1 : 0;
  return mask;
}

std::vector<std::uint8_t> full_row_mask(const SystemBlock& block) {
  return std::vector<std::uint8_t>(block.A.rows(), 1);
}

std::vector<std::uint8_t> support_column_mask(std::span<const double> mu, std::size_t dilation) {
  const auto n = mu.size();
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (mu[j] == 0.0) continue;
    const auto lo = j >= dilation ? j - dilation : 0;
    const auto hi = std::min(n - 1, j + dilation);
    for (auto k = lo; k <= hi; ++k) mask[k] = 1;
  }
  return mask;
}

std::vector<std::uint8_t> radius_column_mask(const phantom::Phantom& p, double s, double cx,
                                             double cy, double radius) {
  const auto& g = p.grid;
  const auto i = g.column_of(s);
  const double x = g.x(i);
  std::vector<std::uint8_t> mask(g.ny, 0);
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double dx = x - cx;
    const double dy = g.y(j) - cy;
    mask[j] = (dx * dx + dy * dy <= radius * radius && p.object_mask[g.index(i, j)]) ? 1 : 0;
  }
  return mask;
}

double relative_error(std::span<const double> x, std::span<const double> truth) {
  if (x.size() != truth.size()) throw std::invalid_argument("relative_error size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    num += (x[k] - truth[k]) * (x[k] - truth[k]);
    den += truth[k] * truth[k];
  }
  if (den == 0.0) throw std::invalid_argument("relative_error: reference is zero");
  return std::sqrt(num / den);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t e = k + 1;
    while (e < order.size() && v[order[e]] == v[order[k]]) ++e;
    const double r = 0.5 * static_cast<double>(k + e - 1) + 1.0;
    for (std::size_t q = k; q < e; ++q) rank[order[q]] = r;
    k = e;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("spearman needs two equally long samples of size >= 2");
  for (std::size_t k = 0; k < x.size(); ++k)
    if (std::isnan(x[k]) || std::isnan(y[k])) throw std::invalid_argument("spearman: NaN sample");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = 0.5 * (n + 1.0);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (rx[k] - mean) * (ry[k] - mean);
    sxx += (rx[k] - mean) * (rx[k] - mean);
    syy += (ry[k] - mean) * (ry[k] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lsfm::linsys
