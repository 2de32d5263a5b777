#include "datasym/grid.hpp"

#include <cmath>

namespace datasym {

UniformGrid::UniformGrid(Box box, std::vector<int> cells_per_axis)
    : box_(std::move(box)), cells_(std::move(cells_per_axis)) {
  box_.validate();
  if (static_cast<int>(cells_.size()) != box_.dim())
    throw ConfigError("grid: cells_per_axis dimension mismatch");
  for (int c : cells_)
    if (c < 1) throw ConfigError("grid: cells_per_axis entries must be >= 1");

  widths_ = box_.widths();
  double snap = 0.0;
  for (int k = 0; k < box_.dim(); ++k) {
    widths_[k] /= cells_[k];
    snap = std::max(snap, std::max(std::abs(box_.lower[k]), std::abs(box_.upper[k])));
  }
  snap_ = 1e-12 * std::max(1.0, snap);
  delta_ = widths_.norm();

  strides_.assign(cells_.size(), 1);
  size_ = 1;
  for (int k = box_.dim() - 1; k >= 0; --k) {
    strides_[k] = size_;
    size_ *= cells_[k];
  }
}

Vec UniformGrid::representative(std::int64_t cell) const {
  if (cell < 0 || cell >= size_) throw IndexError("grid: cell index out of range");
  Vec r(dim());
  for (int k = 0; k < dim(); ++k) {
    const std::int64_t a = (cell / strides_[k]) % cells_[k];
    r[k] = box_.lower[k] + (static_cast<double>(a) + 0.5) * widths_[k];
  }
  return r;
}

std::optional<Quantized> UniformGrid::quantize(const Vec& x) const {
  if (x.size() != box_.lower.size()) throw ShapeError("grid: point dimension mismatch");
  std::int64_t cell = 0;
  for (int k = 0; k < dim(); ++k) {
    if (x[k] < box_.lower[k] || x[k] > box_.upper[k]) return std::nullopt;
    std::int64_t a = static_cast<std::int64_t>(std::floor((x[k] - box_.lower[k]) / widths_[k]));
    if (a >= cells_[k]) a = cells_[k] - 1;
    if (a < 0) a = 0;
    // A point sitting on a grid line belongs to the lower-index cell.
    if (a >= 1 && std::abs(x[k] - (box_.lower[k] + static_cast<double>(a) * widths_[k])) <= snap_) --a;
    cell += a * strides_[k];
  }
  return Quantized{cell, representative(cell)};
}

Quantized UniformGrid::nearest(const Vec& x) const {
  if (x.size() != box_.lower.size()) throw ShapeError("grid: point dimension mismatch");
  Vec clamped = x;
  for (int k = 0; k < dim(); ++k) {
    if (clamped[k] < box_.lower[k]) clamped[k] = box_.lower[k];
    if (clamped[k] > box_.upper[k]) clamped[k] = box_.upper[k];
  }
  return *quantize(clamped);
}

std::vector<int> UniformGrid::unflatten(std::int64_t cell) const {
  if (cell < 0 || cell >= size_) throw IndexError("grid: cell index out of range");
  std::vector<int> axes(dim());
  for (int k = 0; k < dim(); ++k) axes[k] = static_cast<int>((cell / strides_[k]) % cells_[k]);
  return axes;
}

std::int64_t UniformGrid::flatten(const std::vector<int>& axes) const {
  if (static_cast<int>(axes.size()) != dim()) throw ShapeError("grid: axes dimension mismatch");
  std::int64_t cell = 0;
  for (int k = 0; k < dim(); ++k) {
    if (axes[k] < 0 || axes[k] >= cells_[k]) throw IndexError("grid: axis index out of range");
    cell += static_cast<std::int64_t>(axes[k]) * strides_[k];
  }
  return cell;
}

}  // namespace datasym
