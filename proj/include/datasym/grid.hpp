// Uniform partitions with cell-center representatives and the quantizer.
#ifndef DATASYM_GRID_HPP
#define DATASYM_GRID_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "datasym/box.hpp"
#include "datasym/types.hpp"

namespace datasym {

struct Quantized {
  std::int64_t cell;
  Vec representative;
};

// Uniform grid over a box. Cells are enumerated row-major (first axis
// slowest); representatives are cell centers. delta is the full cell
// diagonal, the worst-case distance between two points of one cell.
class UniformGrid {
 public:
  UniformGrid() = default;
  UniformGrid(Box box, std::vector<int> cells_per_axis);

  const Box& box() const { return box_; }
  const std::vector<int>& cells_per_axis() const { return cells_; }
  int dim() const { return box_.dim(); }
  std::int64_t size() const { return size_; }
  double delta() const { return delta_; }
  const Vec& cell_widths() const { return widths_; }

  Vec representative(std::int64_t cell) const;

  // Cell of x, or nullopt when x lies outside the box (out-of-domain signal;
  // never clamped). Points on a shared face go to the lower-index cell.
  std::optional<Quantized> quantize(const Vec& x) const;

  // Nearest representative, defined for any point (clamps to the box first).
  Quantized nearest(const Vec& x) const;

  std::vector<int> unflatten(std::int64_t cell) const;
  std::int64_t flatten(const std::vector<int>& axes) const;

 private:
  Box box_;
  std::vector<int> cells_;
  Vec widths_;
  std::vector<std::int64_t> strides_;
  std::int64_t size_ = 0;
  double delta_ = 0.0;
  double snap_ = 0.0;  // grid-line snapping tolerance for the face tie-break
};

inline UniformGrid build_grid(const Box& box, const std::vector<int>& cells_per_axis) {
  return UniformGrid(box, cells_per_axis);
}

inline std::optional<Quantized> quantize(const UniformGrid& grid, const Vec& x) { return grid.quantize(x); }

}  // namespace datasym

#endif
