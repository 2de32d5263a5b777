// Axis-aligned boxes.
#ifndef DATASYM_BOX_HPP
#define DATASYM_BOX_HPP

#include "datasym/types.hpp"

namespace datasym {

struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

  int dim() const { return static_cast<int>(lower.size()); }

  bool contains(const Vec& x) const {
    if (x.size() != lower.size()) throw ShapeError("box: point dimension mismatch");
    for (int k = 0; k < dim(); ++k)
      if (x[k] < lower[k] || x[k] > upper[k]) return false;
    return true;
  }

  Vec widths() const { return upper - lower; }
  Vec center() const { return 0.5 * (lower + upper); }

  // Box deflated by eps on every face; may be empty (lower > upper).
  Box deflated(double eps) const {
    Box b;
    b.lower = lower.array() + eps;
    b.upper = upper.array() - eps;
    return b;
  }

  void validate() const {
    if (lower.size() != upper.size()) throw ShapeError("box: lower/upper dimension mismatch");
    if (lower.size() == 0) throw ConfigError("box: zero-dimensional");
    for (int k = 0; k < dim(); ++k)
      if (!(lower[k] < upper[k])) throw ConfigError("box: lower must be strictly below upper on every axis");
  }
};

}  // namespace datasym

#endif
