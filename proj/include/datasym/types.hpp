// Common scalar/vector aliases and the error hierarchy.
#ifndef DATASYM_TYPES_HPP
#define DATASYM_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace datasym {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Wrong vector/matrix dimensions at a call boundary.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid configuration value (degenerate box, non-contractive coefficients, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Control input not a member of the finite input set.
struct InvalidInputError : Error {
  using Error::Error;
};

// Index outside a table or grid range.
struct IndexError : Error {
  using Error::Error;
};

// Dataset misses samples for some input index.
struct IncompleteDatasetError : Error {
  using Error::Error;
};

// Scenario-program assembly failed (vacuous selection, foreign input, ...).
struct AssemblyError : Error {
  using Error::Error;
};

// Every gamma candidate yielded an infeasible program.
struct InfeasibleError : Error {
  using Error::Error;
};

// State quantizes to a cell outside the winning region.
struct UncontrollableStateError : Error {
  std::int64_t cell;  // -1 when the state left the grid domain
  UncontrollableStateError(const std::string& what, std::int64_t cell_index)
      : Error(what), cell(cell_index) {}
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace datasym

#endif
