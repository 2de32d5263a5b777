// Dense linear programs  min c'x  s.t.  A x <= b,  l <= x <= u  with finite
// bounds on every variable. Solved exactly (vertex solutions) by a revised
// simplex on the dual, whose basis has one row per decision variable; this
// keeps the factorized system tiny even when the row count is large.
#ifndef DATASYM_LP_HPP
#define DATASYM_LP_HPP

#include "datasym/types.hpp"

namespace datasym {

struct LinearProgram {
  Vec objective;  // n
  Mat rows;       // m x n, rows * x <= rhs
  Vec rhs;        // m
  Vec lower;      // n, finite
  Vec upper;      // n, finite

  int n_vars() const { return static_cast<int>(objective.size()); }
  int n_rows() const { return static_cast<int>(rhs.size()); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double objective = 0.0;
  int iterations = 0;
};

struct LpOptions {
  double reduced_cost_tol = 1e-9;
  double pivot_tol = 1e-11;
  long max_iterations = 200000;
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

// Minimal uniform slack t >= 0 such that A x <= b + t holds for some x in the
// box; returns (t*, row index attaining it). Used for infeasibility reports.
std::pair<double, int> feasibility_gap(const LinearProgram& lp, const LpOptions& opts = {});

// max over rows of (A x - b)_i and max bound violation; for audits.
double max_violation(const LinearProgram& lp, const Vec& x);

}  // namespace datasym

#endif
