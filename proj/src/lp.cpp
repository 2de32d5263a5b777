#include "datasym/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace datasym {

void LinearProgram::validate() const {
  const int n = n_vars();
  if (lower.size() != n || upper.size() != n) throw ShapeError("lp: bound length mismatch");
  if (rows.rows() != rhs.size()) throw ShapeError("lp: rows/rhs mismatch");
  if (rows.size() > 0 && rows.cols() != n) throw ShapeError("lp: row width mismatch");
  for (int k = 0; k < n; ++k) {
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]))
      throw ConfigError("lp: all variable bounds must be finite");
    if (lower[k] > upper[k]) throw ConfigError("lp: lower bound above upper bound");
  }
  if (!objective.allFinite() || (rows.size() > 0 && !rows.allFinite()) || (rhs.size() > 0 && !rhs.allFinite()))
    throw ConfigError("lp: non-finite coefficients");
}

namespace {

// The dual in equality form: min g'z  s.t.  E z = d, z >= 0, where
//   E = [A' | I | -I]  (n rows, m + 2n columns),
//   d = -c,
//   g = [b - A l; u - l; 0].
// The columns of the +-I blocks always contain a feasible diagonal basis, so
// the simplex starts without artificials. At optimality the simplex
// multipliers solve the shifted primal, i.e. x* = l + pi.
class DualSimplex {
 public:
  DualSimplex(const LinearProgram& lp, const LpOptions& opts)
      : lp_(lp), opts_(opts), n_(lp.n_vars()), m_(lp.n_rows()) {
    d_ = -lp_.objective;
    h_ = lp_.upper - lp_.lower;
    if (m_ > 0)
      g_rows_ = lp_.rhs - lp_.rows * lp_.lower;
    basis_.resize(n_);
    for (int i = 0; i < n_; ++i) basis_[i] = (d_[i] >= 0.0) ? (m_ + i) : (m_ + n_ + i);
  }

  LpSolution run() {
    LpSolution sol;
    Vec pi(n_), zb(n_);
    std::vector<char> in_basis(static_cast<std::size_t>(m_ + 2 * n_), 0);
    double prev_obj = std::numeric_limits<double>::infinity();
    long stall = 0;
    bool bland = false;

    for (long iter = 0; iter < opts_.max_iterations; ++iter) {
      Mat B(n_, n_);
      for (int i = 0; i < n_; ++i) B.col(i) = column(basis_[i]);
      Eigen::PartialPivLU<Mat> lu(B);
      zb = lu.solve(d_);
      Vec gb(n_);
      for (int i = 0; i < n_; ++i) gb[i] = cost(basis_[i]);
      pi = B.transpose().partialPivLu().solve(gb);

      const double obj = gb.dot(zb);
      if (obj < prev_obj - 1e-13 * (1.0 + std::abs(prev_obj))) {
        prev_obj = obj;
        stall = 0;
      } else if (++stall > 50L * (n_ + 1)) {
        bland = true;
      }

      std::fill(in_basis.begin(), in_basis.end(), 0);
      for (int i = 0; i < n_; ++i) in_basis[static_cast<std::size_t>(basis_[i])] = 1;

      // Pricing. Reduced costs: rows j: g_rows[j] - A.row(j) * pi;
      // upper-bound cols: h[k] - pi[k]; surplus cols: pi[k].
      int enter = -1;
      double best = -opts_.reduced_cost_tol;
      auto consider = [&](int j, double r) {
        if (in_basis[static_cast<std::size_t>(j)]) return;
        if (bland) {
          if (r < -opts_.reduced_cost_tol && (enter < 0 || j < enter)) enter = j;
        } else if (r < best) {
          best = r;
          enter = j;
        }
      };
      if (m_ > 0) {
        Vec r_rows = g_rows_ - lp_.rows * pi;
        for (int j = 0; j < m_; ++j) consider(j, r_rows[j]);
      }
      for (int k = 0; k < n_; ++k) consider(m_ + k, h_[k] - pi[k]);
      for (int k = 0; k < n_; ++k) consider(m_ + n_ + k, pi[k]);

      if (enter < 0) {
        sol.status = LpStatus::Optimal;
        sol.x = lp_.lower + pi;
        // Snap to bounds: the multipliers solve the shifted primal exactly at
        // a vertex but can carry |eps|-scale factorization noise.
        for (int k = 0; k < n_; ++k) {
          if (sol.x[k] < lp_.lower[k]) sol.x[k] = lp_.lower[k];
          if (sol.x[k] > lp_.upper[k]) sol.x[k] = lp_.upper[k];
        }
        sol.objective = lp_.objective.dot(sol.x);
        sol.iterations = static_cast<int>(iter);
        return sol;
      }

      const Vec y = lu.solve(column(enter));
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n_; ++i) {
        if (y[i] > opts_.pivot_tol) {
          const double r = std::max(zb[i], 0.0) / y[i];
          if (r < ratio - 1e-15 || (r < ratio + 1e-15 && (leave < 0 || basis_[i] < basis_[leave]))) {
            ratio = r;
            leave = i;
          }
        }
      }
      if (leave < 0) {
        // Dual unbounded: the primal program is infeasible.
        sol.status = LpStatus::Infeasible;
        sol.iterations = static_cast<int>(iter);
        return sol;
      }
      basis_[static_cast<std::size_t>(leave)] = enter;
    }
    sol.status = LpStatus::IterationLimit;
    sol.iterations = static_cast<int>(opts_.max_iterations);
    return sol;
  }

 private:
  Vec column(int j) const {
    Vec col = Vec::Zero(n_);
    if (j < m_) {
      col = lp_.rows.row(j).transpose();
    } else if (j < m_ + n_) {
      col[j - m_] = 1.0;
    } else {
      col[j - m_ - n_] = -1.0;
    }
    return col;
  }

  double cost(int j) const {
    if (j < m_) return g_rows_[j];
    if (j < m_ + n_) return h_[j - m_];
    return 0.0;
  }

  const LinearProgram& lp_;
  const LpOptions& opts_;
  int n_;
  int m_;
  Vec d_;
  Vec h_;
  Vec g_rows_;
  std::vector<int> basis_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts) {
  lp.validate();
  DualSimplex solver(lp, opts);
  return solver.run();
}

std::pair<double, int> feasibility_gap(const LinearProgram& lp, const LpOptions& opts) {
  lp.validate();
  // min t  s.t.  A x - t <= b, x in box, 0 <= t <= worst violation at center.
  const int n = lp.n_vars();
  LinearProgram aug;
  aug.objective = Vec::Zero(n + 1);
  aug.objective[n] = 1.0;
  aug.rows = Mat::Zero(lp.n_rows(), n + 1);
  aug.rows.leftCols(n) = lp.rows;
  aug.rows.col(n).setConstant(-1.0);
  aug.rhs = lp.rhs;
  aug.lower = Vec::Zero(n + 1);
  aug.lower.head(n) = lp.lower;
  aug.upper = Vec::Zero(n + 1);
  aug.upper.head(n) = lp.upper;
  const Vec center = 0.5 * (lp.lower + lp.upper);
  double worst = 0.0;
  if (lp.n_rows() > 0) worst = std::max(0.0, (lp.rows * center - lp.rhs).maxCoeff());
  aug.upper[n] = worst + 1.0;

  const LpSolution sol = solve_lp(aug, opts);
  if (sol.status != LpStatus::Optimal) return {std::numeric_limits<double>::infinity(), -1};
  int arg = -1;
  if (lp.n_rows() > 0) {
    const Vec resid = lp.rows * sol.x.head(n) - lp.rhs;
    resid.maxCoeff(&arg);
  }
  return {sol.objective, arg};
}

double max_violation(const LinearProgram& lp, const Vec& x) {
  double v = 0.0;
  if (lp.n_rows() > 0) v = std::max(v, (lp.rows * x - lp.rhs).maxCoeff());
  v = std::max(v, (lp.lower - x).maxCoeff());
  v = std::max(v, (x - lp.upper).maxCoeff());
  return v;
}

}  // namespace datasym
