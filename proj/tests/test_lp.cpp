#include <doctest.h>

#include <cmath>

#include "datasym/lp.hpp"
#include "datasym/rng.hpp"

using namespace datasym;

namespace {

LinearProgram make_lp(int n, int m) {
  LinearProgram lp;
  lp.objective = Vec::Zero(n);
  lp.rows = Mat::Zero(m, n);
  lp.rhs = Vec::Zero(m);
  lp.lower = Vec::Constant(n, -1.0);
  lp.upper = Vec::Constant(n, 1.0);
  return lp;
}

}  // namespace

TEST_CASE("bounds-only minimization lands on the correct corner") {
  LinearProgram lp = make_lp(3, 0);
  lp.objective << 1.0, -2.0, 0.5;
  lp.lower << -1, -2, -3;
  lp.upper << 4, 5, 6;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(-1));
  CHECK(sol.x[1] == doctest::Approx(5));
  CHECK(sol.x[2] == doctest::Approx(-3));
  CHECK(sol.objective == doctest::Approx(-1 - 10 - 1.5));
}

TEST_CASE("simple two-variable program") {
  // min -x - y  s.t.  x + y <= 1,  0 <= x,y <= 1  ->  optimum -1.
  LinearProgram lp = make_lp(2, 1);
  lp.objective << -1.0, -1.0;
  lp.rows << 1.0, 1.0;
  lp.rhs << 1.0;
  lp.lower.setZero();
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(max_violation(lp, sol.x) <= 1e-9);
}

TEST_CASE("infeasible program is detected and its gap is reported") {
  LinearProgram lp = make_lp(1, 1);
  lp.objective << 1.0;
  lp.rows << 1.0;
  lp.rhs << -5.0;  // x <= -5 with x >= -1
  const LpSolution sol = solve_lp(lp);
  CHECK(sol.status == LpStatus::Infeasible);
  const auto [gap, row] = feasibility_gap(lp);
  CHECK(gap == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(row == 0);
}

TEST_CASE("redundant and degenerate rows do not break the pivot") {
  LinearProgram lp = make_lp(2, 4);
  lp.objective << -1.0, 0.0;
  lp.rows << 1, 0, 1, 0, 1, 1, 0.5, 0.5;
  lp.rhs << 0.5, 0.5, 1.0, 0.5;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(max_violation(lp, sol.x) <= 1e-9);
}

TEST_CASE("random programs: optimal vertex beats a brute-force grid search") {
  Rng rng(20250102);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng.integer(3));  // up to 3 decision variables
    const int m = 1 + static_cast<int>(rng.integer(8));
    LinearProgram lp = make_lp(n, m);
    for (int j = 0; j < n; ++j) {
      lp.lower[j] = rng.uniform(-2, 0);
      lp.upper[j] = rng.uniform(0.2, 2);
      lp.objective[j] = rng.uniform(-1, 1);
    }
    const Vec center = 0.5 * (lp.lower + lp.upper);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) lp.rows(i, j) = rng.uniform(-1, 1);
      // Keep the box center feasible so the program never goes empty.
      lp.rhs[i] = lp.rows.row(i).dot(center) + rng.uniform(0.05, 1.0);
    }

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(max_violation(lp, sol.x) <= 1e-9);

    // Brute force over a lattice restricted to feasible points.
    const int steps = (n == 1) ? 4000 : (n == 2 ? 120 : 40);
    double best = 1e300;
    const std::int64_t total = static_cast<std::int64_t>(std::pow(steps + 1, n));
    for (std::int64_t flat = 0; flat < total; ++flat) {
      Vec x(n);
      std::int64_t r = flat;
      for (int j = 0; j < n; ++j) {
        x[j] = lp.lower[j] + (lp.upper[j] - lp.lower[j]) * static_cast<double>(r % (steps + 1)) / steps;
        r /= (steps + 1);
      }
      if ((lp.rows * x - lp.rhs).maxCoeff() > 1e-12) continue;
      best = std::min(best, lp.objective.dot(x));
    }
    if (best < 1e300) CHECK(sol.objective <= best + 1e-6);

    // Weak optimality audit against rejection-sampled feasible points.
    for (int probe = 0; probe < 2000; ++probe) {
      Vec x(n);
      for (int j = 0; j < n; ++j) x[j] = rng.uniform(lp.lower[j], lp.upper[j]);
      if ((lp.rows * x - lp.rhs).maxCoeff() > 0.0) continue;
      CHECK(sol.objective <= lp.objective.dot(x) + 1e-9);
    }
  }
}

TEST_CASE("many redundant rows with few variables") {
  // The shape the certificate programs take: row count far above the
  // variable count.
  Rng rng(7);
  LinearProgram lp = make_lp(4, 5000);
  lp.objective << 1, 1, 0, 0;
  lp.lower = Vec::Constant(4, -10.0);
  lp.upper = Vec::Constant(4, 10.0);
  for (int i = 0; i < 5000; ++i) {
    for (int j = 0; j < 4; ++j) lp.rows(i, j) = rng.uniform(-1, 1);
    lp.rhs[i] = 1.0 + rng.unit();
  }
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(max_violation(lp, sol.x) <= 1e-8);
}
