#include <doctest.h>

#include <cmath>

#include "datasym/benchmarks.hpp"
#include "datasym/lipschitz.hpp"
#include "datasym/rng.hpp"

using namespace datasym;

namespace {

Box box1(double lo, double hi) {
  Vec l(1), u(1);
  l << lo;
  u << hi;
  return Box(l, u);
}

LipschitzConfig cfg_for(double ball, int pairs, int batches, std::uint64_t seed = 1) {
  LipschitzConfig c;
  c.pair_distance_cap = ball;
  c.pairs_per_batch = pairs;
  c.batches = batches;
  c.tuples_per_input = 4;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("linear target of slope two is recovered") {
  auto target = [](const Vec& x) { return 2.0 * x[0]; };
  const SlopeEstimate est = estimate_slope(target, box1(0, 1), cfg_for(1e-3, 100, 50), 0);
  CHECK(est.value >= 1.9);
  CHECK(est.value <= 2.05);
}

TEST_CASE("constant target estimates zero slope") {
  auto target = [](const Vec&) { return 1.25; };
  const SlopeEstimate est = estimate_slope(target, box1(0, 1), cfg_for(1e-3, 50, 20), 0);
  CHECK(est.value <= 1e-6);
}

TEST_CASE("quadratic target on a box recovers the boundary gradient") {
  // x^2 on [-0.5, 0.5] against xhat = 0: sup |2x| = 1.
  auto target = [](const Vec& x) { return x[0] * x[0]; };
  const SlopeEstimate est = estimate_slope(target, box1(-0.5, 0.5), cfg_for(1e-3, 200, 50), 0);
  CHECK(est.value >= 0.95);
  CHECK(est.value <= 1.03);
}

TEST_CASE("shrinking ball radius converges toward the true constant") {
  auto target = [](const Vec& x) { return 2.0 * x[0]; };
  const double e1 = estimate_slope(target, box1(0, 1), cfg_for(1e-1, 10, 10), 1).value;
  const double e2 = estimate_slope(target, box1(0, 1), cfg_for(1e-2, 50, 25), 1).value;
  const double e3 = estimate_slope(target, box1(0, 1), cfg_for(1e-3, 200, 50), 1).value;
  CHECK(std::abs(e2 - 2.0) <= std::abs(e1 - 2.0) + 0.05);
  CHECK(std::abs(e3 - 2.0) <= std::abs(e2 - 2.0) + 0.05);
}

TEST_CASE("estimates never fall below the observed maximum slope") {
  auto target = [](const Vec& x) { return std::sin(8.0 * x[0]); };
  const SlopeEstimate est = estimate_slope(target, box1(0, 1), cfg_for(1e-2, 60, 30), 9);
  double observed = 0.0;
  for (double m : est.batch_maxima) observed = std::max(observed, m);
  CHECK(est.value >= observed);
}

TEST_CASE("deterministic for a fixed seed") {
  auto target = [](const Vec& x) { return std::cos(3.0 * x[0]) + x[0]; };
  const SlopeEstimate a = estimate_slope(target, box1(0, 1), cfg_for(1e-3, 40, 20, 77), 3);
  const SlopeEstimate b = estimate_slope(target, box1(0, 1), cfg_for(1e-3, 40, 20, 77), 3);
  CHECK(a.value == b.value);
  CHECK(a.batch_maxima == b.batch_maxima);
}

TEST_CASE("reverse Weibull fit: degenerate and support-bound behaviour") {
  // All maxima equal: the location is that common value.
  std::vector<double> flat(20, 1.5);
  const WeibullFit f = fit_reverse_weibull(flat);
  CHECK(f.location == doctest::Approx(1.5));
  CHECK(f.degenerate);

  CHECK_THROWS_AS(fit_reverse_weibull(std::vector<double>{1.0, 2.0}), ConfigError);

  // Location stays above the sample maximum for arbitrary data.
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> maxima;
    double top = 0.0;
    for (int i = 0; i < 30; ++i) {
      maxima.push_back(rng.uniform(0.0, 3.0));
      top = std::max(top, maxima.back());
    }
    CHECK(fit_reverse_weibull(maxima).location >= top);
  }
}

TEST_CASE("reverse Weibull fit recovers known parameters") {
  // Draw from location 2, scale 0.1, shape 3 by inverse transform.
  Rng rng(2024);
  std::vector<double> sample;
  for (int i = 0; i < 500; ++i) {
    double u = rng.unit();
    while (u <= 0.0) u = rng.unit();
    sample.push_back(2.0 - 0.1 * std::pow(-std::log(u), 1.0 / 3.0));
  }
  const WeibullFit f = fit_reverse_weibull(sample);
  CHECK(f.location >= 1.97);
  CHECK(f.location <= 2.03);
  CHECK(f.shape > 1.5);
}

TEST_CASE("certificate targets on the room benchmark") {
  RoomNetworkConfig rcfg;
  const SubsystemOracle o = make_room_subsystem(rcfg);
  const SymbolicModel sm =
      build_symbolic(o, build_grid(box1(-0.5, 0.5), {10}), build_grid(box1(-1, 1), {4}), o.input_set);

  AsbfSolution sol;
  sol.basis.terms = {BasisTerm{}};
  sol.basis.terms[0].diff_exponents = {0};
  sol.q = Vec::Constant(1, 0.8);
  sol.gamma = 0.985;
  sol.alpha = 0.0;

  LipschitzConfig cfg = cfg_for(1e-3, 100, 30);
  // G1 = alpha ||x - xhat||^2 - 0.8 with alpha = 0: zero slope.
  const SlopeEstimate l1_flat = estimate_L1(sol, sm, cfg);
  CHECK(l1_flat.value <= 1e-6);

  // alpha = 1 with a vanishing certificate: slope of ||x - xhat||^2 against
  // xhat = 0 is sup |2x| = 1 over [-0.5, 0.5]. A single-cell grid puts the
  // representative at the origin.
  AsbfSolution quad = sol;
  quad.q = Vec::Zero(1);
  quad.alpha = 1.0;
  const SymbolicModel sm_one =
      build_symbolic(o, build_grid(box1(-0.5, 0.5), {1}), build_grid(box1(-1, 1), {1}), o.input_set);
  cfg.pairs_per_batch = 200;
  cfg.batches = 50;
  const SlopeEstimate l1_quad = estimate_L1(quad, sm_one, cfg);
  CHECK(l1_quad.value >= 0.95);
  CHECK(l1_quad.value <= 1.03);

  // G2 with a constant certificate is (1 - gamma) * const: flat in (x, w).
  const SlopeEstimate l2_flat = estimate_L2(o, sol, sm, cfg);
  CHECK(l2_flat.value <= 1e-6);

  LipschitzEstimate est = estimate_lipschitz(o, sol, sm, cfg);
  CHECK(est.L == doctest::Approx(std::max(est.L1, est.L2)));
}
