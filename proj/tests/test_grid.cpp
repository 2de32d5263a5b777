#include <doctest.h>

#include <cmath>

#include "datasym/grid.hpp"
#include "datasym/rng.hpp"

using namespace datasym;

namespace {

Box box1(double lo, double hi) {
  Vec l(1), u(1);
  l << lo;
  u << hi;
  return Box(l, u);
}

Box box2(double lo0, double hi0, double lo1, double hi1) {
  Vec l(2), u(2);
  l << lo0, lo1;
  u << hi0, hi1;
  return Box(l, u);
}

// Independent nearest-representative search.
std::int64_t brute_nearest(const UniformGrid& g, const Vec& x) {
  std::int64_t best = 0;
  double bd = 1e300;
  for (std::int64_t c = 0; c < g.size(); ++c) {
    const double d = (g.representative(c) - x).norm();
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("1-D grid: centers and delta") {
  UniformGrid g = build_grid(box1(-0.5, 0.5), {10});
  CHECK(g.size() == 10);
  CHECK(g.delta() == doctest::Approx(0.1).epsilon(1e-14));
  for (int c = 0; c < 10; ++c)
    CHECK(g.representative(c)[0] == doctest::Approx(-0.45 + 0.1 * c).epsilon(1e-13));
}

TEST_CASE("2-D grid: cell count and diagonal delta, brute-force cross-check") {
  UniformGrid g = build_grid(box2(0.0, 1.0, -0.15, 0.55), {10, 7});
  CHECK(g.size() == 70);
  CHECK(g.delta() == doctest::Approx(std::sqrt(0.1 * 0.1 + 0.1 * 0.1)).epsilon(1e-13));

  // Max pairwise distance inside one cell on a fine sub-lattice approaches
  // the full diagonal.
  const Vec w = g.cell_widths();
  double worst = 0.0;
  const int steps = 8;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b)
      for (int c = 0; c <= steps; ++c)
        for (int d = 0; d <= steps; ++d) {
          Vec p(2), q(2);
          p << w[0] * a / steps, w[1] * b / steps;
          q << w[0] * c / steps, w[1] * d / steps;
          worst = std::max(worst, (p - q).norm());
        }
  CHECK(worst == doctest::Approx(g.delta()).epsilon(1e-12));
}

TEST_CASE("single cell per axis quantizes to the box center") {
  UniformGrid g = build_grid(box2(0.0, 1.0, -1.0, 3.0), {1, 1});
  CHECK(g.size() == 1);
  CHECK(g.representative(0)[0] == doctest::Approx(0.5));
  CHECK(g.representative(0)[1] == doctest::Approx(1.0));
}

TEST_CASE("degenerate box is rejected") {
  Vec l(1), u(1);
  l << 0.5;
  u << 0.5;
  CHECK_THROWS_AS(Box(l, u), ConfigError);
  CHECK_THROWS_AS(build_grid(box1(0, 1), {0}), ConfigError);
}

TEST_CASE("quantize picks the nearest representative") {
  UniformGrid g = build_grid(box1(-0.5, 0.5), {10});
  Vec x(1);
  x << 0.26;
  const auto q = g.quantize(x);
  REQUIRE(q.has_value());
  CHECK(q->representative[0] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(q->cell == brute_nearest(g, x));
}

TEST_CASE("representatives are fixed points of quantization") {
  UniformGrid g = build_grid(box2(0.0, 1.0, -0.15, 0.55), {10, 7});
  for (std::int64_t c = 0; c < g.size(); ++c) {
    const auto q = g.quantize(g.representative(c));
    REQUIRE(q.has_value());
    CHECK(q->cell == c);
    CHECK((q->representative - g.representative(c)).norm() == 0.0);
  }
}

TEST_CASE("boundary points belong to the lower-index cell") {
  UniformGrid g = build_grid(box1(-0.5, 0.5), {10});
  Vec x(1);
  x << 0.2;
  const auto q = g.quantize(x);
  REQUIRE(q.has_value());
  CHECK(q->representative[0] == doctest::Approx(0.15).epsilon(1e-13));

  // The outer faces stay inside the box.
  x << 0.5;
  CHECK(g.quantize(x)->representative[0] == doctest::Approx(0.45));
  x << -0.5;
  CHECK(g.quantize(x)->representative[0] == doctest::Approx(-0.45));
}

TEST_CASE("out-of-box points yield the out-of-domain signal") {
  UniformGrid g = build_grid(box1(-0.5, 0.5), {10});
  Vec x(1);
  x << 0.5000001;
  CHECK(!g.quantize(x).has_value());
  x << -1.0;
  CHECK(!g.quantize(x).has_value());
  CHECK(g.nearest(x).representative[0] == doctest::Approx(-0.45));
}

TEST_CASE("quantization error is at most half the diagonal") {
  UniformGrid g1 = build_grid(box1(-0.5, 0.5), {10});
  UniformGrid g2 = build_grid(box2(0.0, 1.0, -0.15, 0.55), {10, 7});
  Rng rng(20240811);
  for (int i = 0; i < 100000; ++i) {
    Vec x1 = rng.in_box(g1.box());
    const auto q1 = g1.quantize(x1);
    REQUIRE(q1.has_value());
    CHECK((q1->representative - x1).norm() <= 0.5 * g1.delta() + 1e-12);

    Vec x2 = rng.in_box(g2.box());
    const auto q2 = g2.quantize(x2);
    REQUIRE(q2.has_value());
    CHECK((q2->representative - x2).norm() <= 0.5 * g2.delta() + 1e-12);
  }
}

TEST_CASE("cells partition the box") {
  UniformGrid g = build_grid(box2(0.0, 1.0, -0.15, 0.55), {10, 7});
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Vec x = rng.in_box(g.box());
    const auto q = g.quantize(x);
    REQUIRE(q.has_value());
    const auto axes = g.unflatten(q->cell);
    for (int k = 0; k < 2; ++k) {
      const double lo = g.box().lower[k] + axes[k] * g.cell_widths()[k];
      const double hi = lo + g.cell_widths()[k];
      CHECK(x[k] >= lo - 1e-12);
      CHECK(x[k] <= hi + 1e-12);
    }
  }
}

TEST_CASE("row-major enumeration matches flatten/unflatten") {
  UniformGrid g = build_grid(box2(0.0, 1.0, 0.0, 1.0), {3, 4});
  std::int64_t c = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 4; ++b) {
      CHECK(g.flatten({a, b}) == c);
      const auto axes = g.unflatten(c);
      CHECK(axes[0] == a);
      CHECK(axes[1] == b);
      ++c;
    }
}
