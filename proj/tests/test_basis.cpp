#include <doctest.h>

#include <nlohmann/json.hpp>

#include "datasym/basis.hpp"

using namespace datasym;

namespace {

Vec vec1(double a) { return Vec::Constant(1, a); }

// Degree-6 even template of the room benchmark: q1 d^6 + q2 d^4 + q3 d^2 + q4.
BasisSpec room_basis() { return even_difference_basis(1, 6); }

}  // namespace

TEST_CASE("even difference basis layout") {
  const BasisSpec b = room_basis();
  REQUIRE(b.size() == 4);
  CHECK(b.terms[0].degree() == 6);
  CHECK(b.terms[1].degree() == 4);
  CHECK(b.terms[2].degree() == 2);
  CHECK(b.terms[3].is_constant());
  CHECK(b.has_constant());
}

TEST_CASE("certificate evaluation at fixed reference coefficients") {
  const BasisSpec b = room_basis();
  Vec q(4);
  q << 0.4949, -0.25, 0.001, 0.8;

  // Constant term at zero difference.
  CHECK(eval_value(b, q, vec1(0.3), vec1(0.3)) == doctest::Approx(0.8).epsilon(1e-14));

  // Unit difference sums the coefficients; cross-checked term by term.
  double by_terms = 0.0;
  for (int j = 0; j < 4; ++j) by_terms += q[j] * eval_term(b.terms[j], vec1(1.0), vec1(0.0));
  CHECK(eval_value(b, q, vec1(1.0), vec1(0.0)) == doctest::Approx(1.0459).epsilon(1e-12));
  CHECK(by_terms == doctest::Approx(1.0459).epsilon(1e-12));

  // Zero coefficients vanish everywhere.
  CHECK(eval_value(b, Vec::Zero(4), vec1(0.77), vec1(-0.3)) == 0.0);
}

TEST_CASE("per-axis difference basis matches the planar template") {
  const BasisSpec b = per_axis_difference_basis(2, 4);
  REQUIRE(b.size() == 9);  // 4 powers per axis + constant
  Vec x(2), xh(2);
  x << 0.5, 0.2;
  xh << 0.1, 0.1;
  const Vec row = eval_basis(b, x, xh);
  CHECK(row[0] == doctest::Approx(std::pow(0.4, 4)));
  CHECK(row[3] == doctest::Approx(0.4));
  CHECK(row[4] == doctest::Approx(std::pow(0.1, 4)));
  CHECK(row[8] == doctest::Approx(1.0));
}

TEST_CASE("pair monomials evaluate both arguments") {
  BasisTerm t;
  t.kind = BasisTerm::Kind::Pair;
  t.x_exponents = {2};
  t.x_hat_exponents = {1};
  CHECK(eval_term(t, vec1(3.0), vec1(2.0)) == doctest::Approx(18.0));
}

TEST_CASE("dimension mismatch is rejected") {
  const BasisSpec b = room_basis();
  Vec q(4);
  q.setZero();
  Vec x2(2);
  x2.setZero();
  CHECK_THROWS_AS(eval_value(b, q, x2, vec1(0.0)), ShapeError);
  CHECK_THROWS_AS(eval_value(b, Vec::Zero(3), vec1(0.0), vec1(0.0)), ShapeError);
}

TEST_CASE("degree escalation adds the next even powers in front") {
  const BasisSpec b = raise_degree(room_basis(), 1, 2);
  CHECK(b.max_degree() == 8);
  CHECK(b.size() == 5);
  CHECK(b.terms[0].degree() == 8);

  const BasisSpec v = raise_degree(per_axis_difference_basis(2, 4), 2, 2);
  CHECK(v.max_degree() == 6);
  CHECK(v.size() == 13);  // two axes x two new powers
}

TEST_CASE("basis round-trips through JSON") {
  BasisSpec b = per_axis_difference_basis(2, 4);
  b.coef_bound = 0.5;
  b.const_bound = 10.0;
  const BasisSpec back = basis_from_json(nlohmann::json::parse(basis_to_json(b).dump()));
  CHECK(back.size() == b.size());
  CHECK(back.coef_bound == b.coef_bound);
  CHECK(back.const_bound == b.const_bound);
  Vec x(2), xh(2);
  x << 0.3, -0.1;
  xh << 0.05, 0.25;
  CHECK(eval_basis(back, x, xh) == eval_basis(b, x, xh));
}

TEST_CASE("validation catches malformed specs") {
  BasisSpec empty;
  CHECK_THROWS_AS(empty.validate(1), ConfigError);

  BasisSpec wrong = room_basis();
  wrong.terms[0].diff_exponents = {1, 2};
  CHECK_THROWS_AS(wrong.validate(1), ConfigError);

  BasisSpec negb = room_basis();
  negb.coef_bound = 0.0;
  CHECK_THROWS_AS(negb.validate(1), ConfigError);
}
