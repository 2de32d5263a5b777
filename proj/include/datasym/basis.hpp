// Monomial bases for certificate templates V(q, x, xhat) = sum_j q_j p_j.
#ifndef DATASYM_BASIS_HPP
#define DATASYM_BASIS_HPP

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "datasym/types.hpp"

namespace datasym {

// One term is either a monomial in the componentwise difference x - xhat or a
// plain pair monomial in (x, xhat). A constant term has all exponents zero.
struct BasisTerm {
  enum class Kind { Diff, Pair };
  Kind kind = Kind::Diff;
  std::vector<int> diff_exponents;           // Kind::Diff, one exponent per axis
  std::vector<int> x_exponents;              // Kind::Pair
  std::vector<int> x_hat_exponents;          // Kind::Pair

  bool is_constant() const;
  int degree() const;
};

struct BasisSpec {
  std::vector<BasisTerm> terms;
  double coef_bound = 1.0;    // |q_j| bound for non-constant terms
  double const_bound = 10.0;  // |q_j| bound for constant terms

  int size() const { return static_cast<int>(terms.size()); }
  // Fills omitted exponent vectors of constant terms with zeros.
  void normalize(int state_dim);
  void validate(int state_dim) const;
  bool has_constant() const;
  int max_degree() const;
};

double eval_term(const BasisTerm& term, const Vec& x, const Vec& x_hat);

// Row of all term values p_j(x, xhat).
Vec eval_basis(const BasisSpec& basis, const Vec& x, const Vec& x_hat);

inline double eval_value(const BasisSpec& basis, const Vec& q, const Vec& x, const Vec& x_hat) {
  if (q.size() != basis.size()) throw ShapeError("basis: coefficient length mismatch");
  return q.dot(eval_basis(basis, x, x_hat));
}

// Even difference monomials x-xhat up to max_degree per axis, plus a constant.
BasisSpec even_difference_basis(int state_dim, int max_degree);

// Per-axis difference powers max_degree..1 on each axis, plus one constant.
BasisSpec per_axis_difference_basis(int state_dim, int max_degree);

// Raises the polynomial degree of a spec by `extra` (used by the escalation
// ladder): even bases gain the next even powers, per-axis bases the next ones.
BasisSpec raise_degree(const BasisSpec& basis, int state_dim, int extra);

nlohmann::ordered_json basis_to_json(const BasisSpec& basis);
BasisSpec basis_from_json(const nlohmann::json& j);

}  // namespace datasym

#endif
