#include "datasym/basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

namespace datasym {

namespace {

double ipow(double b, int e) {
  double r = 1.0;
  while (e-- > 0) r *= b;
  return r;
}

int sum(const std::vector<int>& v) {
  int s = 0;
  for (int e : v) s += e;
  return s;
}

}  // namespace

bool BasisTerm::is_constant() const {
  if (kind == Kind::Diff) return sum(diff_exponents) == 0;
  return sum(x_exponents) + sum(x_hat_exponents) == 0;
}

int BasisTerm::degree() const {
  if (kind == Kind::Diff) return sum(diff_exponents);
  return sum(x_exponents) + sum(x_hat_exponents);
}

void BasisSpec::normalize(int state_dim) {
  for (auto& t : terms) {
    if (t.kind == BasisTerm::Kind::Diff && t.diff_exponents.empty())
      t.diff_exponents.assign(static_cast<std::size_t>(state_dim), 0);
  }
}

void BasisSpec::validate(int state_dim) const {
  if (terms.empty()) throw ConfigError("basis: needs at least one term");
  if (!(coef_bound > 0.0) || !(const_bound > 0.0)) throw ConfigError("basis: bounds must be positive");
  for (const auto& t : terms) {
    const auto check = [state_dim](const std::vector<int>& e, const char* what) {
      if (static_cast<int>(e.size()) != state_dim)
        throw ConfigError(std::string("basis: ") + what + " exponent arity mismatch");
      for (int v : e)
        if (v < 0) throw ConfigError("basis: exponents must be non-negative");
    };
    if (t.kind == BasisTerm::Kind::Diff) {
      check(t.diff_exponents, "difference");
    } else {
      check(t.x_exponents, "x");
      check(t.x_hat_exponents, "x_hat");
    }
  }
}

bool BasisSpec::has_constant() const {
  return std::any_of(terms.begin(), terms.end(), [](const BasisTerm& t) { return t.is_constant(); });
}

int BasisSpec::max_degree() const {
  int d = 0;
  for (const auto& t : terms) d = std::max(d, t.degree());
  return d;
}

double eval_term(const BasisTerm& term, const Vec& x, const Vec& x_hat) {
  double v = 1.0;
  if (term.kind == BasisTerm::Kind::Diff) {
    for (std::size_t k = 0; k < term.diff_exponents.size(); ++k)
      v *= ipow(x[static_cast<Eigen::Index>(k)] - x_hat[static_cast<Eigen::Index>(k)], term.diff_exponents[k]);
  } else {
    for (std::size_t k = 0; k < term.x_exponents.size(); ++k)
      v *= ipow(x[static_cast<Eigen::Index>(k)], term.x_exponents[k]);
    for (std::size_t k = 0; k < term.x_hat_exponents.size(); ++k)
      v *= ipow(x_hat[static_cast<Eigen::Index>(k)], term.x_hat_exponents[k]);
  }
  return v;
}

Vec eval_basis(const BasisSpec& basis, const Vec& x, const Vec& x_hat) {
  if (x.size() != x_hat.size()) throw ShapeError("basis: x / x_hat dimension mismatch");
  Vec row(basis.size());
  for (int j = 0; j < basis.size(); ++j) row[j] = eval_term(basis.terms[static_cast<std::size_t>(j)], x, x_hat);
  return row;
}

namespace {

BasisTerm diff_term(int state_dim, int axis, int power) {
  BasisTerm t;
  t.kind = BasisTerm::Kind::Diff;
  t.diff_exponents.assign(static_cast<std::size_t>(state_dim), 0);
  if (power > 0) t.diff_exponents[static_cast<std::size_t>(axis)] = power;
  return t;
}

}  // namespace

BasisSpec even_difference_basis(int state_dim, int max_degree) {
  BasisSpec b;
  for (int d = max_degree - (max_degree % 2); d >= 2; d -= 2)
    for (int axis = 0; axis < state_dim; ++axis) b.terms.push_back(diff_term(state_dim, axis, d));
  b.terms.push_back(diff_term(state_dim, 0, 0));
  return b;
}

BasisSpec per_axis_difference_basis(int state_dim, int max_degree) {
  BasisSpec b;
  for (int axis = 0; axis < state_dim; ++axis)
    for (int d = max_degree; d >= 1; --d) b.terms.push_back(diff_term(state_dim, axis, d));
  b.terms.push_back(diff_term(state_dim, 0, 0));
  return b;
}

BasisSpec raise_degree(const BasisSpec& basis, int state_dim, int extra) {
  BasisSpec out = basis;
  // Collect per-axis pure-difference powers already present.
  std::set<std::pair<int, int>> present;
  int top = 0;
  for (const auto& t : basis.terms) {
    if (t.kind != BasisTerm::Kind::Diff) continue;
    int axis = -1, power = 0, nz = 0;
    for (int k = 0; k < state_dim; ++k)
      if (t.diff_exponents[static_cast<std::size_t>(k)] > 0) {
        ++nz;
        axis = k;
        power = t.diff_exponents[static_cast<std::size_t>(k)];
      }
    if (nz == 1) {
      present.insert({axis, power});
      top = std::max(top, power);
    }
  }
  const bool even_only = std::all_of(present.begin(), present.end(),
                                     [](const std::pair<int, int>& ap) { return ap.second % 2 == 0; });
  const int step = even_only ? 2 : 1;
  for (int d = top + step; d <= top + extra; d += step)
    for (int axis = 0; axis < state_dim; ++axis)
      if (!present.count({axis, d})) out.terms.insert(out.terms.begin(), diff_term(state_dim, axis, d));
  return out;
}

nlohmann::ordered_json basis_to_json(const BasisSpec& basis) {
  nlohmann::ordered_json j;
  j["terms"] = nlohmann::ordered_json::array();
  for (const auto& t : basis.terms) {
    nlohmann::ordered_json tj;
    if (t.kind == BasisTerm::Kind::Diff) {
      tj["kind"] = t.is_constant() ? "const" : "diff";
      tj["exponents"] = t.diff_exponents;
    } else {
      tj["kind"] = "pair";
      tj["x_exponents"] = t.x_exponents;
      tj["x_hat_exponents"] = t.x_hat_exponents;
    }
    j["terms"].push_back(tj);
  }
  j["coef_bound"] = basis.coef_bound;
  j["const_bound"] = basis.const_bound;
  return j;
}

BasisSpec basis_from_json(const nlohmann::json& j) {
  BasisSpec b;
  for (const auto& tj : j.at("terms")) {
    BasisTerm t;
    const std::string kind = tj.at("kind").get<std::string>();
    if (kind == "diff" || kind == "const") {
      t.kind = BasisTerm::Kind::Diff;
      if (tj.contains("exponents")) t.diff_exponents = tj.at("exponents").get<std::vector<int>>();
    } else if (kind == "pair") {
      t.kind = BasisTerm::Kind::Pair;
      t.x_exponents = tj.at("x_exponents").get<std::vector<int>>();
      t.x_hat_exponents = tj.at("x_hat_exponents").get<std::vector<int>>();
    } else {
      throw ConfigError("basis: unknown term kind '" + kind + "'");
    }
    b.terms.push_back(std::move(t));
  }
  if (j.contains("coef_bound")) b.coef_bound = j.at("coef_bound").get<double>();
  if (j.contains("const_bound")) b.const_bound = j.at("const_bound").get<double>();
  return b;
}

}  // namespace datasym
