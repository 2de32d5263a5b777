// Scenario program for contraction certificates. For a fixed gamma the
// constraint families are linear in [q; alpha; rho; psi; mu; varpi]:
//   (F0)  -V(q, x_z, xhat)                                    <= mu
//   (F3)  alpha ||x_z - xhat||^2 - V(q, x_z, xhat)            <= mu
//   (F4)  V(q, xnext_z, fhat(xhat,u_z,what)) - gamma V(q, x_z, xhat)
//           - rho ||w_z - what|| - psi                        <= mu
//   (F5)  rho ||w_z - what||                                  <= varpi
// quantified over samples z and abstract tuples with matching input. The
// programs are solved per gamma over a finite grid, with a cutting-plane loop
// over the abstract tuples and a lexicographic objective
// (mu + varpi, then psi down, then alpha up).
#ifndef DATASYM_SOP_HPP
#define DATASYM_SOP_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "datasym/basis.hpp"
#include "datasym/lp.hpp"
#include "datasym/sampling.hpp"
#include "datasym/symbolic.hpp"

namespace datasym {

struct SopOptions {
  std::vector<double> gamma_grid = {0.9, 0.95, 0.975, 0.985, 0.99, 0.995};
  double alpha_min = 1e-2;
  double alpha_max = 100.0;
  double psi_min = 1e-6;
  double psi_max = 100.0;
  double varpi_min = 1e-6;
  double varpi_max = 100.0;
  double rho_max = 100.0;
  double mu_abs_bound = 1000.0;
  int initial_tuples_per_input = 32;
  int max_rounds = 64;
  int max_added_per_round = 64;
  double violation_tol = 1e-8;
  double phase_slack = 1e-9;
  std::uint64_t seed = 0;
  LpOptions lp;
};

struct AsbfSolution {
  BasisSpec basis;
  Vec q;
  double alpha = 0.0;
  double gamma = 0.0;
  double rho = 0.0;
  double psi = 0.0;
  double mu = 0.0;
  double varpi = 0.0;
  double feasibility_residual = 0.0;
  std::string dataset_digest;

  double objective() const { return mu + varpi; }
};

// V*(x, xhat) of a solved certificate.
inline double evaluate_asbf(const AsbfSolution& sol, const Vec& x, const Vec& x_hat) {
  return eval_value(sol.basis, sol.q, x, x_hat);
}

// An abstract tuple is a (state cell, disturbance cell) pair; tuples are
// selected per input index. Tuples whose image under the matching input is
// SINK are not admissible: the certificate quantifies over the symbolic map,
// which is undefined there.
using TupleSelection = std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>>;

// All admissible (non-SINK) tuples per input.
TupleSelection admissible_tuples(const SymbolicModel& sm);

// Literal scenario program for one gamma: emits the four families for every
// (sample, selected tuple with matching input), in that order. Variable
// layout: [q_0..q_{r-1}, alpha, rho, psi, mu, varpi]; phase-1 objective.
LinearProgram assemble_sop(const Dataset& dataset, const SymbolicModel& sm, const BasisSpec& basis,
                           double gamma, const TupleSelection& selection, const SopOptions& opts = {});

struct SopDiagnostics {
  std::vector<double> gamma_objectives;  // phase-1 optimum per grid gamma (NaN = infeasible)
  int rounds = 0;
  int working_rows = 0;
  double final_scan_violation = 0.0;
};

AsbfSolution solve_sop(const Dataset& dataset, const SymbolicModel& sm, const BasisSpec& basis,
                       const SopOptions& opts, SopDiagnostics* diag = nullptr);

struct ResidualReport {
  double f0 = 0.0;
  double f3 = 0.0;
  double f4 = 0.0;
  double f5 = 0.0;
  double max() const;
};

// Recomputes every constraint row of the full program (all samples, all
// abstract states/disturbances, admissible tuples) at the given solution.
ResidualReport residuals(const AsbfSolution& sol, const Dataset& dataset, const SymbolicModel& sm);

nlohmann::ordered_json asbf_to_json(const AsbfSolution& sol);
AsbfSolution asbf_from_json(const nlohmann::json& j);
void save_asbf(const AsbfSolution& sol, const std::string& path);
AsbfSolution load_asbf(const std::string& path);

}  // namespace datasym

#endif
