// Network-level certificate assembly: the per-subsystem condition
// sum_i (mu_i + varpi_i + L_i sigma_i) <= 0, the network parameters
// gamma = max gamma_i, alpha = min alpha_i, psi = sum psi_i, and the
// invariant level psi_bar = psi / ((1-gamma) eta) with error bound
// epsilon = sqrt(psi_bar / alpha).
#ifndef DATASYM_COMPOSITION_HPP
#define DATASYM_COMPOSITION_HPP

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "datasym/sop.hpp"

namespace datasym {

struct SubsystemTerm {
  double mu = 0.0;
  double varpi = 0.0;
  double L = 0.0;
  double sigma = 0.0;

  double term() const { return mu + varpi + L * sigma; }
};

struct CompositionCertificate {
  std::vector<SubsystemTerm> per_subsystem;
  double total = 0.0;
  bool pass = false;
  double gamma = 0.0;
  double alpha = 0.0;
  double psi = 0.0;
  double eta = 0.0;
  double gamma_bar = 0.0;
  double psi_bar = 0.0;
  double epsilon = 0.0;
  std::map<std::string, std::string> digests;
};

// Arithmetic of the condition only; network parameters left zero.
CompositionCertificate check_condition(const std::vector<SubsystemTerm>& parts);

struct AbfParams {
  double gamma = 0.0;
  double alpha = 0.0;
  double psi = 0.0;
};

AbfParams abf_params(const std::vector<AsbfSolution>& solutions);

struct EpsilonBound {
  double psi_bar = 0.0;
  double epsilon = 0.0;
};

EpsilonBound epsilon_bound(double psi, double alpha, double gamma, double eta);

// Full certificate from per-subsystem solutions and their (L, sigma) pairs.
CompositionCertificate compose_certificate(const std::vector<AsbfSolution>& solutions,
                                           const std::vector<SubsystemTerm>& parts, double eta);

// Sum of the per-subsystem certificate values on stacked states.
double evaluate_abf(const std::vector<AsbfSolution>& solutions, const Vec& x, const Vec& x_hat);

inline bool relation_contains(const std::vector<AsbfSolution>& solutions, double psi_bar, const Vec& x,
                              const Vec& x_hat) {
  return evaluate_abf(solutions, x, x_hat) <= psi_bar;
}

nlohmann::ordered_json certificate_to_json(const CompositionCertificate& cert);
CompositionCertificate certificate_from_json(const nlohmann::json& j);
void save_certificate(const CompositionCertificate& cert, const std::string& path);
CompositionCertificate load_certificate(const std::string& path);

}  // namespace datasym

#endif
