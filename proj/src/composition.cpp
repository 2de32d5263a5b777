#include "datasym/composition.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace datasym {

CompositionCertificate check_condition(const std::vector<SubsystemTerm>& parts) {
  if (parts.empty()) throw ConfigError("composition: empty part list");
  for (const auto& p : parts) {
    if (!(p.varpi > 0.0)) throw ConfigError("composition: every varpi must be positive");
    if (p.L < 0.0 || p.sigma < 0.0) throw ConfigError("composition: L and sigma must be non-negative");
  }
  CompositionCertificate cert;
  cert.per_subsystem = parts;
  double total = 0.0;
  for (const auto& p : parts) total += p.term();
  cert.total = total;
  cert.pass = total <= 0.0;
  return cert;
}

AbfParams abf_params(const std::vector<AsbfSolution>& solutions) {
  if (solutions.empty()) throw ConfigError("composition: empty solution list");
  AbfParams p;
  p.gamma = solutions.front().gamma;
  p.alpha = solutions.front().alpha;
  p.psi = 0.0;
  for (const auto& s : solutions) {
    p.gamma = std::max(p.gamma, s.gamma);
    p.alpha = std::min(p.alpha, s.alpha);
    p.psi += s.psi;
  }
  return p;
}

EpsilonBound epsilon_bound(double psi, double alpha, double gamma, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("composition: eta must lie in (0,1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("composition: gamma must lie in (0,1)");
  if (!(alpha > 0.0)) throw ConfigError("composition: alpha must be positive");
  if (!(psi > 0.0)) throw ConfigError("composition: psi must be positive");
  EpsilonBound b;
  b.psi_bar = psi / ((1.0 - gamma) * eta);
  b.epsilon = std::sqrt(b.psi_bar / alpha);
  return b;
}

CompositionCertificate compose_certificate(const std::vector<AsbfSolution>& solutions,
                                           const std::vector<SubsystemTerm>& parts, double eta) {
  if (solutions.size() != parts.size())
    throw ShapeError("composition: solutions and parts must have equal length");
  CompositionCertificate cert = check_condition(parts);
  const AbfParams p = abf_params(solutions);
  cert.gamma = p.gamma;
  cert.alpha = p.alpha;
  cert.psi = p.psi;
  cert.eta = eta;
  cert.gamma_bar = 1.0 - (1.0 - eta) * (1.0 - p.gamma);
  const EpsilonBound b = epsilon_bound(p.psi, p.alpha, p.gamma, eta);
  cert.psi_bar = b.psi_bar;
  cert.epsilon = b.epsilon;
  return cert;
}

double evaluate_abf(const std::vector<AsbfSolution>& solutions, const Vec& x, const Vec& x_hat) {
  if (x.size() != x_hat.size()) throw ShapeError("abf: stacked state dimension mismatch");
  Eigen::Index off = 0;
  double v = 0.0;
  for (const auto& s : solutions) {
    const Eigen::Index n = static_cast<Eigen::Index>(s.basis.terms.front().kind == BasisTerm::Kind::Diff
                                                         ? s.basis.terms.front().diff_exponents.size()
                                                         : s.basis.terms.front().x_exponents.size());
    if (off + n > x.size()) throw ShapeError("abf: stacked state too short for the solution list");
    v += evaluate_asbf(s, x.segment(off, n), x_hat.segment(off, n));
    off += n;
  }
  if (off != x.size()) throw ShapeError("abf: stacked state too long for the solution list");
  return v;
}

nlohmann::ordered_json certificate_to_json(const CompositionCertificate& cert) {
  nlohmann::ordered_json j;
  j["per_subsystem"] = nlohmann::ordered_json::array();
  for (const auto& p : cert.per_subsystem) {
    nlohmann::ordered_json pj;
    pj["mu"] = p.mu;
    pj["varpi"] = p.varpi;
    pj["L"] = p.L;
    pj["sigma"] = p.sigma;
    pj["term"] = p.term();
    j["per_subsystem"].push_back(pj);
  }
  j["total"] = cert.total;
  j["pass"] = cert.pass;
  j["gamma"] = cert.gamma;
  j["alpha"] = cert.alpha;
  j["psi"] = cert.psi;
  j["eta"] = cert.eta;
  j["gamma_bar"] = cert.gamma_bar;
  j["psi_bar"] = cert.psi_bar;
  j["epsilon"] = cert.epsilon;
  j["digests"] = cert.digests;
  return j;
}

CompositionCertificate certificate_from_json(const nlohmann::json& j) {
  CompositionCertificate cert;
  for (const auto& pj : j.at("per_subsystem")) {
    SubsystemTerm p;
    p.mu = pj.at("mu").get<double>();
    p.varpi = pj.at("varpi").get<double>();
    p.L = pj.at("L").get<double>();
    p.sigma = pj.at("sigma").get<double>();
    cert.per_subsystem.push_back(p);
  }
  cert.total = j.at("total").get<double>();
  cert.pass = j.at("pass").get<bool>();
  cert.gamma = j.at("gamma").get<double>();
  cert.alpha = j.at("alpha").get<double>();
  cert.psi = j.at("psi").get<double>();
  cert.eta = j.at("eta").get<double>();
  cert.gamma_bar = j.at("gamma_bar").get<double>();
  cert.psi_bar = j.at("psi_bar").get<double>();
  cert.epsilon = j.at("epsilon").get<double>();
  if (j.contains("digests")) cert.digests = j.at("digests").get<std::map<std::string, std::string>>();
  return cert;
}

void save_certificate(const CompositionCertificate& cert, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("certificate: cannot write " + path);
  out << certificate_to_json(cert).dump(2) << "\n";
}

CompositionCertificate load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("certificate: cannot read " + path);
  return certificate_from_json(nlohmann::json::parse(in));
}

}  // namespace datasym
