// Lipschitz-constant estimation from data: sample nearby pairs, take batch
// maxima of difference quotients, fit a Reverse Weibull distribution to the
// maxima and report its location parameter (the upper support endpoint).
#ifndef DATASYM_LIPSCHITZ_HPP
#define DATASYM_LIPSCHITZ_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "datasym/box.hpp"
#include "datasym/oracle.hpp"
#include "datasym/sop.hpp"
#include "datasym/symbolic.hpp"

namespace datasym {

struct LipschitzConfig {
  double pair_distance_cap = 1e-3;  // max distance between paired points
  int pairs_per_batch = 200;
  int batches = 50;
  int tuples_per_input = 16;  // abstract tuple subsample per input
  std::uint64_t seed = 0;

  void validate() const;
};

struct WeibullFit {
  double location = 0.0;
  double scale = 0.0;
  double shape = 0.0;
  bool degenerate = false;  // all maxima equal; location is their common value
  bool fallback = false;    // likelihood failed; location = max * 1.05
};

// Maximum-likelihood fit of the Reverse Weibull family
//   F(x) = exp(-((location - x)/scale)^shape), x <= location,
// profiled over the location with the constraint location >= max(maxima).
WeibullFit fit_reverse_weibull(const std::vector<double>& maxima);

struct SlopeEstimate {
  double value = 0.0;  // fitted location, never below the observed max slope
  WeibullFit fit;
  std::vector<double> batch_maxima;
};

// Batch-maximum slope estimation of one scalar target on a box domain.
SlopeEstimate estimate_slope(const std::function<double(const Vec&)>& target, const Box& domain,
                             const LipschitzConfig& cfg, std::uint64_t stream);

struct LipschitzEstimate {
  double L1 = 0.0;
  double L2 = 0.0;
  double L = 0.0;  // max(L1, L2)
  WeibullFit fit1;
  WeibullFit fit2;
  std::vector<double> batch_maxima1;  // of the worst tuple for each target
  std::vector<double> batch_maxima2;
  std::vector<double> per_tuple_L1;  // spread across the tuple subsample
  std::vector<double> per_tuple_L2;
};

// Slope of G2(x, w) = V*(f(x,u,w), fhat(xhat,u,what)) - gamma* V*(x, xhat)
// over X x W, maximized over a subsample of abstract tuples. Queries the
// oracle afresh.
SlopeEstimate estimate_L2(const SubsystemOracle& oracle, const AsbfSolution& sol, const SymbolicModel& sm,
                          const LipschitzConfig& cfg, LipschitzEstimate* detail = nullptr);

// Slope of G1(x) = alpha* ||x - xhat||^2 - V*(x, xhat) over X; oracle-free.
SlopeEstimate estimate_L1(const AsbfSolution& sol, const SymbolicModel& sm, const LipschitzConfig& cfg,
                          LipschitzEstimate* detail = nullptr);

// Runs both targets and combines L = max(L1, L2).
LipschitzEstimate estimate_lipschitz(const SubsystemOracle& oracle, const AsbfSolution& sol,
                                     const SymbolicModel& sm, const LipschitzConfig& cfg);

nlohmann::ordered_json lipschitz_to_json(const LipschitzEstimate& est, const LipschitzConfig& cfg);
LipschitzEstimate lipschitz_from_json(const nlohmann::json& j);

}  // namespace datasym

#endif
