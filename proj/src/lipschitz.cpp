#include "datasym/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "datasym/parallel.hpp"
#include "datasym/rng.hpp"

namespace datasym {

void LipschitzConfig::validate() const {
  if (!(pair_distance_cap > 0.0)) throw ConfigError("lipschitz: pair distance cap must be positive");
  if (pairs_per_batch < 1 || batches < 1) throw ConfigError("lipschitz: batch counts must be >= 1");
  if (tuples_per_input < 1) throw ConfigError("lipschitz: tuple subsample must be >= 1");
}

namespace {

// Weibull MLE in (shape, scale) for positive data y, shape restricted to
// [1, 60] so the profile likelihood over the location stays bounded.
struct InnerFit {
  double shape = 1.0;
  double scale = 1.0;
  double loglik = -std::numeric_limits<double>::infinity();
};

InnerFit weibull_inner_mle(const std::vector<double>& y) {
  const std::size_t n = y.size();
  double mean_log = 0.0;
  for (double v : y) mean_log += std::log(v);
  mean_log /= static_cast<double>(n);

  auto g = [&](double k) {
    double num = 0.0, den = 0.0;
    for (double v : y) {
      const double p = std::pow(v, k);
      num += p * std::log(v);
      den += p;
    }
    return num / den - 1.0 / k - mean_log;
  };

  double lo = 1.0, hi = 60.0;
  double k;
  if (g(lo) >= 0.0) {
    k = lo;
  } else if (g(hi) <= 0.0) {
    k = hi;
  } else {
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < 0.0 ? lo : hi) = mid;
    }
    k = 0.5 * (lo + hi);
  }

  double mk = 0.0;
  for (double v : y) mk += std::pow(v, k);
  mk /= static_cast<double>(n);
  const double lambda = std::pow(mk, 1.0 / k);

  InnerFit fit;
  fit.shape = k;
  fit.scale = lambda;
  fit.loglik = static_cast<double>(n) * (std::log(k) - k * std::log(lambda) - 1.0) + (k - 1.0) * mean_log * static_cast<double>(n);
  return fit;
}

}  // namespace

WeibullFit fit_reverse_weibull(const std::vector<double>& maxima) {
  if (maxima.size() < 5) throw ConfigError("weibull: needs at least 5 batch maxima");
  WeibullFit out;
  const double mmax = *std::max_element(maxima.begin(), maxima.end());
  const double mmin = *std::min_element(maxima.begin(), maxima.end());
  const double span = mmax - mmin;
  const double scale_ref = std::max(1.0, std::abs(mmax));

  if (span <= 1e-12 * scale_ref) {
    out.location = mmax;
    out.scale = 0.0;
    out.shape = 0.0;
    out.degenerate = true;
    return out;
  }

  // Profile likelihood over the location by golden-section search; for a
  // fixed location the remaining Weibull parameters have a 1-D MLE.
  auto profile = [&maxima, mmax](double loc) {
    std::vector<double> y;
    y.reserve(maxima.size());
    for (double v : maxima) y.push_back(std::max(loc - v, 1e-300));
    (void)mmax;
    return weibull_inner_mle(y);
  };

  const double lo0 = mmax + 1e-9 * scale_ref;
  const double hi0 = mmax + 3.0 * span;
  const double gr = 0.6180339887498949;
  double a = lo0, b = hi0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = profile(x1).loglik, f2 = profile(x2).loglik;
  for (int it = 0; it < 80; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = profile(x1).loglik;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = profile(x2).loglik;
    }
  }
  const double loc = 0.5 * (a + b);
  const InnerFit inner = profile(loc);
  if (!std::isfinite(inner.loglik)) {
    out.location = mmax * 1.05;
    out.scale = span;
    out.shape = 1.0;
    out.fallback = true;
    return out;
  }
  out.location = std::max(loc, mmax);
  out.scale = inner.scale;
  out.shape = inner.shape;
  return out;
}

SlopeEstimate estimate_slope(const std::function<double(const Vec&)>& target, const Box& domain,
                             const LipschitzConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const int d = domain.dim();
  SlopeEstimate est;
  est.batch_maxima.assign(static_cast<std::size_t>(cfg.batches), 0.0);

  parallel_for(cfg.batches, [&](std::int64_t batch) {
    Rng rng(derive_seed(cfg.seed, stream, static_cast<std::uint64_t>(batch)));
    double batch_max = 0.0;
    for (int z = 0; z < cfg.pairs_per_batch; ++z) {
      Vec p, q;
      double dist = 0.0;
      for (int attempt = 0; attempt < 256; ++attempt) {
        p = rng.in_box(domain);
        const Vec dir = rng.on_sphere(d);
        const double radius = cfg.pair_distance_cap * std::pow(rng.unit(), 1.0 / d);
        q = p + radius * dir;
        if (!domain.contains(q)) continue;
        dist = (p - q).norm();
        if (dist > 1e-14 * (1.0 + cfg.pair_distance_cap)) break;
        dist = 0.0;
      }
      if (dist <= 0.0) continue;  // degenerate draws exhausted; skip the pair
      const double slope = std::abs(target(p) - target(q)) / dist;
      batch_max = std::max(batch_max, slope);
    }
    est.batch_maxima[static_cast<std::size_t>(batch)] = batch_max;
  });

  est.fit = fit_reverse_weibull(est.batch_maxima);
  est.value = est.fit.location;
  return est;
}

namespace {

Box joint_domain(const SymbolicModel& sm) {
  const Box& xb = sm.state_grid.box();
  const Box& wb = sm.dist_grid.box();
  Vec lo(xb.dim() + wb.dim()), hi(xb.dim() + wb.dim());
  lo << xb.lower, wb.lower;
  hi << xb.upper, wb.upper;
  return Box(lo, hi);
}

// Deterministic subsample of admissible tuples (L2) / abstract states (L1).
std::vector<std::pair<int, std::pair<std::int64_t, std::int64_t>>> tuple_subsample(const SymbolicModel& sm,
                                                                                   int per_input,
                                                                                   std::uint64_t seed) {
  std::vector<std::pair<int, std::pair<std::int64_t, std::int64_t>>> out;
  const TupleSelection admissible = admissible_tuples(sm);
  for (int u = 0; u < sm.n_inputs(); ++u) {
    const auto& pool = admissible[static_cast<std::size_t>(u)];
    if (pool.empty()) continue;
    Rng rng(derive_seed(seed, 0x717e, static_cast<std::uint64_t>(u)));
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.integer(i))]);
    for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(per_input), order.size()); ++i)
      out.push_back({u, pool[order[i]]});
  }
  return out;
}

}  // namespace

SlopeEstimate estimate_L2(const SubsystemOracle& oracle, const AsbfSolution& sol, const SymbolicModel& sm,
                          const LipschitzConfig& cfg, LipschitzEstimate* detail) {
  cfg.validate();
  const Box domain = joint_domain(sm);
  const int nx = sm.state_grid.dim();
  const auto tuples = tuple_subsample(sm, cfg.tuples_per_input, cfg.seed);
  if (tuples.empty()) throw ConfigError("lipschitz: no admissible abstract tuples");

  SlopeEstimate best;
  best.value = -1.0;
  std::vector<double> per_tuple;
  per_tuple.reserve(tuples.size());
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const int u = tuples[t].first;
    const std::int64_t s = tuples[t].second.first;
    const std::int64_t w = tuples[t].second.second;
    const Vec x_hat = sm.state_grid.representative(s);
    const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
    const Vec x_hat_next = sm.state_grid.representative(static_cast<std::int64_t>(succ));
    const Vec u_vec = sm.input_set[static_cast<std::size_t>(u)];

    auto target = [&](const Vec& joint) {
      const Vec x = joint.head(nx);
      const Vec wv = joint.tail(joint.size() - nx);
      const Vec x_next = oracle.step_fn(x, u_vec, wv);
      return evaluate_asbf(sol, x_next, x_hat_next) - sol.gamma * evaluate_asbf(sol, x, x_hat);
    };
    SlopeEstimate est = estimate_slope(target, domain, cfg, (0xB2ull << 32) | static_cast<std::uint64_t>(t));
    per_tuple.push_back(est.value);
    if (est.value > best.value) best = std::move(est);
  }
  if (detail) {
    detail->per_tuple_L2 = per_tuple;
    detail->L2 = best.value;
    detail->fit2 = best.fit;
    detail->batch_maxima2 = best.batch_maxima;
  }
  return best;
}

SlopeEstimate estimate_L1(const AsbfSolution& sol, const SymbolicModel& sm, const LipschitzConfig& cfg,
                          LipschitzEstimate* detail) {
  cfg.validate();
  const Box& domain = sm.state_grid.box();
  Rng rng(derive_seed(cfg.seed, 0x117e));
  std::vector<std::int64_t> states(static_cast<std::size_t>(sm.n_states()));
  for (std::size_t i = 0; i < states.size(); ++i) states[i] = static_cast<std::int64_t>(i);
  for (std::size_t i = states.size(); i > 1; --i)
    std::swap(states[i - 1], states[static_cast<std::size_t>(rng.integer(i))]);
  const std::size_t take = std::min<std::size_t>(states.size(), static_cast<std::size_t>(cfg.tuples_per_input));

  SlopeEstimate best;
  best.value = -1.0;
  std::vector<double> per_tuple;
  for (std::size_t t = 0; t < take; ++t) {
    const Vec x_hat = sm.state_grid.representative(states[t]);
    auto target = [&](const Vec& x) {
      return sol.alpha * (x - x_hat).squaredNorm() - evaluate_asbf(sol, x, x_hat);
    };
    SlopeEstimate est = estimate_slope(target, domain, cfg, (0xB1ull << 32) | static_cast<std::uint64_t>(t));
    per_tuple.push_back(est.value);
    if (est.value > best.value) best = std::move(est);
  }
  if (detail) {
    detail->per_tuple_L1 = per_tuple;
    detail->L1 = best.value;
    detail->fit1 = best.fit;
    detail->batch_maxima1 = best.batch_maxima;
  }
  return best;
}

LipschitzEstimate estimate_lipschitz(const SubsystemOracle& oracle, const AsbfSolution& sol,
                                     const SymbolicModel& sm, const LipschitzConfig& cfg) {
  LipschitzEstimate est;
  estimate_L1(sol, sm, cfg, &est);
  estimate_L2(oracle, sol, sm, cfg, &est);
  est.L = std::max(est.L1, est.L2);
  return est;
}

namespace {

nlohmann::ordered_json fit_to_json(const WeibullFit& f) {
  nlohmann::ordered_json j;
  j["location"] = f.location;
  j["scale"] = f.scale;
  j["shape"] = f.shape;
  j["degenerate"] = f.degenerate;
  j["fallback"] = f.fallback;
  return j;
}

WeibullFit fit_from_json(const nlohmann::json& j) {
  WeibullFit f;
  f.location = j.at("location").get<double>();
  f.scale = j.at("scale").get<double>();
  f.shape = j.at("shape").get<double>();
  f.degenerate = j.value("degenerate", false);
  f.fallback = j.value("fallback", false);
  return f;
}

}  // namespace

nlohmann::ordered_json lipschitz_to_json(const LipschitzEstimate& est, const LipschitzConfig& cfg) {
  nlohmann::ordered_json j;
  j["L1"] = est.L1;
  j["L2"] = est.L2;
  j["L"] = est.L;
  j["weibull"] = nlohmann::ordered_json::object();
  j["weibull"]["L1"] = fit_to_json(est.fit1);
  j["weibull"]["L2"] = fit_to_json(est.fit2);
  j["batch_maxima"] = nlohmann::ordered_json::object();
  j["batch_maxima"]["L1"] = est.batch_maxima1;
  j["batch_maxima"]["L2"] = est.batch_maxima2;
  j["per_tuple"] = nlohmann::ordered_json::object();
  j["per_tuple"]["L1"] = est.per_tuple_L1;
  j["per_tuple"]["L2"] = est.per_tuple_L2;
  j["config"] = nlohmann::ordered_json::object();
  j["config"]["pair_distance_cap"] = cfg.pair_distance_cap;
  j["config"]["pairs_per_batch"] = cfg.pairs_per_batch;
  j["config"]["batches"] = cfg.batches;
  j["config"]["tuples_per_input"] = cfg.tuples_per_input;
  j["config"]["seed"] = cfg.seed;
  return j;
}

LipschitzEstimate lipschitz_from_json(const nlohmann::json& j) {
  LipschitzEstimate est;
  est.L1 = j.at("L1").get<double>();
  est.L2 = j.at("L2").get<double>();
  est.L = j.at("L").get<double>();
  est.fit1 = fit_from_json(j.at("weibull").at("L1"));
  est.fit2 = fit_from_json(j.at("weibull").at("L2"));
  est.batch_maxima1 = j.at("batch_maxima").at("L1").get<std::vector<double>>();
  est.batch_maxima2 = j.at("batch_maxima").at("L2").get<std::vector<double>>();
  est.per_tuple_L1 = j.at("per_tuple").at("L1").get<std::vector<double>>();
  est.per_tuple_L2 = j.at("per_tuple").at("L2").get<std::vector<double>>();
  return est;
}

}  // namespace datasym
