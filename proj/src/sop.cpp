#include "datasym/sop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "datasym/parallel.hpp"
#include "datasym/rng.hpp"

namespace datasym {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Family : int { F0 = 0, F3 = 1, F4 = 2, F5 = 3 };

struct RowKey {
  int family;
  int z;
  std::int64_t s;  // abstract state cell; -1 for F5
  std::int64_t w;  // abstract disturbance cell; -1 for F0/F3

  bool operator<(const RowKey& o) const {
    if (family != o.family) return family < o.family;
    if (z != o.z) return z < o.z;
    if (s != o.s) return s < o.s;
    return w < o.w;
  }
};

struct Layout {
  int r;
  int ia, irho, ipsi, imu, ivarpi, n;
  explicit Layout(int basis_terms)
      : r(basis_terms), ia(r), irho(r + 1), ipsi(r + 2), imu(r + 3), ivarpi(r + 4), n(r + 5) {}
};

struct Problem {
  const Dataset& dataset;
  const SymbolicModel& sm;
  const BasisSpec& basis;
  Layout lay;
  std::vector<Vec> state_reps;
  std::vector<Vec> dist_reps;

  Problem(const Dataset& ds, const SymbolicModel& model, const BasisSpec& b)
      : dataset(ds), sm(model), basis(b), lay(b.size()) {
    state_reps.reserve(static_cast<std::size_t>(sm.n_states()));
    for (std::int64_t s = 0; s < sm.n_states(); ++s) state_reps.push_back(sm.state_grid.representative(s));
    dist_reps.reserve(static_cast<std::size_t>(sm.n_dists()));
    for (std::int64_t w = 0; w < sm.n_dists(); ++w) dist_reps.push_back(sm.dist_grid.representative(w));
    for (std::size_t z = 0; z < ds.pairs.size(); ++z)
      if (ds.pairs[z].u_index < 0 || ds.pairs[z].u_index >= sm.n_inputs())
        throw AssemblyError("sop: sample input index outside the symbolic model input set");
  }

  std::uint32_t successor(std::int64_t s, int u, std::int64_t w) const {
    return sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
  }

  void fill_row(const RowKey& k, double gamma,
                Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
    row.setZero();
    const SamplePair& sp = dataset.pairs[static_cast<std::size_t>(k.z)];
    switch (k.family) {
      case F0: {
        const Vec p = eval_basis(basis, sp.x, state_reps[static_cast<std::size_t>(k.s)]);
        row.head(lay.r) = -p.transpose();
        row[lay.imu] = -1.0;
        break;
      }
      case F3: {
        const Vec& rep = state_reps[static_cast<std::size_t>(k.s)];
        const Vec p = eval_basis(basis, sp.x, rep);
        row.head(lay.r) = -p.transpose();
        row[lay.ia] = (sp.x - rep).squaredNorm();
        row[lay.imu] = -1.0;
        break;
      }
      case F4: {
        const std::uint32_t succ = successor(k.s, sp.u_index, k.w);
        if (succ == SymbolicModel::kSink) throw AssemblyError("sop: tuple with SINK image in row build");
        const Vec p_cur = eval_basis(basis, sp.x, state_reps[static_cast<std::size_t>(k.s)]);
        const Vec p_next = eval_basis(basis, sp.x_next, state_reps[static_cast<std::size_t>(succ)]);
        row.head(lay.r) = (p_next - gamma * p_cur).transpose();
        row[lay.irho] = -(sp.w - dist_reps[static_cast<std::size_t>(k.w)]).norm();
        row[lay.ipsi] = -1.0;
        row[lay.imu] = -1.0;
        break;
      }
      case F5: {
        row[lay.irho] = (sp.w - dist_reps[static_cast<std::size_t>(k.w)]).norm();
        row[lay.ivarpi] = -1.0;
        break;
      }
    }
  }
};

struct Theta {
  Vec q;
  double alpha, rho, psi, mu, varpi;

  static Theta unpack(const Vec& x, const Layout& lay) {
    Theta t;
    t.q = x.head(lay.r);
    t.alpha = x[lay.ia];
    t.rho = x[lay.irho];
    t.psi = x[lay.ipsi];
    t.mu = x[lay.imu];
    t.varpi = x[lay.ivarpi];
    return t;
  }
};

struct ScanHit {
  double violation;
  RowKey key;
};

bool hit_order(const ScanHit& a, const ScanHit& b) {
  if (a.violation != b.violation) return a.violation > b.violation;
  return a.key < b.key;
}

// Evaluates every row of the full program at theta. Collects up to `cap` most
// violated rows above tol (cap 0 = report maxima only).
struct ScanOutcome {
  double max_violation = -std::numeric_limits<double>::infinity();
  double family_max[4] = {-1e300, -1e300, -1e300, -1e300};
  std::vector<ScanHit> top;
};

ScanOutcome scan_full(const Problem& pb, double gamma, const Theta& th, double tol, int cap) {
  const std::int64_t nz = static_cast<std::int64_t>(pb.dataset.pairs.size());
  const std::int64_t ns = pb.sm.n_states();
  const std::int64_t nw = pb.sm.n_dists();
  const int chunks = std::max(1, thread_count());
  const std::int64_t chunk_size = (nz + chunks - 1) / chunks;

  std::vector<ScanOutcome> partial(static_cast<std::size_t>(chunks));
  parallel_for(chunks, [&](std::int64_t c) {
    ScanOutcome& out = partial[static_cast<std::size_t>(c)];
    Vec v0(ns), d2(ns), vn(ns), wd(nw);
    auto push = [&](double viol, const RowKey& key) {
      out.family_max[key.family] = std::max(out.family_max[key.family], viol);
      out.max_violation = std::max(out.max_violation, viol);
      if (cap > 0 && viol > tol) {
        out.top.push_back({viol, key});
        if (static_cast<int>(out.top.size()) > 4 * cap) {
          std::nth_element(out.top.begin(), out.top.begin() + cap, out.top.end(), hit_order);
          out.top.resize(static_cast<std::size_t>(cap));
        }
      }
    };
    for (std::int64_t z = c * chunk_size; z < std::min(nz, (c + 1) * chunk_size); ++z) {
      const SamplePair& sp = pb.dataset.pairs[static_cast<std::size_t>(z)];
      for (std::int64_t s = 0; s < ns; ++s) {
        const Vec& rep = pb.state_reps[static_cast<std::size_t>(s)];
        v0[s] = th.q.dot(eval_basis(pb.basis, sp.x, rep));
        d2[s] = (sp.x - rep).squaredNorm();
        vn[s] = th.q.dot(eval_basis(pb.basis, sp.x_next, rep));
      }
      for (std::int64_t w = 0; w < nw; ++w)
        wd[w] = (sp.w - pb.dist_reps[static_cast<std::size_t>(w)]).norm();

      const int zi = static_cast<int>(z);
      for (std::int64_t s = 0; s < ns; ++s) {
        push(-v0[s] - th.mu, RowKey{F0, zi, s, -1});
        push(th.alpha * d2[s] - v0[s] - th.mu, RowKey{F3, zi, s, -1});
      }
      for (std::int64_t w = 0; w < nw; ++w) push(th.rho * wd[w] - th.varpi, RowKey{F5, zi, -1, w});
      for (std::int64_t s = 0; s < ns; ++s) {
        const double gv = gamma * v0[s];
        for (std::int64_t w = 0; w < nw; ++w) {
          const std::uint32_t succ = pb.successor(s, sp.u_index, w);
          if (succ == SymbolicModel::kSink) continue;
          push(vn[succ] - gv - th.rho * wd[w] - th.psi - th.mu, RowKey{F4, zi, s, w});
        }
      }
    }
    if (cap > 0 && static_cast<int>(out.top.size()) > cap) {
      std::nth_element(out.top.begin(), out.top.begin() + cap, out.top.end(), hit_order);
      out.top.resize(static_cast<std::size_t>(cap));
    }
  });

  ScanOutcome merged;
  for (const auto& p : partial) {
    merged.max_violation = std::max(merged.max_violation, p.max_violation);
    for (int f = 0; f < 4; ++f) merged.family_max[f] = std::max(merged.family_max[f], p.family_max[f]);
    merged.top.insert(merged.top.end(), p.top.begin(), p.top.end());
  }
  std::sort(merged.top.begin(), merged.top.end(), hit_order);
  if (cap > 0 && static_cast<int>(merged.top.size()) > cap) merged.top.resize(static_cast<std::size_t>(cap));
  return merged;
}

void set_bounds(LinearProgram& lp, const BasisSpec& basis, const Layout& lay, const SopOptions& opts) {
  lp.lower = Vec::Zero(lay.n);
  lp.upper = Vec::Zero(lay.n);
  for (int j = 0; j < lay.r; ++j) {
    const double b = basis.terms[static_cast<std::size_t>(j)].is_constant() ? basis.const_bound : basis.coef_bound;
    lp.lower[j] = -b;
    lp.upper[j] = b;
  }
  lp.lower[lay.ia] = opts.alpha_min;
  lp.upper[lay.ia] = opts.alpha_max;
  lp.lower[lay.irho] = 0.0;
  lp.upper[lay.irho] = opts.rho_max;
  lp.lower[lay.ipsi] = opts.psi_min;
  lp.upper[lay.ipsi] = opts.psi_max;
  lp.lower[lay.imu] = -opts.mu_abs_bound;
  lp.upper[lay.imu] = opts.mu_abs_bound;
  lp.lower[lay.ivarpi] = opts.varpi_min;
  lp.upper[lay.ivarpi] = opts.varpi_max;
}

LinearProgram lp_from_keys(const Problem& pb, const std::vector<RowKey>& keys, double gamma,
                           const SopOptions& opts, int extra_rows) {
  LinearProgram lp;
  const Layout& lay = pb.lay;
  lp.objective = Vec::Zero(lay.n);
  lp.rows = Mat::Zero(static_cast<Eigen::Index>(keys.size()) + extra_rows, lay.n);
  lp.rhs = Vec::Zero(static_cast<Eigen::Index>(keys.size()) + extra_rows);
  parallel_for(static_cast<std::int64_t>(keys.size()), [&](std::int64_t i) {
    pb.fill_row(keys[static_cast<std::size_t>(i)], gamma, lp.rows.row(static_cast<Eigen::Index>(i)));
  });
  set_bounds(lp, pb.basis, lay, opts);
  return lp;
}

struct PhasedSolve {
  bool feasible = false;
  Vec theta;
  double opt1 = kNaN;
};

// Lexicographic solve on the given working rows: minimize mu + varpi, then
// psi, then maximize alpha, each phase constrained to the previous optimum
// plus a small slack.
PhasedSolve solve_phases(const Problem& pb, const std::vector<RowKey>& keys, double gamma,
                         const SopOptions& opts, bool full_phases) {
  const Layout& lay = pb.lay;
  LinearProgram lp = lp_from_keys(pb, keys, gamma, opts, full_phases ? 2 : 0);
  const Eigen::Index base = static_cast<Eigen::Index>(keys.size());

  PhasedSolve out;
  lp.objective.setZero();
  lp.objective[lay.imu] = 1.0;
  lp.objective[lay.ivarpi] = 1.0;
  if (full_phases) {
    // Inactive placeholder rows until the later phases pin them.
    lp.rows.row(base).setZero();
    lp.rows.row(base + 1).setZero();
    lp.rhs[base] = 1.0;
    lp.rhs[base + 1] = 1.0;
  }
  LpSolution s1 = solve_lp(lp, opts.lp);
  if (s1.status == LpStatus::IterationLimit) throw Error("sop: simplex hit its iteration limit");
  if (s1.status != LpStatus::Optimal) return out;
  out.feasible = true;
  out.opt1 = s1.objective;
  out.theta = s1.x;
  if (!full_phases) return out;

  lp.rows.row(base).setZero();
  lp.rows(base, lay.imu) = 1.0;
  lp.rows(base, lay.ivarpi) = 1.0;
  lp.rhs[base] = s1.objective + opts.phase_slack;
  lp.objective.setZero();
  lp.objective[lay.ipsi] = 1.0;
  LpSolution s2 = solve_lp(lp, opts.lp);
  if (s2.status != LpStatus::Optimal) return out;  // keep the phase-1 point

  lp.rows.row(base + 1).setZero();
  lp.rows(base + 1, lay.ipsi) = 1.0;
  lp.rhs[base + 1] = s2.objective + opts.phase_slack;
  lp.objective.setZero();
  lp.objective[lay.ia] = -1.0;
  LpSolution s3 = solve_lp(lp, opts.lp);
  out.theta = (s3.status == LpStatus::Optimal) ? s3.x : s2.x;
  return out;
}

std::set<RowKey> initial_keys(const Problem& pb, const TupleSelection& selection) {
  std::set<RowKey> keys;
  for (int z = 0; z < static_cast<int>(pb.dataset.pairs.size()); ++z) {
    const int u = pb.dataset.pairs[static_cast<std::size_t>(z)].u_index;
    for (const auto& t : selection[static_cast<std::size_t>(u)]) {
      keys.insert(RowKey{F0, z, t.first, -1});
      keys.insert(RowKey{F3, z, t.first, -1});
      keys.insert(RowKey{F4, z, t.first, t.second});
      keys.insert(RowKey{F5, z, -1, t.second});
    }
  }
  return keys;
}

// Cutting-plane loop: solve on the working rows, scan the full program, add
// the most violated rows, repeat until the scan is clean.
struct CutLoopResult {
  bool feasible = false;
  Vec theta;
  double opt1 = kNaN;
  int rounds = 0;
  double last_violation = 0.0;
};

CutLoopResult cut_loop(const Problem& pb, std::set<RowKey>& working, double gamma, const SopOptions& opts,
                       bool full_phases) {
  CutLoopResult res;
  for (int round = 0; round < opts.max_rounds; ++round) {
    res.rounds = round + 1;
    std::vector<RowKey> keys(working.begin(), working.end());
    const PhasedSolve ps = solve_phases(pb, keys, gamma, opts, full_phases);
    if (!ps.feasible) {
      res.feasible = false;
      return res;
    }
    const Theta th = Theta::unpack(ps.theta, pb.lay);
    const ScanOutcome scan = scan_full(pb, gamma, th, opts.violation_tol, opts.max_added_per_round);
    res.feasible = true;
    res.theta = ps.theta;
    res.opt1 = ps.opt1;
    res.last_violation = scan.max_violation;
    if (scan.max_violation <= opts.violation_tol) return res;
    bool grew = false;
    for (const auto& hit : scan.top) grew |= working.insert(hit.key).second;
    if (!grew)
      throw Error("sop: cutting-plane loop stalled (violation " + std::to_string(scan.max_violation) +
                  " above tolerance with no new rows)");
  }
  throw Error("sop: cutting-plane loop exceeded max_rounds");
}

}  // namespace

TupleSelection admissible_tuples(const SymbolicModel& sm) {
  TupleSelection sel(static_cast<std::size_t>(sm.n_inputs()));
  for (int u = 0; u < sm.n_inputs(); ++u)
    for (std::int64_t s = 0; s < sm.n_states(); ++s)
      for (std::int64_t w = 0; w < sm.n_dists(); ++w)
        if (sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))] != SymbolicModel::kSink)
          sel[static_cast<std::size_t>(u)].push_back({s, w});
  return sel;
}

LinearProgram assemble_sop(const Dataset& dataset, const SymbolicModel& sm, const BasisSpec& basis,
                           double gamma, const TupleSelection& selection, const SopOptions& opts) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw AssemblyError("sop: gamma must lie in (0,1)");
  if (static_cast<int>(selection.size()) != sm.n_inputs())
    throw AssemblyError("sop: selection arity must match the input set");
  std::size_t total = 0;
  for (const auto& su : selection) total += su.size();
  if (total == 0) throw AssemblyError("sop: empty abstract-tuple selection");
  Problem pb(dataset, sm, basis);
  for (int u = 0; u < sm.n_inputs(); ++u)
    for (const auto& t : selection[static_cast<std::size_t>(u)])
      if (pb.successor(t.first, u, t.second) == SymbolicModel::kSink)
        throw AssemblyError("sop: selected tuple has a SINK image");

  // Literal emission: four rows per (sample, matching tuple).
  std::vector<RowKey> keys;
  for (int z = 0; z < static_cast<int>(dataset.pairs.size()); ++z) {
    const int u = dataset.pairs[static_cast<std::size_t>(z)].u_index;
    for (const auto& t : selection[static_cast<std::size_t>(u)]) {
      keys.push_back(RowKey{F0, z, t.first, -1});
      keys.push_back(RowKey{F3, z, t.first, -1});
      keys.push_back(RowKey{F4, z, t.first, t.second});
      keys.push_back(RowKey{F5, z, -1, t.second});
    }
  }
  LinearProgram lp = lp_from_keys(pb, keys, gamma, opts, 0);
  lp.objective[pb.lay.imu] = 1.0;
  lp.objective[pb.lay.ivarpi] = 1.0;
  return lp;
}

AsbfSolution solve_sop(const Dataset& dataset, const SymbolicModel& sm, const BasisSpec& basis,
                       const SopOptions& opts, SopDiagnostics* diag) {
  if (opts.gamma_grid.empty()) throw ConfigError("sop: empty gamma grid");
  for (double g : opts.gamma_grid)
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("sop: gamma grid entries must lie in (0,1)");
  Problem pb(dataset, sm, basis);
  dataset.validate_coverage(sm.n_inputs());

  const TupleSelection admissible = admissible_tuples(sm);
  std::size_t total = 0;
  for (const auto& su : admissible) total += su.size();
  if (total == 0) throw AssemblyError("sop: every abstract tuple has a SINK image");

  TupleSelection initial(admissible.size());
  Rng rng(derive_seed(opts.seed, 0x50b5));
  for (std::size_t u = 0; u < admissible.size(); ++u) {
    std::vector<std::size_t> order(admissible[u].size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.integer(i))]);
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(opts.initial_tuples_per_input),
                                                   order.size());
    for (std::size_t i = 0; i < take; ++i) initial[u].push_back(admissible[u][order[i]]);
  }

  if (diag) diag->gamma_objectives.assign(opts.gamma_grid.size(), kNaN);

  // Phase-1 screening per gamma; the working row set carries over as a warm
  // start since binding rows tend to persist across nearby gammas.
  std::set<RowKey> working = initial_keys(pb, initial);
  int best = -1;
  double best_obj = std::numeric_limits<double>::infinity();
  std::set<RowKey> best_working;
  for (std::size_t gi = 0; gi < opts.gamma_grid.size(); ++gi) {
    CutLoopResult r = cut_loop(pb, working, opts.gamma_grid[gi], opts, false);
    if (diag && r.feasible) diag->gamma_objectives[gi] = r.opt1;
    if (r.feasible && r.opt1 < best_obj - 1e-12) {
      best_obj = r.opt1;
      best = static_cast<int>(gi);
      best_working = working;
    }
  }
  if (best < 0) {
    LinearProgram probe = lp_from_keys(pb, std::vector<RowKey>(working.begin(), working.end()),
                                       opts.gamma_grid.front(), opts, 0);
    const auto gap = feasibility_gap(probe, opts.lp);
    std::ostringstream os;
    os << "sop: infeasible for every gamma in the grid; minimal uniform row slack " << gap.first
       << " attained at working row " << gap.second;
    throw InfeasibleError(os.str());
  }

  const double gamma = opts.gamma_grid[static_cast<std::size_t>(best)];
  std::set<RowKey> final_working = best_working;
  CutLoopResult r = cut_loop(pb, final_working, gamma, opts, true);
  if (!r.feasible) throw InfeasibleError("sop: final phase solve infeasible");

  const Theta th = Theta::unpack(r.theta, pb.lay);
  AsbfSolution sol;
  sol.basis = basis;
  sol.q = th.q;
  sol.alpha = th.alpha;
  sol.gamma = gamma;
  sol.rho = th.rho;
  sol.psi = th.psi;
  sol.mu = th.mu;
  sol.varpi = th.varpi;
  const ResidualReport audit = residuals(sol, dataset, sm);
  sol.feasibility_residual = audit.max();
  if (diag) {
    diag->rounds = r.rounds;
    diag->working_rows = static_cast<int>(final_working.size());
    diag->final_scan_violation = r.last_violation;
  }
  return sol;
}

double ResidualReport::max() const { return std::max(std::max(f0, f3), std::max(f4, f5)); }

ResidualReport residuals(const AsbfSolution& sol, const Dataset& dataset, const SymbolicModel& sm) {
  Problem pb(dataset, sm, sol.basis);
  Theta th;
  th.q = sol.q;
  th.alpha = sol.alpha;
  th.rho = sol.rho;
  th.psi = sol.psi;
  th.mu = sol.mu;
  th.varpi = sol.varpi;
  const ScanOutcome scan = scan_full(pb, sol.gamma, th, 0.0, 0);
  ResidualReport rep;
  rep.f0 = scan.family_max[F0];
  rep.f3 = scan.family_max[F3];
  rep.f4 = scan.family_max[F4];
  rep.f5 = scan.family_max[F5];
  return rep;
}

nlohmann::ordered_json asbf_to_json(const AsbfSolution& sol) {
  nlohmann::ordered_json j;
  j["basis"] = basis_to_json(sol.basis);
  j["q"] = std::vector<double>(sol.q.data(), sol.q.data() + sol.q.size());
  j["alpha"] = sol.alpha;
  j["gamma"] = sol.gamma;
  j["rho"] = sol.rho;
  j["psi"] = sol.psi;
  j["mu"] = sol.mu;
  j["varpi"] = sol.varpi;
  j["feasibility_residual"] = sol.feasibility_residual;
  j["dataset_digest"] = sol.dataset_digest;
  return j;
}

AsbfSolution asbf_from_json(const nlohmann::json& j) {
  AsbfSolution sol;
  sol.basis = basis_from_json(j.at("basis"));
  const auto q = j.at("q").get<std::vector<double>>();
  sol.q = Eigen::Map<const Vec>(q.data(), static_cast<Eigen::Index>(q.size()));
  sol.alpha = j.at("alpha").get<double>();
  sol.gamma = j.at("gamma").get<double>();
  sol.rho = j.at("rho").get<double>();
  sol.psi = j.at("psi").get<double>();
  sol.mu = j.at("mu").get<double>();
  sol.varpi = j.at("varpi").get<double>();
  sol.feasibility_residual = j.value("feasibility_residual", 0.0);
  sol.dataset_digest = j.value("dataset_digest", std::string());
  return sol;
}

void save_asbf(const AsbfSolution& sol, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("asbf: cannot write " + path);
  out << asbf_to_json(sol).dump(2) << "\n";
}

AsbfSolution load_asbf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("asbf: cannot read " + path);
  return asbf_from_json(nlohmann::json::parse(in));
}

}  // namespace datasym
