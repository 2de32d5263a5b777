// Acceptance suite: one pass/fail line per criterion. Exits non-zero when
// any criterion fails. Expects the shipped benchmark configs; override the
// directory with --configs <dir>.
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "datasym/composition.hpp"
#include "datasym/digest.hpp"
#include "datasym/lipschitz.hpp"
#include "datasym/pipeline.hpp"
#include "datasym/rng.hpp"
#include "datasym/sop.hpp"
#include "datasym/synthesis.hpp"

using namespace datasym;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool pass;
  std::string detail;
  double seconds;
};

std::vector<Criterion> g_results;

template <typename Fn>
void run_criterion(int id, const std::string& title, Fn fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    detail = fn(pass);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  g_results.push_back({id, title, pass, detail, secs});
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << title << "): " << detail << "  ["
       << secs << " s]";
  std::cout << line.str() << std::endl;
}

Box box1(double lo, double hi) {
  Vec l(1), u(1);
  l << lo;
  u << hi;
  return Box(l, u);
}

// ---- criterion 8 helpers ----------------------------------------------

SymbolicModel random_model(Rng& rng, int n_states, int n_inputs, int n_dists, double p_sink) {
  SymbolicModel sm;
  sm.state_grid = build_grid(box1(0, 1), {n_states});
  sm.dist_grid = build_grid(box1(0, 1), {n_dists});
  for (int u = 0; u < n_inputs; ++u) sm.input_set.push_back(Vec::Constant(1, static_cast<double>(u)));
  sm.transitions.resize(static_cast<std::size_t>(n_states) * n_inputs * n_dists);
  for (auto& t : sm.transitions)
    t = (rng.unit() < p_sink) ? SymbolicModel::kSink
                              : static_cast<std::uint32_t>(rng.integer(static_cast<std::uint64_t>(n_states)));
  return sm;
}

std::pair<std::set<std::int64_t>, std::vector<std::set<int>>> brute_game(const SymbolicModel& sm,
                                                                         const std::vector<std::int64_t>& safe) {
  std::set<std::int64_t> winning(safe.begin(), safe.end());
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<std::int64_t> next;
    for (std::int64_t s : winning) {
      bool has_input = false;
      for (int u = 0; u < sm.n_inputs() && !has_input; ++u) {
        bool all_in = true;
        for (std::int64_t w = 0; w < sm.n_dists() && all_in; ++w) {
          const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
          all_in = succ != SymbolicModel::kSink && winning.count(static_cast<std::int64_t>(succ)) > 0;
        }
        has_input = all_in;
      }
      if (has_input)
        next.insert(s);
      else
        changed = true;
    }
    winning = std::move(next);
  }
  std::vector<std::set<int>> allowed(static_cast<std::size_t>(sm.n_states()));
  for (std::int64_t s : winning)
    for (int u = 0; u < sm.n_inputs(); ++u) {
      bool all_in = true;
      for (std::int64_t w = 0; w < sm.n_dists() && all_in; ++w) {
        const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
        all_in = succ != SymbolicModel::kSink && winning.count(static_cast<std::int64_t>(succ)) > 0;
      }
      if (all_in) allowed[static_cast<std::size_t>(s)].insert(u);
    }
  return {winning, allowed};
}

// ---- criterion 6 helper: constant-basis toy program --------------------

struct ToyInstance {
  Dataset dataset;
  SymbolicModel sm;
  BasisSpec basis;
};

ToyInstance toy_instance() {
  ToyInstance t;
  SubsystemOracle o;
  o.state_dim = 1;
  o.dist_dim = 1;
  o.input_set = {Vec::Zero(1)};
  o.step_fn = [](const Vec& x, const Vec&, const Vec&) { return x; };
  t.sm = build_symbolic(o, build_grid(box1(-1, 1), {1}), build_grid(box1(-1, 1), {1}), o.input_set);
  SamplePair sp;
  sp.x = Vec::Constant(1, 1.0);
  sp.w = Vec::Zero(1);
  sp.u_index = 0;
  sp.x_next = Vec::Constant(1, 1.0);
  t.dataset.pairs = {sp};
  t.dataset.x_box = box1(-1, 1);
  t.dataset.w_box = box1(-1, 1);
  t.dataset.n_inputs = 1;
  BasisTerm c;
  c.diff_exponents = {0};
  t.basis.terms = {c};
  t.basis.const_bound = 10.0;
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  std::string configs = "configs";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--configs") == 0) configs = argv[i + 1];

  const fs::path out_root = fs::temp_directory_path() / "datasym_acceptance";
  fs::remove_all(out_root);
  fs::create_directories(out_root);
  std::ostringstream sink;

  // 1 -------------------------------------------------------------------
  run_criterion(1, "composition arithmetic on the benchmark reference values", [&](bool& pass) {
    const CompositionCertificate room = check_condition({SubsystemTerm{-0.0496, 1e-6, 0.9675, 0.05}});
    const CompositionCertificate veh = check_condition({SubsystemTerm{-0.7717, 1e-6, 1.5753, 0.3}});
    const bool a = std::abs(room.total - (-0.0012)) < 1e-4 && room.pass;
    const bool b = std::abs(veh.total - (-0.2991)) < 1e-4 && veh.pass;
    pass = a && b;
    std::ostringstream os;
    os << "room total " << room.total << ", vehicle total " << veh.total;
    return os.str();
  });

  // 2 -------------------------------------------------------------------
  run_criterion(2, "error-bound formula and monotonicity sweeps", [&](bool& pass) {
    const EpsilonBound b = epsilon_bound(0.1, 1.0, 0.9, 0.5);
    pass = std::abs(b.psi_bar - 2.0) <= 1e-12 && std::abs(b.epsilon - std::sqrt(2.0)) <= 1e-12;
    Rng rng(424242);
    int checked = 0;
    for (int i = 0; i < 1000 && pass; ++i) {
      const double psi = rng.uniform(1e-6, 10.0);
      const double alpha = rng.uniform(1e-3, 10.0);
      const double gamma = rng.uniform(0.01, 0.99);
      const double eta = rng.uniform(0.01, 0.99);
      const double eps = epsilon_bound(psi, alpha, gamma, eta).epsilon;
      pass = epsilon_bound(psi, alpha * 1.7, gamma, eta).epsilon < eps &&
             epsilon_bound(psi * 1.7, alpha, gamma, eta).epsilon > eps;
      ++checked;
    }
    std::ostringstream os;
    os << "psi_bar " << b.psi_bar << ", epsilon " << b.epsilon << ", sweeps " << checked << "/1000";
    return os.str();
  });

  // 3 -------------------------------------------------------------------
  bool room_ready = false;
  run_criterion(3, "room benchmark end-to-end at M=1000", [&](bool& pass) {
    PipelineConfig cfg = load_config((fs::path(configs) / "room.json").string());
    cfg.M = 1000;
    const RunOutcome outcome = run_pipeline(cfg, (out_root / "room").string(), sink);
    pass = outcome.certificate.pass && outcome.all_safe && outcome.attempts == 1;
    room_ready = pass;
    std::ostringstream os;
    os << "certificate total " << outcome.certificate.total << ", boundary scenario "
       << (outcome.all_safe ? "100/100 safe over 500 steps" : "UNSAFE") << ", epsilon "
       << outcome.certificate.epsilon;
    return os.str();
  });

  // 4 -------------------------------------------------------------------
  run_criterion(4, "vehicle benchmark end-to-end at M=500", [&](bool& pass) {
    PipelineConfig cfg = load_config((fs::path(configs) / "vehicle.json").string());
    cfg.M = 500;
    const RunOutcome outcome = run_pipeline(cfg, (out_root / "vehicle").string(), sink);
    pass = outcome.certificate.pass && outcome.all_safe;
    std::ostringstream os;
    os << "certificate total " << outcome.certificate.total
       << ", scenarios (boundary set; arbitrary starts) " << (outcome.all_safe ? "all safe" : "UNSAFE");
    return os.str();
  });

  // 5 -------------------------------------------------------------------
  run_criterion(5, "quantizer property suite on both benchmark grids", [&](bool& pass) {
    pass = true;
    const UniformGrid grids[2] = {
        UniformGrid(box1(-0.5, 0.5), {50}),
        UniformGrid(Box((Vec(2) << 0.0, -0.15).finished(), (Vec(2) << 1.0, 0.55).finished()), {10, 14})};
    Rng rng(515151);
    for (const auto& g : grids) {
      for (int i = 0; i < 100000 && pass; ++i) {
        const Vec x = rng.in_box(g.box());
        const auto q = g.quantize(x);
        pass = q.has_value() && (q->representative - x).norm() <= 0.5 * g.delta() + 1e-12;
      }
      for (std::int64_t c = 0; c < g.size() && pass; ++c) {
        const auto q = g.quantize(g.representative(c));
        pass = q.has_value() && q->cell == c;
      }
    }
    // Deterministic face tie-break: shared faces go to the lower cell.
    const UniformGrid& g1 = grids[0];
    const auto tie = g1.quantize(Vec::Constant(1, 0.2));
    pass = pass && tie && std::abs(tie->representative[0] - 0.19) < 1e-12;
    const auto top = g1.quantize(Vec::Constant(1, 0.5));
    pass = pass && top && std::abs(top->representative[0] - 0.49) < 1e-12;
    return std::string("100000 draws per grid within delta/2 + 1e-12; representatives fixed; ties lower");
  });

  // 6 -------------------------------------------------------------------
  run_criterion(6, "scenario-program feasibility audit", [&](bool& pass) {
    std::ostringstream os;
    // Toy optimum against a brute-force lattice containing the binding corner.
    const ToyInstance toy = toy_instance();
    SopOptions topts;
    topts.gamma_grid = {0.9};
    topts.seed = 6;
    const AsbfSolution tsol = solve_sop(toy.dataset, toy.sm, toy.basis, topts);
    double brute = 1e300;
    for (int qi = 0; qi <= 400; ++qi) {
      const double q = -10.0 + 20.0 * qi / 400.0;
      for (double alpha : {0.01, 0.5, 1.0, 10.0, 100.0})
        for (int pi = 0; pi <= 400; ++pi) {
          const double psi = 1e-6 + (100.0 - 1e-6) * pi / 400.0;
          brute = std::min(brute, std::max({-q, alpha - q, 0.1 * q - psi}) + 1e-6);
        }
    }
    pass = std::abs(tsol.objective() - brute) <= 1e-4 && tsol.feasibility_residual <= 1e-8;
    os << "toy |lp - grid| = " << std::abs(tsol.objective() - brute);

    // A benchmark-scale solve: residual audit and a clean final scan over the
    // complete abstract-tuple set.
    RoomNetworkConfig rc;
    const SubsystemOracle o = make_room_subsystem(rc);
    const SymbolicModel sm =
        build_symbolic(o, build_grid(box1(-0.5, 0.5), {20}), build_grid(box1(-1, 1), {6}), o.input_set);
    const Dataset ds = collect(o, box1(-0.5, 0.5), box1(-1, 1), 60, SamplingStrategy::LowDiscrepancy, 66);
    SopOptions opts;
    opts.gamma_grid = {0.95, 0.985};
    opts.initial_tuples_per_input = 8;
    opts.seed = 60;
    SopDiagnostics diag;
    const AsbfSolution sol = solve_sop(ds, sm, even_difference_basis(1, 6), opts, &diag);
    const ResidualReport rep = residuals(sol, ds, sm);
    pass = pass && rep.max() <= 1e-8 && diag.final_scan_violation <= 1e-8;
    os << "; benchmark residual " << rep.max() << ", final scan violation " << diag.final_scan_violation;

    if (room_ready) {
      // The room artifact from criterion 3 audits clean as well.
      const AsbfSolution rsol = load_asbf((out_root / "room" / "asbf.json").string());
      const Dataset rds = load_dataset((out_root / "room" / "dataset.csv").string());
      const SymbolicModel rsm = load_symbolic((out_root / "room" / "abstraction.bin").string());
      const double r = residuals(rsol, rds, rsm).max();
      pass = pass && r <= 1e-8;
      os << "; room artifact residual " << r;
    }
    return os.str();
  });

  // 7 -------------------------------------------------------------------
  run_criterion(7, "slope estimator on synthetic targets", [&](bool& pass) {
    LipschitzConfig cfg;
    cfg.seed = 7;
    auto linear = [](const Vec& x) { return 2.0 * x[0]; };
    auto flat = [](const Vec&) { return 0.25; };

    cfg.pair_distance_cap = 1e-3;
    cfg.pairs_per_batch = 100;
    cfg.batches = 50;
    const double two = estimate_slope(linear, box1(0, 1), cfg, 1).value;
    cfg.pairs_per_batch = 50;
    cfg.batches = 20;
    const double zero = estimate_slope(flat, box1(0, 1), cfg, 2).value;

    LipschitzConfig c1;
    c1.seed = 7;
    c1.pair_distance_cap = 1e-1;
    c1.pairs_per_batch = 10;
    c1.batches = 10;
    const double e1 = estimate_slope(linear, box1(0, 1), c1, 3).value;
    c1.pair_distance_cap = 1e-2;
    c1.pairs_per_batch = 50;
    c1.batches = 25;
    const double e2 = estimate_slope(linear, box1(0, 1), c1, 3).value;
    c1.pair_distance_cap = 1e-3;
    c1.pairs_per_batch = 200;
    c1.batches = 50;
    const double e3 = estimate_slope(linear, box1(0, 1), c1, 3).value;

    pass = two >= 1.9 && two <= 2.05 && zero <= 1e-6 &&
           std::abs(e2 - 2.0) <= std::abs(e1 - 2.0) + 0.05 &&
           std::abs(e3 - 2.0) <= std::abs(e2 - 2.0) + 0.05;
    std::ostringstream os;
    os << "slope-2 target -> " << two << ", constant -> " << zero << ", trend " << std::abs(e1 - 2.0)
       << " / " << std::abs(e2 - 2.0) << " / " << std::abs(e3 - 2.0);
    return os.str();
  });

  // 8 -------------------------------------------------------------------
  run_criterion(8, "safety game equals the naive fixed-point reference", [&](bool& pass) {
    pass = true;
    Rng rng(808080);
    int models = 0;
    for (int trial = 0; trial < 50 && pass; ++trial) {
      const int n = 20 + static_cast<int>(rng.integer(181));  // up to 200 states
      const int nu = 1 + static_cast<int>(rng.integer(5));    // up to 5 inputs
      const int nw = 1 + static_cast<int>(rng.integer(4));    // up to 4 disturbances
      SymbolicModel sm = random_model(rng, n, nu, nw, 0.1);
      std::vector<std::int64_t> safe;
      for (std::int64_t s = 0; s < n; ++s)
        if (rng.unit() < 0.85) safe.push_back(s);
      const AbstractController ctl = solve_safety_game(SafetyGame{&sm, safe});
      const auto [ref_win, ref_allowed] = brute_game(sm, safe);
      for (std::int64_t s = 0; s < n && pass; ++s) {
        pass = ctl.is_winning(s) == (ref_win.count(s) > 0);
        if (!pass) break;
        const auto mine = ctl.allowed_inputs(s);
        pass = std::set<int>(mine.begin(), mine.end()) == ref_allowed[static_cast<std::size_t>(s)];
      }
      // Soundness and maximality spot checks.
      for (std::int64_t s = 0; s < n && pass; ++s) {
        for (int u : ctl.allowed_inputs(s))
          for (std::int64_t w = 0; w < nw && pass; ++w) {
            const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
            pass = succ != SymbolicModel::kSink && ctl.is_winning(static_cast<std::int64_t>(succ));
          }
      }
      for (std::int64_t s : safe) {
        if (!pass || ctl.is_winning(s)) continue;
        for (int u = 0; u < nu && pass; ++u) {
          bool escapes = false;
          for (std::int64_t w = 0; w < nw && !escapes; ++w) {
            const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
            escapes = succ == SymbolicModel::kSink || !ctl.is_winning(static_cast<std::int64_t>(succ));
          }
          pass = escapes;
        }
      }
      ++models;
    }
    std::ostringstream os;
    os << models << "/50 random models identical (winning sets and allowed maps)";
    return os.str();
  });

  // 9 -------------------------------------------------------------------
  run_criterion(9, "relation preservation along coupled trajectories", [&](bool& pass) {
    PipelineConfig cfg = load_config((fs::path(configs) / "room.json").string());
    cfg.M = 5;
    const std::string dir = (out_root / "room_coupled").string();
    const RunOutcome outcome = run_pipeline(cfg, dir, sink);
    if (!outcome.certificate.pass) {
      pass = false;
      return std::string("prerequisite certificate failed");
    }
    const SymbolicModel sm = load_symbolic((fs::path(dir) / "abstraction.bin").string());
    const AsbfSolution sol = load_asbf((fs::path(dir) / "asbf.json").string());
    const LoadedController lc = load_controller((fs::path(dir) / "controller.bin").string());
    RefinedController rc;
    rc.controller = std::make_shared<AbstractController>(lc.controller);
    rc.quantizer = lc.grid;
    rc.input_set = lc.input_set;
    rc.safe_box = cfg.safe_box;
    const NetworkOracle net = cfg.make_network();
    const std::vector<AsbfSolution> sols(5, sol);

    pass = true;
    Rng rng(909090);
    double worst_value = 0.0, worst_dist = 0.0;
    for (int start = 0; start < 100 && pass; ++start) {
      Vec x0(5);
      Vec xhat0(5);
      for (int i = 0; i < 5; ++i) {
        x0[i] = rng.uniform(-0.5, 0.5);
        xhat0[i] = sm.state_grid.quantize(x0.segment(i, 1))->representative[0];
      }
      // The initial pair must already lie inside the relation.
      if (evaluate_abf(sols, x0, xhat0) > outcome.certificate.psi_bar) {
        pass = false;
        break;
      }
      const CoupledRunResult run = coupled_relation_run(net, sm, sols, rc, outcome.certificate.psi_bar,
                                                        outcome.certificate.epsilon, x0, 500);
      pass = run.relation_held && run.distance_held && run.steps == 500;
      worst_value = std::max(worst_value, run.max_value);
      worst_dist = std::max(worst_dist, run.max_distance);
    }
    std::ostringstream os;
    os << "100 starts x 500 steps; max value " << worst_value << " <= psi_bar "
       << outcome.certificate.psi_bar << "; max distance " << worst_dist << " <= epsilon "
       << outcome.certificate.epsilon;
    return os.str();
  });

  // 10 ------------------------------------------------------------------
  run_criterion(10, "sample-complexity sweep: linear vs exponential", [&](bool& pass) {
    PipelineConfig cfg = load_config((fs::path(configs) / "room.json").string());
    const auto rows = complexity_sweep(cfg, {10, 100, 1000, 10000}, (out_root / "sweep").string(), sink);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& r : rows) {
      const double x = r.M, y = static_cast<double>(r.compositional_samples);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
    }
    const double n = static_cast<double>(rows.size());
    const double r2 =
        (n * sxy - sx * sy) * (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy));
    const double density = std::llround(
        std::pow(static_cast<double>(cfg.n_per_input), 1.0 / (cfg.state_box.dim() + cfg.dist_box.dim())));
    bool exponent_exact = true;
    for (const auto& r : rows)
      exponent_exact = exponent_exact &&
                       std::abs(r.monolithic_log10 - r.M * cfg.state_box.dim() * std::log10(density)) <= 1e-9;
    pass = r2 > 0.99 && exponent_exact;
    std::ostringstream os;
    os << "R^2 = " << r2 << ", monolithic column d^(M n) exact in log10";
    return os.str();
  });

  int failures = 0;
  for (const auto& r : g_results) failures += r.pass ? 0 : 1;
  std::cout << "----" << std::endl;
  std::cout << (g_results.size() - failures) << "/" << g_results.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
