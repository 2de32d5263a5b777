#include "datasym/synthesis.hpp"

#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>

namespace datasym {

ContractionResult contract_safe_set(const Box& safe_box, const UniformGrid& grid, double epsilon) {
  if (epsilon < 0.0) throw ConfigError("contract: epsilon must be >= 0");
  ContractionResult res;
  const Box deflated = safe_box.deflated(epsilon);
  for (int k = 0; k < deflated.dim(); ++k)
    if (!(deflated.lower[k] <= deflated.upper[k])) {
      res.collapsed = true;
      return res;
    }
  for (std::int64_t s = 0; s < grid.size(); ++s) {
    const Vec rep = grid.representative(s);
    bool inside = true;
    for (int k = 0; k < deflated.dim(); ++k)
      if (rep[k] < deflated.lower[k] || rep[k] > deflated.upper[k]) {
        inside = false;
        break;
      }
    if (inside) res.indices.push_back(s);
  }
  return res;
}

bool AbstractController::is_winning(std::int64_t s) const {
  for (int wd = 0; wd < words_per_state; ++wd)
    if (allowed[static_cast<std::size_t>(s * words_per_state + wd)] != 0) return true;
  return false;
}

bool AbstractController::is_allowed(std::int64_t s, int u) const {
  const std::uint64_t word = allowed[static_cast<std::size_t>(s * words_per_state + u / 64)];
  return (word >> (u % 64)) & 1u;
}

int AbstractController::min_allowed(std::int64_t s) const {
  for (int wd = 0; wd < words_per_state; ++wd) {
    const std::uint64_t word = allowed[static_cast<std::size_t>(s * words_per_state + wd)];
    if (word != 0) return 64 * wd + __builtin_ctzll(word);
  }
  return -1;
}

std::vector<int> AbstractController::allowed_inputs(std::int64_t s) const {
  std::vector<int> out;
  for (int u = 0; u < n_inputs; ++u)
    if (is_allowed(s, u)) out.push_back(u);
  return out;
}

std::int64_t AbstractController::winning_count() const {
  std::int64_t n = 0;
  for (std::int64_t s = 0; s < n_states; ++s) n += is_winning(s) ? 1 : 0;
  return n;
}

AbstractController solve_safety_game(const SafetyGame& game) {
  if (game.model == nullptr) throw ConfigError("game: missing model");
  const SymbolicModel& sm = *game.model;
  const std::int64_t ns = sm.n_states();
  const int nu = sm.n_inputs();
  const std::int64_t nw = sm.n_dists();

  std::vector<char> winning(static_cast<std::size_t>(ns), 0);
  for (std::int64_t s : game.safe_indices) {
    if (s < 0 || s >= ns) throw IndexError("game: safe index out of range");
    winning[static_cast<std::size_t>(s)] = 1;
  }

  // good[s*nu+u] counts disturbances whose successor is currently winning;
  // the pair (s,u) is valid while the count equals n_dists. Removing a state
  // re-examines only its predecessors (worklist).
  std::vector<std::int32_t> good(static_cast<std::size_t>(ns) * static_cast<std::size_t>(nu), 0);
  std::vector<std::int32_t> valid_inputs(static_cast<std::size_t>(ns), 0);
  std::vector<std::vector<std::pair<std::int64_t, int>>> preds(static_cast<std::size_t>(ns));

  for (std::int64_t s = 0; s < ns; ++s) {
    if (!winning[static_cast<std::size_t>(s)]) continue;
    for (int u = 0; u < nu; ++u) {
      std::int32_t g = 0;
      for (std::int64_t w = 0; w < nw; ++w) {
        const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
        if (succ != SymbolicModel::kSink && winning[succ]) {
          ++g;
          preds[succ].push_back({s, u});
        }
      }
      good[static_cast<std::size_t>(s * nu + u)] = g;
      if (g == nw) ++valid_inputs[static_cast<std::size_t>(s)];
    }
  }

  std::deque<std::int64_t> worklist;
  for (std::int64_t s = 0; s < ns; ++s)
    if (winning[static_cast<std::size_t>(s)] && valid_inputs[static_cast<std::size_t>(s)] == 0) {
      winning[static_cast<std::size_t>(s)] = 0;
      worklist.push_back(s);
    }
  while (!worklist.empty()) {
    const std::int64_t t = worklist.front();
    worklist.pop_front();
    for (const auto& [s, u] : preds[static_cast<std::size_t>(t)]) {
      if (!winning[static_cast<std::size_t>(s)]) continue;
      if (good[static_cast<std::size_t>(s * nu + u)]-- == nw) {
        if (--valid_inputs[static_cast<std::size_t>(s)] == 0) {
          winning[static_cast<std::size_t>(s)] = 0;
          worklist.push_back(s);
        }
      }
    }
  }

  AbstractController ctl;
  ctl.n_states = ns;
  ctl.n_inputs = nu;
  ctl.words_per_state = (nu + 63) / 64;
  ctl.allowed.assign(static_cast<std::size_t>(ns) * static_cast<std::size_t>(ctl.words_per_state), 0);
  for (std::int64_t s = 0; s < ns; ++s) {
    if (!winning[static_cast<std::size_t>(s)]) continue;
    for (int u = 0; u < nu; ++u) {
      bool all_in = true;
      for (std::int64_t w = 0; w < nw && all_in; ++w) {
        const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
        all_in = succ != SymbolicModel::kSink && winning[succ];
      }
      if (all_in)
        ctl.allowed[static_cast<std::size_t>(s * ctl.words_per_state + u / 64)] |= 1ull << (u % 64);
    }
  }
  return ctl;
}

AbstractController extend_to_recoverable(const SymbolicModel& sm, const AbstractController& core,
                                         const std::vector<std::int64_t>& domain) {
  AbstractController out = core;
  const int nu = sm.n_inputs();
  const std::int64_t nw = sm.n_dists();
  for (std::int64_t s : domain) {
    if (s < 0 || s >= core.n_states) throw IndexError("recover: cell index out of range");
    if (core.is_winning(s)) continue;
    for (int u = 0; u < nu; ++u) {
      bool into_core = true;
      for (std::int64_t w = 0; w < nw && into_core; ++w) {
        const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
        into_core = succ != SymbolicModel::kSink && core.is_winning(static_cast<std::int64_t>(succ));
      }
      if (into_core)
        out.allowed[static_cast<std::size_t>(s * out.words_per_state + u / 64)] |= 1ull << (u % 64);
    }
  }
  return out;
}

std::optional<int> RefinedController::try_input_index(const Vec& x) const {
  const auto q = quantizer.quantize(x);
  if (!q) return std::nullopt;
  const int u = controller->min_allowed(q->cell);
  if (u < 0) return std::nullopt;
  return u;
}

Vec RefinedController::refine(const Vec& x) const {
  const auto q = quantizer.quantize(x);
  if (!q) throw UncontrollableStateError("refine: state outside the grid domain", -1);
  const int u = controller->min_allowed(q->cell);
  if (u < 0)
    throw UncontrollableStateError("refine: cell " + std::to_string(q->cell) + " is not winning", q->cell);
  return input_set[static_cast<std::size_t>(u)];
}

SimulationResult simulate_closed_loop(const NetworkOracle& network,
                                      const std::vector<RefinedController>& controllers, const Vec& x0,
                                      int horizon) {
  if (horizon < 0) throw ConfigError("simulate: horizon must be >= 0");
  const int M = network.size();
  if (static_cast<int>(controllers.size()) != M) throw ShapeError("simulate: one controller per subsystem");

  SimulationResult out;
  out.states.resize(horizon + 1, x0.size());
  out.inputs = Eigen::MatrixXi::Constant(std::max(horizon, 1), M, -1);

  std::vector<Vec> parts = network.split_state(x0);
  out.states.row(0) = x0.transpose();
  auto in_safe_box = [&]() {
    for (int i = 0; i < M; ++i)
      if (!controllers[static_cast<std::size_t>(i)].safe_box.contains(parts[static_cast<std::size_t>(i)]))
        return false;
    return true;
  };
  if (!in_safe_box()) {
    out.safe = false;
    out.first_violation = 0;
  }

  for (int k = 0; k < horizon; ++k) {
    bool controllable = true;
    for (int i = 0; i < M; ++i) {
      const auto ui = controllers[static_cast<std::size_t>(i)].try_input_index(parts[static_cast<std::size_t>(i)]);
      if (!ui) {
        controllable = false;
        break;
      }
      out.inputs(k, i) = *ui;
    }
    if (!controllable) {
      out.safe = false;
      if (out.first_violation < 0) out.first_violation = k;
      out.states.conservativeResize(k + 1, Eigen::NoChange);
      return out;
    }
    const auto dists = network.interconnection(parts);
    Eigen::Index off = 0;
    for (int i = 0; i < M; ++i) {
      const auto& ctl = controllers[static_cast<std::size_t>(i)];
      parts[static_cast<std::size_t>(i)] = network.subsystems[static_cast<std::size_t>(i)].step_fn(
          parts[static_cast<std::size_t>(i)], ctl.input_set[static_cast<std::size_t>(out.inputs(k, i))],
          dists[static_cast<std::size_t>(i)]);
      out.states.row(k + 1).segment(off, parts[static_cast<std::size_t>(i)].size()) =
          parts[static_cast<std::size_t>(i)].transpose();
      off += parts[static_cast<std::size_t>(i)].size();
    }
    if (out.safe && !in_safe_box()) {
      out.safe = false;
      out.first_violation = k + 1;
    }
  }
  return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_controller(const AbstractController& ctl, const UniformGrid& grid, const std::vector<Vec>& inputs,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("controller: cannot write " + path);
  out.write("CTL1", 4);
  put_u32(out, static_cast<std::uint32_t>(grid.dim()));
  for (int k = 0; k < grid.dim(); ++k) {
    put_f64(out, grid.box().lower[k]);
    put_f64(out, grid.box().upper[k]);
    put_u32(out, static_cast<std::uint32_t>(grid.cells_per_axis()[static_cast<std::size_t>(k)]));
  }
  put_u32(out, static_cast<std::uint32_t>(inputs.size()));
  put_u32(out, inputs.empty() ? 0 : static_cast<std::uint32_t>(inputs.front().size()));
  for (const Vec& u : inputs)
    for (Eigen::Index k = 0; k < u.size(); ++k) put_f64(out, u[k]);
  put_u32(out, static_cast<std::uint32_t>(ctl.words_per_state));
  put_u64(out, static_cast<std::uint64_t>(ctl.n_states));
  for (std::uint64_t w : ctl.allowed) put_u64(out, w);
  if (!out) throw IoError("controller: write failed for " + path);
}

LoadedController load_controller(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("controller: cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::strncmp(magic, "CTL1", 4) != 0) throw IoError("controller: bad magic in " + path);
  LoadedController lc;
  const int dim = static_cast<int>(get_u32(in));
  Vec lo(dim), hi(dim);
  std::vector<int> cells(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    lo[k] = get_f64(in);
    hi[k] = get_f64(in);
    cells[static_cast<std::size_t>(k)] = static_cast<int>(get_u32(in));
  }
  lc.grid = UniformGrid(Box(lo, hi), cells);
  const int n_inputs = static_cast<int>(get_u32(in));
  const int input_dim = static_cast<int>(get_u32(in));
  lc.input_set.resize(static_cast<std::size_t>(n_inputs));
  for (auto& u : lc.input_set) {
    u.resize(input_dim);
    for (int k = 0; k < input_dim; ++k) u[k] = get_f64(in);
  }
  lc.controller.n_inputs = n_inputs;
  lc.controller.words_per_state = static_cast<int>(get_u32(in));
  lc.controller.n_states = static_cast<std::int64_t>(get_u64(in));
  lc.controller.allowed.resize(static_cast<std::size_t>(lc.controller.n_states) *
                               static_cast<std::size_t>(lc.controller.words_per_state));
  for (auto& w : lc.controller.allowed) w = get_u64(in);
  if (!in) throw IoError("controller: truncated file " + path);
  return lc;
}

void save_trajectory_csv(const SimulationResult& sim, const NetworkOracle& network,
                         const std::vector<RefinedController>& controllers, const std::vector<int>& subsystems,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("trajectory: cannot write " + path);
  int max_dim = 0;
  for (int i : subsystems)
    max_dim = std::max(max_dim, network.subsystems[static_cast<std::size_t>(i)].state_dim);
  out << "k,subsystem";
  for (int k = 0; k < max_dim; ++k) out << ",x_" << k;
  out << ",u_index,safe_flag\n";

  std::vector<Eigen::Index> offsets(network.subsystems.size() + 1, 0);
  for (std::size_t i = 0; i < network.subsystems.size(); ++i)
    offsets[i + 1] = offsets[i] + network.subsystems[i].state_dim;

  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index k = 0; k < sim.states.rows(); ++k) {
    for (int i : subsystems) {
      const auto& sub = network.subsystems[static_cast<std::size_t>(i)];
      os << k << "," << i;
      Vec xi = sim.states.row(k).segment(offsets[static_cast<std::size_t>(i)], sub.state_dim).transpose();
      for (int c = 0; c < max_dim; ++c) os << "," << (c < sub.state_dim ? xi[c] : 0.0);
      const int u = (k < sim.inputs.rows()) ? sim.inputs(k, i) : -1;
      const bool safe = controllers[static_cast<std::size_t>(i)].safe_box.contains(xi);
      os << "," << u << "," << (safe ? 1 : 0) << "\n";
    }
  }
  out << os.str();
}

}  // namespace datasym
