#include "datasym/symbolic.hpp"

#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "datasym/parallel.hpp"

namespace datasym {

SymbolicModel build_symbolic(const SubsystemOracle& oracle, const UniformGrid& state_grid,
                             const UniformGrid& dist_grid, const std::vector<Vec>& input_set) {
  if (state_grid.dim() != oracle.state_dim) throw ShapeError("abstraction: state grid dimension mismatch");
  if (dist_grid.dim() != oracle.dist_dim) throw ShapeError("abstraction: disturbance grid dimension mismatch");
  if (input_set.empty()) throw ConfigError("abstraction: empty input set");

  SymbolicModel sm;
  sm.state_grid = state_grid;
  sm.dist_grid = dist_grid;
  sm.input_set = input_set;
  const std::int64_t ns = sm.n_states();
  const std::int64_t nw = sm.n_dists();
  const int nu = sm.n_inputs();
  sm.transitions.assign(static_cast<std::size_t>(ns * nu * nw), SymbolicModel::kSink);

  std::vector<Vec> dist_reps(static_cast<std::size_t>(nw));
  for (std::int64_t w = 0; w < nw; ++w) dist_reps[static_cast<std::size_t>(w)] = dist_grid.representative(w);

  std::string failure;
  std::mutex failure_mu;
  parallel_for(ns, [&](std::int64_t s) {
    const Vec xs = state_grid.representative(s);
    for (int u = 0; u < nu; ++u) {
      for (std::int64_t w = 0; w < nw; ++w) {
        Vec img;
        try {
          img = oracle.step_fn(xs, input_set[static_cast<std::size_t>(u)], dist_reps[static_cast<std::size_t>(w)]);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (failure.empty()) {
            std::ostringstream os;
            os << "abstraction: oracle failure at (s=" << s << ", u=" << u << ", w=" << w << "): " << e.what();
            failure = os.str();
          }
          return;
        }
        const auto q = state_grid.quantize(img);
        sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))] =
            q ? static_cast<std::uint32_t>(q->cell) : SymbolicModel::kSink;
      }
    }
  });
  if (!failure.empty()) throw Error(failure);
  return sm;
}

std::uint32_t abstract_step(const SymbolicModel& sm, std::uint32_t s, int u, std::int64_t w) {
  if (s == SymbolicModel::kSink) return SymbolicModel::kSink;
  if (s >= sm.n_states()) throw IndexError("abstract_step: state index out of range");
  if (u < 0 || u >= sm.n_inputs()) throw IndexError("abstract_step: input index out of range");
  if (w < 0 || w >= sm.n_dists()) throw IndexError("abstract_step: disturbance index out of range");
  return sm.transitions[static_cast<std::size_t>(sm.flat_index(s, u, w))];
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

void put_grid(std::ostream& out, const UniformGrid& g) {
  for (int k = 0; k < g.dim(); ++k) {
    put_f64(out, g.box().lower[k]);
    put_f64(out, g.box().upper[k]);
    put_u32(out, static_cast<std::uint32_t>(g.cells_per_axis()[static_cast<std::size_t>(k)]));
  }
}

UniformGrid get_grid(std::istream& in, int dim) {
  Vec lo(dim), hi(dim);
  std::vector<int> cells(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    lo[k] = get_f64(in);
    hi[k] = get_f64(in);
    cells[static_cast<std::size_t>(k)] = static_cast<int>(get_u32(in));
  }
  return UniformGrid(Box(lo, hi), cells);
}

}  // namespace

void save_symbolic(const SymbolicModel& sm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("abstraction: cannot write " + path);
  out.write("ABS1", 4);
  put_u32(out, static_cast<std::uint32_t>(sm.state_grid.dim()));
  put_u32(out, static_cast<std::uint32_t>(sm.dist_grid.dim()));
  put_u32(out, static_cast<std::uint32_t>(sm.n_inputs()));
  const std::uint32_t input_dim =
      sm.input_set.empty() ? 0 : static_cast<std::uint32_t>(sm.input_set.front().size());
  put_u32(out, input_dim);
  put_grid(out, sm.state_grid);
  put_grid(out, sm.dist_grid);
  for (const Vec& u : sm.input_set)
    for (Eigen::Index k = 0; k < u.size(); ++k) put_f64(out, u[k]);
  put_u64(out, static_cast<std::uint64_t>(sm.transitions.size()));
  for (std::uint32_t t : sm.transitions) put_u32(out, t);
  if (!out) throw IoError("abstraction: write failed for " + path);
}

SymbolicModel load_symbolic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("abstraction: cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::strncmp(magic, "ABS1", 4) != 0) throw IoError("abstraction: bad magic in " + path);
  const int state_dim = static_cast<int>(get_u32(in));
  const int dist_dim = static_cast<int>(get_u32(in));
  const int n_inputs = static_cast<int>(get_u32(in));
  const int input_dim = static_cast<int>(get_u32(in));
  SymbolicModel sm;
  sm.state_grid = get_grid(in, state_dim);
  sm.dist_grid = get_grid(in, dist_dim);
  sm.input_set.resize(static_cast<std::size_t>(n_inputs));
  for (auto& u : sm.input_set) {
    u.resize(input_dim);
    for (int k = 0; k < input_dim; ++k) u[k] = get_f64(in);
  }
  const std::uint64_t len = get_u64(in);
  const std::uint64_t expect =
      static_cast<std::uint64_t>(sm.n_states()) * static_cast<std::uint64_t>(n_inputs) *
      static_cast<std::uint64_t>(sm.n_dists());
  if (len != expect) throw IoError("abstraction: table length mismatch in " + path);
  sm.transitions.resize(len);
  for (auto& t : sm.transitions) t = get_u32(in);
  if (!in) throw IoError("abstraction: truncated file " + path);
  return sm;
}

}  // namespace datasym
