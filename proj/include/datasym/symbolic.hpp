// Finite transition tables built from one oracle call per grid triple.
#ifndef DATASYM_SYMBOLIC_HPP
#define DATASYM_SYMBOLIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "datasym/grid.hpp"
#include "datasym/oracle.hpp"

namespace datasym {

// Dense table (state, input, disturbance) -> state-or-SINK, row-major over
// (state, input, disturbance). SINK absorbs images that leave the state box.
struct SymbolicModel {
  static constexpr std::uint32_t kSink = 0xFFFFFFFFu;

  UniformGrid state_grid;
  UniformGrid dist_grid;
  std::vector<Vec> input_set;
  std::vector<std::uint32_t> transitions;

  std::int64_t n_states() const { return state_grid.size(); }
  std::int64_t n_dists() const { return dist_grid.size(); }
  int n_inputs() const { return static_cast<int>(input_set.size()); }

  std::int64_t flat_index(std::int64_t s, int u, std::int64_t w) const {
    return (s * n_inputs() + u) * n_dists() + w;
  }
};

// transitions[s,u,w] = quantize(step(rep(s), input[u], rep(w))), SINK when the
// image leaves the state box. Exactly n_states * n_inputs * n_dists calls.
SymbolicModel build_symbolic(const SubsystemOracle& oracle, const UniformGrid& state_grid,
                             const UniformGrid& dist_grid, const std::vector<Vec>& input_set);

// Table lookup; s may be kSink (absorbing).
std::uint32_t abstract_step(const SymbolicModel& sm, std::uint32_t s, int u, std::int64_t w);

// Binary layout: magic "ABS1"; u32 state_dim, dist_dim, n_inputs, input_dim;
// per state axis f64 lower, f64 upper, u32 cells; same for disturbance axes;
// inputs as f64; u64 table length; table as u32 with SINK = 0xFFFFFFFF.
// All scalars little-endian.
void save_symbolic(const SymbolicModel& sm, const std::string& path);
SymbolicModel load_symbolic(const std::string& path);

}  // namespace datasym

#endif
