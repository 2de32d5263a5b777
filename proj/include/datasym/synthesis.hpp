// Safety controller synthesis on symbolic models: maximal winning set of the
// alternating safety game (controller picks the input, the disturbance is
// adversarial over all representatives), refinement through the quantizer,
// and closed-loop network simulation.
#ifndef DATASYM_SYNTHESIS_HPP
#define DATASYM_SYNTHESIS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "datasym/symbolic.hpp"

namespace datasym {

struct ContractionResult {
  std::vector<std::int64_t> indices;
  bool collapsed = false;  // deflation emptied the box on some axis
};

// Cells whose representative lies in safe_box deflated by epsilon per face.
ContractionResult contract_safe_set(const Box& safe_box, const UniformGrid& grid, double epsilon);

struct SafetyGame {
  const SymbolicModel* model = nullptr;
  std::vector<std::int64_t> safe_indices;
};

struct AbstractController {
  std::int64_t n_states = 0;
  int n_inputs = 0;
  int words_per_state = 0;
  std::vector<std::uint64_t> allowed;  // bitmask words per state; all-zero = losing

  bool is_winning(std::int64_t s) const;
  bool is_allowed(std::int64_t s, int u) const;
  int min_allowed(std::int64_t s) const;  // -1 when losing
  std::vector<int> allowed_inputs(std::int64_t s) const;
  std::int64_t winning_count() const;
};

// Maximal fixed point: W_0 = safe set, W_{k+1} = {s in W_k : exists u, for
// all w, T[s,u,w] in W_k}; allowed(s) is the full input set satisfying the
// universal condition at the fixed point.
AbstractController solve_safety_game(const SafetyGame& game);

// Extends a core controller to extra cells that can re-enter the core in one
// step: for each s in `domain` outside the core, allowed(s) = {u : for all w,
// T[s,u,w] is winning in the core}. Keeps the core's allowed sets unchanged;
// every successor of the result stays in the core, so the invariant of the
// winning map is preserved. Used when the contracted game leaves a boundary
// ring of cells that the continuous state can brush through.
AbstractController extend_to_recoverable(const SymbolicModel& sm, const AbstractController& core,
                                         const std::vector<std::int64_t>& domain);

struct RefinedController {
  std::shared_ptr<const AbstractController> controller;
  UniformGrid quantizer;
  std::vector<Vec> input_set;
  Box safe_box;  // original (uncontracted) safe set, used by the verdict

  std::optional<int> try_input_index(const Vec& x) const;
  // Lowest allowed input index of the quantized cell; throws
  // UncontrollableStateError outside the winning region.
  Vec refine(const Vec& x) const;
};

struct SimulationResult {
  Mat states;              // (horizon+1) x total state dim
  Eigen::MatrixXi inputs;  // horizon x M, input index per subsystem (-1 once failed)
  bool safe = true;
  int first_violation = -1;
};

SimulationResult simulate_closed_loop(const NetworkOracle& network,
                                      const std::vector<RefinedController>& controllers, const Vec& x0,
                                      int horizon);

// Binary layout: magic "CTL1"; u32 state_dim; per axis f64 lower, f64 upper,
// u32 cells; u32 n_inputs; u32 input_dim; inputs as f64; u32 words_per_state;
// u64 n_states; bitmask words as u64. All scalars little-endian.
void save_controller(const AbstractController& ctl, const UniformGrid& grid, const std::vector<Vec>& inputs,
                     const std::string& path);

struct LoadedController {
  AbstractController controller;
  UniformGrid grid;
  std::vector<Vec> input_set;
};
LoadedController load_controller(const std::string& path);

// CSV rows: k, subsystem, x_0.., u_index, safe_flag.
void save_trajectory_csv(const SimulationResult& sim, const NetworkOracle& network,
                         const std::vector<RefinedController>& controllers, const std::vector<int>& subsystems,
                         const std::string& path);

}  // namespace datasym

#endif
