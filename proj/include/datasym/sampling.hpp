// Two-consecutive sample pairs from subsystem oracles and the coverage
// radius sigma of the sampled set, evaluated on a finite grid.
#ifndef DATASYM_SAMPLING_HPP
#define DATASYM_SAMPLING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "datasym/box.hpp"
#include "datasym/oracle.hpp"

namespace datasym {

enum class SamplingStrategy { UniformRandom, LowDiscrepancy, Grid };

struct SamplePair {
  Vec x;
  int u_index = 0;
  Vec w;
  Vec x_next;
};

struct Dataset {
  int subsystem_id = 0;
  std::vector<SamplePair> pairs;
  std::uint64_t seed = 0;
  SamplingStrategy strategy = SamplingStrategy::LowDiscrepancy;
  Box x_box;
  Box w_box;
  int n_inputs = 0;  // size of the oracle input set at collection time

  int count_for_input(int u_index) const;
  void validate_coverage(int n_inputs) const;
};

// n_per_input pairs per input. Grid strategy requires n_per_input to be a
// perfect power lattice over the joint (x, w) box; the low-discrepancy and
// random strategies place the same joint points for every input, which keeps
// the per-input coverage identical.
Dataset collect(const SubsystemOracle& oracle, const Box& x_box, const Box& w_box, int n_per_input,
                SamplingStrategy strategy, std::uint64_t seed);

struct CoverageReport {
  double sigma = 0.0;               // max-min distance on the evaluation grid
  double slack = 0.0;               // half diagonal of one evaluation cell
  double sigma_conservative = 0.0;  // sigma + slack; upper bound used downstream
  std::vector<int> eval_points_per_axis;
  Vec argmax_point;                 // joint (x, w) point attaining the max-min
  int argmax_u = 0;
};

// sigma = max over evaluation points (x, w) and inputs u of the min distance
// to the samples collected under the same u. Evaluation points are an
// inclusive lattice (box corners are evaluation points).
CoverageReport compute_sigma(const Dataset& dataset, const Box& x_box, const Box& w_box,
                             const std::vector<int>& eval_points_per_axis);

// Default evaluation resolution from grid cell counts: 4x cells + 1 points.
std::vector<int> default_eval_points(const std::vector<int>& x_cells, const std::vector<int>& w_cells);

std::string to_string(SamplingStrategy s);
SamplingStrategy strategy_from_string(const std::string& s);

// CSV with header x_0..x_{n-1}, u_index, w_0..w_{p-1}, xnext_0..xnext_{n-1};
// metadata (seed, strategy, boxes) in a JSON sidecar next to it.
void save_dataset(const Dataset& dataset, const std::string& csv_path);
Dataset load_dataset(const std::string& csv_path);

}  // namespace datasym

#endif
