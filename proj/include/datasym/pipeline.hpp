// End-to-end orchestration: sample -> abstract -> certificate -> Lipschitz ->
// coverage -> composition -> synthesis -> simulation -> report, with
// digest-checked stage isolation and an escalation ladder when the
// compositional condition fails.
#ifndef DATASYM_PIPELINE_HPP
#define DATASYM_PIPELINE_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "datasym/benchmarks.hpp"
#include "datasym/composition.hpp"
#include "datasym/lipschitz.hpp"
#include "datasym/sampling.hpp"
#include "datasym/sop.hpp"
#include "datasym/synthesis.hpp"

namespace datasym {

struct ScenarioConfig {
  std::string name;
  std::optional<Box> start_box;  // unset: sample uniformly over the winning region
  bool boundary = false;         // prepend starts at every safe-box corner
};

struct PipelineConfig {
  std::string benchmark = "room";  // room | vehicle | external
  int M = 1;
  std::uint64_t seed = 0;
  RoomNetworkConfig room;
  VehicleNetworkConfig vehicle;

  Box state_box;
  std::vector<int> state_cells;
  Box dist_box;
  std::vector<int> dist_cells;

  int n_per_input = 100;
  SamplingStrategy strategy = SamplingStrategy::LowDiscrepancy;
  std::vector<int> sigma_eval_points;  // empty: 4x grid resolution + 1

  BasisSpec basis;
  SopOptions sop;
  LipschitzConfig lipschitz;

  double eta = 0.99;
  double contraction_epsilon = 0.0;
  bool recover_boundary_cells = false;  // one-step recovery ring around the core
  Box safe_box;  // defaults to state_box

  int horizon = 500;
  int num_starts = 100;
  int log_subsystems = 3;
  std::vector<ScenarioConfig> scenarios;

  int max_retries = 2;

  // External-oracle runs supply the subsystem and network here; the room and
  // vehicle benchmarks build their own.
  std::optional<SubsystemOracle> external_subsystem;
  std::function<NetworkOracle(int)> external_network;

  void validate() const;
  SubsystemOracle make_subsystem() const;
  NetworkOracle make_network() const;
};

PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

// Per-stage entry points used by the CLI; each loads its inputs from the
// output directory, skips work when digests are unchanged, and writes its
// artifact atomically.
void stage_sample(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_abstract(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_asbf(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_lipschitz(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_sigma(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_compose(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_synthesize(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_simulate(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);
void stage_report(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);

struct RunOutcome {
  CompositionCertificate certificate;
  bool all_safe = false;
  int attempts = 1;
  PipelineConfig final_config;

  bool ok() const { return certificate.pass && all_safe; }
};

// Full pipeline with the escalation ladder: on a failing compositional
// condition, double n_per_input, then raise the basis degree by 2,
// alternating, up to max_retries.
RunOutcome run_pipeline(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log);

struct SweepRow {
  int M = 0;
  long long compositional_samples = 0;
  double monolithic_log10 = 0.0;
};

// Compositional sample count vs. network size, against the analytic
// monolithic count d^(network dimension) (reported in log10, never executed).
std::vector<SweepRow> complexity_sweep(const PipelineConfig& cfg, const std::vector<int>& m_values,
                                       const std::string& out_dir, std::ostream& log);

// Coupled run of the true network against its symbolic models: the input is
// chosen by the abstract controller, both systems receive it, the abstract
// disturbance is the worse of {quantized true disturbance, nearest
// representative}. Tracks the certificate value and the state distance.
struct CoupledRunResult {
  bool relation_held = true;   // V(x, xhat) <= psi_bar throughout
  bool distance_held = true;   // ||x - xhat|| <= epsilon throughout
  double max_value = 0.0;
  double max_distance = 0.0;
  int steps = 0;
};

CoupledRunResult coupled_relation_run(const NetworkOracle& network, const SymbolicModel& sm,
                                      const std::vector<AsbfSolution>& solutions,
                                      const RefinedController& controller, double psi_bar, double epsilon,
                                      const Vec& x0, int horizon);

}  // namespace datasym

#endif
