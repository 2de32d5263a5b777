#include "datasym/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "datasym/digest.hpp"
#include "datasym/rng.hpp"
#include "datasym/svg.hpp"

namespace fs = std::filesystem;

namespace datasym {

namespace {

nlohmann::ordered_json box_json(const Box& b) {
  nlohmann::ordered_json j;
  j["lower"] = std::vector<double>(b.lower.data(), b.lower.data() + b.lower.size());
  j["upper"] = std::vector<double>(b.upper.data(), b.upper.data() + b.upper.size());
  return j;
}

Box box_of(const nlohmann::json& j) {
  const auto lo = j.at("lower").get<std::vector<double>>();
  const auto hi = j.at("upper").get<std::vector<double>>();
  return Box(Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
             Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size())));
}

}  // namespace

void PipelineConfig::validate() const {
  if (benchmark != "room" && benchmark != "vehicle" && benchmark != "external")
    throw ConfigError("config: benchmark must be room, vehicle or external");
  if (M < 1) throw ConfigError("config: M must be >= 1");
  if (n_per_input < 1) throw ConfigError("config: n_per_input must be >= 1");
  state_box.validate();
  dist_box.validate();
  if (state_cells.size() != static_cast<std::size_t>(state_box.dim()))
    throw ConfigError("config: state_cells arity mismatch");
  if (dist_cells.size() != static_cast<std::size_t>(dist_box.dim()))
    throw ConfigError("config: dist_cells arity mismatch");
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("config: eta must lie in (0,1)");
  if (contraction_epsilon < 0.0) throw ConfigError("config: contraction epsilon must be >= 0");
  if (horizon < 0 || num_starts < 1) throw ConfigError("config: horizon/num_starts out of range");
  if (benchmark == "external" && !external_subsystem)
    throw ConfigError("config: external benchmark requires an embedded oracle (library use only)");
}

SubsystemOracle PipelineConfig::make_subsystem() const {
  if (benchmark == "room") return make_room_subsystem(room);
  if (benchmark == "vehicle") return make_vehicle_subsystem(vehicle);
  return *external_subsystem;
}

NetworkOracle PipelineConfig::make_network() const {
  if (benchmark == "room") {
    RoomNetworkConfig rc = room;
    rc.M = M;
    rc.topology_seed = derive_seed(seed, 0x0707);
    return make_room_network(rc);
  }
  if (benchmark == "vehicle") {
    VehicleNetworkConfig vc = vehicle;
    vc.M = M;
    return make_vehicle_network(vc);
  }
  if (!external_network) throw ConfigError("config: external benchmark without a network factory");
  return external_network(M);
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.benchmark = j.value("benchmark", std::string("room"));
  cfg.M = j.value("M", 1);
  cfg.seed = j.at("seed").get<std::uint64_t>();  // reproducibility is mandatory

  if (j.contains("room")) {
    const auto& r = j.at("room");
    cfg.room.gimel = r.value("gimel", cfg.room.gimel);
    cfg.room.daleth = r.value("daleth", cfg.room.daleth);
    cfg.room.beth = r.value("beth", cfg.room.beth);
    cfg.room.T_c = r.value("T_c", cfg.room.T_c);
    cfg.room.T_e = r.value("T_e", cfg.room.T_e);
    if (r.contains("topology")) cfg.room.topology = room_topology_from_string(r.at("topology"));
    if (r.contains("input_levels")) cfg.room.input_levels = r.at("input_levels").get<std::vector<double>>();
  }
  if (j.contains("vehicle")) {
    const auto& v = j.at("vehicle");
    cfg.vehicle.tau = v.value("tau", cfg.vehicle.tau);
    if (v.contains("input_levels"))
      cfg.vehicle.input_levels = v.at("input_levels").get<std::vector<double>>();
  }

  cfg.state_box = box_of(j.at("state_box"));
  cfg.state_cells = j.at("state_cells").get<std::vector<int>>();
  cfg.dist_box = box_of(j.at("dist_box"));
  cfg.dist_cells = j.at("dist_cells").get<std::vector<int>>();

  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    cfg.n_per_input = s.value("n_per_input", cfg.n_per_input);
    if (s.contains("strategy")) cfg.strategy = strategy_from_string(s.at("strategy"));
  }
  if (j.contains("sigma") && j.at("sigma").contains("eval_points_per_axis"))
    cfg.sigma_eval_points = j.at("sigma").at("eval_points_per_axis").get<std::vector<int>>();

  if (j.contains("basis")) {
    cfg.basis = basis_from_json(j.at("basis"));
  } else {
    cfg.basis = even_difference_basis(cfg.state_box.dim(), 6);
  }
  cfg.basis.normalize(cfg.state_box.dim());

  if (j.contains("sop")) {
    const auto& s = j.at("sop");
    if (s.contains("gamma_grid")) cfg.sop.gamma_grid = s.at("gamma_grid").get<std::vector<double>>();
    cfg.sop.alpha_min = s.value("alpha_min", cfg.sop.alpha_min);
    cfg.sop.alpha_max = s.value("alpha_max", cfg.sop.alpha_max);
    cfg.sop.psi_min = s.value("psi_min", cfg.sop.psi_min);
    cfg.sop.psi_max = s.value("psi_max", cfg.sop.psi_max);
    cfg.sop.varpi_min = s.value("varpi_min", cfg.sop.varpi_min);
    cfg.sop.varpi_max = s.value("varpi_max", cfg.sop.varpi_max);
    cfg.sop.rho_max = s.value("rho_max", cfg.sop.rho_max);
    cfg.sop.mu_abs_bound = s.value("mu_abs_bound", cfg.sop.mu_abs_bound);
    cfg.sop.initial_tuples_per_input = s.value("initial_tuples_per_input", cfg.sop.initial_tuples_per_input);
    cfg.sop.max_rounds = s.value("max_rounds", cfg.sop.max_rounds);
    cfg.sop.max_added_per_round = s.value("max_added_per_round", cfg.sop.max_added_per_round);
    cfg.sop.violation_tol = s.value("violation_tol", cfg.sop.violation_tol);
    cfg.sop.phase_slack = s.value("phase_slack", cfg.sop.phase_slack);
  }
  cfg.sop.seed = derive_seed(cfg.seed, 0xa5bf);

  if (j.contains("lipschitz")) {
    const auto& l = j.at("lipschitz");
    cfg.lipschitz.pair_distance_cap = l.value("ball_radius", cfg.lipschitz.pair_distance_cap);
    cfg.lipschitz.pairs_per_batch = l.value("pairs_per_batch", cfg.lipschitz.pairs_per_batch);
    cfg.lipschitz.batches = l.value("batches", cfg.lipschitz.batches);
    cfg.lipschitz.tuples_per_input = l.value("tuples_per_input", cfg.lipschitz.tuples_per_input);
  }
  cfg.lipschitz.seed = derive_seed(cfg.seed, 0x11b5);

  cfg.eta = j.value("eta", cfg.eta);
  if (j.contains("synthesis")) {
    cfg.contraction_epsilon = j.at("synthesis").value("contraction_epsilon", cfg.contraction_epsilon);
    cfg.recover_boundary_cells = j.at("synthesis").value("recover", cfg.recover_boundary_cells);
  }
  cfg.safe_box = j.contains("safe_box") ? box_of(j.at("safe_box")) : cfg.state_box;

  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    cfg.horizon = s.value("horizon", cfg.horizon);
    cfg.num_starts = s.value("num_starts", cfg.num_starts);
    cfg.log_subsystems = s.value("log_subsystems", cfg.log_subsystems);
    if (s.contains("scenarios")) {
      for (const auto& sc : s.at("scenarios")) {
        ScenarioConfig scen;
        scen.name = sc.at("name").get<std::string>();
        scen.boundary = sc.value("boundary", false);
        if (sc.contains("start_box")) scen.start_box = box_of(sc.at("start_box"));
        cfg.scenarios.push_back(std::move(scen));
      }
    }
  }
  if (cfg.scenarios.empty()) cfg.scenarios.push_back(ScenarioConfig{"default", std::nullopt, false});

  if (j.contains("escalation")) cfg.max_retries = j.at("escalation").value("max_retries", cfg.max_retries);

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read " + path);
  return config_from_json(nlohmann::json::parse(in));
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["benchmark"] = cfg.benchmark;
  j["M"] = cfg.M;
  j["seed"] = cfg.seed;
  if (cfg.benchmark == "room") {
    j["room"] = {{"gimel", cfg.room.gimel}, {"daleth", cfg.room.daleth}, {"beth", cfg.room.beth},
                 {"T_c", cfg.room.T_c},     {"T_e", cfg.room.T_e},       {"topology", to_string(cfg.room.topology)},
                 {"input_levels", cfg.room.input_levels}};
  }
  if (cfg.benchmark == "vehicle") {
    j["vehicle"] = {{"tau", cfg.vehicle.tau}, {"input_levels", cfg.vehicle.input_levels}};
  }
  j["state_box"] = box_json(cfg.state_box);
  j["state_cells"] = cfg.state_cells;
  j["dist_box"] = box_json(cfg.dist_box);
  j["dist_cells"] = cfg.dist_cells;
  j["sampling"] = {{"n_per_input", cfg.n_per_input}, {"strategy", to_string(cfg.strategy)}};
  if (!cfg.sigma_eval_points.empty()) j["sigma"] = {{"eval_points_per_axis", cfg.sigma_eval_points}};
  j["basis"] = basis_to_json(cfg.basis);
  j["sop"] = {{"gamma_grid", cfg.sop.gamma_grid},
              {"alpha_min", cfg.sop.alpha_min},
              {"alpha_max", cfg.sop.alpha_max},
              {"psi_min", cfg.sop.psi_min},
              {"psi_max", cfg.sop.psi_max},
              {"varpi_min", cfg.sop.varpi_min},
              {"varpi_max", cfg.sop.varpi_max},
              {"rho_max", cfg.sop.rho_max},
              {"mu_abs_bound", cfg.sop.mu_abs_bound},
              {"initial_tuples_per_input", cfg.sop.initial_tuples_per_input},
              {"max_rounds", cfg.sop.max_rounds},
              {"max_added_per_round", cfg.sop.max_added_per_round},
              {"violation_tol", cfg.sop.violation_tol},
              {"phase_slack", cfg.sop.phase_slack}};
  j["lipschitz"] = {{"ball_radius", cfg.lipschitz.pair_distance_cap},
                    {"pairs_per_batch", cfg.lipschitz.pairs_per_batch},
                    {"batches", cfg.lipschitz.batches},
                    {"tuples_per_input", cfg.lipschitz.tuples_per_input}};
  j["eta"] = cfg.eta;
  j["synthesis"] = {{"contraction_epsilon", cfg.contraction_epsilon}, {"recover", cfg.recover_boundary_cells}};
  j["safe_box"] = box_json(cfg.safe_box);
  nlohmann::ordered_json scen = nlohmann::ordered_json::array();
  for (const auto& s : cfg.scenarios) {
    nlohmann::ordered_json sj;
    sj["name"] = s.name;
    sj["boundary"] = s.boundary;
    if (s.start_box) sj["start_box"] = box_json(*s.start_box);
    scen.push_back(sj);
  }
  j["simulation"] = {{"horizon", cfg.horizon},
                     {"num_starts", cfg.num_starts},
                     {"log_subsystems", cfg.log_subsystems},
                     {"scenarios", scen}};
  j["escalation"] = {{"max_retries", cfg.max_retries}};
  return j;
}

// ---------------------------------------------------------------------------
// Stage plumbing: digest-checked freshness and atomic artifact writes.

namespace {

struct Paths {
  fs::path out;
  fs::path dataset() const { return out / "dataset.csv"; }
  fs::path abstraction() const { return out / "abstraction.bin"; }
  fs::path asbf() const { return out / "asbf.json"; }
  fs::path sigma() const { return out / "sigma.json"; }
  fs::path certificate() const { return out / "certificate.json"; }
  fs::path controller() const { return out / "controller.bin"; }
  fs::path sim_summary() const { return out / "simulation_summary.json"; }
  fs::path sim_csv(const std::string& name) const { return out / ("simulation_" + name + ".csv"); }
  fs::path report() const { return out / "report.txt"; }
  fs::path manifest() const { return out / "manifest.json"; }
};

std::string slice_digest(const nlohmann::ordered_json& j) { return digest_string(j.dump()); }

// asbf.json is written by the certificate stage and extended in place by the
// Lipschitz stage; the core digest ignores the appended record.
std::string asbf_core_digest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot read " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  j.erase("lipschitz");
  return digest_string(j.dump());
}

std::string output_digest(const fs::path& out, const std::string& name) {
  if (name.size() > 5 && name.substr(name.size() - 5) == "#core")
    return asbf_core_digest(out / name.substr(0, name.size() - 5));
  return digest_file((out / name).string());
}

nlohmann::json read_manifest(const Paths& p) {
  std::ifstream in(p.manifest());
  if (!in) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(in);
  } catch (...) {
    return nlohmann::json::object();
  }
}

bool stage_fresh(const Paths& p, const std::string& stage, const std::map<std::string, std::string>& inputs,
                 const std::vector<std::string>& outputs) {
  const nlohmann::json m = read_manifest(p);
  if (!m.contains("stages") || !m.at("stages").contains(stage)) return false;
  const auto& st = m.at("stages").at(stage);
  if (st.value("inputs", nlohmann::json::object()) != nlohmann::json(inputs)) return false;
  const auto recorded = st.value("outputs", nlohmann::json::object());
  for (const auto& name : outputs) {
    const fs::path f = p.out / (name.size() > 5 && name.substr(name.size() - 5) == "#core"
                                    ? name.substr(0, name.size() - 5)
                                    : name);
    if (!fs::exists(f)) return false;
    if (!recorded.contains(name)) return false;
    try {
      if (recorded.at(name).get<std::string>() != output_digest(p.out, name)) return false;
    } catch (...) {
      return false;
    }
  }
  return true;
}

void stage_record(const Paths& p, const std::string& stage, const std::map<std::string, std::string>& inputs,
                  const std::vector<std::string>& outputs) {
  nlohmann::json m = read_manifest(p);
  nlohmann::json st;
  st["inputs"] = inputs;
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& name : outputs) outs[name] = output_digest(p.out, name);
  st["outputs"] = outs;
  m["stages"][stage] = st;
  const fs::path tmp = p.manifest().string() + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    o << m.dump(2) << "\n";
  }
  fs::rename(tmp, p.manifest());
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    if (!o) throw IoError("write: cannot open " + tmp.string());
    o << content;
  }
  fs::rename(tmp, path);
}

nlohmann::ordered_json slice_model(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["benchmark"] = cfg.benchmark;
  if (cfg.benchmark == "room")
    j["room"] = {{"gimel", cfg.room.gimel},
                 {"daleth", cfg.room.daleth},
                 {"beth", cfg.room.beth},
                 {"T_c", cfg.room.T_c},
                 {"T_e", cfg.room.T_e},
                 {"input_levels", cfg.room.input_levels}};
  if (cfg.benchmark == "vehicle")
    j["vehicle"] = {{"tau", cfg.vehicle.tau}, {"input_levels", cfg.vehicle.input_levels}};
  j["state_box"] = box_json(cfg.state_box);
  j["state_cells"] = cfg.state_cells;
  j["dist_box"] = box_json(cfg.dist_box);
  j["dist_cells"] = cfg.dist_cells;
  return j;
}

UniformGrid state_grid_of(const PipelineConfig& cfg) { return UniformGrid(cfg.state_box, cfg.state_cells); }
UniformGrid dist_grid_of(const PipelineConfig& cfg) { return UniformGrid(cfg.dist_box, cfg.dist_cells); }

AsbfSolution load_asbf_with_lipschitz(const fs::path& path, LipschitzEstimate* est) {
  std::ifstream in(path);
  if (!in) throw IoError("pipeline: cannot read " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  AsbfSolution sol = asbf_from_json(j);
  if (est) {
    if (!j.contains("lipschitz"))
      throw Error("pipeline: " + path.string() + " has no Lipschitz record; run the lipschitz stage first");
    *est = lipschitz_from_json(j.at("lipschitz"));
  }
  return sol;
}

}  // namespace

void stage_sample(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  fs::create_directories(p.out);
  nlohmann::ordered_json sl = slice_model(cfg);
  sl["n_per_input"] = cfg.n_per_input;
  sl["strategy"] = to_string(cfg.strategy);
  sl["seed"] = cfg.seed;
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(sl)}};
  if (stage_fresh(p, "sample", inputs, {"dataset.csv"})) {
    log << "[sample] up-to-date\n";
    return;
  }
  const SubsystemOracle oracle = cfg.make_subsystem();
  Dataset ds = collect(oracle, cfg.state_box, cfg.dist_box, cfg.n_per_input, cfg.strategy,
                       derive_seed(cfg.seed, 0x5a11));
  const fs::path tmp = p.out / "dataset.csv.tmp";
  save_dataset(ds, tmp.string());
  fs::rename(tmp.string() + ".meta.json", p.dataset().string() + ".meta.json");
  fs::rename(tmp, p.dataset());
  stage_record(p, "sample", inputs, {"dataset.csv"});
  log << "[sample] " << ds.pairs.size() << " pairs (" << cfg.n_per_input << " per input)\n";
}

void stage_abstract(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  fs::create_directories(p.out);
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(slice_model(cfg))}};
  if (stage_fresh(p, "abstract", inputs, {"abstraction.bin"})) {
    log << "[abstract] up-to-date\n";
    return;
  }
  const SubsystemOracle oracle = cfg.make_subsystem();
  const SymbolicModel sm = build_symbolic(oracle, state_grid_of(cfg), dist_grid_of(cfg), oracle.input_set);
  const fs::path tmp = p.out / "abstraction.bin.tmp";
  save_symbolic(sm, tmp.string());
  fs::rename(tmp, p.abstraction());
  stage_record(p, "abstract", inputs, {"abstraction.bin"});
  std::int64_t sink = 0;
  for (auto t : sm.transitions) sink += (t == SymbolicModel::kSink) ? 1 : 0;
  log << "[abstract] " << sm.n_states() << " states x " << sm.n_inputs() << " inputs x " << sm.n_dists()
      << " disturbances; " << sink << " SINK entries\n";
}

void stage_asbf(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  nlohmann::ordered_json sl;
  sl["basis"] = basis_to_json(cfg.basis);
  sl["sop"] = {{"gamma_grid", cfg.sop.gamma_grid},       {"alpha_min", cfg.sop.alpha_min},
               {"alpha_max", cfg.sop.alpha_max},         {"psi_min", cfg.sop.psi_min},
               {"psi_max", cfg.sop.psi_max},             {"varpi_min", cfg.sop.varpi_min},
               {"varpi_max", cfg.sop.varpi_max},         {"rho_max", cfg.sop.rho_max},
               {"mu_abs_bound", cfg.sop.mu_abs_bound},   {"initial", cfg.sop.initial_tuples_per_input},
               {"violation_tol", cfg.sop.violation_tol}, {"phase_slack", cfg.sop.phase_slack},
               {"seed", cfg.sop.seed}};
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(sl)},
                                                     {"dataset.csv", digest_file(p.dataset().string())},
                                                     {"abstraction.bin", digest_file(p.abstraction().string())}};
  if (stage_fresh(p, "asbf", inputs, {"asbf.json#core"})) {
    log << "[asbf] up-to-date\n";
    return;
  }
  const Dataset ds = load_dataset(p.dataset().string());
  const SymbolicModel sm = load_symbolic(p.abstraction().string());
  BasisSpec basis = cfg.basis;
  basis.normalize(sm.state_grid.dim());
  basis.validate(sm.state_grid.dim());
  SopDiagnostics diag;
  AsbfSolution sol = solve_sop(ds, sm, basis, cfg.sop, &diag);
  sol.dataset_digest = digest_file(p.dataset().string());
  write_atomic(p.asbf(), asbf_to_json(sol).dump(2) + "\n");
  stage_record(p, "asbf", inputs, {"asbf.json#core"});
  log << "[asbf] gamma=" << sol.gamma << " mu=" << sol.mu << " varpi=" << sol.varpi << " psi=" << sol.psi
      << " alpha=" << sol.alpha << " residual=" << sol.feasibility_residual << " (rounds=" << diag.rounds
      << ", rows=" << diag.working_rows << ")\n";
}

void stage_lipschitz(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  nlohmann::ordered_json sl;
  sl["ball_radius"] = cfg.lipschitz.pair_distance_cap;
  sl["pairs_per_batch"] = cfg.lipschitz.pairs_per_batch;
  sl["batches"] = cfg.lipschitz.batches;
  sl["tuples_per_input"] = cfg.lipschitz.tuples_per_input;
  sl["seed"] = cfg.lipschitz.seed;
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(sl)},
                                                     {"asbf.json#core", asbf_core_digest(p.asbf())},
                                                     {"abstraction.bin", digest_file(p.abstraction().string())}};
  if (stage_fresh(p, "lipschitz", inputs, {"asbf.json"})) {
    log << "[lipschitz] up-to-date\n";
    return;
  }
  const AsbfSolution sol = load_asbf(p.asbf().string());
  const SymbolicModel sm = load_symbolic(p.abstraction().string());
  const SubsystemOracle oracle = cfg.make_subsystem();
  const LipschitzEstimate est = estimate_lipschitz(oracle, sol, sm, cfg.lipschitz);
  std::ifstream in(p.asbf());
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
  in.close();
  j["lipschitz"] = lipschitz_to_json(est, cfg.lipschitz);
  write_atomic(p.asbf(), j.dump(2) + "\n");
  stage_record(p, "lipschitz", inputs, {"asbf.json"});
  log << "[lipschitz] L1=" << est.L1 << " L2=" << est.L2 << " L=" << est.L << "\n";
}

void stage_sigma(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  std::vector<int> eval_pts = cfg.sigma_eval_points;
  if (eval_pts.empty()) eval_pts = default_eval_points(cfg.state_cells, cfg.dist_cells);
  nlohmann::ordered_json sl;
  sl["eval_points_per_axis"] = eval_pts;
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(sl)},
                                                     {"dataset.csv", digest_file(p.dataset().string())}};
  if (stage_fresh(p, "sigma", inputs, {"sigma.json"})) {
    log << "[sigma] up-to-date\n";
    return;
  }
  const Dataset ds = load_dataset(p.dataset().string());
  const CoverageReport rep = compute_sigma(ds, ds.x_box, ds.w_box, eval_pts);
  nlohmann::ordered_json j;
  j["sigma"] = rep.sigma;
  j["slack"] = rep.slack;
  j["sigma_conservative"] = rep.sigma_conservative;
  j["eval_points_per_axis"] = rep.eval_points_per_axis;
  j["argmax_point"] = std::vector<double>(rep.argmax_point.data(),
                                          rep.argmax_point.data() + rep.argmax_point.size());
  j["argmax_u"] = rep.argmax_u;
  write_atomic(p.sigma(), j.dump(2) + "\n");
  stage_record(p, "sigma", inputs, {"sigma.json"});
  log << "[sigma] sigma=" << rep.sigma << " (+slack " << rep.slack << " -> " << rep.sigma_conservative
      << ")\n";
}

void stage_compose(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  nlohmann::ordered_json sl;
  sl["M"] = cfg.M;
  sl["eta"] = cfg.eta;
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(sl)},
                                                     {"asbf.json", digest_file(p.asbf().string())},
                                                     {"sigma.json", digest_file(p.sigma().string())}};
  if (stage_fresh(p, "compose", inputs, {"certificate.json"})) {
    log << "[compose] up-to-date\n";
    return;
  }
  LipschitzEstimate est;
  const AsbfSolution sol = load_asbf_with_lipschitz(p.asbf(), &est);
  std::ifstream sin(p.sigma());
  const nlohmann::json sj = nlohmann::json::parse(sin);
  const double sigma = sj.at("sigma_conservative").get<double>();

  SubsystemTerm term;
  term.mu = sol.mu;
  term.varpi = sol.varpi;
  term.L = est.L;
  term.sigma = sigma;
  const std::vector<SubsystemTerm> parts(static_cast<std::size_t>(cfg.M), term);
  const std::vector<AsbfSolution> sols(static_cast<std::size_t>(cfg.M), sol);
  CompositionCertificate cert = compose_certificate(sols, parts, cfg.eta);
  cert.digests["dataset.csv"] = digest_file(p.dataset().string());
  cert.digests["abstraction.bin"] = digest_file(p.abstraction().string());
  cert.digests["asbf.json"] = digest_file(p.asbf().string());
  cert.digests["sigma.json"] = digest_file(p.sigma().string());
  write_atomic(p.certificate(), certificate_to_json(cert).dump(2) + "\n");
  stage_record(p, "compose", inputs, {"certificate.json"});
  log << "[compose] total=" << cert.total << " (" << (cert.pass ? "pass" : "FAIL")
      << "), epsilon=" << cert.epsilon << " psi_bar=" << cert.psi_bar << "\n";
}

void stage_synthesize(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  nlohmann::ordered_json sl;
  sl["contraction_epsilon"] = cfg.contraction_epsilon;
  sl["recover"] = cfg.recover_boundary_cells;
  sl["safe_box"] = box_json(cfg.safe_box);
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(sl)},
                                                     {"abstraction.bin", digest_file(p.abstraction().string())}};
  if (stage_fresh(p, "synthesize", inputs, {"controller.bin"})) {
    log << "[synthesize] up-to-date\n";
    return;
  }
  const SymbolicModel sm = load_symbolic(p.abstraction().string());
  const ContractionResult safe = contract_safe_set(cfg.safe_box, sm.state_grid, cfg.contraction_epsilon);
  if (safe.collapsed)
    log << "[synthesize] warning: contraction emptied the safe set (epsilon=" << cfg.contraction_epsilon
        << ")\n";
  SafetyGame game{&sm, safe.indices};
  AbstractController ctl = solve_safety_game(game);
  const std::int64_t core = ctl.winning_count();
  if (cfg.recover_boundary_cells) {
    const ContractionResult domain = contract_safe_set(cfg.safe_box, sm.state_grid, 0.0);
    ctl = extend_to_recoverable(sm, ctl, domain.indices);
  }
  const fs::path tmp = p.out / "controller.bin.tmp";
  save_controller(ctl, sm.state_grid, sm.input_set, tmp.string());
  fs::rename(tmp, p.controller());
  stage_record(p, "synthesize", inputs, {"controller.bin"});
  log << "[synthesize] winning " << ctl.winning_count() << " / " << sm.n_states() << " cells (core "
      << core << ")\n";
}

namespace {

RefinedController make_refined(const LoadedController& lc, const Box& safe_box) {
  RefinedController rc;
  rc.controller = std::make_shared<AbstractController>(lc.controller);
  rc.quantizer = lc.grid;
  rc.input_set = lc.input_set;
  rc.safe_box = safe_box;
  return rc;
}

// Uniform draw over the winning region by rejection from the safe box.
Vec winning_start(const RefinedController& rc, Rng& rng) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Vec x = rng.in_box(rc.safe_box);
    if (rc.try_input_index(x)) return x;
  }
  throw Error("simulate: could not sample a start inside the winning region");
}

}  // namespace

void stage_simulate(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  nlohmann::ordered_json sl;
  sl["M"] = cfg.M;
  sl["horizon"] = cfg.horizon;
  sl["num_starts"] = cfg.num_starts;
  sl["log_subsystems"] = cfg.log_subsystems;
  sl["seed"] = cfg.seed;
  nlohmann::ordered_json scen = nlohmann::ordered_json::array();
  std::vector<std::string> outputs = {"simulation_summary.json"};
  for (const auto& s : cfg.scenarios) {
    nlohmann::ordered_json sj;
    sj["name"] = s.name;
    sj["boundary"] = s.boundary;
    if (s.start_box) sj["start_box"] = box_json(*s.start_box);
    scen.push_back(sj);
    outputs.push_back("simulation_" + s.name + ".csv");
  }
  sl["scenarios"] = scen;
  const std::map<std::string, std::string> inputs = {{"config", slice_digest(sl)},
                                                     {"controller.bin", digest_file(p.controller().string())}};
  if (stage_fresh(p, "simulate", inputs, outputs)) {
    log << "[simulate] up-to-date\n";
    return;
  }

  const LoadedController lc = load_controller(p.controller().string());
  if (lc.controller.winning_count() == 0) {
    nlohmann::ordered_json summary;
    summary["no_controller"] = true;
    summary["all_safe"] = false;
    write_atomic(p.sim_summary(), summary.dump(2) + "\n");
    for (const auto& s : cfg.scenarios) write_atomic(p.sim_csv(s.name), "k,subsystem,u_index,safe_flag\n");
    stage_record(p, "simulate", inputs, outputs);
    log << "[simulate] empty winning set: no controller\n";
    return;
  }

  const NetworkOracle network = cfg.make_network();
  const std::vector<RefinedController> controllers(static_cast<std::size_t>(cfg.M),
                                                   make_refined(lc, cfg.safe_box));
  std::vector<int> logged;
  for (int i = 0; i < std::min(cfg.M, cfg.log_subsystems); ++i) logged.push_back(i);

  nlohmann::ordered_json summary;
  summary["no_controller"] = false;
  bool all_safe = true;
  for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
    const auto& scenario = cfg.scenarios[si];
    Rng rng(derive_seed(cfg.seed, 0x51e0, si));
    nlohmann::ordered_json rec;
    rec["starts"] = cfg.num_starts;
    int safe_count = 0;
    nlohmann::ordered_json violations = nlohmann::ordered_json::array();
    for (int start = 0; start < cfg.num_starts; ++start) {
      Vec x0(network.state_dim());
      Eigen::Index off = 0;
      for (int i = 0; i < cfg.M; ++i) {
        const auto& rc = controllers[static_cast<std::size_t>(i)];
        Vec xi;
        if (scenario.boundary && start < 2) {
          xi = (start == 0) ? rc.safe_box.upper : rc.safe_box.lower;
        } else if (scenario.start_box) {
          xi = rng.in_box(*scenario.start_box);
        } else {
          xi = winning_start(rc, rng);
        }
        x0.segment(off, xi.size()) = xi;
        off += xi.size();
      }
      const SimulationResult sim = simulate_closed_loop(network, controllers, x0, cfg.horizon);
      if (sim.safe) {
        ++safe_count;
      } else {
        all_safe = false;
        violations.push_back({{"start", start}, {"step", sim.first_violation}});
      }
      if (start == 0)
        save_trajectory_csv(sim, network, controllers, logged, p.sim_csv(scenario.name).string());
    }
    rec["safe"] = safe_count;
    rec["all_safe"] = safe_count == cfg.num_starts;
    rec["violations"] = violations;
    summary[scenario.name] = rec;
    log << "[simulate] scenario '" << scenario.name << "': " << safe_count << "/" << cfg.num_starts
        << " safe\n";
  }
  summary["all_safe"] = all_safe;
  write_atomic(p.sim_summary(), summary.dump(2) + "\n");
  stage_record(p, "simulate", inputs, outputs);
}

namespace {

// Trajectory plots from the logged CSV: time series per room for scalar
// states, phase-plane curves for planar states.
void render_trajectories(const PipelineConfig& cfg, const fs::path& csv, const fs::path& svg_path) {
  std::ifstream in(csv);
  if (!in) throw IoError("report: missing trajectory log " + csv.string());
  std::string header;
  std::getline(in, header);
  const int dim = cfg.state_box.dim();
  std::map<int, std::vector<Vec>> per_subsystem;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() < static_cast<std::size_t>(2 + dim)) continue;
    Vec x = Eigen::Map<const Vec>(vals.data() + 2, dim);
    per_subsystem[static_cast<int>(vals[1])].push_back(x);
  }

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  SvgPlot plot;
  int ci = 0;
  if (dim == 1) {
    plot.title = "closed-loop trajectories";
    plot.xlabel = "step k";
    plot.ylabel = "x";
    plot.hlines = {cfg.safe_box.lower[0], cfg.safe_box.upper[0]};
    double span = cfg.safe_box.upper[0] - cfg.safe_box.lower[0];
    plot.clip_y0 = cfg.safe_box.lower[0] - 0.05 * span;
    plot.clip_y1 = cfg.safe_box.upper[0] + 0.05 * span;
    for (const auto& [i, xs] : per_subsystem) {
      SvgSeries s;
      s.color = kColors[ci++ % 10];
      s.label = "subsystem " + std::to_string(i);
      for (std::size_t k = 0; k < xs.size(); ++k) {
        s.x.push_back(static_cast<double>(k));
        s.y.push_back(xs[k][0]);
      }
      plot.series.push_back(std::move(s));
    }
  } else {
    plot.title = "closed-loop trajectories (first two state axes)";
    plot.xlabel = "x_0";
    plot.ylabel = "x_1";
    plot.rects.push_back(SvgRect{cfg.safe_box.lower[0], cfg.safe_box.lower[1], cfg.safe_box.upper[0],
                                 cfg.safe_box.upper[1], "#e8f0e8"});
    const double sx = cfg.safe_box.upper[0] - cfg.safe_box.lower[0];
    const double sy = cfg.safe_box.upper[1] - cfg.safe_box.lower[1];
    plot.clip_x0 = cfg.safe_box.lower[0] - 0.05 * sx;
    plot.clip_x1 = cfg.safe_box.upper[0] + 0.05 * sx;
    plot.clip_y0 = cfg.safe_box.lower[1] - 0.05 * sy;
    plot.clip_y1 = cfg.safe_box.upper[1] + 0.05 * sy;
    for (const auto& [i, xs] : per_subsystem) {
      SvgSeries s;
      s.color = kColors[ci++ % 10];
      s.label = "subsystem " + std::to_string(i);
      for (const auto& x : xs) {
        s.x.push_back(x[0]);
        s.y.push_back(x[1]);
      }
      plot.series.push_back(std::move(s));
    }
  }
  plot.save(svg_path.string());
}

}  // namespace

void stage_report(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  Paths p{fs::path(out_dir)};
  for (const auto& f : {p.certificate(), p.sim_summary()})
    if (!fs::exists(f)) throw Error("report: missing artifact " + f.string());

  std::map<std::string, std::string> inputs = {
      {"certificate.json", digest_file(p.certificate().string())},
      {"simulation_summary.json", digest_file(p.sim_summary().string())}};
  std::vector<std::string> outputs = {"report.txt"};
  {
    std::ifstream sin(p.sim_summary());
    const nlohmann::json summary = nlohmann::json::parse(sin);
    if (!summary.value("no_controller", false))
      for (const auto& scenario : cfg.scenarios) {
        if (!fs::exists(p.sim_csv(scenario.name)))
          throw Error("report: missing artifact " + p.sim_csv(scenario.name).string());
        inputs["simulation_" + scenario.name + ".csv"] = digest_file(p.sim_csv(scenario.name).string());
        outputs.push_back("trajectories_" + scenario.name + ".svg");
      }
  }
  if (stage_fresh(p, "report", inputs, outputs)) {
    log << "[report] up-to-date\n";
    return;
  }

  const CompositionCertificate cert = load_certificate(p.certificate().string());
  std::ifstream sin(p.sim_summary());
  const nlohmann::json summary = nlohmann::json::parse(sin);

  std::ostringstream os;
  os << "== certificate ==\n";
  os << "subsystems          " << cert.per_subsystem.size() << "\n";
  if (!cert.per_subsystem.empty()) {
    const auto& t = cert.per_subsystem.front();
    os << "per-subsystem term  mu=" << t.mu << "  varpi=" << t.varpi << "  L=" << t.L
       << "  sigma=" << t.sigma << "  -> " << t.term() << "\n";
  }
  os << "total               " << cert.total << "\n";
  os << "condition           " << (cert.pass ? "PASS (<= 0)" : "FAIL (> 0)") << "\n";
  os << "gamma               " << cert.gamma << "\n";
  os << "alpha               " << cert.alpha << "\n";
  os << "psi                 " << cert.psi << "\n";
  os << "eta                 " << cert.eta << "\n";
  os << "gamma_bar           " << cert.gamma_bar << "\n";
  os << "psi_bar             " << cert.psi_bar << "  (= psi / ((1-gamma) eta))\n";
  os << "epsilon             " << cert.epsilon << "  (= sqrt(psi_bar / alpha))\n";
  os << "\n== simulations ==\n";
  if (summary.value("no_controller", false)) {
    os << "no controller (empty winning set); nothing to plot\n";
  } else {
    for (const auto& scenario : cfg.scenarios) {
      if (!summary.contains(scenario.name)) continue;
      const auto& rec = summary.at(scenario.name);
      os << scenario.name << ": " << rec.at("safe").get<int>() << "/" << rec.at("starts").get<int>()
         << " runs safe\n";
      render_trajectories(cfg, p.sim_csv(scenario.name), p.out / ("trajectories_" + scenario.name + ".svg"));
    }
  }
  write_atomic(p.report(), os.str());
  stage_record(p, "report", inputs, outputs);
  log << "[report] written " << p.report().string() << "\n";
}

RunOutcome run_pipeline(const PipelineConfig& cfg_in, const std::string& out_dir, std::ostream& log) {
  PipelineConfig cfg = cfg_in;
  cfg.validate();
  Paths p{fs::path(out_dir)};
  fs::create_directories(p.out);

  RunOutcome outcome;
  for (int attempt = 0;; ++attempt) {
    outcome.attempts = attempt + 1;
    stage_sample(cfg, out_dir, log);
    stage_abstract(cfg, out_dir, log);
    stage_asbf(cfg, out_dir, log);
    stage_lipschitz(cfg, out_dir, log);
    stage_sigma(cfg, out_dir, log);
    stage_compose(cfg, out_dir, log);
    outcome.certificate = load_certificate(p.certificate().string());
    if (outcome.certificate.pass) break;
    if (attempt >= cfg.max_retries) {
      log << "[run] compositional condition failed after " << outcome.attempts
          << " attempt(s); total=" << outcome.certificate.total << "\n";
      break;
    }
    // Escalation ladder: more data first, then a richer template.
    if (attempt % 2 == 0) {
      cfg.n_per_input *= 2;
      log << "[run] escalation: n_per_input doubled to " << cfg.n_per_input << "\n";
    } else {
      cfg.basis = raise_degree(cfg.basis, cfg.state_box.dim(), 2);
      log << "[run] escalation: basis degree raised to " << cfg.basis.max_degree() << "\n";
    }
  }

  stage_synthesize(cfg, out_dir, log);
  stage_simulate(cfg, out_dir, log);
  stage_report(cfg, out_dir, log);

  std::ifstream sin(p.sim_summary());
  const nlohmann::json summary = nlohmann::json::parse(sin);
  outcome.all_safe = summary.value("all_safe", false);
  outcome.final_config = cfg;
  return outcome;
}

std::vector<SweepRow> complexity_sweep(const PipelineConfig& cfg, const std::vector<int>& m_values,
                                       const std::string& out_dir, std::ostream& log) {
  if (m_values.empty()) throw ConfigError("sweep: empty M list");
  for (std::size_t i = 1; i < m_values.size(); ++i)
    if (m_values[i] <= m_values[i - 1]) throw ConfigError("sweep: M values must increase");

  const int n_inputs = static_cast<int>(cfg.make_subsystem().input_set.size());
  const long long per_subsystem = static_cast<long long>(cfg.n_per_input) * n_inputs;
  const int joint_dim = cfg.state_box.dim() + cfg.dist_box.dim();
  const double density = std::llround(std::pow(static_cast<double>(cfg.n_per_input), 1.0 / joint_dim));

  std::vector<SweepRow> rows;
  for (int m : m_values) {
    SweepRow r;
    r.M = m;
    r.compositional_samples = per_subsystem * m;
    // Monolithic: the per-axis density raised to the network state dimension,
    // reported analytically in log10 (never executed).
    r.monolithic_log10 = static_cast<double>(m) * cfg.state_box.dim() * std::log10(density);
    rows.push_back(r);
  }

  Paths p{fs::path(out_dir)};
  fs::create_directories(p.out);
  std::ostringstream csv;
  csv << "M,compositional_samples,monolithic_log10_samples\n";
  for (const auto& r : rows)
    csv << r.M << "," << r.compositional_samples << "," << r.monolithic_log10 << "\n";
  write_atomic(p.out / "sweep.csv", csv.str());

  SvgPlot plot;
  plot.title = "sample complexity vs. network size (log10)";
  plot.xlabel = "number of subsystems M (log)";
  plot.ylabel = "log10(samples)";
  plot.logx = true;
  SvgSeries comp, mono;
  comp.label = "compositional";
  comp.color = "#1f77b4";
  comp.markers = true;
  mono.label = "monolithic (analytic)";
  mono.color = "#d62728";
  mono.markers = true;
  for (const auto& r : rows) {
    comp.x.push_back(r.M);
    comp.y.push_back(std::log10(static_cast<double>(r.compositional_samples)));
    mono.x.push_back(r.M);
    mono.y.push_back(r.monolithic_log10);
  }
  plot.series = {comp, mono};
  plot.save((p.out / "sweep.svg").string());
  log << "[sweep] " << rows.size() << " rows -> sweep.csv, sweep.svg\n";
  return rows;
}

CoupledRunResult coupled_relation_run(const NetworkOracle& network, const SymbolicModel& sm,
                                      const std::vector<AsbfSolution>& solutions,
                                      const RefinedController& controller, double psi_bar, double epsilon,
                                      const Vec& x0, int horizon) {
  const int M = network.size();
  if (static_cast<int>(solutions.size()) != M) throw ShapeError("coupled: one solution per subsystem");

  CoupledRunResult res;
  std::vector<Vec> parts = network.split_state(x0);
  std::vector<std::int64_t> cells(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) {
    const auto q = sm.state_grid.quantize(parts[static_cast<std::size_t>(i)]);
    if (!q) throw Error("coupled: start outside the grid domain");
    cells[static_cast<std::size_t>(i)] = q->cell;
  }

  auto record = [&]() {
    double value = 0.0, dist2 = 0.0;
    for (int i = 0; i < M; ++i) {
      const Vec rep = sm.state_grid.representative(cells[static_cast<std::size_t>(i)]);
      value += evaluate_asbf(solutions[static_cast<std::size_t>(i)], parts[static_cast<std::size_t>(i)], rep);
      dist2 += (parts[static_cast<std::size_t>(i)] - rep).squaredNorm();
    }
    res.max_value = std::max(res.max_value, value);
    res.max_distance = std::max(res.max_distance, std::sqrt(dist2));
    if (value > psi_bar) res.relation_held = false;
    if (std::sqrt(dist2) > epsilon) res.distance_held = false;
  };
  record();

  for (int k = 0; k < horizon; ++k) {
    std::vector<int> u_idx(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) {
      const int u = controller.controller->min_allowed(cells[static_cast<std::size_t>(i)]);
      if (u < 0) throw UncontrollableStateError("coupled: abstract state left the winning region",
                                                cells[static_cast<std::size_t>(i)]);
      u_idx[static_cast<std::size_t>(i)] = u;
    }
    const auto dists = network.interconnection(parts);
    std::vector<Vec> next(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i)
      next[static_cast<std::size_t>(i)] = network.subsystems[static_cast<std::size_t>(i)].step_fn(
          parts[static_cast<std::size_t>(i)],
          controller.input_set[static_cast<std::size_t>(u_idx[static_cast<std::size_t>(i)])],
          dists[static_cast<std::size_t>(i)]);

    // Abstract disturbance: the worse of the quantized true disturbance and
    // the nearest representative, judged by the next certificate value.
    for (int i = 0; i < M; ++i) {
      const Vec& w = dists[static_cast<std::size_t>(i)];
      std::vector<std::int64_t> candidates;
      if (const auto qw = sm.dist_grid.quantize(w)) candidates.push_back(qw->cell);
      candidates.push_back(sm.dist_grid.nearest(w).cell);
      double worst = -std::numeric_limits<double>::infinity();
      std::uint32_t chosen = SymbolicModel::kSink;
      for (std::int64_t wc : candidates) {
        const std::uint32_t succ = sm.transitions[static_cast<std::size_t>(
            sm.flat_index(cells[static_cast<std::size_t>(i)], u_idx[static_cast<std::size_t>(i)], wc))];
        if (succ == SymbolicModel::kSink) continue;
        const double v = evaluate_asbf(solutions[static_cast<std::size_t>(i)],
                                       next[static_cast<std::size_t>(i)],
                                       sm.state_grid.representative(static_cast<std::int64_t>(succ)));
        if (v > worst) {
          worst = v;
          chosen = succ;
        }
      }
      if (chosen == SymbolicModel::kSink)
        throw Error("coupled: every admissible abstract disturbance leads to SINK");
      cells[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(chosen);
    }
    parts = std::move(next);
    record();
    res.steps = k + 1;
  }
  return res;
}

}  // namespace datasym
