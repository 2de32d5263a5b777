#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "datasym/digest.hpp"
#include "datasym/pipeline.hpp"
#include "datasym/rng.hpp"

using namespace datasym;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_room_json(int m = 2) {
  nlohmann::json j = {
      {"benchmark", "room"},
      {"M", m},
      {"seed", 77001},
      {"room",
       {{"gimel", 0.005}, {"daleth", 0.01}, {"beth", 0.06}, {"T_c", 5.0}, {"T_e", -2.0}, {"topology", "line"}}},
      {"state_box", {{"lower", {-0.5}}, {"upper", {0.5}}}},
      {"state_cells", {50}},
      {"dist_box", {{"lower", {-1.0}}, {"upper", {1.0}}}},
      {"dist_cells", {4}},
      {"sampling", {{"n_per_input", 40}, {"strategy", "low-discrepancy"}}},
      {"sigma", {{"eval_points_per_axis", {81, 41}}}},
      {"sop", {{"gamma_grid", {0.95, 0.985}}, {"initial_tuples_per_input", 8}}},
      {"lipschitz",
       {{"ball_radius", 1e-3}, {"pairs_per_batch", 40}, {"batches", 10}, {"tuples_per_input", 4}}},
      {"eta", 0.99},
      {"synthesis", {{"contraction_epsilon", 0.0}}},
      {"simulation",
       {{"horizon", 60},
        {"num_starts", 5},
        {"log_subsystems", 2},
        {"scenarios", nlohmann::json::array({{{"name", "boundary"}, {"boundary", true}}})}}},
      {"escalation", {{"max_retries", 1}}}};
  return j;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::ostringstream g_sink;

}  // namespace

TEST_CASE("config JSON round-trips") {
  const PipelineConfig cfg = config_from_json(tiny_room_json());
  const PipelineConfig back = config_from_json(nlohmann::json::parse(config_to_json(cfg).dump()));
  CHECK(back.M == cfg.M);
  CHECK(back.seed == cfg.seed);
  CHECK(back.state_cells == cfg.state_cells);
  CHECK(back.n_per_input == cfg.n_per_input);
  CHECK(back.sop.gamma_grid == cfg.sop.gamma_grid);
  CHECK(back.basis.size() == cfg.basis.size());
  CHECK(back.scenarios.size() == cfg.scenarios.size());
  CHECK(config_to_json(back).dump() == config_to_json(cfg).dump());
}

TEST_CASE("tiny room pipeline runs end to end and is reproducible") {
  const PipelineConfig cfg = config_from_json(tiny_room_json());
  TempDir a("datasym_pipe_a"), b("datasym_pipe_b");

  const RunOutcome ra = run_pipeline(cfg, a.path.string(), g_sink);
  CHECK(ra.certificate.pass);
  CHECK(ra.all_safe);
  CHECK(ra.attempts == 1);
  CHECK(ra.ok());

  const RunOutcome rb = run_pipeline(cfg, b.path.string(), g_sink);
  CHECK(rb.ok());
  for (const char* name : {"dataset.csv", "dataset.csv.meta.json", "abstraction.bin", "asbf.json",
                           "sigma.json", "certificate.json", "controller.bin", "simulation_boundary.csv",
                           "simulation_summary.json", "report.txt", "trajectories_boundary.svg"}) {
    const fs::path fa = a.path / name, fb = b.path / name;
    REQUIRE(fs::exists(fa));
    REQUIRE(fs::exists(fb));
    CHECK(digest_file(fa.string()) == digest_file(fb.string()));
  }

  // The certificate carries digests of the artifacts it was built from.
  CHECK(ra.certificate.digests.at("dataset.csv") == digest_file((a.path / "dataset.csv").string()));
}

TEST_CASE("stages are no-ops when inputs are unchanged") {
  const PipelineConfig cfg = config_from_json(tiny_room_json());
  TempDir dir("datasym_pipe_noop");
  run_pipeline(cfg, dir.path.string(), g_sink);

  std::ostringstream log;
  stage_sample(cfg, dir.path.string(), log);
  stage_abstract(cfg, dir.path.string(), log);
  stage_asbf(cfg, dir.path.string(), log);
  stage_lipschitz(cfg, dir.path.string(), log);
  stage_sigma(cfg, dir.path.string(), log);
  stage_compose(cfg, dir.path.string(), log);
  stage_synthesize(cfg, dir.path.string(), log);
  stage_simulate(cfg, dir.path.string(), log);
  const std::string out = log.str();
  for (const char* stage :
       {"sample", "abstract", "asbf", "lipschitz", "sigma", "compose", "synthesize", "simulate"}) {
    INFO(stage);
    CHECK(out.find(std::string("[") + stage + "] up-to-date") != std::string::npos);
  }

  // A changed seed invalidates the seeded stages but not the seed-free ones.
  PipelineConfig cfg2 = cfg;
  cfg2.seed += 1;
  std::ostringstream log2;
  stage_sample(cfg2, dir.path.string(), log2);
  stage_abstract(cfg2, dir.path.string(), log2);
  CHECK(log2.str().find("[sample] up-to-date") == std::string::npos);
  CHECK(log2.str().find("[abstract] up-to-date") != std::string::npos);
}

TEST_CASE("escalation ladder retries and reports an honest failure") {
  nlohmann::json j = tiny_room_json();
  // A certificate bound this tight cannot absorb L*sigma from 3 samples.
  j["basis"] = {{"terms",
                 {{{"kind", "diff"}, {"exponents", {2}}}, {{"kind", "const"}, {"exponents", {0}}}}},
                {"coef_bound", 1e-4},
                {"const_bound", 1e-4}};
  j["sampling"]["n_per_input"] = 3;
  j["escalation"]["max_retries"] = 1;
  const PipelineConfig cfg = config_from_json(j);
  TempDir dir("datasym_pipe_fail");
  const RunOutcome outcome = run_pipeline(cfg, dir.path.string(), g_sink);
  CHECK(!outcome.certificate.pass);
  CHECK(outcome.attempts == 2);
  CHECK(outcome.final_config.n_per_input == 6);  // first rung doubles the data
  CHECK(!outcome.ok());
  CHECK(fs::exists(dir.path / "report.txt"));
  std::ifstream in(dir.path / "report.txt");
  std::stringstream body;
  body << in.rdbuf();
  CHECK(body.str().find("FAIL") != std::string::npos);
}

TEST_CASE("complexity sweep is linear in M with an analytic monolithic column") {
  const PipelineConfig cfg = config_from_json(tiny_room_json());
  TempDir dir("datasym_pipe_sweep");
  const std::vector<int> ms = {10, 100, 1000, 10000};
  const auto rows = complexity_sweep(cfg, ms, dir.path.string(), g_sink);
  REQUIRE(rows.size() == 4);

  const long long per = static_cast<long long>(cfg.n_per_input) * 2;
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].compositional_samples == per * ms[i]);

  // Least-squares fit of compositional samples vs M: R^2 above 0.99.
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
  CHECK(r2 > 0.99);

  // Exact exponent: log10(monolithic) = M * state_dim * log10(density).
  const double density = std::llround(std::pow(static_cast<double>(cfg.n_per_input), 1.0 / 2.0));
  for (const auto& r : rows)
    CHECK(r.monolithic_log10 == doctest::Approx(r.M * 1 * std::log10(density)).epsilon(1e-12));

  CHECK(fs::exists(dir.path / "sweep.csv"));
  CHECK(fs::exists(dir.path / "sweep.svg"));
  CHECK_THROWS_AS(complexity_sweep(cfg, {}, dir.path.string(), g_sink), ConfigError);
  CHECK_THROWS_AS(complexity_sweep(cfg, {10, 10}, dir.path.string(), g_sink), ConfigError);
}

TEST_CASE("coupled runs preserve the certificate level set") {
  const PipelineConfig cfg = config_from_json(tiny_room_json(3));
  TempDir dir("datasym_pipe_coupled");
  const RunOutcome outcome = run_pipeline(cfg, dir.path.string(), g_sink);
  REQUIRE(outcome.certificate.pass);

  const SymbolicModel sm = load_symbolic((dir.path / "abstraction.bin").string());
  const AsbfSolution sol = load_asbf((dir.path / "asbf.json").string());
  const LoadedController lc = load_controller((dir.path / "controller.bin").string());
  RefinedController rc;
  rc.controller = std::make_shared<AbstractController>(lc.controller);
  rc.quantizer = lc.grid;
  rc.input_set = lc.input_set;
  rc.safe_box = cfg.safe_box;

  const NetworkOracle net = cfg.make_network();
  const std::vector<AsbfSolution> sols(3, sol);
  Rng rng(5150);
  for (int start = 0; start < 10; ++start) {
    Vec x0(3);
    for (int i = 0; i < 3; ++i) x0[i] = rng.uniform(-0.5, 0.5);
    const CoupledRunResult run = coupled_relation_run(net, sm, sols, rc, outcome.certificate.psi_bar,
                                                      outcome.certificate.epsilon, x0, 100);
    CHECK(run.relation_held);
    CHECK(run.distance_held);
    CHECK(run.steps == 100);
  }
}

TEST_CASE("collapsed contraction yields the no-controller report") {
  nlohmann::json j = tiny_room_json();
  j["synthesis"]["contraction_epsilon"] = 10.0;
  j["simulation"]["num_starts"] = 2;
  const PipelineConfig cfg = config_from_json(j);
  TempDir dir("datasym_pipe_collapse");
  const RunOutcome outcome = run_pipeline(cfg, dir.path.string(), g_sink);
  CHECK(outcome.certificate.pass);
  CHECK(!outcome.all_safe);
  std::ifstream in(dir.path / "report.txt");
  std::stringstream body;
  body << in.rdbuf();
  CHECK(body.str().find("no controller") != std::string::npos);
}
