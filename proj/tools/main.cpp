// Command-line driver: staged runs, the full pipeline, the sample-complexity
// sweep and report rendering.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "datasym/parallel.hpp"
#include "datasym/pipeline.hpp"
#include "datasym/rng.hpp"

using namespace datasym;

int main(int argc, char** argv) {
  CLI::App app{"data-driven symbolic models and safety controllers for unknown networks"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int m_override = 0;
  int threads = 0;
  std::vector<int> sweep_m = {10, 100, 1000, 10000};

  app.add_option("--config", config_path, "pipeline configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory for artifacts");
  app.add_option("--seed", seed_override, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--m", m_override, "override the number of subsystems M");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* cmd_sample = app.add_subcommand("sample", "collect two-consecutive sample pairs");
  auto* cmd_abstract = app.add_subcommand("abstract", "build the symbolic model");
  auto* cmd_asbf = app.add_subcommand("asbf", "solve the scenario certificate program");
  auto* cmd_lip = app.add_subcommand("lipschitz", "estimate the certificate Lipschitz constants");
  auto* cmd_sigma = app.add_subcommand("sigma", "compute the sample coverage radius");
  auto* cmd_compose = app.add_subcommand("compose", "check the compositional condition");
  auto* cmd_synth = app.add_subcommand("synthesize", "solve the safety game");
  auto* cmd_sim = app.add_subcommand("simulate", "closed-loop network simulation");
  auto* cmd_run = app.add_subcommand("run", "full pipeline with escalation");
  auto* cmd_sweep = app.add_subcommand("sweep", "sample-complexity sweep over M");
  cmd_sweep->add_option("--m-values", sweep_m, "network sizes for the sweep");
  auto* cmd_report = app.add_subcommand("report", "render report and plots from artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) set_thread_count(threads);
    PipelineConfig cfg = load_config(config_path);
    if (seed_set) cfg.seed = seed_override;
    if (m_override > 0) cfg.M = m_override;
    cfg.sop.seed = derive_seed(cfg.seed, 0xa5bf);
    cfg.lipschitz.seed = derive_seed(cfg.seed, 0x11b5);

    std::ostream& log = std::cout;
    if (cmd_sample->parsed()) stage_sample(cfg, out_dir, log);
    if (cmd_abstract->parsed()) stage_abstract(cfg, out_dir, log);
    if (cmd_asbf->parsed()) stage_asbf(cfg, out_dir, log);
    if (cmd_lip->parsed()) stage_lipschitz(cfg, out_dir, log);
    if (cmd_sigma->parsed()) stage_sigma(cfg, out_dir, log);
    if (cmd_compose->parsed()) {
      stage_compose(cfg, out_dir, log);
      const auto cert = load_certificate((std::filesystem::path(out_dir) / "certificate.json").string());
      return cert.pass ? 0 : 1;
    }
    if (cmd_synth->parsed()) stage_synthesize(cfg, out_dir, log);
    if (cmd_sim->parsed()) {
      stage_simulate(cfg, out_dir, log);
      std::ifstream in(std::filesystem::path(out_dir) / "simulation_summary.json");
      const auto summary = nlohmann::json::parse(in);
      return summary.value("all_safe", false) ? 0 : 1;
    }
    if (cmd_run->parsed()) {
      const RunOutcome outcome = run_pipeline(cfg, out_dir, log);
      log << "[run] certificate " << (outcome.certificate.pass ? "pass" : "FAIL") << ", simulations "
          << (outcome.all_safe ? "safe" : "UNSAFE") << ", attempts " << outcome.attempts << "\n";
      return outcome.ok() ? 0 : 1;
    }
    if (cmd_sweep->parsed()) complexity_sweep(cfg, sweep_m, out_dir, log);
    if (cmd_report->parsed()) stage_report(cfg, out_dir, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
