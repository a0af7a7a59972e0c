// Experiment runner: data collection, controller runs, verification and the
// batch-reactor reproduction.

#include "rdpc/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#ifndef RDPC_DEFAULT_CONFIG_DIR
#define RDPC_DEFAULT_CONFIG_DIR "configs"
#endif

namespace {

std::string shipped_config() {
  const char* dir = std::getenv("RDPC_CONFIG_DIR");
  return (std::filesystem::path(dir ? dir : RDPC_DEFAULT_CONFIG_DIR) / "batch-reactor.config").string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust data-driven predictive control experiments"};
  app.require_subcommand(1);

  std::string config_path, output_dir, data_path, set_path, record_path, report_path;
  int max_iterations = -1;

  auto common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("-c,--config", config_path, "experiment configuration (JSON)");
    if (config_required) opt->required();
    cmd->add_option("-o,--output-dir", output_dir, "override the configured output directory");
    cmd->add_option("--max-iterations", max_iterations, "solver iteration limit per synthesis")->check(CLI::NonNegativeNumber);
  };

  auto* collect = app.add_subcommand("collect", "run the excitation experiment and write the trajectory");
  common(collect, true);
  auto* run = app.add_subcommand("run", "run the closed loop and the theorem monitors");
  common(run, true);
  run->add_option("-d,--data", data_path, "use a recorded trajectory instead of collecting one");
  auto* verify = app.add_subcommand("verify", "check data, consistency sets and closed-loop records");
  common(verify, true);
  verify->add_option("-d,--data", data_path, "trajectory JSON");
  verify->add_option("-s,--set", set_path, "consistency-set JSON");
  verify->add_option("-r,--record", record_path, "closed-loop record JSON");
  verify->add_option("--report", report_path, "write the JSON report here");
  auto* reproduce = app.add_subcommand("reproduce-batch-reactor", "run with the shipped batch-reactor config");
  common(reproduce, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rdpc::exit_code::config_error;
  }

  if (max_iterations >= 0) setenv(rdpc::kIterationLimitEnv, std::to_string(max_iterations).c_str(), 1);
  if (reproduce->parsed() && config_path.empty()) config_path = shipped_config();

  rdpc::ExperimentConfig cfg;
  try {
    cfg = rdpc::load_experiment_config(config_path);
  } catch (const rdpc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rdpc::exit_code::config_error;
  }
  if (!output_dir.empty()) cfg.output_dir = output_dir;

  auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
  if (collect->parsed()) return rdpc::cmd_collect(cfg, std::cout, std::cerr);
  if (run->parsed() || reproduce->parsed()) return rdpc::cmd_run(cfg, opt(data_path), std::cout, std::cerr);
  rdpc::VerifyInputs in{opt(data_path), opt(set_path), opt(record_path), opt(report_path)};
  return rdpc::cmd_verify(cfg, in, std::cout, std::cerr);
}
