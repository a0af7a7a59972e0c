#pragma once

#include "rdpc/controller.hpp"
#include "rdpc/json_io.hpp"
#include "rdpc/lti_sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdpc {

/// Process exit codes of the experiment commands.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 2;
inline constexpr int blow_up = 3;
inline constexpr int unwritable = 4;
inline constexpr int k0_infeasible = 5;
inline constexpr int monitor_failure = 6;
}  // namespace exit_code

/// Malformed or inconsistent configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExcitationConfig {
  double low = -0.1, high = 0.1;
  int length = 0;  ///< T
  std::uint64_t seed = 0;
  /// When > 0: try seeds seed, seed+1, … (at most this many) and keep the
  /// first one for which the first controller step is feasible.
  int seed_search = 0;
};

struct ExperimentConfig {
  LtiSystem system;
  Vec x0;  ///< initial state of data collection and of the closed loop
  ExcitationConfig excitation;
  ControllerConfig controller;
  MonitorOptions monitor;
  std::string output_dir = "out";
  std::vector<std::string> formats{"csv", "json", "plot-data"};
  jsonio::json source;  ///< the parsed configuration, echoed into the outputs

  bool wants(const std::string& format) const;
};

/// Parses the JSON configuration. Matrices are given as nested row arrays,
/// as a scalar (meaning a multiple of the identity) or as {"rows", "cols", "data"}.
/// Throws ConfigError on any problem.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Collects the excitation experiment (honouring the seed search).
struct CollectedData {
  Trajectory trajectory;
  std::uint64_t seed = 0;
  int seeds_tried = 1;
};
CollectedData collect_data(const ExperimentConfig& cfg);

/// Commands. Messages go to `out`, diagnostics to `err`; the return value is
/// the process exit code.
int cmd_collect(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
/// `trajectory_path` (optional) replaces the collection step.
int cmd_run(const ExperimentConfig& cfg, const std::optional<std::string>& trajectory_path, std::ostream& out,
            std::ostream& err);

struct VerifyInputs {
  std::optional<std::string> trajectory;  ///< trajectory JSON
  std::optional<std::string> set;         ///< consistency-set JSON (stored Gram matrices are checked)
  std::optional<std::string> record;      ///< closed-loop record JSON
  std::optional<std::string> report;      ///< where to write the report (default: stdout only)
};
int cmd_verify(const ExperimentConfig& cfg, const VerifyInputs& in, std::ostream& out, std::ostream& err);

}  // namespace rdpc
