#pragma once

#include "rdpc/data_consistency.hpp"
#include "rdpc/json_io.hpp"
#include "rdpc/lmi_synthesis.hpp"
#include "rdpc/lti_sim.hpp"
#include "rdpc/sdp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rdpc {

/// What to do when a synthesis after the first one does not solve.
enum class FallbackPolicy { reuse_previous_gain, abort };

std::string to_string(FallbackPolicy f);
FallbackPolicy fallback_policy_from_string(const std::string& s);

struct ControllerConfig {
  ProblemVariant variant = ProblemVariant::unconstrained_state;
  std::optional<NormConstraints> constraints;  ///< required by the constrained variants
  Mat Q, R;
  /// Horizon of the certification simulations; 0 stands for an infinite
  /// horizon, which is approximated by simulating until the state vanishes.
  int certification_horizon = 500;
  int run_length = 50;  ///< number of controller steps (syntheses)
  FallbackPolicy fallback = FallbackPolicy::reuse_previous_gain;
  Vec x0;  ///< initial plant state of the closed loop
  SynthesisOptions synthesis;
  SolveOptions solver;

  /// Throws std::invalid_argument when the configuration is unusable.
  void validate() const;
};

/// How a step's input was obtained.
enum class StepStatus { solved, fallback, bootstrap, aborted };
std::string to_string(StepStatus s);

struct StepRecord {
  int k = 0;
  Vec state;   ///< state the controller acts on (extended state in output mode)
  Vec plant_state;
  Vec input;
  Vec output;
  double eta = 0.0;
  double bound = 0.0;  ///< x(k)ᵀ P_k x(k)
  StepStatus status = StepStatus::solved;
  std::string solver_status;  ///< SolveStatus of the synthesis ("" for bootstrap steps)
  bool retried = false;
  int iterations = 0;
  Mat F;
  Mat P;
  double stage_cost = 0.0;  ///< y(k)ᵀQy(k) + u(k)ᵀRu(k)
};

struct ClosedLoopRecord {
  ProblemVariant variant = ProblemVariant::unconstrained_state;
  DataMode mode = DataMode::state;
  std::string system_name;
  Mat Q, R;
  std::optional<NormConstraints> constraints;
  std::vector<StepRecord> steps;
  int first_controller_step = 0;  ///< k₀
  double j_bar = 0.0;             ///< Σ of the stage costs over the controller steps
  std::optional<int> first_infeasibility;
  std::optional<int> first_constraint_violation;
  bool k0_infeasible = false;
  bool aborted = false;
  std::string message;

  jsonio::json to_json() const;
  /// One row per step: the trajectory columns (k, u, y, plant state x) plus
  /// eta, bound, status. Extended states are in the JSON form only.
  std::string to_csv() const;
  /// Long-form (series, k, value) rows for the input and output panels.
  std::string plot_data_csv() const;
};

/// Inverse of ClosedLoopRecord::to_json (gains and bounds; P is not stored).
ClosedLoopRecord record_from_json(const jsonio::json& j);

/// Algorithm 1: the unconstrained synthesis on state-feedback data.
ClosedLoopRecord run_algorithm1(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg);
/// Algorithm 2: the constrained synthesis on state-feedback data.
ClosedLoopRecord run_algorithm2(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg);
/// Algorithm 3: the constrained synthesis on input–output data with the
/// extended state of the last n inputs and outputs (n = plant order). The
/// first n inputs are the last n inputs of the recorded excitation.
ClosedLoopRecord run_algorithm3(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg);

/// Dispatch on cfg.variant.
ClosedLoopRecord run_controller(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg);

/// The consistency set a record's controller used.
ConsistencySet record_consistency_set(const Trajectory& traj, const ControllerConfig& cfg, int plant_order);

struct MonitorCheck {
  std::string name;
  bool pass = true;
  bool vacuous = false;  ///< nothing to check (e.g. no pair of consecutive solved steps)
  double margin = 0.0;
  std::optional<int> step;  ///< first offending step
  std::string detail;
};

struct TheoremReport {
  MonitorCheck bound_decrease;          ///< bound_{k+1} < bound_k on consecutive solved steps
  MonitorCheck stability;               ///< ρ < 1 for sampled members of the consistency set
  MonitorCheck recursive_feasibility;   ///< no failed synthesis after k₀
  MonitorCheck constraints;             ///< realized ‖u‖ ≤ u_max, ‖y‖ ≤ y_max
  std::optional<MonitorCheck> bound_validity;  ///< realized cost under frozen gains (plant supplied)
  double final_output_norm = 0.0;
  bool pass() const;
  jsonio::json to_json() const;
};

struct MonitorOptions {
  int samples = 100;
  std::uint64_t seed = 1;
  double decrease_slack = 1e-9;
  int horizon = 500;
};

/// Theorem-level checks of a completed record. `plant` (optional) enables
/// the per-step bound-validity check on the true plant.
TheoremReport monitor_theorems(const ClosedLoopRecord& record, const ConsistencySet& set,
                               const MonitorOptions& opts = {}, const LtiSystem* plant = nullptr);

}  // namespace rdpc
