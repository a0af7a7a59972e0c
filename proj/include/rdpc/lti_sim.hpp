#pragma once

#include "rdpc/matrix_core.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdpc {

/// x(k+1) = A x(k) + B u(k),  y(k) = C x(k) + D u(k).
struct LtiSystem {
  Mat A, B, C, D;
  std::string name;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }
  /// Throws std::invalid_argument unless the four matrices conform.
  void validate() const;
};

/// Recorded input/output (and optionally state) sequence of length T.
/// `states` has T+1 entries when present, `inputs` and `outputs` have T.
struct Trajectory {
  std::vector<Vec> inputs;
  std::vector<Vec> outputs;
  std::vector<Vec> states;
  std::string system_name;
  std::optional<std::uint64_t> seed;

  int length() const { return static_cast<int>(inputs.size()); }
  bool has_states() const { return !states.empty(); }
};

struct NormConstraints {
  double u_max = 0.0;
  double y_max = 0.0;
  void validate() const;
};

struct StepResult {
  Vec x_next;
  Vec y;
};

/// Thrown by collect() when the open-loop state norm exceeds the blow-up limit.
struct SimulationBlowUp : std::runtime_error {
  using std::runtime_error::runtime_error;
};

StepResult step(const LtiSystem& sys, const Vec& x, const Vec& u);

/// Rolls the plant forward from x0 under the given excitation. Aborts with
/// SimulationBlowUp once ‖x(k)‖ exceeds `blowup_limit`.
Trajectory collect(const LtiSystem& sys, const Vec& x0, const std::vector<Vec>& excitation,
                   bool record_states, double blowup_limit = 1e6);

/// i.i.d. uniform excitation on [lo, hi] per channel from a 64-bit seed.
std::vector<Vec> uniform_excitation(int m, int length, double lo, double hi, std::uint64_t seed);

/// Unstable four-state batch reactor (sampling time 0.1 s).
LtiSystem batch_reactor();

/// Earliest k with ‖u(k)‖₂ > u_max or ‖y(k)‖₂ > y_max, if any.
std::optional<int> check_constraints(const Trajectory& traj, const NormConstraints& c);

/// Max over k of the one-step equation residuals of a recorded trajectory.
double replay_residual(const LtiSystem& sys, const Trajectory& traj);

/// One row per k: k, u_1..u_m, y_1..y_p[, x_1..x_n].
std::string trajectory_csv(const Trajectory& traj);
std::string trajectory_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& text);

}  // namespace rdpc
