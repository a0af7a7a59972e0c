#pragma once

#include "rdpc/matrix_core.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace rdpc {

enum class ConeKind { psd, nonneg };

struct Cone {
  ConeKind kind = ConeKind::nonneg;
  int dim = 1;           ///< matrix dimension for PSD cones; always 1 for nonneg
  std::string name;      ///< optional label used in reports

  int slots() const { return kind == ConeKind::psd ? svec_dim(dim) : 1; }
};

/// Solver-agnostic conic program
///
///   minimize cᵀx  subject to  b + A x ∈ K₁ × … × K_r,   E x = f (optional),
///
/// where each PSD slot is stored in svec coordinates. Every membership is
/// stated as "⪰ 0": a constraint written as  L(x) ⪯ 0  is assembled as −L(x).
struct ConicProgram {
  Vec c;
  std::vector<Cone> cones;
  Eigen::SparseMatrix<double> A;  ///< slots × variables
  Vec b;                          ///< constant part, one entry per slot
  Mat eq_A;                       ///< optional equality rows (0 × n when absent)
  Vec eq_b;

  int num_variables() const { return static_cast<int>(c.size()); }
  int num_slots() const;
  /// Throws std::invalid_argument on any dimension mismatch.
  void validate() const;
  /// Affine slot value b + A x for cone `i`, materialized as a matrix (1×1 for scalars).
  Mat slot_value(int i, const Vec& x) const;
  int slot_offset(int i) const;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure, iteration_limit };
std::string to_string(SolveStatus s);

struct SolveOptions {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 100;
  /// After a numerical failure, solve once more with both tolerances loosened
  /// to `retry_tol`.
  bool retry_on_failure = true;
  double retry_tol = 1e-6;
  bool verbose = false;
};

/// Name of the environment variable that overrides SolveOptions::max_iterations.
inline constexpr const char* kIterationLimitEnv = "RDPC_SOLVER_MAX_ITERATIONS";

struct SolveOutcome {
  SolveStatus status = SolveStatus::numerical_failure;
  Vec x;                       ///< primal decision vector (best iterate when not optimal)
  double objective = 0.0;      ///< cᵀx
  double dual_objective = 0.0;
  double primal_residual = 0.0;  ///< worst relative cone violation of b + A x
  double dual_residual = 0.0;    ///< ‖Aᵀz − c‖ / max(1, ‖c‖)
  double gap = 0.0;              ///< |cᵀx − dual objective| / max(1, |cᵀx|)
  int iterations = 0;
  bool retried = false;        ///< true when the loosened retry produced this outcome
  double tolerance = 0.0;      ///< feasibility/gap tolerance the status refers to
  std::string message;
};

/// Primal–dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov–Todd scaling and Mehrotra predictor–corrector steps.
/// `status == optimal` means the primal violation and the dual residual are
/// below `feasibility_tol` and the relative gap is below `gap_tol`.
SolveOutcome solve(const ConicProgram& p, const SolveOptions& opts = {});

struct SlotReport {
  std::string name;
  int dim = 0;
  double min_eig = 0.0;
  double norm = 0.0;       ///< Frobenius norm of the materialized slot
  double violation = 0.0;  ///< max(0, −λ_min) / max(1, norm)
};

struct ResidualReport {
  std::vector<SlotReport> slots;
  double max_violation = 0.0;
  double equality_residual = 0.0;  ///< ‖E x − f‖ / max(1, ‖f‖)
  bool feasible(double tol) const { return max_violation <= tol && equality_residual <= tol; }
};

/// Recomputes every cone membership by eigenvalue decomposition of the
/// materialized slots, independently of the solver's bookkeeping.
ResidualReport verify_solution(const ConicProgram& p, const Vec& x);

std::string program_to_json(const ConicProgram& p);
ConicProgram program_from_json(const std::string& text);

}  // namespace rdpc
