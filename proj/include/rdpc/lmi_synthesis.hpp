#pragma once

#include "rdpc/data_consistency.hpp"
#include "rdpc/lti_sim.hpp"
#include "rdpc/matrix_core.hpp"
#include "rdpc/sdp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rdpc {

/// Which synthesis problem is assembled.
///  - unconstrained_state: min η over (α, β, η, S, Γ), bound xᵀΓ⁻¹x.
///  - constrained_state:  scaled variables (ᾱ, β̄, η, τ, κ, S̄, Γ̄) plus input/output LMIs.
///  - constrained_io:     the constrained problem on extended-state (output-mode) data.
enum class ProblemVariant { unconstrained_state, constrained_state, constrained_io };

std::string to_string(ProblemVariant v);
ProblemVariant problem_variant_from_string(const std::string& s);

/// How the robust LMIs are handed to the conic backend.
///  - faithful: every block exactly as written, multipliers α and τ free,
///    Γ of full state dimension.
///  - reduced: the same conditions restated on the data subspace range(X),
///    with the multipliers eliminated by restricting each robust LMI to the
///    kernel of its data Gram matrix (the α, τ → ∞ limit of the S-procedure),
///    and with the directions on which the LMI is identically singular
///    removed and imposed as linear equalities instead. The margins β and κ
///    are fixed at their floors. Numerically much better conditioned; the
///    feasible sets coincide up to the strictness margins.
enum class Formulation { faithful, reduced };

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);

struct SynthesisOptions {
  Formulation formulation = Formulation::reduced;
  double eps_beta = 1e-7;
  /// The η and κ floors are taken relative to ‖Vᵀx‖² when `normalize` is on.
  double eps_eta = 1e-9;
  double eps_kappa = 1e-7;
  double eps_gamma = 1e-8;
  /// Relative singular-value cutoff for data subspaces and Gram kernels.
  double kernel_tol = 1e-10;
  /// Constrained variants only: include the input / output LMIs.
  bool input_constraint = true;
  bool output_constraint = true;
  /// Upper bound Γ ⪯ γ·I on the unscaled Lyapunov variable (Γ̄ ⪯ γηI in the
  /// scaled problem); 0 disables it. Without it the optimal set is unbounded
  /// along directions the dynamics contract, which leaves the dual without
  /// an interior point.
  double gamma_cap = 1e3;
  /// Solve in units where ‖Vᵀx‖ = 1 (exact rescaling of η, Γ̄, S̄ and the
  /// multipliers; results are reported in the original units).
  bool normalize = true;
};

/// Positions of the decision variables in the solver vector; −1 when absent.
struct VariableLayout {
  int alpha = -1, beta = -1, eta = -1, tau = -1, kappa = -1;
  int S = -1;      ///< m×n block, column-major
  int Gamma = -1;  ///< svec of the n×n symmetric block
  int m = 0, n = 0;
  int size = 0;
};

/// Decision variables by their conventional names. For the constrained variants
/// `S` and `Gamma` hold the scaled S̄, Γ̄ and `alpha`, `beta` hold ᾱ, β̄.
struct SynthesisVariables {
  double alpha = 0.0, beta = 0.0, eta = 0.0, tau = 0.0, kappa = 0.0;
  Mat S, Gamma;
};

Vec pack(const VariableLayout& layout, const SynthesisVariables& v);
SynthesisVariables unpack(const VariableLayout& layout, const Vec& x);

// ---- block materializers --------------------------------------------------

/// 5×5 block matrix with diagonal (−Γ, −c·I_{m+p}, Γ, 0, −Γ) and the S / Sᵀ
/// couplings of the synthesis LMI; c = 1 for the original problem and c = η
/// for the scaled one.
Mat calM(const Mat& Gamma, const Mat& S, int p, double c);
/// diag(N, 0_{n×n}).
Mat calN(const Mat& N, int n);
/// 4×4 block matrix with diagonal (−y²_max I_p, Γ̄, 0, −Γ̄) and S̄ couplings.
Mat calMy(const Mat& Gamma, const Mat& S, int p, double y_max);
/// diag(N_y, 0_{n×n}).
Mat calNy(const Mat& Ny, int n);

/// Gram matrix of the output data in the layout used by the output LMI: rows
/// [Y; −X; −U]. In output mode (D = 0) the U rows are replaced by m extra
/// columns [0; 0; −I_m], which pins D = 0 while keeping the block sizes of
/// the output LMI.
Mat output_gram(const ConsistencySet& set);

struct SynthesisProblem {
  ProblemVariant variant = ProblemVariant::unconstrained_state;
  SynthesisOptions options;
  ConicProgram program;
  VariableLayout layout;
  Mat V;           ///< basis of the state coordinates the variables live in (identity when faithful)
  Vec x_now;       ///< current (extended) state
  Vec z;           ///< Vᵀ x_now
  double scale = 1.0;  ///< unit of the solver variables: the program sees z / scale
  int state_dim = 0;   ///< n'
  int main_block = 0;  ///< dimension of the synthesis-LMI slot as handed to the solver
  int output_block = 0;
};

SynthesisProblem assemble_unconstrained(const ConsistencySet& set, const Vec& x_now,
                                        const SynthesisOptions& opts = {});
/// State-mode data (or, for testing, output-mode data).
SynthesisProblem assemble_constrained(const ConsistencySet& set, const Vec& x_now,
                                      const NormConstraints& c, const SynthesisOptions& opts = {});
/// Requires output-mode (extended state) data.
SynthesisProblem assemble_constrained_io(const ConsistencySet& set, const Vec& xhat_now,
                                         const NormConstraints& c, const SynthesisOptions& opts = {});

enum class SynthesisStatus { solved, infeasible, numerical_failure };
std::string to_string(SynthesisStatus s);

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::numerical_failure;
  SynthesisVariables variables;
  Mat F;           ///< m×n' gain in the original state coordinates
  Mat P;           ///< n'×n' bound matrix Γ⁻¹ or ηΓ̄⁻¹ (embedded back from the data subspace)
  double bound = 0.0;  ///< x_nowᵀ P x_now
  double eta = 0.0;
  SolveOutcome solver;
  ResidualReport residuals;
  std::string message;
};

/// Gain F = SΓ⁻¹, P and the bound from a solver outcome. Non-optimal solver
/// statuses and a numerically singular Γ map to non-`solved` statuses.
SynthesisResult extract_result(const SynthesisProblem& prob, const SolveOutcome& out);

/// assemble → solve → extract.
SynthesisResult synthesize(const SynthesisProblem& prob, const SolveOptions& solver = {});

struct CertificationReport {
  int samples = 0;
  int horizon = 0;
  double bound = 0.0;
  double max_cost = 0.0;        ///< max accumulated J over samples
  double max_spectral_radius = 0.0;
  int cost_violations = 0;      ///< samples with J > bound·(1+1e-6)
  int unstable = 0;             ///< samples with ρ ≥ 1
  double max_membership = 0.0;  ///< worst membership residual of the sampled systems
  bool pass() const { return cost_violations == 0 && unstable == 0; }
};

/// Simulates x⁺ = (A + BF)x from x_now for `horizon` steps on `samples`
/// members of the consistency set and compares the accumulated cost with
/// the certified bound. The simulation and the spectral radii are taken on
/// the data subspace, on which all members agree and which they leave
/// invariant; x_now is projected onto it (every reachable state lies in it).
CertificationReport certify_upper_bound(const SynthesisResult& result, const ConsistencySet& set,
                                        const Vec& x_now, int horizon, int samples,
                                        std::uint64_t seed);

/// Closed-loop matrix restricted to the data subspace, Vᵀ(A + BF)V.
Mat closed_loop_on_data(const LtiSystem& sys, const Mat& F, const Mat& V);

}  // namespace rdpc
