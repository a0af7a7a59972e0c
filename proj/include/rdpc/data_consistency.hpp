#pragma once

#include "rdpc/lti_sim.hpp"
#include "rdpc/matrix_core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rdpc {

/// State-feedback data uses the measured state; output-feedback data replaces
/// it with the extended state of the last n inputs and outputs.
enum class DataMode { state, output };

std::string to_string(DataMode mode);
DataMode data_mode_from_string(const std::string& s);

/// Data matrices U, Y, X, X₊ with a common column count T'.
/// State mode: columns k = 0..T−1 and n' = n.
/// Output mode: columns k = n..T−1, X holds extended states, n' = n(m+p).
struct DataMatrices {
  Mat U, Y, X, X_plus;
  DataMode mode = DataMode::state;
  int window = 0;  ///< plant order n used for the extended state (output mode only)

  int state_dim() const { return static_cast<int>(X.rows()); }
  int m() const { return static_cast<int>(U.rows()); }
  int p() const { return static_cast<int>(Y.rows()); }
  int columns() const { return static_cast<int>(X.cols()); }
};

/// Everything that defines the consistency sets built from one data record.
///
/// H = [X₊; Q½Y; R½U; −X; −U], N = HHᵀ describe all (A,B,C,D) with
/// [I, Z] N [I, Z]ᵀ = 0 where Z = [A B; Q½C Q½D; 0 R½].
/// H_y = [Y; −X; −U] (state mode) or [Y; −X] (output mode, D = 0) and
/// N_y = H_y H_yᵀ describe the output maps consistent with the data.
struct ConsistencySet {
  DataMatrices data;
  Mat Q, R, Q_half, R_half;
  Mat H, N, H_y, N_y;

  DataMode mode() const { return data.mode; }
  int n() const { return data.state_dim(); }
  int m() const { return data.m(); }
  int p() const { return data.p(); }
  /// Row counts of the upper (X₊, Q½Y, R½U) and lower (X, U) parts of H.
  int q() const { return n() + p() + m(); }
  int s() const { return n() + m(); }
};

/// Extended state [u(k−n); …; u(k−1); y(k−n); …; y(k−1)].
Vec extend_state(const std::vector<Vec>& u_window, const std::vector<Vec>& y_window);

/// `window` is the plant order n (output mode only; ignored in state mode).
DataMatrices build_data_matrices(const Trajectory& traj, DataMode mode, int window = 0);

ConsistencySet build_consistency_set(const DataMatrices& d, const Mat& Q, const Mat& R);

/// Z = [A B; Q½C Q½D; 0 R½] for a candidate system.
Mat stack_z(const ConsistencySet& set, const LtiSystem& candidate);

/// ‖[I, Z] N [I, Z]ᵀ‖_F / max(1, ‖N‖_F).
double membership_residual(const ConsistencySet& set, const LtiSystem& candidate);

/// Systems drawn from the consistency set: Z₀ plus perturbations along the
/// left annihilator of [X; U].
struct SigmaSamples {
  std::vector<LtiSystem> systems;  ///< systems[0] is the particular solution Z₀
  Mat Z0;
  Mat kernel;               ///< orthonormal basis K with Kᵀ[X; U] = 0
  bool identified = false;  ///< true when K is empty (all samples equal Z₀)
};

/// `scale` < 0 selects the default perturbation size 0.5‖Z₀‖_F/√dim(K).
SigmaSamples sample_sigma(const ConsistencySet& set, int count, std::uint64_t seed,
                          double scale = -1.0);

/// Output maps (C, D) consistent with H_y; in output mode D is fixed to zero.
struct OutputSamples {
  std::vector<Mat> C, D;
  bool identified = false;
};

OutputSamples sample_output_maps(const ConsistencySet& set, int count, std::uint64_t seed,
                                 double scale = -1.0);

/// Orthonormal basis of the range of X: the subspace every recorded (and every
/// reachable) state of the data lives in.
Mat data_subspace_basis(const DataMatrices& d, double tol = 1e-10);

/// An n(m+p)-dimensional realization (Â, B̂, Ĉ, 0) of the extended-state
/// dynamics of an observable plant with D = 0. Used as an oracle: it is a
/// member of every output-mode consistency set built from that plant.
LtiSystem extended_realization(const LtiSystem& sys);

std::string data_matrices_json(const DataMatrices& d);
std::string consistency_set_json(const ConsistencySet& set);
ConsistencySet consistency_set_from_json(const std::string& text);

}  // namespace rdpc
