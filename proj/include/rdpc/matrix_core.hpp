#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace rdpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Dense symmetric matrix. The upper triangle is the source of truth and is
/// mirrored on construction, so the stored entries are exactly symmetric.
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);
  /// Mirrors the upper triangle of `m` (which must be square).
  explicit SymMatrix(const Mat& m);
  /// Returns (m + mᵀ)/2 — for inputs that are symmetric only up to rounding.
  static SymMatrix symmetrized(const Mat& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  operator const Mat&() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  /// Writes entry (i, j) and its mirror (j, i).
  void set(int i, int j, double v);

private:
  Mat m_;
};

/// Ordered partition of a square matrix into diagonal blocks. Blocks are
/// addressed by index; offsets are prefix sums of the sizes.
class BlockLayout {
public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<int> sizes);

  int blocks() const { return static_cast<int>(sizes_.size()); }
  int size(int b) const;
  int offset(int b) const;
  int total() const { return total_; }

  /// Zero matrix of dimension total() × total().
  Mat zeros() const;
  /// Adds `v` into block (bi, bj) of `target`; throws std::out_of_range when
  /// the indices or the value shape do not match the declared layout.
  void add(Mat& target, int bi, int bj, const Mat& v) const;
  /// Adds `v` into block (bi, bj) and its transpose into (bj, bi) (once if bi == bj).
  void add_sym(Mat& target, int bi, int bj, const Mat& v) const;
  Mat block(const Mat& source, int bi, int bj) const;

private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int total_ = 0;
};

/// Length d(d+1)/2 of the symmetric vectorization of a d×d matrix.
inline int svec_dim(int d) { return d * (d + 1) / 2; }

/// Isometric symmetric vectorization: upper triangle column by column,
/// off-diagonal entries scaled by √2 so that ⟨A,B⟩_F = svec(A)·svec(B).
Vec svec(const SymMatrix& m);
Vec svec(const Mat& m);
SymMatrix smat(const Eigen::Ref<const Vec>& v, int dim);
/// Inverse of svec_dim; throws std::invalid_argument if `len` is not triangular.
int smat_dim(int len);

/// Default relative truncation used by every rank decision: max(rows, cols)·ε.
double default_rank_tol(const Mat& m);

/// Number of singular values above tol·σ_max.
int numerical_rank(const Mat& m, std::optional<double> tol = std::nullopt);

/// Orthonormal basis of {v : ‖m v‖ ≤ tol·‖m‖}, computed from the SVD.
Mat null_space_basis(const Mat& m, std::optional<double> tol = std::nullopt);

/// Orthonormal basis of the range (column space) of m, same truncation rule.
Mat range_basis(const Mat& m, std::optional<double> tol = std::nullopt);

/// Moore–Penrose pseudo-inverse with singular values below tol·σ_max dropped.
Mat pseudo_inverse(const Mat& m, std::optional<double> tol = std::nullopt);

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Mat& m);

/// Symmetric square root of a positive semidefinite matrix; eigenvalues below
/// 1e-14 are clamped to zero.
Mat sqrt_psd(const Mat& m);

double min_eigenvalue(const Mat& symmetric);
double max_eigenvalue(const Mat& symmetric);

/// λ_max(m) ≤ −1e-10·max(1, ‖m‖_F): the margin used for all strict definiteness tests.
bool is_negative_definite(const Mat& symmetric);
bool is_positive_definite(const Mat& symmetric);

/// The three statements of the Schur-complement lemma for [q r; rᵀ p].
struct SchurCheck {
  bool block = false;   ///< [q r; rᵀ p] ≺ 0
  bool via_q = false;   ///< q ≺ 0 and p − rᵀq⁻¹r ≺ 0
  bool via_p = false;   ///< p ≺ 0 and q − r p⁻¹rᵀ ≺ 0
  bool agree() const { return block == via_q && via_q == via_p; }
};

SchurCheck schur_equivalence_check(const SymMatrix& q, const Mat& r, const SymMatrix& p);

/// Residuals of the three preconditions of the matrix Finsler lemma for a
/// (q+s)×(q+s) matrix partitioned as [N11 N12; N12ᵀ N22].
struct FinslerReport {
  double n22_min_eig = 0.0;       ///< λ_min(N22)
  double schur_residual = 0.0;    ///< ‖N11 − N12 N22† N12ᵀ‖_F
  double kernel_residual = 0.0;   ///< ‖N12 · null_space_basis(N22)‖_F
  double norm = 0.0;              ///< ‖N‖_F used for scaling
  bool n22_psd = false;
  bool schur_zero = false;
  bool kernel_inclusion = false;
  bool pass() const { return n22_psd && schur_zero && kernel_inclusion; }
};

/// Throws std::invalid_argument when n.dim() != q + s.
/// `tol` scales the two equality checks; N22 ⪰ 0 uses λ_min ≥ −1e-10·‖N‖.
FinslerReport finsler_preconditions(const SymMatrix& n, int q, int s, double tol = 1e-8);

}  // namespace rdpc
