#include "rdpc/matrix_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rdpc {

namespace {

constexpr double kDefiniteMargin = 1e-10;

Eigen::JacobiSVD<Mat> full_svd(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

double resolve_tol(const Mat& m, std::optional<double> tol) {
  if (tol && *tol < 0.0) throw std::invalid_argument("tolerance must be non-negative");
  return tol ? *tol : default_rank_tol(m);
}

int count_above(const Vec& sv, double tol) {
  if (sv.size() == 0) return 0;
  const double cut = tol * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut && sv(i) > 0.0) ++r;
  return r;
}

}  // namespace

SymMatrix::SymMatrix(int dim) : m_(Mat::Zero(dim, dim)) {}

SymMatrix::SymMatrix(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix requires a square matrix");
  m_ = m.triangularView<Eigen::Upper>();
  m_.triangularView<Eigen::StrictlyLower>() = m_.transpose().triangularView<Eigen::StrictlyLower>();
}

SymMatrix SymMatrix::symmetrized(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix requires a square matrix");
  return SymMatrix(Mat(0.5 * (m + m.transpose())));
}

void SymMatrix::set(int i, int j, double v) {
  m_(i, j) = v;
  m_(j, i) = v;
}

BlockLayout::BlockLayout(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  offsets_.reserve(sizes_.size());
  for (int s : sizes_) {
    if (s < 0) throw std::invalid_argument("block sizes must be non-negative");
    offsets_.push_back(total_);
    total_ += s;
  }
}

int BlockLayout::size(int b) const { return sizes_.at(static_cast<size_t>(b)); }
int BlockLayout::offset(int b) const { return offsets_.at(static_cast<size_t>(b)); }

Mat BlockLayout::zeros() const { return Mat::Zero(total_, total_); }

void BlockLayout::add(Mat& target, int bi, int bj, const Mat& v) const {
  if (target.rows() != total_ || target.cols() != total_)
    throw std::out_of_range("target does not match layout dimension");
  if (v.rows() != size(bi) || v.cols() != size(bj))
    throw std::out_of_range("block (" + std::to_string(bi) + "," + std::to_string(bj) +
                            ") expects " + std::to_string(size(bi)) + "x" +
                            std::to_string(size(bj)));
  target.block(offset(bi), offset(bj), size(bi), size(bj)) += v;
}

void BlockLayout::add_sym(Mat& target, int bi, int bj, const Mat& v) const {
  add(target, bi, bj, v);
  if (bi != bj) add(target, bj, bi, v.transpose());
}

Mat BlockLayout::block(const Mat& source, int bi, int bj) const {
  return source.block(offset(bi), offset(bj), size(bi), size(bj));
}

Vec svec(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("svec requires a square matrix");
  const int d = static_cast<int>(m.rows());
  Vec v(svec_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) v(k++) = (i == j) ? m(i, j) : std::sqrt(2.0) * m(i, j);
  return v;
}

Vec svec(const SymMatrix& m) { return svec(m.mat()); }

int smat_dim(int len) {
  const int d = static_cast<int>(std::lround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (svec_dim(d) != len) throw std::invalid_argument("length is not a triangular number");
  return d;
}

SymMatrix smat(const Eigen::Ref<const Vec>& v, int dim) {
  if (v.size() != svec_dim(dim)) throw std::invalid_argument("svec length does not match dim");
  SymMatrix out(dim);
  int k = 0;
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i <= j; ++i) {
      const double x = v(k++);
      out.set(i, j, i == j ? x : x / std::sqrt(2.0));
    }
  return out;
}

double default_rank_tol(const Mat& m) {
  return static_cast<double>(std::max(m.rows(), m.cols())) * std::numeric_limits<double>::epsilon();
}

int numerical_rank(const Mat& m, std::optional<double> tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  return count_above(svd.singularValues(), resolve_tol(m, tol));
}

Mat null_space_basis(const Mat& m, std::optional<double> tol) {
  const double t = resolve_tol(m, tol);
  if (m.cols() == 0) return Mat(0, 0);
  if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
  auto svd = full_svd(m);
  const int r = count_above(svd.singularValues(), t);
  return svd.matrixV().rightCols(m.cols() - r);
}

Mat range_basis(const Mat& m, std::optional<double> tol) {
  const double t = resolve_tol(m, tol);
  if (m.rows() == 0 || m.cols() == 0) return Mat(m.rows(), 0);
  auto svd = full_svd(m);
  const int r = count_above(svd.singularValues(), t);
  return svd.matrixU().leftCols(r);
}

Mat pseudo_inverse(const Mat& m, std::optional<double> tol) {
  const double t = resolve_tol(m, tol);
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const int r = count_above(sv, t);
  Mat out = Mat::Zero(m.cols(), m.rows());
  for (int i = 0; i < r; ++i)
    out.noalias() += (svd.matrixV().col(i) / sv(i)) * svd.matrixU().col(i).transpose();
  return out;
}

double spectral_radius(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius requires a square matrix");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat sqrt_psd(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  Vec ev = es.eigenvalues().unaryExpr([](double x) { return x < 1e-14 ? 0.0 : std::sqrt(x); });
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Mat& symmetric) {
  if (symmetric.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Mat& symmetric) {
  if (symmetric.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

bool is_negative_definite(const Mat& symmetric) {
  if (symmetric.size() == 0) return true;
  return max_eigenvalue(symmetric) <= -kDefiniteMargin * std::max(1.0, symmetric.norm());
}

bool is_positive_definite(const Mat& symmetric) { return is_negative_definite(-symmetric); }

SchurCheck schur_equivalence_check(const SymMatrix& q, const Mat& r, const SymMatrix& p) {
  if (r.rows() != q.dim() || r.cols() != p.dim())
    throw std::invalid_argument("schur_equivalence_check: r must be dim(q) x dim(p)");
  const int n = q.dim(), m = p.dim();
  Mat full(n + m, n + m);
  full << q.mat(), r, r.transpose(), p.mat();

  SchurCheck out;
  out.block = is_negative_definite(full);
  if (is_negative_definite(q.mat())) {
    const Mat sc = p.mat() - r.transpose() * q.mat().ldlt().solve(r);
    out.via_q = is_negative_definite(0.5 * (sc + sc.transpose()));
  }
  if (is_negative_definite(p.mat())) {
    const Mat sc = q.mat() - r * p.mat().ldlt().solve(r.transpose());
    out.via_p = is_negative_definite(0.5 * (sc + sc.transpose()));
  }
  return out;
}

FinslerReport finsler_preconditions(const SymMatrix& n, int q, int s, double tol) {
  if (q < 0 || s < 0 || n.dim() != q + s)
    throw std::invalid_argument("finsler_preconditions: dim(N) must equal q + s");
  FinslerReport rep;
  const Mat& N = n.mat();
  rep.norm = N.norm();
  const Mat n11 = N.topLeftCorner(q, q);
  const Mat n12 = N.topRightCorner(q, s);
  const Mat n22 = N.bottomRightCorner(s, s);
  const double scale = std::max(rep.norm, std::numeric_limits<double>::min());

  rep.n22_min_eig = s > 0 ? min_eigenvalue(n22) : 0.0;
  rep.n22_psd = rep.n22_min_eig >= -kDefiniteMargin * rep.norm;

  // Shared truncation for N22: relative 1e-10, well above rounding in a Gram matrix.
  constexpr double kGramTol = 1e-10;
  rep.schur_residual = (n11 - n12 * pseudo_inverse(n22, kGramTol) * n12.transpose()).norm();
  rep.schur_zero = rep.schur_residual <= tol * scale || rep.norm == 0.0;

  const Mat ker = null_space_basis(n22, kGramTol);
  rep.kernel_residual = ker.cols() > 0 ? (n12 * ker).norm() : 0.0;
  rep.kernel_inclusion = rep.kernel_residual <= tol * scale || rep.norm == 0.0;
  return rep;
}

}  // namespace rdpc
