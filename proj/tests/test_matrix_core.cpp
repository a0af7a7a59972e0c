#include "rdpc/matrix_core.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace rdpc;

namespace {

Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

Mat random_sym(int d, std::mt19937_64& rng) {
  Mat m = random_mat(d, d, rng);
  return 0.5 * (m + m.transpose());
}

/// Largest eigenvalue of a symmetric matrix by brute-force self-adjoint solve.
double lam_max(const Mat& m) { return Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().maxCoeff(); }

bool neg_def(const Mat& m) { return lam_max(m) <= -1e-10 * std::max(1.0, m.norm()); }

}  // namespace

TEST(Svec, IdentityUsesUnitDiagonal) {
  const Vec v = svec(SymMatrix(Mat(Mat::Identity(2, 2))));
  ASSERT_EQ(v.size(), 3);
  // Off-diagonals carry √2, so the identity's only off-diagonal is 0.
  EXPECT_EQ(v(0) + v(1) + v(2), 2.0);
  EXPECT_EQ(v.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Svec, ZeroMatrix) {
  const Vec v = svec(SymMatrix(3));
  EXPECT_EQ(v.size(), 6);
  EXPECT_EQ(v.norm(), 0.0);
}

TEST(Svec, IsometricAndInvertible) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const SymMatrix a(random_sym(5, rng)), b(random_sym(5, rng));
    EXPECT_NEAR(svec(a).dot(svec(b)), (a.mat().cwiseProduct(b.mat())).sum(), 1e-12);
    // Diagonal entries round-trip bit for bit, off-diagonals to one rounding.
    const Mat back = smat(svec(a), 5).mat();
    EXPECT_EQ(back.diagonal(), a.mat().diagonal());
    EXPECT_LE((back - a.mat()).cwiseAbs().maxCoeff(), 2.3e-16 * a.mat().cwiseAbs().maxCoeff());
  }
}

TEST(NullSpace, IdentityHasNone) { EXPECT_EQ(null_space_basis(Mat::Identity(2, 2)).cols(), 0); }

TEST(NullSpace, RowOfOnes) {
  Mat m(1, 2);
  m << 1, 1;
  const Mat b = null_space_basis(m);
  ASSERT_EQ(b.cols(), 1);
  EXPECT_NEAR(std::abs(b(0, 0)), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(b(0, 0), -b(1, 0), 1e-14);
}

TEST(NullSpace, RandomWideMatrix) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    const Mat m = random_mat(4, 7, rng);
    const int rank = static_cast<int>(Eigen::FullPivLU<Mat>(m).rank());  // independent rank count
    const Mat b = null_space_basis(m, 1e-10);
    EXPECT_EQ(b.cols(), 7 - rank);
    EXPECT_LE((m * b).norm(), 1e-10 * m.norm());
    EXPECT_LE((b.transpose() * b - Mat::Identity(b.cols(), b.cols())).norm(), 1e-10);
  }
}

TEST(PseudoInverse, SimpleCases) {
  EXPECT_LE((pseudo_inverse(Mat::Identity(3, 3)) - Mat::Identity(3, 3)).norm(), 1e-15);
  EXPECT_EQ(pseudo_inverse(Mat::Zero(2, 3)).norm(), 0.0);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2.0;
  Mat want = Mat::Zero(2, 2);
  want(0, 0) = 0.5;
  EXPECT_LE((pseudo_inverse(d) - want).norm(), 1e-15);
}

TEST(PseudoInverse, PenroseIdentities) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Mat a = random_mat(6, 3, rng) * random_mat(3, 5, rng);  // rank 3
    const Mat x = pseudo_inverse(a);
    const double s = a.norm(), sx = x.norm();
    EXPECT_LE((a * x * a - a).norm(), 1e-9 * s);
    EXPECT_LE((x * a * x - x).norm(), 1e-9 * sx);
    EXPECT_LE(((a * x).transpose() - a * x).norm(), 1e-9 * std::max(1.0, (a * x).norm()));
    EXPECT_LE(((x * a).transpose() - x * a).norm(), 1e-9 * std::max(1.0, (x * a).norm()));
  }
}

TEST(SpectralRadius, Diagonal) {
  EXPECT_DOUBLE_EQ(spectral_radius(Mat::Identity(3, 3)), 1.0);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -0.9;
  EXPECT_NEAR(spectral_radius(d), 0.9, 1e-15);
}

TEST(SpectralRadius, CompanionMatrixOfGoldenPolynomial) {
  Mat c(2, 2);
  c << 1, 1, 1, 0;  // characteristic polynomial z² − z − 1
  // Oracle: largest root by bisection on [1, 2].
  double lo = 1.0, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * mid - mid - 1.0 > 0.0 ? hi : lo) = mid;
  }
  EXPECT_NEAR(spectral_radius(c), 0.5 * (lo + hi), 1e-9);
}

TEST(Schur, ScalarCases) {
  const SymMatrix m1(Mat::Constant(1, 1, -1.0)), p1(Mat::Constant(1, 1, 1.0));
  const Mat r0 = Mat::Zero(1, 1);
  SchurCheck a = schur_equivalence_check(m1, r0, m1);
  EXPECT_TRUE(a.block && a.via_q && a.via_p);
  SchurCheck b = schur_equivalence_check(p1, r0, m1);
  EXPECT_FALSE(b.block || b.via_q || b.via_p);
}

TEST(Schur, RandomInstancesAgreeWithBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dim(1, 4);
  int disagreements = 0;
  for (int t = 0; t < 1000; ++t) {
    const int a = dim(rng), b = dim(rng);
    // Shift toward negative definiteness so both outcomes occur.
    const Mat q = random_sym(a, rng) - 2.0 * Mat::Identity(a, a);
    const Mat p = random_sym(b, rng) - 2.0 * Mat::Identity(b, b);
    const Mat r = 0.7 * random_mat(a, b, rng);
    const SchurCheck c = schur_equivalence_check(SymMatrix::symmetrized(q), r, SymMatrix::symmetrized(p));
    Mat full(a + b, a + b);
    full << q, r, r.transpose(), p;
    disagreements += !c.agree() || c.block != neg_def(full);
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(Finsler, GramOfDataPasses) {
  std::mt19937_64 rng(2);
  // Consistent data: the top rows are a linear function of the bottom rows.
  const Mat bottom = random_mat(3, 5, rng);
  Mat H(5, 5);
  H << random_mat(2, 3, rng) * bottom, bottom;
  const FinslerReport r = finsler_preconditions(SymMatrix::symmetrized(H * H.transpose()), 2, 3);
  EXPECT_TRUE(r.pass());
}

TEST(Finsler, IdentityFailsSchurCheck) {
  const FinslerReport r = finsler_preconditions(SymMatrix(Mat(Mat::Identity(2, 2))), 1, 1);
  EXPECT_TRUE(r.n22_psd);
  EXPECT_FALSE(r.schur_zero);
  EXPECT_NEAR(r.schur_residual, 1.0, 1e-14);
  EXPECT_FALSE(r.pass());
}

TEST(Finsler, WrongDimensionThrows) {
  EXPECT_THROW(finsler_preconditions(SymMatrix(3), 1, 1), std::invalid_argument);
}

TEST(BlockLayout, OffsetsAndShapeChecks) {
  BlockLayout L({2, 3, 1});
  EXPECT_EQ(L.total(), 6);
  EXPECT_EQ(L.offset(2), 5);
  Mat m = L.zeros();
  L.add_sym(m, 0, 1, Mat::Ones(2, 3));
  EXPECT_EQ(m.block(2, 0, 3, 2), Mat::Ones(3, 2));
  EXPECT_THROW(L.add(m, 0, 1, Mat::Ones(3, 3)), std::out_of_range);
  EXPECT_THROW(L.add(m, 0, 3, Mat::Ones(2, 1)), std::out_of_range);
}
