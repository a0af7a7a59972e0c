#include "rdpc/sdp.hpp"

#include "rdpc/json_io.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace rdpc {

int ConicProgram::num_slots() const {
  int total = 0;
  for (const auto& k : cones) total += k.slots();
  return total;
}

int ConicProgram::slot_offset(int i) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += cones.at(static_cast<size_t>(k)).slots();
  return off;
}

void ConicProgram::validate() const {
  for (const auto& k : cones) {
    if (k.dim < 1) throw std::invalid_argument("cone dimension must be positive");
    if (k.kind == ConeKind::nonneg && k.dim != 1)
      throw std::invalid_argument("nonnegative cones are scalar");
  }
  const int slots = num_slots();
  if (A.rows() != slots || b.size() != slots)
    throw std::invalid_argument("constraint map has " + std::to_string(A.rows()) +
                                " rows but the cones need " + std::to_string(slots));
  if (A.cols() != c.size())
    throw std::invalid_argument("constraint map and objective disagree on the variable count");
  if (eq_A.size() > 0 || eq_b.size() > 0) {
    if (eq_A.cols() != c.size() || eq_A.rows() != eq_b.size())
      throw std::invalid_argument("equality constraints have inconsistent dimensions");
  }
  if (!c.allFinite() || !b.allFinite()) throw std::invalid_argument("program data must be finite");
}

Mat ConicProgram::slot_value(int i, const Vec& x) const {
  const Cone& k = cones.at(static_cast<size_t>(i));
  const int off = slot_offset(i);
  const Vec v = b.segment(off, k.slots()) + (A * x).segment(off, k.slots());
  if (k.kind == ConeKind::nonneg) return Mat::Constant(1, 1, v(0));
  return smat(v, k.dim).mat();
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical-failure";
    case SolveStatus::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

struct Block {
  bool psd = false;
  int dim = 1;
  int off = 0;
  int len = 1;
};

struct SlotPos {
  int block = 0;
  int row = 0;
  int col = 0;
};

/// Per-block Nesterov–Todd scaling. For PSD blocks W z = Rᵀ z R and
/// W⁻ᵀ s = R⁻¹ s R⁻ᵀ, both equal to diag(λ). Scalar blocks use d = √(s/z).
struct Scaling {
  std::vector<Mat> R, Rinv;
  std::vector<Vec> lam;
  std::vector<double> d;
};

class Engine {
public:
  Engine(const Vec& c, const Eigen::SparseMatrix<double>& A, const Vec& b,
         const std::vector<Cone>& cones, const SolveOptions& opts)
      : c_(c), A_(A), b_(b), opts_(opts) {
    int off = 0;
    for (const auto& k : cones) {
      Block bl;
      bl.psd = k.kind == ConeKind::psd;
      bl.dim = k.dim;
      bl.off = off;
      bl.len = k.slots();
      for (int j = 0; j < bl.dim; ++j)
        for (int i = 0; i <= j; ++i) pos_.push_back({static_cast<int>(blocks_.size()), i, j});
      if (!bl.psd) pos_.back() = {static_cast<int>(blocks_.size()), 0, 0};
      off += bl.len;
      degree_ += bl.dim;
      blocks_.push_back(bl);
    }
    nv_ = static_cast<int>(c.size());
    slots_ = off;
    At_ = A_.transpose();
    acc_.resize(blocks_.size());
    for (size_t i = 0; i < blocks_.size(); ++i)
      if (blocks_[i].psd) acc_[i] = Mat::Zero(blocks_[i].dim, blocks_[i].dim);
  }

  SolveOutcome run();

private:
  // ---- cone algebra on stacked svec vectors -------------------------------
  Mat blk(const Vec& v, int i) const { return smat(v.segment(blocks_[i].off, blocks_[i].len), blocks_[i].dim).mat(); }
  void put(Vec& v, int i, const Mat& m) const { v.segment(blocks_[i].off, blocks_[i].len) = svec(m); }

  template <class F>
  Vec map_blocks(const Vec& v, F&& f) const {
    Vec out(slots_);
    for (int i = 0; i < static_cast<int>(blocks_.size()); ++i) {
      if (blocks_[i].psd)
        put(out, i, f(i, blk(v, i)));
      else
        out(blocks_[i].off) = f(i, Mat::Constant(1, 1, v(blocks_[i].off)))(0, 0);
    }
    return out;
  }

  Vec W(const Vec& v) const {
    return map_blocks(v, [&](int i, const Mat& m) -> Mat {
      if (!blocks_[i].psd) return m * sc_.d[i];
      return sc_.R[i].transpose() * m * sc_.R[i];
    });
  }
  Vec WT(const Vec& v) const {
    return map_blocks(v, [&](int i, const Mat& m) -> Mat {
      if (!blocks_[i].psd) return m * sc_.d[i];
      return sc_.R[i] * m * sc_.R[i].transpose();
    });
  }
  Vec Winv(const Vec& v) const {
    return map_blocks(v, [&](int i, const Mat& m) -> Mat {
      if (!blocks_[i].psd) return m / sc_.d[i];
      return sc_.Rinv[i].transpose() * m * sc_.Rinv[i];
    });
  }
  Vec WinvT(const Vec& v) const {
    return map_blocks(v, [&](int i, const Mat& m) -> Mat {
      if (!blocks_[i].psd) return m / sc_.d[i];
      return sc_.Rinv[i] * m * sc_.Rinv[i].transpose();
    });
  }
  /// Identity element e of the product cone.
  Vec identity() const {
    Vec e = Vec::Zero(slots_);
    for (int i = 0; i < static_cast<int>(blocks_.size()); ++i)
      if (blocks_[i].psd) put(e, i, Mat::Identity(blocks_[i].dim, blocks_[i].dim));
      else e(blocks_[i].off) = 1.0;
    return e;
  }
  Vec lambda_vec() const {
    Vec out(slots_);
    for (int i = 0; i < static_cast<int>(blocks_.size()); ++i)
      if (blocks_[i].psd) put(out, i, sc_.lam[i].asDiagonal().toDenseMatrix());
      else out(blocks_[i].off) = sc_.lam[i](0);
    return out;
  }
  /// Symmetric Jordan product (UV + VU)/2 blockwise.
  Vec jordan(const Vec& u, const Vec& v) const {
    Vec out(slots_);
    for (int i = 0; i < static_cast<int>(blocks_.size()); ++i) {
      if (!blocks_[i].psd) {
        out(blocks_[i].off) = u(blocks_[i].off) * v(blocks_[i].off);
        continue;
      }
      const Mat U = blk(u, i), V = blk(v, i);
      put(out, i, 0.5 * (U * V + V * U));
    }
    return out;
  }
  /// Solves λ ∘ x = w for x.
  Vec lambda_div(const Vec& w) const {
    Vec out(slots_);
    for (int i = 0; i < static_cast<int>(blocks_.size()); ++i) {
      if (!blocks_[i].psd) {
        out(blocks_[i].off) = w(blocks_[i].off) / sc_.lam[i](0);
        continue;
      }
      Mat Wm = blk(w, i);
      const Vec& l = sc_.lam[i];
      for (int a = 0; a < blocks_[i].dim; ++a)
        for (int c = 0; c < blocks_[i].dim; ++c) Wm(a, c) *= 2.0 / (l(a) + l(c));
      put(out, i, Wm);
    }
    return out;
  }
  /// Largest α with λ + α·d in the cone (scaled coordinates).
  double max_step(const Vec& dir) const {
    double a = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(blocks_.size()); ++i) {
      double mn;
      if (!blocks_[i].psd) {
        mn = dir(blocks_[i].off) / sc_.lam[i](0);
      } else {
        const Vec li = sc_.lam[i].cwiseSqrt().cwiseInverse();
        const Mat M = li.asDiagonal() * blk(dir, i) * li.asDiagonal();
        mn = min_eigenvalue(0.5 * (M + M.transpose()));
      }
      if (mn < 0.0) a = std::min(a, -1.0 / mn);
    }
    return a;
  }

  bool compute_scaling(const Vec& s, const Vec& z);
  bool update_scaling(const Vec& dsh, const Vec& wdz, double alpha);
  Vec s_from_scaling() const { return WT(lambda_vec()); }
  Vec z_from_scaling() const { return Winv(lambda_vec()); }

  bool factor();
  /// Solves [0 Gᵀ; G −WᵀW][dx; dz] = [rx; rz] with G = −A; returns dx and W dz.
  void kkt_solve(const Vec& rx, const Vec& rz, Vec& dx, Vec& wdz, bool refine) const;
  void kkt_solve_once(const Vec& rx, const Vec& rz, Vec& dx, Vec& wdz) const;

  double cone_violation(const Vec& x) const;

  const Vec& c_;
  const Eigen::SparseMatrix<double>& A_;
  Eigen::SparseMatrix<double> At_;
  const Vec& b_;
  SolveOptions opts_;
  std::vector<Block> blocks_;
  std::vector<SlotPos> pos_;
  std::vector<Mat> acc_;
  int nv_ = 0, slots_ = 0, degree_ = 0;
  Scaling sc_;
  Mat Ghat_;
  Eigen::HouseholderQR<Mat> qr_;
  Mat Rq_;
};

bool nt_pair(const Mat& s, const Mat& z, Mat& R, Vec& lam) {
  Eigen::LLT<Mat> l1(s), l2(z);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) return false;
  const Mat L1 = l1.matrixL(), L2 = l2.matrixL();
  Eigen::JacobiSVD<Mat> svd(L2.transpose() * L1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  lam = svd.singularValues();
  if (!(lam.minCoeff() > 0.0) || !lam.allFinite()) return false;
  R = L1 * svd.matrixV() * lam.cwiseSqrt().cwiseInverse().asDiagonal();
  return R.allFinite();
}

bool Engine::compute_scaling(const Vec& s, const Vec& z) {
  const auto nb = blocks_.size();
  sc_.R.assign(nb, Mat());
  sc_.Rinv.assign(nb, Mat());
  sc_.lam.assign(nb, Vec());
  sc_.d.assign(nb, 1.0);
  for (size_t i = 0; i < nb; ++i) {
    const int ii = static_cast<int>(i);
    if (!blocks_[i].psd) {
      const double sv = s(blocks_[i].off), zv = z(blocks_[i].off);
      if (!(sv > 0.0) || !(zv > 0.0)) return false;
      sc_.d[i] = std::sqrt(sv / zv);
      sc_.lam[i] = Vec::Constant(1, std::sqrt(sv * zv));
      continue;
    }
    if (!nt_pair(blk(s, ii), blk(z, ii), sc_.R[i], sc_.lam[i])) return false;
    sc_.Rinv[i] = sc_.R[i].inverse();
  }
  return true;
}

bool Engine::update_scaling(const Vec& dsh, const Vec& wdz, double alpha) {
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const int ii = static_cast<int>(i);
    if (!blocks_[i].psd) {
      const double l = sc_.lam[i](0);
      const double st = l + alpha * dsh(blocks_[i].off), zt = l + alpha * wdz(blocks_[i].off);
      if (!(st > 0.0) || !(zt > 0.0)) return false;
      const double sv = sc_.d[i] * st, zv = zt / sc_.d[i];
      sc_.d[i] = std::sqrt(sv / zv);
      sc_.lam[i](0) = std::sqrt(sv * zv);
      continue;
    }
    const Mat L = sc_.lam[i].asDiagonal();
    Mat st = L + alpha * blk(dsh, ii), zt = L + alpha * blk(wdz, ii);
    st = 0.5 * (st + st.transpose());
    zt = 0.5 * (zt + zt.transpose());
    Mat Rt;
    Vec lam;
    if (!nt_pair(st, zt, Rt, lam)) return false;
    sc_.R[i] = sc_.R[i] * Rt;
    sc_.Rinv[i] = sc_.R[i].inverse();
    sc_.lam[i] = lam;
    if (!sc_.Rinv[i].allFinite()) return false;
  }
  return true;
}

bool Engine::factor() {
  // Ĝ = W⁻ᵀ G with G = −A, built column by column from the sparse pattern.
  Ghat_.setZero(slots_, nv_);
  std::vector<int> touched;
  for (int col = 0; col < nv_; ++col) {
    touched.clear();
    for (Eigen::SparseMatrix<double>::InnerIterator it(A_, col); it; ++it) {
      const SlotPos& sp = pos_[static_cast<size_t>(it.row())];
      const Block& bl = blocks_[static_cast<size_t>(sp.block)];
      if (!bl.psd) {
        Ghat_(bl.off, col) = -it.value() / sc_.d[static_cast<size_t>(sp.block)];
        continue;
      }
      Mat& acc = acc_[static_cast<size_t>(sp.block)];
      if (std::find(touched.begin(), touched.end(), sp.block) == touched.end()) {
        touched.push_back(sp.block);
        acc.setZero();
      }
      const Mat& Ri = sc_.Rinv[static_cast<size_t>(sp.block)];
      if (sp.row == sp.col) {
        acc.noalias() += it.value() * Ri.col(sp.row) * Ri.col(sp.row).transpose();
      } else {
        const double w = it.value() / std::sqrt(2.0);
        acc.noalias() += w * Ri.col(sp.row) * Ri.col(sp.col).transpose();
        acc.noalias() += w * Ri.col(sp.col) * Ri.col(sp.row).transpose();
      }
    }
    for (int bidx : touched) {
      const Block& bl = blocks_[static_cast<size_t>(bidx)];
      Ghat_.col(col).segment(bl.off, bl.len) = -svec(acc_[static_cast<size_t>(bidx)]);
    }
  }
  qr_.compute(Ghat_);
  Rq_ = qr_.matrixQR().topRows(nv_).triangularView<Eigen::Upper>();
  const Vec diag = Rq_.diagonal().cwiseAbs();
  return diag.allFinite() && nv_ > 0 && diag.minCoeff() > 1e-300;
}

void Engine::kkt_solve_once(const Vec& rx, const Vec& rz, Vec& dx, Vec& wdz) const {
  const Vec rh = WinvT(rz);
  const Vec qtr = (qr_.householderQ().transpose() * rh).head(nv_);
  const auto Ru = Rq_.triangularView<Eigen::Upper>();
  Vec t = Ru.transpose().solve(rx) + qtr;
  dx = Ru.solve(t);
  wdz = Ghat_ * dx - rh;
}

void Engine::kkt_solve(const Vec& rx, const Vec& rz, Vec& dx, Vec& wdz, bool refine) const {
  kkt_solve_once(rx, rz, dx, wdz);
  if (!refine) return;
  for (int k = 0; k < 3; ++k) {
    const Vec dz = Winv(wdz);
    const Vec e1 = rx + At_ * dz;
    const Vec e2 = rz + A_ * dx + WT(wdz);
    Vec ddx, dwdz;
    kkt_solve_once(e1, e2, ddx, dwdz);
    dx += ddx;
    wdz += dwdz;
  }
}

double Engine::cone_violation(const Vec& x) const {
  const Vec sv = b_ + A_ * x;
  double worst = 0.0;
  for (int i = 0; i < static_cast<int>(blocks_.size()); ++i) {
    double mn, nrm;
    if (!blocks_[i].psd) {
      mn = sv(blocks_[i].off);
      nrm = std::abs(mn);
    } else {
      const Mat M = blk(sv, i);
      mn = min_eigenvalue(M);
      nrm = M.norm();
    }
    worst = std::max(worst, std::max(0.0, -mn) / std::max(1.0, nrm));
  }
  return worst;
}

SolveOutcome Engine::run() {
  SolveOutcome best;
  best.status = SolveStatus::numerical_failure;
  best.x = Vec::Zero(nv_);
  best.tolerance = opts_.feasibility_tol;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_improvement = 0;

  auto fail = [&](const std::string& why, SolveStatus st) {
    best.status = st;
    best.message = why;
    return best;
  };

  // Initial point (W = I): least-squares primal slack and least-norm dual.
  sc_.R.assign(blocks_.size(), Mat());
  sc_.Rinv.assign(blocks_.size(), Mat());
  sc_.lam.assign(blocks_.size(), Vec());
  sc_.d.assign(blocks_.size(), 1.0);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].psd) {
      sc_.R[i] = sc_.Rinv[i] = Mat::Identity(blocks_[i].dim, blocks_[i].dim);
      sc_.lam[i] = Vec::Ones(blocks_[i].dim);
    } else {
      sc_.lam[i] = Vec::Ones(1);
    }
  }
  if (!factor()) return fail("constraint map is rank deficient", SolveStatus::numerical_failure);
  Vec x, wz;
  kkt_solve(Vec::Zero(nv_), b_, x, wz, false);
  Vec s = -wz;
  Vec xd;
  kkt_solve(-c_, Vec::Zero(slots_), xd, wz, false);
  Vec z = wz;
  const Vec e = identity();
  auto shift_into_cone = [&](Vec& v) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(blocks_.size()); ++i)
      worst = std::max(worst, blocks_[i].psd ? -min_eigenvalue(blk(v, i)) : -v(blocks_[i].off));
    if (worst >= -1e-8 * std::max(1.0, v.norm())) v += (1.0 + worst) * e;
  };
  shift_into_cone(s);
  shift_into_cone(z);
  double tau = 1.0, kappa = 1.0;
  if (!compute_scaling(s, z)) return fail("initial scaling failed", SolveStatus::numerical_failure);

  const double cnorm = std::max(1.0, c_.norm());
  for (int it = 0; it <= opts_.max_iterations; ++it) {
    s = s_from_scaling();
    z = z_from_scaling();
    const Vec rx = -At_ * z + c_ * tau;
    const Vec rz = s - A_ * x - b_ * tau;
    const double cx = c_.dot(x), bz = b_.dot(z);
    const double rt = kappa + cx + bz;
    const double mu = (s.dot(z) + tau * kappa) / (degree_ + 1);

    const Vec xv = x / tau;
    const double pcost = cx / tau, dcost = -bz / tau;
    const double pres = cone_violation(xv);
    const double dres = (At_ * z / tau - c_).norm() / cnorm;
    const double gap = std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost));
    if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap))
      return fail("non-finite iterate", SolveStatus::numerical_failure);
    if (opts_.verbose)
      std::fprintf(stderr, "%3d  p %+.10e  d %+.10e  pres %.1e  dres %.1e  gap %.1e  tau %.1e  kap %.1e  |x| %.1e  |z| %.1e\n",
                   it, pcost, dcost, pres, dres, gap, tau, kappa, xv.norm(), z.norm() / tau);

    const double merit = std::max({pres / opts_.feasibility_tol, dres / opts_.feasibility_tol,
                                   gap / opts_.gap_tol});
    if (merit < best_merit) {
      best_merit = merit;
      since_improvement = 0;
      best.x = xv;
      best.objective = pcost;
      best.dual_objective = dcost;
      best.primal_residual = pres;
      best.dual_residual = dres;
      best.gap = gap;
      best.iterations = it;
    } else {
      ++since_improvement;
    }
    if (merit <= 1.0) {
      best.status = SolveStatus::optimal;
      return best;
    }
    // Certificates of infeasibility / unboundedness from the embedding.
    const double aty = (At_ * z).norm();
    if (bz < 0.0 && aty <= opts_.feasibility_tol * (-bz)) {
      best.status = SolveStatus::infeasible;
      best.iterations = it;
      best.message = "dual ray certifies primal infeasibility";
      return best;
    }
    const double axs = (s - A_ * x).norm();
    if (cx < 0.0 && axs <= opts_.feasibility_tol * (-cx)) {
      best.status = SolveStatus::unbounded;
      best.iterations = it;
      best.message = "primal ray certifies unboundedness";
      return best;
    }
    if (it == opts_.max_iterations) break;
    if (since_improvement >= 12)
      return fail("no progress in 12 iterations", SolveStatus::numerical_failure);

    if (it > 0 && !factor()) return fail("KKT factorization failed", SolveStatus::numerical_failure);
    Vec x1, wz1;
    kkt_solve(-c_, b_, x1, wz1, true);
    const Vec z1 = Winv(wz1);
    const Vec lam = lambda_vec();
    const Vec lam_sq = jordan(lam, lam);

    struct Dir {
      Vec dx, wdz, dsh;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double sigma, const Vec* corr, double corr_t) {
      Vec rhs = -lam_sq + sigma * mu * e;
      if (corr) rhs -= *corr;
      const Vec sh = lambda_div(rhs);
      const double eta = 1.0 - sigma;
      Vec dx0, wdz0;
      kkt_solve(-eta * rx, -eta * rz - WT(sh), dx0, wdz0, true);
      const Vec dz0 = Winv(wdz0);
      const double ct = -tau * kappa + sigma * mu - corr_t;
      const double num = -eta * rt - ct / tau - c_.dot(dx0) - b_.dot(dz0);
      const double den = -kappa / tau + c_.dot(x1) + b_.dot(z1);
      Dir d;
      d.dtau = num / den;
      d.dx = dx0 + d.dtau * x1;
      d.wdz = wdz0 + d.dtau * wz1;
      d.dkappa = (ct - kappa * d.dtau) / tau;
      d.dsh = sh - d.wdz;
      return d;
    };
    auto step_len = [&](const Dir& d) {
      double a = std::min(max_step(d.dsh), max_step(d.wdz));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const Dir aff = direction(0.0, nullptr, 0.0);
    const double a_aff = std::min(1.0, step_len(aff));
    const double sigma = std::pow(1.0 - a_aff, 3);
    const Vec corr = jordan(aff.dsh, aff.wdz);
    const Dir d = direction(sigma, &corr, aff.dtau * aff.dkappa);
    const double a = std::min(1.0, 0.99 * step_len(d));
    if (!(a > 0.0) || !d.dx.allFinite())
      return fail("zero step length", SolveStatus::numerical_failure);

    x += a * d.dx;
    tau += a * d.dtau;
    kappa += a * d.dkappa;
    if (!update_scaling(d.dsh, d.wdz, a))
      return fail("scaling update lost positive definiteness", SolveStatus::numerical_failure);
  }
  best.status = SolveStatus::iteration_limit;
  best.message = "iteration limit reached";
  return best;
}

SolveOutcome solve_reduced(const ConicProgram& p, const SolveOptions& opts) {
  // Eliminate equalities: x = x0 + Nb w.
  const int nv = p.num_variables();
  Vec x0 = Vec::Zero(nv);
  Mat Nb = Mat::Identity(nv, nv);
  if (p.eq_A.rows() > 0) {
    x0 = pseudo_inverse(p.eq_A, 1e-12) * p.eq_b;
    const double r = (p.eq_A * x0 - p.eq_b).norm();
    if (r > 1e-9 * std::max(1.0, p.eq_b.norm())) {
      SolveOutcome out;
      out.status = SolveStatus::infeasible;
      out.x = x0;
      out.message = "linear equalities are inconsistent";
      return out;
    }
    Nb = null_space_basis(p.eq_A, 1e-12);
  }
  const Mat Ared_dense = Mat(p.A) * Nb;
  const Vec cred = Nb.transpose() * p.c;
  const Vec bred = p.b + p.A * x0;

  // Drop directions that do not enter any cone: zero cost keeps them at 0,
  // non-zero cost makes the program unbounded.
  std::vector<int> keep;
  for (int j = 0; j < Ared_dense.cols(); ++j) {
    if (Ared_dense.col(j).norm() > 0.0) {
      keep.push_back(j);
    } else if (std::abs(cred(j)) > 0.0) {
      SolveOutcome out;
      out.status = SolveStatus::unbounded;
      out.x = x0;
      out.message = "a decision variable with non-zero cost enters no cone";
      return out;
    }
  }
  Mat Ak(Ared_dense.rows(), static_cast<Eigen::Index>(keep.size()));
  Vec ck(static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    Ak.col(static_cast<Eigen::Index>(j)) = Ared_dense.col(keep[j]);
    ck(static_cast<Eigen::Index>(j)) = cred(keep[j]);
  }
  auto lift = [&](const Vec& w) {
    Vec full = Vec::Zero(Nb.cols());
    for (size_t j = 0; j < keep.size(); ++j) full(keep[j]) = w(static_cast<Eigen::Index>(j));
    return Vec(x0 + Nb * full);
  };

  SolveOutcome out;
  if (keep.empty()) {
    // Nothing to optimize: the program is feasible iff the constant slot is.
    ConicProgram q = p;
    const auto rep = verify_solution(q, x0);
    out.x = x0;
    out.objective = p.c.dot(x0);
    out.dual_objective = out.objective;
    out.primal_residual = rep.max_violation;
    out.tolerance = opts.feasibility_tol;
    out.status = rep.max_violation <= opts.feasibility_tol ? SolveStatus::optimal : SolveStatus::infeasible;
    return out;
  }
  Eigen::SparseMatrix<double> As = Ak.sparseView(0.0, 0.0);
  Engine eng(ck, As, bred, p.cones, opts);
  out = eng.run();
  const double shift = p.c.dot(x0);
  if (out.x.size() == ck.size()) {
    out.x = lift(out.x);
    out.objective = p.c.dot(out.x);
    out.dual_objective += shift;
  }
  return out;
}

}  // namespace

SolveOutcome solve(const ConicProgram& p, const SolveOptions& opts_in) {
  p.validate();
  SolveOptions opts = opts_in;
  if (const char* env = std::getenv(kIterationLimitEnv)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 0) opts.max_iterations = static_cast<int>(v);
  }
  SolveOutcome out = solve_reduced(p, opts);
  if (out.status == SolveStatus::numerical_failure && opts.retry_on_failure) {
    SolveOptions loose = opts;
    loose.feasibility_tol = std::max(opts.feasibility_tol, opts.retry_tol);
    loose.gap_tol = std::max(opts.gap_tol, opts.retry_tol);
    // The best iterate of the failed run usually meets the loose tolerances
    // already; only solve again when it does not.
    if (out.x.size() == p.c.size() && out.primal_residual <= loose.feasibility_tol &&
        out.dual_residual <= loose.feasibility_tol && out.gap <= loose.gap_tol) {
      out.status = SolveStatus::optimal;
      out.retried = true;
      out.tolerance = loose.feasibility_tol;
      return out;
    }
    SolveOutcome retry = solve_reduced(p, loose);
    retry.retried = true;
    retry.tolerance = loose.feasibility_tol;
    if (retry.status != SolveStatus::optimal && retry.message.empty()) retry.message = out.message;
    return retry;
  }
  out.tolerance = opts.feasibility_tol;
  return out;
}

ResidualReport verify_solution(const ConicProgram& p, const Vec& x) {
  p.validate();
  if (x.size() != p.num_variables()) throw std::invalid_argument("verify_solution: wrong vector length");
  ResidualReport rep;
  for (int i = 0; i < static_cast<int>(p.cones.size()); ++i) {
    const Mat v = p.slot_value(i, x);
    SlotReport s;
    s.name = p.cones[static_cast<size_t>(i)].name;
    s.dim = static_cast<int>(v.rows());
    Eigen::SelfAdjointEigenSolver<Mat> es(v, Eigen::EigenvaluesOnly);
    s.min_eig = es.eigenvalues()(0);
    s.norm = v.norm();
    s.violation = std::max(0.0, -s.min_eig) / std::max(1.0, s.norm);
    rep.max_violation = std::max(rep.max_violation, s.violation);
    rep.slots.push_back(s);
  }
  if (p.eq_A.rows() > 0)
    rep.equality_residual = (p.eq_A * x - p.eq_b).norm() / std::max(1.0, p.eq_b.norm());
  return rep;
}

std::string program_to_json(const ConicProgram& p) {
  using jsonio::json;
  json j;
  j["objective"] = jsonio::to_json(p.c);
  json cones = json::array();
  for (const auto& k : p.cones)
    cones.push_back({{"kind", k.kind == ConeKind::psd ? "psd" : "nonneg"}, {"dim", k.dim}, {"name", k.name}});
  j["cones"] = cones;
  j["constant"] = jsonio::to_json(p.b);
  json trip = json::array();
  for (int col = 0; col < p.A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, col); it; ++it)
      trip.push_back({it.row(), it.col(), it.value()});
  j["map"] = {{"rows", p.A.rows()}, {"cols", p.A.cols()}, {"entries", trip}};
  if (p.eq_A.rows() > 0) {
    j["equality_matrix"] = jsonio::to_json(p.eq_A);
    j["equality_rhs"] = jsonio::to_json(p.eq_b);
  }
  return j.dump();
}

ConicProgram program_from_json(const std::string& text) {
  const auto j = jsonio::json::parse(text);
  ConicProgram p;
  p.c = jsonio::vec_from_json(j.at("objective"));
  for (const auto& k : j.at("cones")) {
    Cone c;
    c.kind = k.at("kind").get<std::string>() == "psd" ? ConeKind::psd : ConeKind::nonneg;
    c.dim = k.at("dim").get<int>();
    c.name = k.value("name", "");
    p.cones.push_back(c);
  }
  p.b = jsonio::vec_from_json(j.at("constant"));
  const auto& map = j.at("map");
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& t : map.at("entries")) trips.emplace_back(t[0].get<int>(), t[1].get<int>(), t[2].get<double>());
  p.A.resize(map.at("rows").get<int>(), map.at("cols").get<int>());
  p.A.setFromTriplets(trips.begin(), trips.end());
  if (j.contains("equality_matrix")) {
    p.eq_A = jsonio::mat_from_json(j["equality_matrix"]);
    p.eq_b = jsonio::vec_from_json(j["equality_rhs"]);
  } else {
    p.eq_A.resize(0, p.c.size());
    p.eq_b.resize(0);
  }
  p.validate();
  return p;
}

}  // namespace rdpc
