#include "rdpc/lmi_synthesis.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace rdpc {

std::string to_string(ProblemVariant v) {
  switch (v) {
    case ProblemVariant::unconstrained_state: return "unconstrained-state";
    case ProblemVariant::constrained_state: return "constrained-state";
    case ProblemVariant::constrained_io: return "constrained-io";
  }
  return "unknown";
}

ProblemVariant problem_variant_from_string(const std::string& s) {
  if (s == "unconstrained-state") return ProblemVariant::unconstrained_state;
  if (s == "constrained-state") return ProblemVariant::constrained_state;
  if (s == "constrained-io") return ProblemVariant::constrained_io;
  throw std::invalid_argument("unknown problem variant '" + s + "'");
}

std::string to_string(Formulation f) { return f == Formulation::faithful ? "faithful" : "reduced"; }

Formulation formulation_from_string(const std::string& s) {
  if (s == "faithful") return Formulation::faithful;
  if (s == "reduced") return Formulation::reduced;
  throw std::invalid_argument("unknown formulation '" + s + "'");
}

std::string to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::solved: return "solved";
    case SynthesisStatus::infeasible: return "infeasible";
    case SynthesisStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

Vec pack(const VariableLayout& l, const SynthesisVariables& v) {
  Vec x = Vec::Zero(l.size);
  if (l.alpha >= 0) x(l.alpha) = v.alpha;
  if (l.beta >= 0) x(l.beta) = v.beta;
  if (l.eta >= 0) x(l.eta) = v.eta;
  if (l.tau >= 0) x(l.tau) = v.tau;
  if (l.kappa >= 0) x(l.kappa) = v.kappa;
  if (v.S.rows() != l.m || v.S.cols() != l.n || v.Gamma.rows() != l.n || v.Gamma.cols() != l.n)
    throw std::invalid_argument("pack: variable shapes do not match the layout");
  for (int j = 0; j < l.n; ++j)
    for (int i = 0; i < l.m; ++i) x(l.S + i + j * l.m) = v.S(i, j);
  x.segment(l.Gamma, svec_dim(l.n)) = svec(v.Gamma);
  return x;
}

SynthesisVariables unpack(const VariableLayout& l, const Vec& x) {
  if (x.size() != l.size) throw std::invalid_argument("unpack: vector length does not match the layout");
  SynthesisVariables v;
  if (l.alpha >= 0) v.alpha = x(l.alpha);
  if (l.beta >= 0) v.beta = x(l.beta);
  if (l.eta >= 0) v.eta = x(l.eta);
  if (l.tau >= 0) v.tau = x(l.tau);
  if (l.kappa >= 0) v.kappa = x(l.kappa);
  v.S.resize(l.m, l.n);
  for (int j = 0; j < l.n; ++j)
    for (int i = 0; i < l.m; ++i) v.S(i, j) = x(l.S + i + j * l.m);
  v.Gamma = smat(x.segment(l.Gamma, svec_dim(l.n)), l.n).mat();
  return v;
}

Mat calM(const Mat& Gamma, const Mat& S, int p, double c) {
  const int n = static_cast<int>(Gamma.rows()), m = static_cast<int>(S.rows());
  BlockLayout L({n, m + p, n, m, n});
  Mat M = L.zeros();
  L.add(M, 0, 0, -Gamma);
  L.add(M, 1, 1, -c * Mat::Identity(m + p, m + p));
  L.add(M, 2, 2, Gamma);
  L.add(M, 2, 3, S.transpose());
  L.add(M, 3, 2, S);
  L.add(M, 3, 4, S);
  L.add(M, 4, 3, S.transpose());
  L.add(M, 4, 4, -Gamma);
  return M;
}

Mat calN(const Mat& N, int n) {
  Mat out = Mat::Zero(N.rows() + n, N.cols() + n);
  out.topLeftCorner(N.rows(), N.cols()) = N;
  return out;
}

Mat calMy(const Mat& Gamma, const Mat& S, int p, double y_max) {
  const int n = static_cast<int>(Gamma.rows()), m = static_cast<int>(S.rows());
  BlockLayout L({p, n, m, n});
  Mat M = L.zeros();
  L.add(M, 0, 0, -y_max * y_max * Mat::Identity(p, p));
  L.add(M, 1, 1, Gamma);
  L.add(M, 1, 2, S.transpose());
  L.add(M, 2, 1, S);
  L.add(M, 2, 3, S);
  L.add(M, 3, 2, S.transpose());
  L.add(M, 3, 3, -Gamma);
  return M;
}

Mat calNy(const Mat& Ny, int n) { return calN(Ny, n); }

namespace {

/// H_y in the row layout [Y; −X; −U] (state mode) or [Y, 0; −X, 0; 0, −I_m]
/// (output mode). `X` may be given in reduced coordinates.
Mat output_data(const ConsistencySet& set, const Mat& X) {
  const int p = set.p(), m = set.m(), n = static_cast<int>(X.rows()), T = set.data.columns();
  if (set.mode() == DataMode::state) {
    Mat Hy(p + n + m, T);
    Hy << set.data.Y, -X, -set.data.U;
    return Hy;
  }
  Mat Hy = Mat::Zero(p + n + m, T + m);
  Hy.block(0, 0, p, T) = set.data.Y;
  Hy.block(p, 0, n, T) = -X;
  Hy.block(p + n, T, m, m) = -Mat::Identity(m, m);
  return Hy;
}

struct Assembly {
  ProblemVariant variant = ProblemVariant::unconstrained_state;
  SynthesisOptions opts;
  bool scaled = false;
  bool with_input = false, with_output = false;
  bool reduced = false;
  int n = 0, m = 0, p = 0;
  Mat Ncal, Nycal;  ///< faithful multipliers' Gram blocks
  Mat Bmain, Bout;  ///< projection bases (reduced formulation)
  Vec z;      ///< normalized state z / scale
  double scale = 1.0;
  double u_max = 0.0, y_max = 0.0;
  VariableLayout layout;
};

int q_of(const Assembly& a) { return a.n + a.p + a.m; }

/// Margins β and κ only enter through β·diag(I, 0) and κ·diag(I, 0), so any
/// feasible point stays feasible with the margin at its floor. The reduced
/// formulation fixes them there instead of carrying free variables the
/// objective does not see (which drift and stall the solver).
double margin_beta(const Assembly& a, const SynthesisVariables& v, double one) {
  if (a.layout.beta >= 0) return v.beta;
  return a.scaled ? a.opts.eps_beta * v.eta : one * a.opts.eps_beta;
}

double margin_kappa(const Assembly& a, const SynthesisVariables& v, double one) {
  if (a.layout.kappa >= 0) return v.kappa;
  return a.with_output ? one * a.opts.eps_kappa : 0.0;
}

/// Every cone slot as a matrix. `one` multiplies all constant terms, so
/// one = 0 with a unit vector yields the linear part of the map.
std::vector<Mat> slots(const Assembly& a, const SynthesisVariables& v, double one) {
  std::vector<Mat> out;
  const int n = a.n, m = a.m, p = a.p, q = q_of(a);
  const Mat& G = v.Gamma;
  const Mat& S = v.S;
  const double beta = margin_beta(a, v, one), kappa = margin_kappa(a, v, one);

  // State bound: −[−η, xᵀ; x, −Γ] (or with the (1,1) entry fixed to −1).
  Mat sb(1 + n, 1 + n);
  sb(0, 0) = a.scaled ? one : v.eta;
  sb.block(0, 1, 1, n) = -one * a.z.transpose();
  sb.block(1, 0, n, 1) = -one * a.z;
  sb.block(1, 1, n, n) = G;
  out.push_back(sb);

  // Decrease condition.
  const Mat Mk = calM(G, S, p, a.scaled ? v.eta : one);
  Mat lhs = -Mk;
  lhs.topLeftCorner(q, q) -= beta * Mat::Identity(q, q);
  if (a.reduced) {
    out.push_back(a.Bmain.transpose() * lhs * a.Bmain);
  } else {
    out.push_back(lhs + v.alpha * a.Ncal);
  }

  const double s2 = a.scale * a.scale;
  if (a.with_input) {
    Mat in(m + n, m + n);
    in << one * a.u_max * a.u_max / s2 * Mat::Identity(m, m), -S, -S.transpose(), G;
    out.push_back(in);
  }
  if (a.with_output) {
    Mat ly = -calMy(G, S, p, a.y_max / a.scale * std::sqrt(one));
    ly.topLeftCorner(p, p) -= kappa * Mat::Identity(p, p);
    if (a.reduced)
      out.push_back(a.Bout.transpose() * ly * a.Bout);
    else
      out.push_back(ly + v.tau * a.Nycal);
  }

  auto scalar = [&](double s) { out.push_back(Mat::Constant(1, 1, s)); };
  if (a.layout.alpha >= 0) scalar(v.alpha);
  if (a.layout.tau >= 0) scalar(v.tau);
  // Margins are imposed on the unscaled β and Γ (β̄ = ηβ, Γ̄ = ηΓ), which
  // keeps the scaled problem equivalent to the original one.
  if (a.layout.beta >= 0) scalar(a.scaled ? v.beta - a.opts.eps_beta * v.eta : v.beta - one * a.opts.eps_beta);
  // η and κ floors are relative to ‖Vᵀx‖² (i.e. absolute in the working
  // units): absolute floors bind once the state has decayed and leave a
  // degenerate, badly scaled program behind.
  scalar(v.eta - one * a.opts.eps_eta);
  if (a.layout.kappa >= 0) scalar(v.kappa - one * a.opts.eps_kappa);
  if (a.scaled)
    out.push_back(G - a.opts.eps_gamma * v.eta * Mat::Identity(n, n));
  else
    out.push_back(G - one * a.opts.eps_gamma * Mat::Identity(n, n));
  if (a.opts.gamma_cap > 0.0) {
    if (a.scaled)
      out.push_back(a.opts.gamma_cap * v.eta * Mat::Identity(n, n) - G);
    else
      out.push_back(one * a.opts.gamma_cap * Mat::Identity(n, n) - G);
  }
  return out;
}

std::vector<Cone> cones_of(const Assembly& a, const std::vector<Mat>& sample) {
  std::vector<Cone> cones;
  auto psd = [&](const std::string& name) {
    cones.push_back({ConeKind::psd, static_cast<int>(sample[cones.size()].rows()), name});
  };
  auto nn = [&](const std::string& name) { cones.push_back({ConeKind::nonneg, 1, name}); };
  psd("state-bound");
  psd("decrease");
  if (a.with_input) psd("input");
  if (a.with_output) psd("output");
  if (a.layout.alpha >= 0) nn("alpha");
  if (a.layout.tau >= 0) nn("tau");
  if (a.layout.beta >= 0) nn("beta");
  nn("eta");
  if (a.layout.kappa >= 0) nn("kappa");
  psd("gamma-floor");
  if (a.opts.gamma_cap > 0.0) psd("gamma-cap");
  return cones;
}

Vec stack_svec(const std::vector<Mat>& s, const std::vector<Cone>& cones) {
  int total = 0;
  for (const auto& c : cones) total += c.slots();
  Vec out(total);
  int off = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    const int len = cones[i].slots();
    if (cones[i].kind == ConeKind::psd)
      out.segment(off, len) = svec(s[i]);
    else
      out(off) = s[i](0, 0);
    off += len;
  }
  return out;
}

/// Left annihilator of [X; U] in (reduced) coordinates: columns [k_x; k_u].
Mat lower_kernel(const Mat& X, const Mat& U, double tol) {
  if (X.cols() == 0) return Mat::Identity(X.rows() + U.rows(), X.rows() + U.rows());
  Mat D2(X.rows() + U.rows(), X.cols());
  D2 << X, U;
  return null_space_basis(D2.transpose(), tol);
}

/// Orthonormal basis of range(P) ∩ span(W)^⊥ (P orthonormal); only the
/// columns of W lying in range(P) are removed.
Mat remove_face(const Mat& P, const Mat& W) {
  if (W.cols() == 0) return P;
  Mat inside(W.rows(), 0);
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    const Vec w = W.col(j);
    if ((w - P * (P.transpose() * w)).norm() <= 1e-8 * std::max(1.0, w.norm())) {
      inside.conservativeResize(Eigen::NoChange, inside.cols() + 1);
      inside.col(inside.cols() - 1) = w;
    }
  }
  if (inside.cols() == 0) return P;
  const Mat coords = P.transpose() * inside;
  const Mat keep = null_space_basis(coords.transpose(), 1e-10);
  return P * keep;
}

Mat block_diag(const Mat& a, const Mat& b) {
  Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

SynthesisProblem build(const ConsistencySet& set, const Vec& x_now, ProblemVariant variant,
                       const NormConstraints* c, const SynthesisOptions& opts) {
  const int nfull = set.n(), m = set.m(), p = set.p();
  if (x_now.size() != nfull)
    throw std::invalid_argument("current state has dimension " + std::to_string(x_now.size()) +
                                ", the data has " + std::to_string(nfull));
  if (set.N.rows() != set.q() + set.s()) throw std::invalid_argument("Gram matrix N has the wrong size");
  if (c) c->validate();

  Assembly a;
  a.variant = variant;
  a.opts = opts;
  a.scaled = variant != ProblemVariant::unconstrained_state;
  a.with_input = a.scaled && opts.input_constraint;
  a.with_output = a.scaled && opts.output_constraint;
  a.reduced = opts.formulation == Formulation::reduced;
  a.m = m;
  a.p = p;
  if (c) {
    a.u_max = c->u_max;
    a.y_max = c->y_max;
  }

  SynthesisProblem prob;
  prob.variant = variant;
  prob.options = opts;
  prob.x_now = x_now;
  prob.state_dim = nfull;

  Mat X = set.data.X, Xp = set.data.X_plus;
  if (a.reduced) {
    prob.V = data_subspace_basis(set.data, opts.kernel_tol);
    if (prob.V.cols() == 0) prob.V = Mat::Identity(nfull, nfull);
    X = prob.V.transpose() * X;
    Xp = prob.V.transpose() * Xp;
  } else {
    prob.V = Mat::Identity(nfull, nfull);
  }
  const int n = static_cast<int>(prob.V.cols());
  a.n = n;
  prob.z = prob.V.transpose() * x_now;
  // Work in units where the current state has norm one: an exact change of
  // variables that keeps the program well scaled as the state decays.
  const double zn = prob.z.norm();
  a.scale = opts.normalize && zn > 0.0 && std::isfinite(zn) ? zn : 1.0;
  a.z = prob.z / a.scale;
  prob.scale = a.scale;
  const int q = n + p + m;

  // Data Gram matrices in the working coordinates.
  Mat H(2 * n + 2 * m + p, set.data.columns());
  H << Xp, set.Q_half * set.data.Y, set.R_half * set.data.U, -X, -set.data.U;
  const Mat Hy = output_data(set, X);

  // Variable layout.
  VariableLayout& L = a.layout;
  int idx = 0;
  if (!a.reduced) L.alpha = idx++;
  if (!a.reduced) L.beta = idx++;
  L.eta = idx++;
  if (a.with_output && !a.reduced) {
    L.tau = idx++;
    L.kappa = idx++;
  }
  L.m = m;
  L.n = n;
  L.S = idx;
  idx += m * n;
  L.Gamma = idx;
  idx += svec_dim(n);
  L.size = idx;

  Mat eqA(0, L.size);
  if (a.reduced) {
    const Mat K = lower_kernel(X, set.data.U, opts.kernel_tol);
    const Mat kerN = H.cols() == 0 ? Mat::Identity(H.rows(), H.rows())
                                   : null_space_basis(H.transpose(), opts.kernel_tol);
    const Mat kerNy = Hy.cols() == 0 ? Mat::Identity(Hy.rows(), Hy.rows())
                                     : null_space_basis(Hy.transpose(), opts.kernel_tol);
    Mat W = Mat::Zero(q + n + m + n, K.cols());
    Mat Wy = Mat::Zero(p + n + m + n, K.cols());
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      const Vec kx = K.col(j).head(n), ku = K.col(j).tail(m);
      W.col(j).segment(q, n) = kx;
      W.col(j).segment(q + n, m) = ku;
      W.col(j).segment(q + n + m, n) = -kx;
      Wy.col(j).segment(p, n) = kx;
      Wy.col(j).segment(p + n, m) = ku;
      Wy.col(j).segment(p + n + m, n) = -kx;
    }
    a.Bmain = remove_face(block_diag(kerN, Mat::Identity(n, n)), W);
    a.Bout = remove_face(block_diag(kerNy, Mat::Identity(n, n)), Wy);
    // On the removed directions the LMIs reduce to Γ k_x + Sᵀ k_u = 0.
    if (K.cols() > 0) {
      eqA.resize(n * K.cols(), L.size);
      for (int col = 0; col < L.size; ++col) {
        Vec e = Vec::Zero(L.size);
        e(col) = 1.0;
        const SynthesisVariables v = unpack(L, e);
        const Mat E = v.Gamma * K.topRows(n) + v.S.transpose() * K.bottomRows(m);
        eqA.col(col) = Eigen::Map<const Vec>(E.data(), E.size());
      }
    }
  } else {
    a.Ncal = calN(H * H.transpose(), n);
    a.Nycal = calNy(Hy * Hy.transpose(), n);
  }

  // Affine map by probing: constant part at zero, one column per variable.
  const SynthesisVariables zero = unpack(L, Vec::Zero(L.size));
  const std::vector<Mat> s0 = slots(a, zero, 1.0);
  ConicProgram& prog = prob.program;
  prog.cones = cones_of(a, s0);
  prog.b = stack_svec(s0, prog.cones);
  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < L.size; ++col) {
    Vec e = Vec::Zero(L.size);
    e(col) = 1.0;
    const Vec v = stack_svec(slots(a, unpack(L, e), 0.0), prog.cones);
    for (Eigen::Index r = 0; r < v.size(); ++r)
      if (v(r) != 0.0) trips.emplace_back(static_cast<int>(r), col, v(r));
  }
  prog.A.resize(prog.b.size(), L.size);
  prog.A.setFromTriplets(trips.begin(), trips.end());
  prog.c = Vec::Zero(L.size);
  prog.c(L.eta) = 1.0;
  prog.eq_A = eqA;
  prog.eq_b = Vec::Zero(eqA.rows());
  prog.validate();

  prob.layout = L;
  prob.main_block = prog.cones[1].dim;
  prob.output_block = a.with_output ? prog.cones[a.with_input ? 3 : 2].dim : 0;
  return prob;
}

}  // namespace

Mat output_gram(const ConsistencySet& set) {
  const Mat Hy = output_data(set, set.data.X);
  return Hy * Hy.transpose();
}

SynthesisProblem assemble_unconstrained(const ConsistencySet& set, const Vec& x_now,
                                        const SynthesisOptions& opts) {
  return build(set, x_now, ProblemVariant::unconstrained_state, nullptr, opts);
}

SynthesisProblem assemble_constrained(const ConsistencySet& set, const Vec& x_now,
                                      const NormConstraints& c, const SynthesisOptions& opts) {
  return build(set, x_now, ProblemVariant::constrained_state, &c, opts);
}

SynthesisProblem assemble_constrained_io(const ConsistencySet& set, const Vec& xhat_now,
                                         const NormConstraints& c, const SynthesisOptions& opts) {
  if (set.mode() != DataMode::output)
    throw std::invalid_argument("the input-output problem needs extended-state (output mode) data");
  return build(set, xhat_now, ProblemVariant::constrained_io, &c, opts);
}

SynthesisResult extract_result(const SynthesisProblem& prob, const SolveOutcome& out) {
  SynthesisResult r;
  r.solver = out;
  const int nfull = prob.state_dim, m = prob.layout.m;
  r.F = Mat::Zero(m, nfull);
  r.P = Mat::Zero(nfull, nfull);
  if (out.status == SolveStatus::infeasible || out.status == SolveStatus::unbounded) {
    r.status = SynthesisStatus::infeasible;
    r.message = "solver: " + to_string(out.status);
    return r;
  }
  if (out.status != SolveStatus::optimal) {
    r.status = SynthesisStatus::numerical_failure;
    r.message = "solver: " + to_string(out.status) + (out.message.empty() ? "" : " (" + out.message + ")");
    return r;
  }
  r.variables = unpack(prob.layout, out.x);
  if (prob.layout.beta < 0)
    r.variables.beta = prob.variant == ProblemVariant::unconstrained_state ? prob.options.eps_beta
                                                                           : prob.options.eps_beta * r.variables.eta;
  if (prob.layout.kappa < 0 && prob.output_block > 0) r.variables.kappa = prob.options.eps_kappa;
  // Back to the original units.
  const double s2 = prob.scale * prob.scale;
  SynthesisVariables& v = r.variables;
  v.eta *= s2;
  if (prob.variant != ProblemVariant::unconstrained_state) {
    v.alpha *= s2;
    v.beta *= s2;
    v.tau *= s2;
    v.kappa *= s2;
    v.S *= s2;
    v.Gamma *= s2;
  }
  r.eta = v.eta;
  r.residuals = verify_solution(prob.program, out.x);
  const Mat& G = r.variables.Gamma;
  const double gmin = min_eigenvalue(G);
  if (!(gmin >= 1e-9 * G.norm()) || !(gmin > 0.0)) {
    r.status = SynthesisStatus::numerical_failure;
    r.message = "Gamma is not numerically positive definite";
    return r;
  }
  Eigen::LDLT<Mat> ldlt(G);
  const Mat Fr = ldlt.solve(r.variables.S.transpose()).transpose();
  Mat Pr = ldlt.solve(Mat::Identity(G.rows(), G.cols()));
  Pr = 0.5 * (Pr + Pr.transpose());
  if (prob.variant != ProblemVariant::unconstrained_state) Pr *= r.variables.eta;
  r.F = Fr * prob.V.transpose();
  r.P = prob.V * Pr * prob.V.transpose();
  r.bound = prob.x_now.dot(r.P * prob.x_now);
  if (!r.F.allFinite() || !r.P.allFinite()) {
    r.status = SynthesisStatus::numerical_failure;
    r.message = "non-finite gain";
    return r;
  }
  r.status = SynthesisStatus::solved;
  if (out.retried) r.message = "solved with loosened tolerance " + std::to_string(out.tolerance);
  return r;
}

SynthesisResult synthesize(const SynthesisProblem& prob, const SolveOptions& solver) {
  return extract_result(prob, solve(prob.program, solver));
}

Mat closed_loop_on_data(const LtiSystem& sys, const Mat& F, const Mat& V) {
  return V.transpose() * (sys.A + sys.B * F) * V;
}

CertificationReport certify_upper_bound(const SynthesisResult& result, const ConsistencySet& set,
                                        const Vec& x_now, int horizon, int samples,
                                        std::uint64_t seed) {
  CertificationReport rep;
  rep.samples = samples;
  rep.horizon = horizon;
  rep.bound = result.bound;
  Mat V = data_subspace_basis(set.data);
  if (V.cols() == 0) V = Mat::Identity(set.n(), set.n());
  const SigmaSamples sig = sample_sigma(set, samples, seed);
  for (const LtiSystem& sys : sig.systems) {
    rep.max_membership = std::max(rep.max_membership, membership_residual(set, sys));
    // Simulated in data-subspace coordinates: every member agrees there, and
    // round-off along the complement would otherwise be amplified by the
    // arbitrary (possibly unstable) dynamics members have on it.
    const Mat Acl = V.transpose() * (sys.A + sys.B * result.F) * V;
    const Mat Ccl = set.Q_half * (sys.C + sys.D * result.F) * V;
    const Mat Ru = set.R_half * result.F * V;
    Vec x = V.transpose() * x_now;
    double J = 0.0;
    for (int i = 0; i < horizon; ++i) {
      J += (Ccl * x).squaredNorm() + (Ru * x).squaredNorm();
      x = Acl * x;
    }
    if (!std::isfinite(J)) J = std::numeric_limits<double>::infinity();
    rep.max_cost = std::max(rep.max_cost, J);
    if (J > result.bound * (1.0 + 1e-6) + 1e-12) ++rep.cost_violations;
    const double rho = spectral_radius(closed_loop_on_data(sys, result.F, V));
    rep.max_spectral_radius = std::max(rep.max_spectral_radius, rho);
    if (!(rho < 1.0)) ++rep.unstable;
  }
  return rep;
}

}  // namespace rdpc
