#include "rdpc/data_consistency.hpp"

#include "rdpc/json_io.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace rdpc {

namespace {

/// Relative truncation for rank decisions on data matrices. Structural
/// dependencies are exact up to rounding (~1e-15), so 1e-10 separates them
/// cleanly from genuine excitation.
constexpr double kDataRankTol = 1e-10;

Mat columns_of(const std::vector<Vec>& seq, int from, int to, int rows) {
  Mat out(rows, std::max(0, to - from));
  for (int k = from; k < to; ++k) out.col(k - from) = seq[static_cast<size_t>(k)];
  return out;
}

Vec window_state(const Trajectory& traj, int k, int n) {
  std::vector<Vec> u(traj.inputs.begin() + (k - n), traj.inputs.begin() + k);
  std::vector<Vec> y(traj.outputs.begin() + (k - n), traj.outputs.begin() + k);
  return extend_state(u, y);
}

void require_spd(const Mat& m, const char* name) {
  if (m.rows() != m.cols() || (m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm()) ||
      !(min_eigenvalue(m) > 0.0))
    throw std::invalid_argument(std::string(name) + " must be symmetric positive definite");
}

Mat lower_block(const ConsistencySet& set) {
  Mat D2(set.s(), set.data.columns());
  D2 << set.data.X, set.data.U;
  return D2;
}

LtiSystem unpack_z(const ConsistencySet& set, const Mat& Z) {
  const int n = set.n(), m = set.m(), p = set.p();
  LtiSystem sys;
  sys.A = Z.block(0, 0, n, n);
  sys.B = Z.block(0, n, n, m);
  const Mat qh_inv = set.Q_half.inverse();
  sys.C = qh_inv * Z.block(n, 0, p, n);
  sys.D = qh_inv * Z.block(n, n, p, m);
  sys.name = "sigma-sample";
  return sys;
}

double default_scale(const Mat& Z0, Eigen::Index kdim) {
  return kdim > 0 ? 0.5 * Z0.norm() / std::sqrt(static_cast<double>(kdim)) : 0.0;
}

}  // namespace

std::string to_string(DataMode mode) { return mode == DataMode::state ? "state" : "output"; }

DataMode data_mode_from_string(const std::string& s) {
  if (s == "state") return DataMode::state;
  if (s == "output") return DataMode::output;
  throw std::invalid_argument("unknown data mode '" + s + "'");
}

Vec extend_state(const std::vector<Vec>& u_window, const std::vector<Vec>& y_window) {
  if (u_window.size() != y_window.size() || u_window.empty())
    throw std::invalid_argument("extend_state: need n input and n output vectors");
  const auto m = u_window[0].size(), p = y_window[0].size();
  const auto n = static_cast<Eigen::Index>(u_window.size());
  Vec out(n * (m + p));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u_window[static_cast<size_t>(i)].size() != m || y_window[static_cast<size_t>(i)].size() != p)
      throw std::invalid_argument("extend_state: inconsistent vector sizes in window");
    out.segment(i * m, m) = u_window[static_cast<size_t>(i)];
    out.segment(n * m + i * p, p) = y_window[static_cast<size_t>(i)];
  }
  return out;
}

DataMatrices build_data_matrices(const Trajectory& traj, DataMode mode, int window) {
  const int T = traj.length();
  if (T < 1) throw std::invalid_argument("trajectory is empty");
  const int m = static_cast<int>(traj.inputs[0].size());
  const int p = static_cast<int>(traj.outputs[0].size());
  DataMatrices d;
  d.mode = mode;
  if (mode == DataMode::state) {
    if (!traj.has_states()) throw std::invalid_argument("state mode requires recorded states");
    const int n = static_cast<int>(traj.states[0].size());
    d.U = columns_of(traj.inputs, 0, T, m);
    d.Y = columns_of(traj.outputs, 0, T, p);
    d.X = columns_of(traj.states, 0, T, n);
    d.X_plus = columns_of(traj.states, 1, T + 1, n);
    return d;
  }
  if (window < 1) throw std::invalid_argument("output mode requires the plant order n >= 1");
  if (T <= window) throw std::invalid_argument("output mode requires T > n");
  d.window = window;
  const int nh = window * (m + p);
  d.U = columns_of(traj.inputs, window, T, m);
  d.Y = columns_of(traj.outputs, window, T, p);
  d.X.resize(nh, T - window);
  d.X_plus.resize(nh, T - window);
  for (int k = window; k < T; ++k) {
    d.X.col(k - window) = window_state(traj, k, window);
    d.X_plus.col(k - window) = window_state(traj, k + 1, window);
  }
  return d;
}

ConsistencySet build_consistency_set(const DataMatrices& d, const Mat& Q, const Mat& R) {
  require_spd(Q, "Q");
  require_spd(R, "R");
  if (Q.rows() != d.p() || R.rows() != d.m())
    throw std::invalid_argument("weight dimensions do not match the data");
  ConsistencySet set;
  set.data = d;
  set.Q = Q;
  set.R = R;
  set.Q_half = sqrt_psd(Q);
  set.R_half = sqrt_psd(R);
  const int n = d.state_dim(), m = d.m(), p = d.p(), T = d.columns();
  set.H.resize(2 * n + 2 * m + p, T);
  set.H << d.X_plus, set.Q_half * d.Y, set.R_half * d.U, -d.X, -d.U;
  set.N = set.H * set.H.transpose();
  if (d.mode == DataMode::state) {
    set.H_y.resize(p + n + m, T);
    set.H_y << d.Y, -d.X, -d.U;
  } else {
    set.H_y.resize(p + n, T);
    set.H_y << d.Y, -d.X;
  }
  set.N_y = set.H_y * set.H_y.transpose();
  return set;
}

Mat stack_z(const ConsistencySet& set, const LtiSystem& c) {
  const int n = set.n(), m = set.m(), p = set.p();
  if (c.A.rows() != n || c.A.cols() != n || c.B.rows() != n || c.B.cols() != m ||
      c.C.rows() != p || c.C.cols() != n || c.D.rows() != p || c.D.cols() != m)
    throw std::invalid_argument("candidate dimensions do not match the consistency set");
  Mat Z = Mat::Zero(n + p + m, n + m);
  Z.block(0, 0, n, n) = c.A;
  Z.block(0, n, n, m) = c.B;
  Z.block(n, 0, p, n) = set.Q_half * c.C;
  Z.block(n, n, p, m) = set.Q_half * c.D;
  Z.block(n + p, n, m, m) = set.R_half;
  return Z;
}

double membership_residual(const ConsistencySet& set, const LtiSystem& candidate) {
  const Mat Z = stack_z(set, candidate);
  Mat IZ(Z.rows(), Z.rows() + Z.cols());
  IZ << Mat::Identity(Z.rows(), Z.rows()), Z;
  const Mat r = IZ * set.N * IZ.transpose();
  return r.norm() / std::max(1.0, set.N.norm());
}

SigmaSamples sample_sigma(const ConsistencySet& set, int count, std::uint64_t seed, double scale) {
  if (count < 1) throw std::invalid_argument("sample_sigma: count must be >= 1");
  const int n = set.n(), m = set.m(), p = set.p();
  const Mat D2 = lower_block(set);
  const Mat H1 = set.H.topRows(set.q());

  SigmaSamples out;
  out.Z0 = H1 * pseudo_inverse(D2, kDataRankTol);
  out.Z0.bottomRows(m).setZero();
  out.Z0.block(n + p, n, m, m) = set.R_half;
  out.kernel = D2.cols() == 0 ? Mat::Identity(set.s(), set.s())
                              : null_space_basis(D2.transpose(), kDataRankTol);
  const Eigen::Index kdim = out.kernel.cols();
  out.identified = kdim == 0;
  const double sc = scale < 0.0 ? default_scale(out.Z0, kdim) : scale;

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  out.systems.push_back(unpack_z(set, out.Z0));
  for (int i = 1; i < count; ++i) {
    Mat Z = out.Z0;
    if (kdim > 0 && sc > 0.0) {
      Mat G(n + p, kdim);
      for (Eigen::Index r = 0; r < G.rows(); ++r)
        for (Eigen::Index c = 0; c < G.cols(); ++c) G(r, c) = nd(gen);
      Z.topRows(n + p) += sc * G * out.kernel.transpose();
    }
    out.systems.push_back(unpack_z(set, Z));
  }
  return out;
}

OutputSamples sample_output_maps(const ConsistencySet& set, int count, std::uint64_t seed,
                                 double scale) {
  if (count < 1) throw std::invalid_argument("sample_output_maps: count must be >= 1");
  const int n = set.n(), m = set.m(), p = set.p();
  const Mat lower = -set.H_y.bottomRows(set.H_y.rows() - p);
  const Mat Y = set.H_y.topRows(p);
  const Mat Zy0 = Y * pseudo_inverse(lower, kDataRankTol);
  const Mat K = lower.cols() == 0 ? Mat::Identity(lower.rows(), lower.rows())
                                  : null_space_basis(lower.transpose(), kDataRankTol);
  const double sc = scale < 0.0 ? default_scale(Zy0, K.cols()) : scale;

  OutputSamples out;
  out.identified = K.cols() == 0;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    Mat Zy = Zy0;
    if (i > 0 && K.cols() > 0 && sc > 0.0) {
      Mat G(p, K.cols());
      for (Eigen::Index r = 0; r < G.rows(); ++r)
        for (Eigen::Index c = 0; c < G.cols(); ++c) G(r, c) = nd(gen);
      Zy += sc * G * K.transpose();
    }
    out.C.push_back(Zy.leftCols(n));
    out.D.push_back(set.mode() == DataMode::state ? Mat(Zy.rightCols(m)) : Mat(Mat::Zero(p, m)));
  }
  return out;
}

Mat data_subspace_basis(const DataMatrices& d, double tol) {
  if (d.columns() == 0) return Mat(d.state_dim(), 0);
  return range_basis(d.X, tol);
}

LtiSystem extended_realization(const LtiSystem& sys) {
  sys.validate();
  if (sys.D.norm() != 0.0) throw std::invalid_argument("extended realization requires D = 0");
  const int n = sys.n(), m = sys.m(), p = sys.p();
  const int nh = n * (m + p);
  // Window relations: y(k−n+i) = C Aⁱ x(k−n) + Σ_{j<i} C A^{i−1−j} B u(k−n+j).
  Mat O(n * p, n), Tu = Mat::Zero(n * p, n * m);
  std::vector<Mat> Apow(static_cast<size_t>(n + 1));
  Apow[0] = Mat::Identity(n, n);
  for (int i = 1; i <= n; ++i) Apow[static_cast<size_t>(i)] = sys.A * Apow[static_cast<size_t>(i - 1)];
  for (int i = 0; i < n; ++i) {
    O.block(i * p, 0, p, n) = sys.C * Apow[static_cast<size_t>(i)];
    for (int j = 0; j < i; ++j)
      Tu.block(i * p, j * m, p, m) = sys.C * Apow[static_cast<size_t>(i - 1 - j)] * sys.B;
  }
  if (numerical_rank(O, 1e-10) < n) throw std::invalid_argument("plant is not observable");
  const Mat Opinv = pseudo_inverse(O);
  // y(k) = C Aⁿ x(k−n) + Σ_j C A^{n−1−j} B u(k−n+j).
  Mat Gu(p, n * m);
  for (int j = 0; j < n; ++j) Gu.block(0, j * m, p, m) = sys.C * Apow[static_cast<size_t>(n - 1 - j)] * sys.B;
  const Mat CAn = sys.C * Apow[static_cast<size_t>(n)];
  Mat Ch(p, nh);
  Ch << Gu - CAn * Opinv * Tu, CAn * Opinv;

  LtiSystem out;
  out.name = sys.name + "-extended";
  out.A = Mat::Zero(nh, nh);
  out.B = Mat::Zero(nh, m);
  const int nm = n * m;
  for (int i = 0; i + 1 < n; ++i) {
    out.A.block(i * m, (i + 1) * m, m, m).setIdentity();
    out.A.block(nm + i * p, nm + (i + 1) * p, p, p).setIdentity();
  }
  out.B.block((n - 1) * m, 0, m, m).setIdentity();
  out.A.block(nm + (n - 1) * p, 0, p, nh) = Ch;
  out.C = Ch;
  out.D = Mat::Zero(p, m);
  return out;
}

std::string data_matrices_json(const DataMatrices& d) {
  jsonio::json j;
  j["mode"] = to_string(d.mode);
  j["window"] = d.window;
  j["U"] = jsonio::to_json(d.U);
  j["Y"] = jsonio::to_json(d.Y);
  j["X"] = jsonio::to_json(d.X);
  j["X_plus"] = jsonio::to_json(d.X_plus);
  return j.dump(2);
}

std::string consistency_set_json(const ConsistencySet& set) {
  auto j = jsonio::json::parse(data_matrices_json(set.data));
  j["Q"] = jsonio::to_json(set.Q);
  j["R"] = jsonio::to_json(set.R);
  j["H"] = jsonio::to_json(set.H);
  j["N"] = jsonio::to_json(set.N);
  j["H_y"] = jsonio::to_json(set.H_y);
  j["N_y"] = jsonio::to_json(set.N_y);
  return j.dump(2);
}

ConsistencySet consistency_set_from_json(const std::string& text) {
  const auto j = jsonio::json::parse(text);
  DataMatrices d;
  d.mode = data_mode_from_string(j.at("mode").get<std::string>());
  d.window = j.value("window", 0);
  d.U = jsonio::mat_from_json(j.at("U"));
  d.Y = jsonio::mat_from_json(j.at("Y"));
  d.X = jsonio::mat_from_json(j.at("X"));
  d.X_plus = jsonio::mat_from_json(j.at("X_plus"));
  auto set = build_consistency_set(d, jsonio::mat_from_json(j.at("Q")), jsonio::mat_from_json(j.at("R")));
  // Stored Gram matrices are taken verbatim so corrupted files are detected downstream.
  if (j.contains("N")) set.N = jsonio::mat_from_json(j["N"]);
  if (j.contains("N_y")) set.N_y = jsonio::mat_from_json(j["N_y"]);
  if (set.N.rows() != set.H.rows() || set.N.cols() != set.H.rows() ||
      set.N_y.rows() != set.H_y.rows() || set.N_y.cols() != set.H_y.rows())
    throw std::invalid_argument("stored Gram matrices have the wrong shape");
  return set;
}

}  // namespace rdpc
