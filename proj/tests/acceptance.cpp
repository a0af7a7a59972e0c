// Acceptance run: one PASS/FAIL line per criterion A1–A9.
//
// Exit status is 0 unless `--strict` is given, in which case any failing
// criterion makes it 1. The lines themselves are the verdict.

#include "rdpc/controller.hpp"
#include "rdpc/experiment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#ifndef RDPC_DEFAULT_CONFIG_DIR
#define RDPC_DEFAULT_CONFIG_DIR "configs"
#endif

using namespace rdpc;

namespace {

constexpr double kReferenceJBar = 3.9123;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Mat randn(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

Mat rand_sym(int d, std::mt19937_64& rng) {
  const Mat a = randn(d, d, rng);
  return 0.5 * (a + a.transpose());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- the batch-reactor run shared by A1–A5 and A7 ---------------------------

struct ReactorRun {
  ExperimentConfig cfg;
  CollectedData data;
  ClosedLoopRecord record;
  ConsistencySet set;
  TheoremReport report;
  double seconds = 0.0;
};

std::string config_dir() {
  const char* d = std::getenv("RDPC_CONFIG_DIR");
  return d ? d : RDPC_DEFAULT_CONFIG_DIR;
}

/// Same path as `rdpc reproduce-batch-reactor`, without the file outputs.
ReactorRun reproduce_batch_reactor() {
  ReactorRun r;
  const auto t0 = std::chrono::steady_clock::now();
  r.cfg = load_experiment_config(config_dir() + "/batch-reactor.config");
  r.data = collect_data(r.cfg);
  r.record = run_controller(r.cfg.system, r.data.trajectory, r.cfg.controller);
  r.set = record_consistency_set(r.data.trajectory, r.cfg.controller, r.cfg.system.n());
  r.report = monitor_theorems(r.record, r.set, r.cfg.monitor, &r.cfg.system);
  r.seconds = seconds_since(t0);
  return r;
}

std::vector<const StepRecord*> controller_steps(const ClosedLoopRecord& rec) {
  std::vector<const StepRecord*> out;
  for (const StepRecord& s : rec.steps)
    if (s.k >= rec.first_controller_step && s.status != StepStatus::bootstrap) out.push_back(&s);
  return out;
}

/// Random 3-state, 2-input plant with short (T = n+1) state data.
struct StateInstance {
  LtiSystem sys;
  Trajectory traj;
  ConsistencySet set;
  Vec x0;
};

StateInstance state_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  StateInstance c;
  c.sys = LtiSystem{randn(3, 3, rng) * 0.6, randn(3, 2, rng), randn(2, 3, rng), Mat::Zero(2, 2), "random"};
  c.traj = collect(c.sys, randn(3, 1, rng), uniform_excitation(2, 4, -1, 1, seed), true);
  c.set = build_consistency_set(build_data_matrices(c.traj, DataMode::state), Mat::Identity(2, 2),
                                Mat::Identity(2, 2));
  c.x0 = randn(3, 1, rng);
  return c;
}

ControllerConfig state_controller(const StateInstance& c, int run_length) {
  ControllerConfig cfg;
  cfg.variant = ProblemVariant::unconstrained_state;
  cfg.Q = Mat::Identity(2, 2);
  cfg.R = Mat::Identity(2, 2);
  cfg.run_length = run_length;
  cfg.x0 = c.x0;
  cfg.fallback = FallbackPolicy::abort;
  return cfg;
}

// ---- criteria ----------------------------------------------------------------

Verdict a1(const ReactorRun& r) {
  const auto steps = controller_steps(r.record);
  int optimal = 0, loosened = 0;
  for (const StepRecord* s : steps) {
    if (s->status == StepStatus::solved && s->solver_status == "optimal") ++optimal;
    if (s->retried) ++loosened;
  }
  const int first_k = steps.empty() ? -1 : steps.front()->k, last_k = steps.empty() ? -1 : steps.back()->k;
  const double y_final = r.report.final_output_norm;
  const double rel = std::abs(r.record.j_bar - kReferenceJBar) / kReferenceJBar;
  const bool steps_ok = steps.size() == 47 && first_k == 4 && last_k == 50 && optimal == 47;
  const bool constraints_ok = !r.record.first_constraint_violation && r.report.constraints.pass;
  const bool band_ok = rel <= 0.15;
  const bool budget_ok = r.seconds <= 600.0;
  Verdict v;
  v.pass = steps_ok && constraints_ok && y_final <= 1e-2 && band_ok && budget_ok;
  v.detail = std::to_string(steps.size()) + " steps k=" + std::to_string(first_k) + ".." + std::to_string(last_k) +
             ", " + std::to_string(optimal) + " optimal (" + std::to_string(loosened) +
             " at the 1e-6 retry tolerance), constraint violations " + (constraints_ok ? "0" : "present") +
             ", ||y(50)|| = " + fmt(y_final) + ", J_bar = " + fmt(r.record.j_bar) + " (" + fmt(100 * rel) +
             "% from " + fmt(kReferenceJBar) + (band_ok ? ", in band" : ", OUTSIDE the ±15% band") + "), data seed " +
             std::to_string(r.data.seed) + ", " + fmt(r.seconds) + " s";
  return v;
}

Verdict a2(const ReactorRun& r, std::vector<ConsistencySet>& sets) {
  int runs = 0, premise = 0, failures = 0;
  std::string where, vacuous;
  auto account = [&](const ClosedLoopRecord& rec, const std::string& name) {
    ++runs;
    if (rec.k0_infeasible) {
      const StepRecord* first = nullptr;
      for (const StepRecord& s : rec.steps)
        if (s.k == rec.first_controller_step) first = &s;
      vacuous += " " + name + " [" + (first ? first->solver_status : std::string("no step")) + "]";
      return;
    }
    ++premise;
    if (rec.first_infeasibility || rec.aborted) {
      ++failures;
      where += " " + name + "@k=" + std::to_string(rec.first_infeasibility.value_or(-1));
    }
  };
  // The A1 run uses the reuse-previous-gain fallback; recursive feasibility
  // means it was never exercised.
  account(r.record, "batch-reactor");
  for (std::uint64_t seed = 101; seed <= 110; ++seed) {
    const StateInstance c = state_instance(seed);
    sets.push_back(c.set);
    account(run_algorithm1(c.sys, c.traj, state_controller(c, 30)), "random#" + std::to_string(seed));
  }
  Verdict v;
  // A run whose first step is infeasible does not meet the premise and is skipped.
  v.pass = failures == 0 && premise > 0;
  v.detail = std::to_string(runs) + " runs, " + std::to_string(premise) + " with a feasible first step" +
             (vacuous.empty() ? "" : " (first step not solved:" + vacuous + ")") + ", " + std::to_string(failures) +
             " later infeasibilities" + where;
  return v;
}

Verdict a3(const ReactorRun& r) {
  const auto steps = controller_steps(r.record);
  if (steps.empty()) return {false, "no controller steps"};
  Mat V = data_subspace_basis(r.set.data);
  const SigmaSamples sig = sample_sigma(r.set, 100, 3);
  double rho4 = 0.0, rho_last = 0.0, memb = 0.0;
  for (const LtiSystem& member : sig.systems) {
    memb = std::max(memb, membership_residual(r.set, member));
    rho4 = std::max(rho4, spectral_radius(closed_loop_on_data(member, steps.front()->F, V)));
    rho_last = std::max(rho_last, spectral_radius(closed_loop_on_data(member, steps.back()->F, V)));
  }
  Verdict v;
  v.pass = rho4 < 1.0 && rho_last < 1.0 && memb <= 1e-8 && sig.systems.size() == 100;
  v.detail = std::to_string(sig.systems.size()) + " samples, max rho at k=" + std::to_string(steps.front()->k) +
             ": " + fmt(rho4) + ", at k=" + std::to_string(steps.back()->k) + ": " + fmt(rho_last) +
             ", max membership residual " + fmt(memb);
  return v;
}

Verdict a4(const ReactorRun& r) {
  const auto steps = controller_steps(r.record);
  if (steps.size() < 5) return {false, "fewer than 5 controller steps"};
  std::mt19937_64 rng(4);
  std::vector<std::size_t> idx(steps.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(5);
  std::sort(idx.begin(), idx.end());
  Verdict v{true, ""};
  for (std::size_t i : idx) {
    const StepRecord& s = *steps[i];
    SynthesisResult res;
    res.status = SynthesisStatus::solved;
    res.F = s.F;
    res.bound = s.bound;
    const CertificationReport c = certify_upper_bound(res, r.set, s.state, 500, 100, 40 + i);
    const bool ok = c.max_cost <= c.bound * (1.0 + 1e-6) && c.unstable == 0;
    v.pass = v.pass && ok;
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("k=") + std::to_string(s.k) + " J_max/bound = " +
                fmt(c.bound > 0 ? c.max_cost / c.bound : 0.0) + (ok ? "" : " FAIL");
  }
  return v;
}

Verdict a5(const std::vector<ConsistencySet>& sets) {
  int checked = 0, failed = 0;
  double worst_schur = 0.0, worst_kernel = 0.0, worst_eig = 0.0;
  auto check = [&](const Mat& N, int q, int s) {
    const FinslerReport f = finsler_preconditions(SymMatrix::symmetrized(N), q, s);
    ++checked;
    if (!f.pass()) ++failed;
    const double nrm = std::max(f.norm, 1e-300);
    worst_schur = std::max(worst_schur, f.schur_residual / nrm);
    worst_kernel = std::max(worst_kernel, f.kernel_residual / nrm);
    worst_eig = std::min(worst_eig, f.n22_min_eig / nrm);
  };
  for (const ConsistencySet& set : sets) {
    check(set.N, set.q(), set.s());
    check(set.N_y, set.p(), static_cast<int>(set.N_y.rows()) - set.p());
  }
  Verdict v;
  v.pass = failed == 0 && checked > 0;
  v.detail = std::to_string(checked) + " Gram matrices from " + std::to_string(sets.size()) +
             " sets, worst relative lambda_min(N22) " + fmt(worst_eig) + ", Schur residual " + fmt(worst_schur) +
             ", kernel residual " + fmt(worst_kernel);
  return v;
}

Verdict a6() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> shift(0.0, 4.0), scale(0.0, 1.5);
  int disagreements = 0, negative = 0;
  for (int t = 0; t < 1000; ++t) {
    const int dq = dim(rng), dp = dim(rng);
    // Shifted random blocks cover definite, indefinite and borderline cases.
    const Mat q = rand_sym(dq, rng) - shift(rng) * Mat::Identity(dq, dq);
    const Mat p = rand_sym(dp, rng) - shift(rng) * Mat::Identity(dp, dp);
    const Mat r = scale(rng) * randn(dq, dp, rng);
    const SchurCheck c = schur_equivalence_check(SymMatrix::symmetrized(q), r, SymMatrix::symmetrized(p));
    disagreements += !c.agree();
    negative += c.block;
  }
  return {disagreements == 0, "1000 triples, " + std::to_string(negative) + " negative definite, " +
                                  std::to_string(disagreements) + " disagreements"};
}

Verdict a7(const ReactorRun& r, std::vector<ConsistencySet>& sets) {
  const NormConstraints& nc = *r.record.constraints;
  double u_worst = 0.0, y_worst = 0.0;
  for (const StepRecord* s : controller_steps(r.record)) {
    u_worst = std::max(u_worst, s->input.norm() / nc.u_max);
    y_worst = std::max(y_worst, s->output.norm() / nc.y_max);
  }

  // Algorithm 2 with an input bound at half of the unconstrained peak.
  const StateInstance c = state_instance(2);
  ControllerConfig free_cfg = state_controller(c, 20);
  double free_peak = 0.0;
  for (const StepRecord& s : run_algorithm1(c.sys, c.traj, free_cfg).steps) free_peak = std::max(free_peak, s.input.norm());
  ControllerConfig tight = free_cfg;
  tight.variant = ProblemVariant::constrained_state;
  tight.constraints = NormConstraints{0.5 * free_peak, 1e3};
  const ClosedLoopRecord alg2 = run_algorithm2(c.sys, c.traj, tight);
  sets.push_back(record_consistency_set(c.traj, tight, 3));
  double u2_worst = 0.0, y2_worst = 0.0;
  for (const StepRecord& s : alg2.steps) {
    u2_worst = std::max(u2_worst, s.input.norm() / tight.constraints->u_max);
    y2_worst = std::max(y2_worst, s.output.norm() / tight.constraints->y_max);
  }

  // Predicted outputs Ĉ x̂(k+i|k) under the frozen gain for sampled members,
  // propagated on the data subspace every member agrees on.
  const Mat V = data_subspace_basis(r.set.data);
  const SigmaSamples sig = sample_sigma(r.set, 50, 7);
  const OutputSamples outs = sample_output_maps(r.set, 50, 8);
  double pred_worst = 0.0;
  int predictions = 0;
  for (const StepRecord* s : controller_steps(r.record)) {
    for (std::size_t j = 0; j < sig.systems.size(); ++j) {
      const Mat Acl = closed_loop_on_data(sig.systems[j], s->F, V);
      const Mat CV = outs.C[j] * V;
      Vec z = V.transpose() * s->state;
      for (int i = 0; i <= 20; ++i) {
        pred_worst = std::max(pred_worst, (CV * z).norm() / nc.y_max);
        ++predictions;
        z = Acl * z;
      }
    }
  }

  const double tol = 1.0 + 1e-6;
  Verdict v;
  v.pass = u_worst <= tol && y_worst <= tol && !alg2.k0_infeasible && u2_worst <= tol && y2_worst <= tol &&
           pred_worst <= tol;
  v.detail = "reactor max ||u||/u_max " + fmt(u_worst) + ", ||y||/y_max " + fmt(y_worst) +
             "; Algorithm 2 (u_max = " + fmt(tight.constraints->u_max) + ") max ||u||/u_max " + fmt(u2_worst) +
             (alg2.k0_infeasible ? " (first step infeasible)" : "") + "; " + std::to_string(predictions) +
             " predicted outputs, max ||Cx||/y_max " + fmt(pred_worst);
  return v;
}

Verdict a8() {
  SolveOptions strict;
  strict.feasibility_tol = strict.gap_tol = 1e-10;
  strict.retry_tol = 1e-8;
  SynthesisOptions no_io;
  no_io.input_constraint = false;
  no_io.output_constraint = false;
  Verdict v{true, ""};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const StateInstance c = state_instance(seed);
    const SynthesisResult a = synthesize(assemble_unconstrained(c.set, c.x0), strict);
    const SynthesisResult b = synthesize(assemble_constrained(c.set, c.x0, NormConstraints{1.0, 1.0}, no_io), strict);
    std::string item = "#" + std::to_string(seed) + " ";
    if (a.status != SynthesisStatus::solved || b.status != SynthesisStatus::solved) {
      v.pass = false;
      item += "not solved";
    } else {
      const double d_eta = std::abs(a.eta - b.eta) / a.eta;
      const double d_f = (a.F - b.F).norm() / std::max(a.F.norm(), 1e-300);
      const bool ok = d_eta <= 1e-5 && d_f <= 1e-5;
      v.pass = v.pass && ok;
      item += "d_eta " + fmt(d_eta) + " d_F " + fmt(d_f) + (ok ? "" : " FAIL");
    }
    v.detail += (v.detail.empty() ? "" : "; ") + item;
  }
  return v;
}

/// Hand-coded synthesis block matrix, block sizes (n, m+p, n, m, n).
Mat golden_M(const Mat& G, const Mat& S, int p, double c) {
  const int n = static_cast<int>(G.rows()), m = static_cast<int>(S.rows());
  const int o2 = n, o3 = n + m + p, o4 = o3 + n, o5 = o4 + m, N = o5 + n;
  Mat M = Mat::Zero(N, N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      M(i, j) = -G(i, j);
      M(o3 + i, o3 + j) = G(i, j);
      M(o5 + i, o5 + j) = -G(i, j);
    }
  for (int i = 0; i < m + p; ++i) M(o2 + i, o2 + i) = -c;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      M(o3 + j, o4 + i) = S(i, j);
      M(o4 + i, o3 + j) = S(i, j);
      M(o4 + i, o5 + j) = S(i, j);
      M(o5 + j, o4 + i) = S(i, j);
    }
  return M;
}

/// Hand-coded output block matrix, block sizes (p, n, m, n).
Mat golden_My(const Mat& G, const Mat& S, int p, double y) {
  const int n = static_cast<int>(G.rows()), m = static_cast<int>(S.rows());
  const int o2 = p, o3 = p + n, o4 = o3 + m, N = o4 + n;
  Mat M = Mat::Zero(N, N);
  for (int i = 0; i < p; ++i) M(i, i) = -y * y;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      M(o2 + i, o2 + j) = G(i, j);
      M(o4 + i, o4 + j) = -G(i, j);
    }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      M(o2 + j, o3 + i) = S(i, j);
      M(o3 + i, o2 + j) = S(i, j);
      M(o3 + i, o4 + j) = S(i, j);
      M(o4 + j, o3 + i) = S(i, j);
    }
  return M;
}

Mat golden_pad(const Mat& N, int n) {
  Mat out = Mat::Zero(N.rows() + n, N.cols() + n);
  for (Eigen::Index i = 0; i < N.rows(); ++i)
    for (Eigen::Index j = 0; j < N.cols(); ++j) out(i, j) = N(i, j);
  return out;
}

Verdict a9() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.1, 5.0);
  double worst = 0.0;
  int cases = 0;
  const int shapes[][3] = {{1, 1, 1}, {3, 2, 2}, {4, 2, 2}, {16, 2, 2}, {5, 1, 3}};
  for (const auto& sh : shapes) {
    const int n = sh[0], m = sh[1], p = sh[2];
    for (int t = 0; t < 20; ++t) {
      const Mat A = randn(n, n, rng);
      const Mat G = A * A.transpose() + Mat::Identity(n, n);
      const Mat S = randn(m, n, rng);
      const double eta = unit(rng), y_max = unit(rng);
      const Mat H = randn(2 * n + m + p, 3, rng), Hy = randn(p + n + m, 3, rng);
      const Mat N = H * H.transpose(), Ny = Hy * Hy.transpose();
      worst = std::max({worst, (calM(G, S, p, 1.0) - golden_M(G, S, p, 1.0)).cwiseAbs().maxCoeff(),
                        (calM(G, S, p, eta) - golden_M(G, S, p, eta)).cwiseAbs().maxCoeff(),
                        (calMy(G, S, p, y_max) - golden_My(G, S, p, y_max)).cwiseAbs().maxCoeff(),
                        (calN(N, n) - golden_pad(N, n)).cwiseAbs().maxCoeff(),
                        (calNy(Ny, n) - golden_pad(Ny, n)).cwiseAbs().maxCoeff()});
      ++cases;
    }
  }
  return {worst <= 1e-12, std::to_string(cases) + " random assignments x 5 blocks, max entry difference " + fmt(worst)};
}

void report(const char* id, const Verdict& v, int& passed) {
  passed += v.pass;
  std::cout << id << " " << (v.pass ? "PASS" : "FAIL") << " — " << v.detail << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  int passed = 0;
  try {
    const ReactorRun run = reproduce_batch_reactor();
    std::vector<ConsistencySet> sets{run.set};
    report("A1", a1(run), passed);
    report("A2", a2(run, sets), passed);
    report("A3", a3(run), passed);
    report("A4", a4(run), passed);
    Verdict v7 = a7(run, sets);  // adds the Algorithm 2 data set checked by A5
    report("A5", a5(sets), passed);
    report("A6", a6(), passed);
    report("A7", v7, passed);
    report("A8", a8(), passed);
    report("A9", a9(), passed);
  } catch (const std::exception& e) {
    std::cout << "acceptance run aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << "acceptance: " << passed << "/9 criteria pass" << std::endl;
  return strict && passed != 9 ? 1 : 0;
}
