#include "rdpc/controller.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rdpc {

using jsonio::json;

std::string to_string(FallbackPolicy f) {
  return f == FallbackPolicy::abort ? "abort" : "reuse-previous-gain";
}

FallbackPolicy fallback_policy_from_string(const std::string& s) {
  if (s == "abort") return FallbackPolicy::abort;
  if (s == "reuse-previous-gain") return FallbackPolicy::reuse_previous_gain;
  throw std::invalid_argument("unknown fallback policy '" + s + "'");
}

std::string to_string(StepStatus s) {
  switch (s) {
    case StepStatus::solved: return "solved";
    case StepStatus::fallback: return "fallback";
    case StepStatus::bootstrap: return "bootstrap";
    case StepStatus::aborted: return "aborted";
  }
  return "unknown";
}

void ControllerConfig::validate() const {
  if (run_length < 1) throw std::invalid_argument("run length must be at least 1");
  if (Q.rows() == 0 || Q.rows() != Q.cols()) throw std::invalid_argument("Q must be a non-empty square matrix");
  if (R.rows() == 0 || R.rows() != R.cols()) throw std::invalid_argument("R must be a non-empty square matrix");
  if (certification_horizon < 0) throw std::invalid_argument("certification horizon must be ≥ 0 (0 = infinite)");
  if (variant != ProblemVariant::unconstrained_state) {
    if (!constraints) throw std::invalid_argument("the constrained variants need u_max and y_max");
    constraints->validate();
  }
}

namespace {

DataMode mode_of(ProblemVariant v) {
  return v == ProblemVariant::constrained_io ? DataMode::output : DataMode::state;
}

void check_inputs(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg) {
  sys.validate();
  cfg.validate();
  if (cfg.x0.size() != sys.n())
    throw std::invalid_argument("initial state has dimension " + std::to_string(cfg.x0.size()) +
                                ", the plant has " + std::to_string(sys.n()));
  if (cfg.Q.rows() != sys.p() || cfg.R.rows() != sys.m())
    throw std::invalid_argument("Q must be p×p and R m×m");
  if (traj.length() < 1) throw std::invalid_argument("empty trajectory");
  if (static_cast<int>(traj.outputs.size()) != traj.length())
    throw std::invalid_argument("the trajectory has no recorded outputs");
  if (mode_of(cfg.variant) == DataMode::state) {
    if (!traj.has_states()) throw std::invalid_argument("state-feedback synthesis needs recorded states");
  } else {
    if (sys.D.norm() != 0.0) throw std::invalid_argument("output feedback requires a plant with D = 0");
    if (traj.length() <= sys.n())
      throw std::invalid_argument("input-output data needs more than n samples");
  }
}

SynthesisProblem assemble(const ConsistencySet& set, const Vec& state, const ControllerConfig& cfg) {
  switch (cfg.variant) {
    case ProblemVariant::unconstrained_state: return assemble_unconstrained(set, state, cfg.synthesis);
    case ProblemVariant::constrained_state:
      return assemble_constrained(set, state, *cfg.constraints, cfg.synthesis);
    case ProblemVariant::constrained_io:
      return assemble_constrained_io(set, state, *cfg.constraints, cfg.synthesis);
  }
  throw std::logic_error("unknown problem variant");
}

bool violates(const NormConstraints& c, const Vec& u, const Vec& y) {
  // Relative slack of the solver's loosest accepted tolerance.
  constexpr double slack = 1e-6;
  return u.norm() > c.u_max * (1.0 + slack) || y.norm() > c.y_max * (1.0 + slack);
}

ClosedLoopRecord run_loop(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg) {
  check_inputs(sys, traj, cfg);
  const DataMode mode = mode_of(cfg.variant);
  const int n = sys.n();
  const ConsistencySet set = record_consistency_set(traj, cfg, n);

  ClosedLoopRecord rec;
  rec.variant = cfg.variant;
  rec.mode = mode;
  rec.system_name = sys.name;
  rec.Q = cfg.Q;
  rec.R = cfg.R;
  rec.constraints = cfg.constraints;
  const int k0 = mode == DataMode::output ? n : 0;
  rec.first_controller_step = k0;

  Vec x = cfg.x0;
  std::vector<Vec> U, Y;
  auto stage = [&](const Vec& u, const Vec& y) { return y.dot(cfg.Q * y) + u.dot(cfg.R * u); };

  // Populate the first window with the tail of the recorded excitation.
  for (int k = 0; k < k0; ++k) {
    StepRecord s;
    s.k = k;
    s.status = StepStatus::bootstrap;
    s.plant_state = x;
    s.state = x;
    s.input = traj.inputs[traj.length() - k0 + k];
    s.output = sys.C * x + sys.D * s.input;
    s.stage_cost = stage(s.input, s.output);
    U.push_back(s.input);
    Y.push_back(s.output);
    x = sys.A * x + sys.B * s.input;
    rec.steps.push_back(std::move(s));
  }

  Mat F_prev, P_prev;
  double eta_prev = 0.0;
  for (int i = 0; i < cfg.run_length; ++i) {
    const int k = k0 + i;
    StepRecord s;
    s.k = k;
    s.plant_state = x;
    if (mode == DataMode::state) {
      s.state = x;
    } else {
      const std::vector<Vec> uw(U.end() - n, U.end()), yw(Y.end() - n, Y.end());
      s.state = extend_state(uw, yw);
    }

    const SynthesisResult res = synthesize(assemble(set, s.state, cfg), cfg.solver);
    s.solver_status = to_string(res.solver.status);
    s.retried = res.solver.retried;
    s.iterations = res.solver.iterations;
    if (res.status == SynthesisStatus::solved) {
      s.status = StepStatus::solved;
      s.F = res.F;
      s.P = res.P;
      s.eta = res.eta;
      s.bound = res.bound;
    } else {
      const std::string why = "synthesis at k = " + std::to_string(k) + ": " + to_string(res.status) +
                              (res.message.empty() ? "" : " (" + res.message + ")");
      if (!rec.first_infeasibility) rec.first_infeasibility = k;
      if (i == 0 || cfg.fallback == FallbackPolicy::abort) {
        rec.k0_infeasible = i == 0;
        rec.aborted = true;
        rec.message = why;
        s.status = StepStatus::aborted;
        s.output = sys.C * x;
        rec.steps.push_back(std::move(s));
        break;
      }
      if (rec.message.empty()) rec.message = why;
      s.status = StepStatus::fallback;
      s.F = F_prev;
      s.P = P_prev;
      s.eta = eta_prev;
      s.bound = s.state.dot(P_prev * s.state);
    }
    s.input = s.F * s.state;
    s.output = sys.C * x + sys.D * s.input;
    s.stage_cost = stage(s.input, s.output);
    rec.j_bar += s.stage_cost;
    if (cfg.constraints && !rec.first_constraint_violation && violates(*cfg.constraints, s.input, s.output))
      rec.first_constraint_violation = k;
    F_prev = s.F;
    P_prev = s.P;
    eta_prev = s.eta;
    U.push_back(s.input);
    Y.push_back(s.output);
    x = sys.A * x + sys.B * s.input;
    rec.steps.push_back(std::move(s));
  }
  return rec;
}

json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ConsistencySet record_consistency_set(const Trajectory& traj, const ControllerConfig& cfg, int plant_order) {
  const DataMode mode = mode_of(cfg.variant);
  const DataMatrices d = build_data_matrices(traj, mode, mode == DataMode::output ? plant_order : 0);
  return build_consistency_set(d, cfg.Q, cfg.R);
}

ClosedLoopRecord run_algorithm1(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg) {
  if (cfg.variant != ProblemVariant::unconstrained_state)
    throw std::invalid_argument("Algorithm 1 uses the unconstrained-state problem");
  return run_loop(sys, traj, cfg);
}

ClosedLoopRecord run_algorithm2(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg) {
  if (cfg.variant != ProblemVariant::constrained_state)
    throw std::invalid_argument("Algorithm 2 uses the constrained-state problem");
  return run_loop(sys, traj, cfg);
}

ClosedLoopRecord run_algorithm3(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg) {
  if (cfg.variant != ProblemVariant::constrained_io)
    throw std::invalid_argument("Algorithm 3 uses the constrained-io problem");
  return run_loop(sys, traj, cfg);
}

ClosedLoopRecord run_controller(const LtiSystem& sys, const Trajectory& traj, const ControllerConfig& cfg) {
  return run_loop(sys, traj, cfg);
}

json ClosedLoopRecord::to_json() const {
  json j;
  j["variant"] = to_string(variant);
  j["mode"] = to_string(mode);
  j["system"] = system_name;
  j["Q"] = jsonio::to_json(Q);
  j["R"] = jsonio::to_json(R);
  if (constraints) j["constraints"] = {{"u_max", constraints->u_max}, {"y_max", constraints->y_max}};
  j["first_controller_step"] = first_controller_step;
  j["J_bar"] = j_bar;
  j["first_infeasibility"] = optional_int(first_infeasibility);
  j["first_constraint_violation"] = optional_int(first_constraint_violation);
  j["k0_infeasible"] = k0_infeasible;
  j["aborted"] = aborted;
  j["message"] = message;
  json steps_j = json::array();
  for (const StepRecord& s : steps) {
    json e;
    e["k"] = s.k;
    e["status"] = to_string(s.status);
    e["state"] = jsonio::to_json(s.state);
    e["plant_state"] = jsonio::to_json(s.plant_state);
    if (s.input.size()) e["input"] = jsonio::to_json(s.input);
    e["output"] = jsonio::to_json(s.output);
    if (s.status == StepStatus::solved || s.status == StepStatus::fallback) {
      e["eta"] = s.eta;
      e["bound"] = s.bound;
      e["gain"] = jsonio::to_json(s.F);
    }
    if (!s.solver_status.empty()) {
      e["solver_status"] = s.solver_status;
      e["retried"] = s.retried;
      e["iterations"] = s.iterations;
    }
    e["stage_cost"] = s.stage_cost;
    steps_j.push_back(std::move(e));
  }
  j["steps"] = std::move(steps_j);
  return j;
}

ClosedLoopRecord record_from_json(const json& j) {
  ClosedLoopRecord r;
  r.variant = problem_variant_from_string(j.at("variant").get<std::string>());
  r.mode = data_mode_from_string(j.at("mode").get<std::string>());
  r.system_name = j.value("system", "");
  r.Q = jsonio::mat_from_json(j.at("Q"));
  r.R = jsonio::mat_from_json(j.at("R"));
  if (j.contains("constraints"))
    r.constraints = NormConstraints{j["constraints"].at("u_max").get<double>(), j["constraints"].at("y_max").get<double>()};
  r.first_controller_step = j.value("first_controller_step", 0);
  r.j_bar = j.value("J_bar", 0.0);
  auto opt = [&](const char* key) -> std::optional<int> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<int>();
  };
  r.first_infeasibility = opt("first_infeasibility");
  r.first_constraint_violation = opt("first_constraint_violation");
  r.k0_infeasible = j.value("k0_infeasible", false);
  r.aborted = j.value("aborted", false);
  r.message = j.value("message", "");
  for (const json& e : j.at("steps")) {
    StepRecord s;
    s.k = e.at("k").get<int>();
    const std::string st = e.at("status").get<std::string>();
    s.status = st == "solved" ? StepStatus::solved
             : st == "fallback" ? StepStatus::fallback
             : st == "bootstrap" ? StepStatus::bootstrap
             : st == "aborted" ? StepStatus::aborted
             : throw std::invalid_argument("unknown step status '" + st + "'");
    s.state = jsonio::vec_from_json(e.at("state"));
    if (e.contains("plant_state")) s.plant_state = jsonio::vec_from_json(e["plant_state"]);
    if (e.contains("input")) s.input = jsonio::vec_from_json(e["input"]);
    s.output = jsonio::vec_from_json(e.at("output"));
    if (e.contains("gain")) {
      s.eta = e.at("eta").get<double>();
      s.bound = e.at("bound").get<double>();
      s.F = jsonio::mat_from_json(e["gain"]);
    }
    s.solver_status = e.value("solver_status", "");
    s.retried = e.value("retried", false);
    s.iterations = e.value("iterations", 0);
    s.stage_cost = e.value("stage_cost", 0.0);
    r.steps.push_back(std::move(s));
  }
  return r;
}

std::string ClosedLoopRecord::to_csv() const {
  std::ostringstream os;
  const int m = static_cast<int>(R.rows()), p = static_cast<int>(Q.rows());
  const int n = steps.empty() ? 0 : static_cast<int>(steps.front().plant_state.size());
  os << "k";
  for (int i = 0; i < m; ++i) os << ",u" << i + 1;
  for (int i = 0; i < p; ++i) os << ",y" << i + 1;
  for (int i = 0; i < n; ++i) os << ",x" << i + 1;
  os << ",eta,bound,status\n";
  for (const StepRecord& s : steps) {
    if (s.input.size() != m) continue;  // aborted step: no input was applied
    os << s.k;
    for (int i = 0; i < m; ++i) os << ',' << jsonio::num(s.input(i));
    for (int i = 0; i < p; ++i) os << ',' << jsonio::num(s.output(i));
    for (int i = 0; i < n; ++i) os << ',' << jsonio::num(s.plant_state(i));
    const bool has_bound = s.status == StepStatus::solved || s.status == StepStatus::fallback;
    os << ',' << (has_bound ? jsonio::num(s.eta) : "") << ',' << (has_bound ? jsonio::num(s.bound) : "") << ','
       << to_string(s.status) << "\n";
  }
  return os.str();
}

std::string ClosedLoopRecord::plot_data_csv() const {
  std::ostringstream os;
  os << "series,k,value\n";
  for (int i = 0; i < R.rows(); ++i)
    for (const StepRecord& s : steps)
      if (s.input.size() == R.rows()) os << 'u' << i + 1 << ',' << s.k << ',' << jsonio::num(s.input(i)) << "\n";
  for (int i = 0; i < Q.rows(); ++i)
    for (const StepRecord& s : steps)
      if (s.output.size() == Q.rows()) os << 'y' << i + 1 << ',' << s.k << ',' << jsonio::num(s.output(i)) << "\n";
  return os.str();
}

// ---- theorem monitors -------------------------------------------------------

bool TheoremReport::pass() const {
  return bound_decrease.pass && stability.pass && recursive_feasibility.pass && constraints.pass &&
         (!bound_validity || bound_validity->pass);
}

namespace {

json check_json(const MonitorCheck& c) {
  return {{"name", c.name},       {"pass", c.pass},     {"vacuous", c.vacuous},
          {"margin", c.margin},   {"step", optional_int(c.step)}, {"detail", c.detail}};
}

bool has_gain(const StepRecord& s) { return s.status == StepStatus::solved || s.status == StepStatus::fallback; }

/// Accumulated stage cost of the frozen-gain closed loop; horizon 0 runs
/// until the state has decayed to rounding level.
double frozen_gain_cost(const Mat& Acl, const Mat& Ccl, const Mat& Ru, Vec x, int horizon) {
  const int limit = horizon > 0 ? horizon : 1000000;
  const double floor = 1e-16 * std::max(x.norm(), std::numeric_limits<double>::min());
  double J = 0.0;
  for (int i = 0; i < limit; ++i) {
    J += (Ccl * x).squaredNorm() + (Ru * x).squaredNorm();
    x = Acl * x;
    if (!std::isfinite(J) || !x.allFinite()) return std::numeric_limits<double>::infinity();
    if (horizon == 0 && x.norm() <= floor) break;
  }
  return J;
}

}  // namespace

json TheoremReport::to_json() const {
  json j;
  j["pass"] = pass();
  j["bound_decrease"] = check_json(bound_decrease);
  j["stability"] = check_json(stability);
  j["recursive_feasibility"] = check_json(recursive_feasibility);
  j["constraints"] = check_json(constraints);
  if (bound_validity) j["bound_validity"] = check_json(*bound_validity);
  j["final_output_norm"] = final_output_norm;
  return j;
}

TheoremReport monitor_theorems(const ClosedLoopRecord& record, const ConsistencySet& set,
                               const MonitorOptions& opts, const LtiSystem* plant) {
  TheoremReport rep;
  const auto& steps = record.steps;
  if (!steps.empty()) rep.final_output_norm = steps.back().output.norm();

  // (a) strict decrease of the certified bound along consecutive solved steps.
  {
    MonitorCheck& c = rep.bound_decrease;
    c.name = "bound-decrease";
    c.margin = std::numeric_limits<double>::infinity();
    int pairs = 0;
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
      const StepRecord &a = steps[i], &b = steps[i + 1];
      if (a.status != StepStatus::solved || b.status != StepStatus::solved) continue;
      if (a.state.norm() == 0.0 || a.bound <= 0.0) continue;
      ++pairs;
      const double rel = (a.bound - b.bound) / a.bound;
      c.margin = std::min(c.margin, rel);
      if (!(b.bound < a.bound * (1.0 + opts.decrease_slack)) && c.pass) {
        c.pass = false;
        c.step = b.k;
        c.detail = "bound rose from " + jsonio::num(a.bound) + " to " + jsonio::num(b.bound);
      }
    }
    if (pairs == 0) {
      c.vacuous = true;
      c.margin = 0.0;
      c.detail = "no consecutive solved steps with nonzero state";
    } else if (c.pass) {
      c.detail = std::to_string(pairs) + " consecutive pairs; margin is the smallest relative decrease";
    }
  }

  // (b) robust stability of the last gain over sampled members of the set.
  {
    MonitorCheck& c = rep.stability;
    c.name = "stability";
    const StepRecord* last = nullptr;
    for (const StepRecord& s : steps)
      if (has_gain(s)) last = &s;
    if (!last) {
      c.vacuous = true;
      c.detail = "no gain was synthesized";
    } else {
      Mat V = data_subspace_basis(set.data);
      if (V.cols() == 0) V = Mat::Identity(set.n(), set.n());
      const SigmaSamples sig = sample_sigma(set, std::max(opts.samples, 1), opts.seed);
      double rho_max = 0.0, memb = 0.0;
      for (const LtiSystem& member : sig.systems) {
        memb = std::max(memb, membership_residual(set, member));
        rho_max = std::max(rho_max, spectral_radius(closed_loop_on_data(member, last->F, V)));
      }
      c.margin = 1.0 - rho_max;
      c.pass = rho_max < 1.0 && memb <= 1e-8;
      c.step = last->k;
      c.detail = std::to_string(sig.systems.size()) + " samples, max spectral radius " + jsonio::num(rho_max) +
                 ", max membership residual " + jsonio::num(memb);
    }
  }

  // (c) recursive feasibility.
  {
    MonitorCheck& c = rep.recursive_feasibility;
    c.name = "recursive-feasibility";
    if (record.k0_infeasible) {
      c.vacuous = true;
      c.detail = "first synthesis infeasible; the premise does not hold";
    } else if (record.first_infeasibility) {
      c.pass = false;
      c.step = record.first_infeasibility;
      c.detail = record.message;
    } else {
      c.detail = "every synthesis after the first solved";
    }
  }

  // (d) realized input and output norms.
  {
    MonitorCheck& c = rep.constraints;
    c.name = "constraints";
    if (!record.constraints) {
      c.vacuous = true;
      c.detail = "no constraints configured";
    } else {
      const NormConstraints& nc = *record.constraints;
      c.margin = std::numeric_limits<double>::infinity();
      for (const StepRecord& s : steps) {
        if (s.k < record.first_controller_step || s.input.size() == 0) continue;
        c.margin = std::min({c.margin, nc.u_max - s.input.norm(), nc.y_max - s.output.norm()});
      }
      if (!std::isfinite(c.margin)) c.margin = 0.0;
      if (record.first_constraint_violation) {
        c.pass = false;
        c.step = record.first_constraint_violation;
        c.detail = "constraint violated at k = " + std::to_string(*record.first_constraint_violation);
      } else {
        c.detail = "margin is min(u_max − ‖u‖, y_max − ‖y‖) over controller steps";
      }
    }
  }

  // (e) the bound of every solved step against the realized frozen-gain cost.
  if (plant) {
    MonitorCheck c;
    c.name = "bound-validity";
    const LtiSystem sys = record.mode == DataMode::output ? extended_realization(*plant) : *plant;
    const Mat Qh = sqrt_psd(record.Q), Rh = sqrt_psd(record.R);
    c.margin = std::numeric_limits<double>::infinity();
    int checked = 0;
    for (const StepRecord& s : steps) {
      if (s.status != StepStatus::solved) continue;
      ++checked;
      const Mat Acl = sys.A + sys.B * s.F;
      const double J = frozen_gain_cost(Acl, Qh * (sys.C + sys.D * s.F), Rh * s.F, s.state, opts.horizon);
      c.margin = std::min(c.margin, s.bound * (1.0 + 1e-6) - J);
      if (!(J <= s.bound * (1.0 + 1e-6) + 1e-14) && c.pass) {
        c.pass = false;
        c.step = s.k;
        c.detail = "realized cost " + jsonio::num(J) + " exceeds bound " + jsonio::num(s.bound);
      }
    }
    if (checked == 0) {
      c.vacuous = true;
      c.margin = 0.0;
    } else if (c.pass) {
      c.detail = std::to_string(checked) + " steps, horizon " +
                 (opts.horizon > 0 ? std::to_string(opts.horizon) : std::string("infinite"));
    }
    rep.bound_validity = c;
  }
  return rep;
}

}  // namespace rdpc
