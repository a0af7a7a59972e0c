#include "rdpc/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>

namespace rdpc {

using jsonio::json;

bool ExperimentConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

namespace {

/// Nested rows, a scalar times I_dim, or the {"rows","cols","data"} form.
Mat matrix_from_config(const json& j, const std::string& what, int dim = -1) {
  if (j.is_number()) {
    if (dim < 0) throw ConfigError(what + ": a scalar needs a known dimension");
    return j.get<double>() * Mat::Identity(dim, dim);
  }
  if (j.is_object()) return jsonio::mat_from_json(j);
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a matrix");
  if (!j[0].is_array()) {
    // A flat array is a column vector.
    Mat m(j.size(), 1);
    for (std::size_t i = 0; i < j.size(); ++i) m(i, 0) = j[i].get<double>();
    return m;
  }
  const std::size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Vec vector_from_config(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

LtiSystem system_from_config(const json& j) {
  std::string preset;
  if (j.is_string()) preset = j.get<std::string>();
  else if (j.is_object() && j.contains("preset")) preset = j["preset"].get<std::string>();
  if (!preset.empty()) {
    if (preset == "batch-reactor") return batch_reactor();
    throw ConfigError("unknown system preset '" + preset + "'");
  }
  if (!j.is_object()) throw ConfigError("system: expected a preset name or matrices A, B, C, D");
  LtiSystem s;
  s.name = j.value("name", "custom");
  s.A = matrix_from_config(j.at("A"), "system.A");
  s.B = matrix_from_config(j.at("B"), "system.B");
  s.C = matrix_from_config(j.at("C"), "system.C");
  s.D = j.contains("D") ? matrix_from_config(j["D"], "system.D") : Mat::Zero(s.C.rows(), s.B.cols());
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  return s;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
  // Probe writability.
  const auto probe = std::filesystem::path(dir) / ".rdpc-write-probe";
  jsonio::write_file(probe.string(), "");
  std::filesystem::remove(probe, ec);
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

DataMode mode_of(const ExperimentConfig& cfg) {
  return cfg.controller.variant == ProblemVariant::constrained_io ? DataMode::output : DataMode::state;
}

/// Outcome of one named verification check.
struct Check {
  std::string name;
  std::string status;  ///< pass | fail | vacuous
  std::string detail;
  bool vacuous_ok = false;  ///< a vacuous outcome does not fail the verification
};

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const Check& c : checks) arr.push_back({{"name", c.name}, {"status", c.status}, {"detail", c.detail}});
  return arr;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.source = j;
  try {
    cfg.system = system_from_config(j.at("system"));
    const int n = cfg.system.n(), m = cfg.system.m(), p = cfg.system.p();
    cfg.x0 = j.contains("x0") ? vector_from_config(j["x0"], "x0") : Vec::Zero(n);
    if (cfg.x0.size() != n) throw ConfigError("x0 must have " + std::to_string(n) + " entries");

    const json& ex = j.at("excitation");
    cfg.excitation.low = ex.value("low", -0.1);
    cfg.excitation.high = ex.value("high", 0.1);
    cfg.excitation.length = ex.at("length").get<int>();
    if (!ex.contains("seed")) throw ConfigError("excitation.seed is required (the excitation is random)");
    cfg.excitation.seed = ex["seed"].get<std::uint64_t>();
    cfg.excitation.seed_search = ex.value("seed_search", 0);
    if (cfg.excitation.length < 1) throw ConfigError("excitation.length must be at least 1");
    if (!(cfg.excitation.low <= cfg.excitation.high)) throw ConfigError("excitation.low must not exceed high");
    if (cfg.excitation.seed_search < 0) throw ConfigError("excitation.seed_search must be ≥ 0");

    const json& c = j.at("controller");
    ControllerConfig& cc = cfg.controller;
    cc.variant = problem_variant_from_string(c.at("variant").get<std::string>());
    cc.Q = matrix_from_config(c.at("Q"), "controller.Q", p);
    cc.R = matrix_from_config(c.at("R"), "controller.R", m);
    if (c.contains("u_max") || c.contains("y_max"))
      cc.constraints = NormConstraints{c.at("u_max").get<double>(), c.at("y_max").get<double>()};
    cc.run_length = c.value("run_length", 50);
    cc.certification_horizon = c.value("certification_horizon", 500);
    cc.fallback = fallback_policy_from_string(c.value("fallback", std::string("reuse-previous-gain")));
    cc.x0 = c.contains("x0") ? vector_from_config(c["x0"], "controller.x0") : cfg.x0;
    if (c.contains("formulation")) cc.synthesis.formulation = formulation_from_string(c["formulation"].get<std::string>());
    if (c.contains("solver")) {
      const json& s = c["solver"];
      cc.solver.feasibility_tol = s.value("feasibility_tol", cc.solver.feasibility_tol);
      cc.solver.gap_tol = s.value("gap_tol", cc.solver.gap_tol);
      cc.solver.max_iterations = s.value("max_iterations", cc.solver.max_iterations);
    }
    if (cc.Q.rows() != p || cc.R.rows() != m) throw ConfigError("controller: Q must be p×p and R m×m");
    if (cc.x0.size() != n) throw ConfigError("controller.x0 must have " + std::to_string(n) + " entries");
    cc.validate();
    if (cc.variant == ProblemVariant::constrained_io && cfg.excitation.length <= n)
      throw ConfigError("input-output data needs excitation.length > n");

    if (j.contains("monitor")) {
      cfg.monitor.samples = j["monitor"].value("samples", cfg.monitor.samples);
      cfg.monitor.seed = j["monitor"].value("seed", cfg.monitor.seed);
    }
    cfg.monitor.horizon = cc.certification_horizon;

    if (j.contains("outputs")) {
      const json& o = j["outputs"];
      cfg.output_dir = o.value("directory", cfg.output_dir);
      if (o.contains("formats")) cfg.formats = o["formats"].get<std::vector<std::string>>();
      for (const std::string& f : cfg.formats)
        if (f != "csv" && f != "json" && f != "plot-data") throw ConfigError("unknown output format '" + f + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::string text;
  try {
    text = jsonio::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(text);
}

CollectedData collect_data(const ExperimentConfig& cfg) {
  const ExcitationConfig& ex = cfg.excitation;
  const bool states = mode_of(cfg) == DataMode::state;
  const int tries = std::max(ex.seed_search, 1);
  CollectedData out;
  for (int i = 0; i < tries; ++i) {
    const std::uint64_t seed = ex.seed + static_cast<std::uint64_t>(i);
    const auto u = uniform_excitation(cfg.system.m(), ex.length, ex.low, ex.high, seed);
    Trajectory t = collect(cfg.system, cfg.x0, u, states);
    t.seed = seed;
    out.trajectory = std::move(t);
    out.seed = seed;
    out.seeds_tried = i + 1;
    if (ex.seed_search <= 0) break;
    // Keep the first seed whose first controller step is feasible.
    ControllerConfig probe = cfg.controller;
    probe.run_length = 1;
    if (!run_controller(cfg.system, out.trajectory, probe).k0_infeasible) break;
  }
  return out;
}

int cmd_collect(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    ensure_directory(cfg.output_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::unwritable;
  }
  CollectedData data;
  try {
    data = collect_data(cfg);
  } catch (const SimulationBlowUp& e) {
    err << "error: simulation blew up: " << e.what() << "\n";
    return exit_code::blow_up;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::config_error;
  }
  const Trajectory& t = data.trajectory;
  const ConsistencySet set = record_consistency_set(t, cfg.controller, cfg.system.n());
  try {
    jsonio::write_file(join(cfg.output_dir, "trajectory.csv"), trajectory_csv(t));
    jsonio::write_file(join(cfg.output_dir, "trajectory.json"), trajectory_json(t));
    jsonio::write_file(join(cfg.output_dir, "consistency_set.json"), consistency_set_json(set));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::unwritable;
  }
  out << "collected T = " << t.length() << " samples (seed " << data.seed << ", " << data.seeds_tried
      << " seed(s) tried)\n";
  out << "replay residual " << jsonio::num(replay_residual(cfg.system, t)) << "\n";
  out << "wrote " << cfg.output_dir << "/{trajectory.csv,trajectory.json,consistency_set.json}\n";
  return exit_code::ok;
}

int cmd_run(const ExperimentConfig& cfg, const std::optional<std::string>& trajectory_path, std::ostream& out,
            std::ostream& err) {
  try {
    ensure_directory(cfg.output_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::unwritable;
  }

  CollectedData data;
  try {
    if (trajectory_path) {
      data.trajectory = trajectory_from_json(jsonio::read_file(*trajectory_path));
      data.seed = data.trajectory.seed.value_or(0);
    } else {
      data = collect_data(cfg);
    }
  } catch (const SimulationBlowUp& e) {
    err << "error: simulation blew up: " << e.what() << "\n";
    return exit_code::blow_up;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::config_error;
  }

  ClosedLoopRecord rec;
  ConsistencySet set;
  try {
    rec = run_controller(cfg.system, data.trajectory, cfg.controller);
    set = record_consistency_set(data.trajectory, cfg.controller, cfg.system.n());
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::config_error;
  }
  const TheoremReport rep = monitor_theorems(rec, set, cfg.monitor, &cfg.system);

  json j = rec.to_json();
  j["config"] = cfg.source;
  j["data_seed"] = data.seed;
  j["seeds_tried"] = data.seeds_tried;
  j["monitor_seed"] = cfg.monitor.seed;
  j["theorems"] = rep.to_json();
  try {
    if (!trajectory_path) jsonio::write_file(join(cfg.output_dir, "trajectory.json"), trajectory_json(data.trajectory));
    if (cfg.wants("csv")) jsonio::write_file(join(cfg.output_dir, "record.csv"), rec.to_csv());
    if (cfg.wants("json")) jsonio::write_file(join(cfg.output_dir, "record.json"), j.dump(2));
    if (cfg.wants("plot-data")) jsonio::write_file(join(cfg.output_dir, "plot.csv"), rec.plot_data_csv());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::unwritable;
  }

  int solved = 0, retried = 0, fallback = 0;
  for (const StepRecord& s : rec.steps) {
    solved += s.status == StepStatus::solved;
    retried += s.status == StepStatus::solved && s.retried;
    fallback += s.status == StepStatus::fallback;
  }
  out << "system " << cfg.system.name << ", variant " << to_string(cfg.controller.variant) << ", data seed "
      << data.seed << "\n";
  out << "controller steps: " << solved << " solved (" << retried << " at the loosened tolerance), " << fallback
      << " fallback\n";
  out << "J_bar = " << jsonio::num(rec.j_bar) << "\n";
  out << "final output norm = " << jsonio::num(rep.final_output_norm) << "\n";
  auto line = [&](const MonitorCheck& c) {
    out << "  " << c.name << ": " << (c.vacuous ? "vacuous" : c.pass ? "pass" : "FAIL");
    if (c.step) out << " (k = " << *c.step << ")";
    out << " — " << c.detail << "\n";
  };
  out << "theorem monitors:\n";
  line(rep.bound_decrease);
  line(rep.stability);
  line(rep.recursive_feasibility);
  line(rep.constraints);
  if (rep.bound_validity) line(*rep.bound_validity);

  if (rec.k0_infeasible) {
    err << "error: first controller step infeasible: " << rec.message << "\n";
    return exit_code::k0_infeasible;
  }
  if (!rep.pass() || rec.aborted) {
    err << "error: theorem monitor failed" << (rec.message.empty() ? "" : ": " + rec.message) << "\n";
    return exit_code::monitor_failure;
  }
  return exit_code::ok;
}

int cmd_verify(const ExperimentConfig& cfg, const VerifyInputs& in, std::ostream& out, std::ostream& err) {
  if (!in.trajectory && !in.set) {
    err << "error: verify needs a trajectory or a consistency-set file\n";
    return exit_code::config_error;
  }
  std::vector<Check> checks;
  std::optional<Trajectory> traj;
  std::optional<ConsistencySet> set;
  bool empty = false;
  try {
    if (in.trajectory) {
      traj = trajectory_from_json(jsonio::read_file(*in.trajectory));
      empty = traj->length() == 0;
    }
    if (in.set) {
      set = consistency_set_from_json(jsonio::read_file(*in.set));
      empty = set->data.columns() == 0;
    } else if (!empty) {
      set = record_consistency_set(*traj, cfg.controller, cfg.system.n());
    }
  } catch (const std::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return exit_code::config_error;
  }

  json report;
  if (empty || !set) {
    for (const char* name : {"finsler-preconditions", "gram-consistency", "membership", "sigma-sampling"})
      checks.push_back({name, "vacuous", "no data columns; every system is trivially consistent"});
  } else {
    const ConsistencySet& S = *set;
    const FinslerReport fr = finsler_preconditions(SymMatrix::symmetrized(S.N), S.q(), S.s());
    checks.push_back({"finsler-preconditions", fr.pass() ? "pass" : "fail",
                      "lambda_min(N22) = " + jsonio::num(fr.n22_min_eig) + ", schur residual " +
                          jsonio::num(fr.schur_residual) + ", kernel residual " + jsonio::num(fr.kernel_residual)});

    const double gram = std::max((S.N - S.H * S.H.transpose()).norm() / std::max(1.0, S.N.norm()),
                                 (S.N_y - S.H_y * S.H_y.transpose()).norm() / std::max(1.0, S.N_y.norm()));
    checks.push_back({"gram-consistency", gram <= 1e-10 ? "pass" : "fail",
                      "relative ‖N − HHᵀ‖ = " + jsonio::num(gram)});

    const LtiSystem truth = S.mode() == DataMode::output ? extended_realization(cfg.system) : cfg.system;
    if (truth.n() == S.n() && truth.m() == S.m() && truth.p() == S.p()) {
      const double r = membership_residual(S, truth);
      checks.push_back({"membership", r <= 1e-8 ? "pass" : "fail",
                        "residual of the configured plant " + jsonio::num(r)});
    } else {
      checks.push_back({"membership", "vacuous", "configured plant does not match the data dimensions"});
    }

    const SigmaSamples sig = sample_sigma(S, cfg.monitor.samples, cfg.monitor.seed);
    double worst = 0.0, replay = 0.0;
    for (const LtiSystem& member : sig.systems) {
      worst = std::max(worst, membership_residual(S, member));
      if (S.mode() == DataMode::state && S.data.columns() > 0) {
        Vec x = S.data.X.col(0);
        for (int c = 0; c < S.data.columns(); ++c) {
          x = member.A * x + member.B * S.data.U.col(c);
          replay = std::max(replay, (x - S.data.X_plus.col(c)).norm() / std::max(1.0, S.data.X_plus.norm()));
        }
      }
    }
    const bool ok = worst <= 1e-8 && replay <= 1e-6;
    checks.push_back({"sigma-sampling", ok ? "pass" : "fail",
                      std::to_string(sig.systems.size()) + " samples, max membership residual " + jsonio::num(worst) +
                          ", max replay error " + jsonio::num(replay)});
  }

  if (in.record) {
    try {
      const ClosedLoopRecord rec = record_from_json(json::parse(jsonio::read_file(*in.record)));
      if (!set) throw std::invalid_argument("a record needs the data it was synthesized from");
      const TheoremReport rep = monitor_theorems(rec, *set, cfg.monitor, &cfg.system);
      report["theorems"] = rep.to_json();
      auto add = [&](const MonitorCheck& c) {
        checks.push_back({c.name, c.vacuous ? "vacuous" : c.pass ? "pass" : "fail", c.detail, true});
      };
      add(rep.bound_decrease);
      add(rep.stability);
      add(rep.recursive_feasibility);
      add(rep.constraints);
      if (rep.bound_validity) add(*rep.bound_validity);
    } catch (const std::exception& e) {
      err << "error: malformed record: " << e.what() << "\n";
      return exit_code::config_error;
    }
  }

  bool all_pass = true;
  for (const Check& c : checks) {
    all_pass = all_pass && (c.status == "pass" || (c.status == "vacuous" && c.vacuous_ok));
    out << c.name << ": " << c.status << " — " << c.detail << "\n";
  }
  report["checks"] = checks_json(checks);
  report["pass"] = all_pass;
  if (in.report) {
    try {
      jsonio::write_file(*in.report, report.dump(2));
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return exit_code::unwritable;
    }
  }
  out << (all_pass ? "verification passed" : "verification FAILED") << "\n";
  return all_pass ? exit_code::ok : exit_code::monitor_failure;
}

}  // namespace rdpc
