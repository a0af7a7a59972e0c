#include "rdpc/lti_sim.hpp"

#include "rdpc/json_io.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace rdpc {

void LtiSystem::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() ||
      D.cols() != B.cols())
    throw std::invalid_argument("system matrices do not conform");
}

void NormConstraints::validate() const {
  if (!(u_max > 0.0) || !(y_max > 0.0))
    throw std::invalid_argument("u_max and y_max must be positive");
}

StepResult step(const LtiSystem& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.n() || u.size() != sys.m())
    throw std::invalid_argument("step: state or input dimension mismatch");
  return {sys.A * x + sys.B * u, sys.C * x + sys.D * u};
}

Trajectory collect(const LtiSystem& sys, const Vec& x0, const std::vector<Vec>& excitation,
                   bool record_states, double blowup_limit) {
  sys.validate();
  Trajectory traj;
  traj.system_name = sys.name;
  Vec x = x0;
  if (record_states) traj.states.push_back(x);
  for (size_t k = 0; k < excitation.size(); ++k) {
    auto r = step(sys, x, excitation[k]);
    traj.inputs.push_back(excitation[k]);
    traj.outputs.push_back(r.y);
    x = r.x_next;
    if (!(x.norm() <= blowup_limit))
      throw SimulationBlowUp("open-loop state norm exceeded " + jsonio::num(blowup_limit) +
                             " at k = " + std::to_string(k + 1));
    if (record_states) traj.states.push_back(x);
  }
  return traj;
}

std::vector<Vec> uniform_excitation(int m, int length, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<Vec> out(static_cast<size_t>(std::max(length, 0)), Vec(m));
  for (auto& u : out)
    for (int i = 0; i < m; ++i) u(i) = dist(gen);
  return out;
}

LtiSystem batch_reactor() {
  LtiSystem s;
  s.name = "batch-reactor";
  s.A.resize(4, 4);
  s.A << 1.178, 0.002, 0.512, -0.403,
        -0.052, 0.662, -0.011, 0.061,
         0.076, 0.335, 0.561, 0.382,
        -0.001, 0.335, 0.089, 0.849;
  s.B.resize(4, 2);
  s.B << 0.005, -0.088,
         0.467, 0.001,
         0.213, -0.235,
         0.213, -0.016;
  s.C.resize(2, 4);
  s.C << 1, 0, 1, -1,
         0, 1, 0, 0;
  s.D = Mat::Zero(2, 2);
  return s;
}

std::optional<int> check_constraints(const Trajectory& traj, const NormConstraints& c) {
  const size_t len = std::max(traj.inputs.size(), traj.outputs.size());
  for (size_t k = 0; k < len; ++k) {
    if (k < traj.inputs.size() && traj.inputs[k].norm() > c.u_max) return static_cast<int>(k);
    if (k < traj.outputs.size() && traj.outputs[k].norm() > c.y_max) return static_cast<int>(k);
  }
  return std::nullopt;
}

double replay_residual(const LtiSystem& sys, const Trajectory& traj) {
  double worst = 0.0;
  for (int k = 0; k < traj.length(); ++k) {
    if (traj.has_states()) {
      const auto r = step(sys, traj.states[k], traj.inputs[k]);
      worst = std::max(worst, (r.x_next - traj.states[k + 1]).norm());
      worst = std::max(worst, (r.y - traj.outputs[k]).norm());
    }
  }
  return worst;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  const int m = traj.inputs.empty() ? 0 : static_cast<int>(traj.inputs[0].size());
  const int p = traj.outputs.empty() ? 0 : static_cast<int>(traj.outputs[0].size());
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  os << "k";
  for (int i = 0; i < m; ++i) os << ",u" << i + 1;
  for (int i = 0; i < p; ++i) os << ",y" << i + 1;
  for (int i = 0; i < n; ++i) os << ",x" << i + 1;
  os << "\n";
  for (int k = 0; k < traj.length(); ++k) {
    os << k;
    for (int i = 0; i < m; ++i) os << ',' << jsonio::num(traj.inputs[k](i));
    for (int i = 0; i < p; ++i) os << ',' << jsonio::num(traj.outputs[k](i));
    for (int i = 0; i < n; ++i) os << ',' << jsonio::num(traj.states[k](i));
    os << "\n";
  }
  return os.str();
}

std::string trajectory_json(const Trajectory& traj) {
  jsonio::json j;
  j["system"] = traj.system_name;
  j["T"] = traj.length();
  j["seed"] = traj.seed ? jsonio::json(*traj.seed) : jsonio::json(nullptr);
  j["inputs"] = jsonio::to_json(traj.inputs);
  j["outputs"] = jsonio::to_json(traj.outputs);
  if (traj.has_states()) j["states"] = jsonio::to_json(traj.states);
  return j.dump(2);
}

Trajectory trajectory_from_json(const std::string& text) {
  const auto j = jsonio::json::parse(text);
  Trajectory t;
  t.system_name = j.value("system", "");
  if (j.contains("seed") && !j["seed"].is_null()) t.seed = j["seed"].get<std::uint64_t>();
  t.inputs = jsonio::seq_from_json(j.at("inputs"));
  t.outputs = jsonio::seq_from_json(j.at("outputs"));
  if (j.contains("states")) t.states = jsonio::seq_from_json(j["states"]);
  if (t.outputs.size() != t.inputs.size() ||
      (t.has_states() && t.states.size() != t.inputs.size() + 1))
    throw std::invalid_argument("trajectory sequences have inconsistent lengths");
  return t;
}

}  // namespace rdpc
