#include "rdpc/lti_sim.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rdpc;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(xs.size());
  int i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

}  // namespace

TEST(Step, BatchReactorInitialOutput) {
  const LtiSystem sys = batch_reactor();
  const Vec x0 = v({0.1, 0.12, 0.0, -0.1});
  const StepResult r = step(sys, x0, Vec::Zero(2));
  // Oracle: C x₀ with C = [1 0 1 −1; 0 1 0 0] evaluated by hand.
  EXPECT_NEAR(r.y(0), 0.1 + 0.0 + 0.1, 1e-15);
  EXPECT_NEAR(r.y(1), 0.12, 1e-15);
}

TEST(Step, ZeroStateZeroInput) {
  const LtiSystem sys = batch_reactor();
  const StepResult r = step(sys, Vec::Zero(4), Vec::Zero(2));
  EXPECT_EQ(r.x_next.norm(), 0.0);
  EXPECT_EQ(r.y.norm(), 0.0);
}

TEST(Step, IdentityPlantAddsInput) {
  LtiSystem sys{Mat::Identity(3, 3), Mat::Identity(3, 3), Mat::Identity(3, 3), Mat::Zero(3, 3), "id"};
  const Vec x = v({1, -2, 3}), u = v({0.5, 0.25, -1});
  EXPECT_EQ(step(sys, x, u).x_next, x + u);
}

TEST(Step, RejectsNonConformingDimensions) {
  LtiSystem sys{Mat::Identity(2, 2), Mat::Identity(3, 1), Mat::Identity(1, 2), Mat::Zero(1, 1), "bad"};
  EXPECT_THROW(sys.validate(), std::invalid_argument);
  EXPECT_THROW(step(batch_reactor(), Vec::Zero(3), Vec::Zero(2)), std::invalid_argument);
}

TEST(Collect, BatchReactorReplays) {
  const LtiSystem sys = batch_reactor();
  const auto u = uniform_excitation(2, 18, -0.1, 0.1, 7);
  const Trajectory t = collect(sys, v({0.1, 0.12, 0, -0.1}), u, true);
  EXPECT_EQ(t.length(), 18);
  EXPECT_EQ(t.states.size(), 19u);
  EXPECT_LE(replay_residual(sys, t), 1e-12);
  // Independent replay.
  for (int k = 0; k < 18; ++k) {
    EXPECT_LE((t.states[k + 1] - sys.A * t.states[k] - sys.B * t.inputs[k]).norm(), 1e-12);
    EXPECT_LE((t.outputs[k] - sys.C * t.states[k]).norm(), 1e-12);
  }
}

TEST(Collect, ZeroTrajectory) {
  const Trajectory t = collect(batch_reactor(), Vec::Zero(4), {Vec::Zero(2)}, true);
  EXPECT_EQ(t.length(), 1);
  EXPECT_EQ(t.outputs[0].norm(), 0.0);
  EXPECT_EQ(t.states[1].norm(), 0.0);
}

TEST(Collect, LongExcitationDiverges) {
  // The open-loop plant is unstable: with T = 28 some seeds leave the output bound.
  const LtiSystem sys = batch_reactor();
  const NormConstraints c{std::sqrt(2.0), std::sqrt(0.2)};
  int diverged = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory t = collect(sys, v({0.1, 0.12, 0, -0.1}), uniform_excitation(2, 28, -0.1, 0.1, seed), false);
    diverged += check_constraints(t, c).has_value();
  }
  EXPECT_GT(diverged, 0);
}

TEST(Collect, BlowUpAborts) {
  LtiSystem sys{Mat::Constant(1, 1, 10.0), Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1), "fast"};
  std::vector<Vec> u(20, Vec::Zero(1));
  EXPECT_THROW(collect(sys, Vec::Ones(1), u, true), SimulationBlowUp);
}

TEST(Excitation, DeterministicAndInRange) {
  const auto a = uniform_excitation(2, 50, -0.1, 0.1, 42);
  const auto b = uniform_excitation(2, 50, -0.1, 0.1, 42);
  const auto c = uniform_excitation(2, 50, -0.1, 0.1, 43);
  ASSERT_EQ(a.size(), 50u);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k], b[k]);
    differs = differs || a[k] != c[k];
    EXPECT_LE(a[k].cwiseAbs().maxCoeff(), 0.1);
  }
  EXPECT_TRUE(differs);
}

TEST(BatchReactor, Matrices) {
  const LtiSystem sys = batch_reactor();
  EXPECT_EQ(sys.A(0, 0), 1.178);
  EXPECT_EQ(sys.D, Mat::Zero(2, 2));
  EXPECT_GT(spectral_radius(sys.A), 1.0);
}

TEST(Constraints, Detection) {
  Trajectory zero;
  zero.inputs.assign(3, Vec::Zero(1));
  zero.outputs.assign(3, Vec::Zero(2));
  EXPECT_FALSE(check_constraints(zero, {1.0, 1.0}).has_value());
  Trajectory one;
  one.inputs = {Vec::Zero(1)};
  one.outputs = {v({1.0, 0.0})};
  EXPECT_EQ(check_constraints(one, {1.0, 0.5}), 0);
}

TEST(Serialization, CsvAndJsonRoundTrip) {
  const Trajectory t = collect(batch_reactor(), v({0.1, 0.12, 0, -0.1}), uniform_excitation(2, 5, -0.1, 0.1, 1), true);
  const std::string csv = trajectory_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,u1,u2,y1,y2,x1,x2,x3,x4");
  EXPECT_EQ(trajectory_csv(t), csv);  // deterministic formatting
  const Trajectory back = trajectory_from_json(trajectory_json(t));
  ASSERT_EQ(back.length(), t.length());
  for (int k = 0; k < t.length(); ++k) {
    EXPECT_EQ(back.inputs[k], t.inputs[k]);
    EXPECT_EQ(back.outputs[k], t.outputs[k]);
  }
  EXPECT_EQ(back.states.back(), t.states.back());
}
