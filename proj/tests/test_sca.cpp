#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uavsec/init.hpp"
#include "uavsec/power.hpp"
#include "uavsec/sca.hpp"
#include "uavsec/validation.hpp"

using namespace uavsec;

namespace {
PowerProfile constant_power(const Scenario &s, double p) {
  return PowerProfile{std::vector<double>(s.slots(), p)};
}
} // namespace

TEST(EavesdropperBound, HandExample) {
  const double lb = eavesdropper_distance_lb({1, 0}, 1.0, {0, 0}, 1.0, {1, 0}, 2.0);
  EXPECT_NEAR(lb, 0.0, 1e-15);
  EXPECT_LE(lb, validation::oracle_distance_pow(1, 0, 1, {1, 0}, 2.0));
}

TEST(EavesdropperBound, TangentAtExpansion) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-300, 300), uh(50, 300), ua(0.5, 4.0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 q{u(rng), u(rng)}, w{u(rng), u(rng)};
    const double h = uh(rng), alpha = ua(rng);
    const double truth = validation::oracle_distance_pow(q.x, q.y, h, w, alpha);
    EXPECT_NEAR(eavesdropper_distance_lb(q, h, q, h, w, alpha), truth, 1e-12 * truth);
  }
}

TEST(SurrogateBounds, SampledAtSeveralPathLossExponents) {
  for (double alpha : {2.0, 2.5, 3.0}) {
    Scenario s = reference_scenario();
    s.path_loss_exp = alpha;
    const auto rep = validation::surrogate_bound_sampler(s, 1000, 42);
    EXPECT_TRUE(rep.pass) << "alpha=" << alpha << " " << validation::describe(rep);
    EXPECT_EQ(rep.cases, 1000u);
  }
}

TEST(SurrogateBounds, SingleSampleIsTangent) {
  const auto rep = validation::surrogate_bound_sampler(reference_scenario(), 1, 3);
  EXPECT_TRUE(rep.pass) << validation::describe(rep);
}

TEST(SurrogateRate, EqualsExactRateAtExpansion) {
  const Scenario s = reference_scenario(45);
  const Trajectory init = fly_hover_fly_init(s);
  const SurrogatePoint pt = make_surrogate_point(init, s);
  const PowerProfile p = solve_power(slot_gains(init, s), s).profile;
  const double sur = surrogate_rate(pt.zeta_local, pt.eta_local, p, pt, s);
  const double exact = average_secrecy_rate(init, p, s, false);
  EXPECT_NEAR(sur, exact, 1e-9 * std::abs(exact));
}

TEST(SurrogateRate, ZeroPowerIsZero) {
  const Scenario s = reference_scenario(45);
  const SurrogatePoint pt = make_surrogate_point(fly_hover_fly_init(s), s);
  EXPECT_EQ(surrogate_rate(pt.zeta_local, 2.0 * pt.eta_local, constant_power(s, 0.0), pt, s), 0.0);
}

TEST(ScaStep, NoDecreaseFromFlyHoverFly) {
  const Scenario s = reference_scenario();
  const SolverConfig cfg;
  const Trajectory init = fly_hover_fly_init(s);
  const PowerProfile p = solve_power(slot_gains(init, s), s).profile;
  const ScaStepResult r = sca_step(make_surrogate_point(init, s), p, s, cfg);
  EXPECT_FALSE(trajectory_violation(r.traj, s).has_value());
  EXPECT_GE(average_secrecy_rate(r.traj, p, s, false), average_secrecy_rate(init, p, s, false) - 1e-12);
  EXPECT_GT(average_secrecy_rate(r.traj, p, s, false), average_secrecy_rate(init, p, s, false));
}

TEST(ScaStep, FrozenUavKeepsTrajectory) {
  Scenario s = reference_scenario(10);
  s.q_end = s.q_start;
  s.v_horiz = s.v_up = s.v_down = 0.0;
  const Trajectory init = fly_hover_fly_init(s);
  const ScaStepResult r = sca_step(make_surrogate_point(init, s), constant_power(s, 1.0), s, {});
  EXPECT_EQ(r.traj, init);
}

TEST(ScaStep, FixedPointStaysPut) {
  const Scenario s = reference_scenario(45);
  SolverConfig cfg;
  cfg.sca_rel_tol = 1e-14;
  cfg.sca_max_iters = 200;
  const Trajectory init = fly_hover_fly_init(s);
  const PowerProfile p = solve_power(slot_gains(init, s), s).profile;
  const TrajectoryResult conv = optimize_trajectory(init, p, s, cfg);
  const SurrogatePoint pt = make_surrogate_point(conv.traj, s);
  const ScaStepResult r = sca_step(pt, p, s, cfg);
  double moved = 0.0;
  for (std::size_t i = 0; i < r.traj.q.size(); ++i)
    moved = std::max({moved, distance(r.traj.q[i], conv.traj.q[i]), std::abs(r.traj.h[i] - conv.traj.h[i])});
  EXPECT_LT(moved, 1e-3);
  const double before = *ReducedSurrogate(pt, p, s).value(conv.traj);
  EXPECT_NEAR(r.surrogate_objective, before, 1e-6 * std::abs(before));
}

TEST(OptimizeTrajectory, ZeroPowerTerminatesImmediately) {
  const Scenario s = reference_scenario(45);
  const TrajectoryResult r = optimize_trajectory(fly_hover_fly_init(s), constant_power(s, 0.0), s, {});
  EXPECT_EQ(r.iterations, 1);
  for (double v : r.trace) EXPECT_EQ(v, 0.0);
}

TEST(OptimizeTrajectory, ReferenceScenarioMonotoneAndFeasible) {
  const Scenario s = reference_scenario(60);
  const Trajectory init = fly_hover_fly_init(s);
  const PowerProfile p = solve_power(slot_gains(init, s), s).profile;
  const TrajectoryResult r = optimize_trajectory(init, p, s, {});
  EXPECT_TRUE(r.converged);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i], r.trace[i - 1] - 1e-6);
  EXPECT_FALSE(trajectory_violation(r.traj, s).has_value());
}

TEST(OptimizeTrajectory, BendsTowardLoneNode) {
  Scenario s = reference_scenario(60);
  s.gn_positions = {{0.0, 250.0}};
  s.eve_positions = {{0.0, -3000.0}};
  const Trajectory init = fly_hover_fly_init(s);
  Trajectory straight = init;
  for (std::size_t i = 0; i < straight.q.size(); ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(straight.q.size() - 1);
    straight.q[i] = s.q_start + f * (s.q_end - s.q_start);
    straight.h[i] = 200.0;
  }
  const PowerProfile p = constant_power(s, s.p_ave);
  const TrajectoryResult r = optimize_trajectory(straight, p, s, {});
  EXPECT_GT(r.trace.back(), r.trace.front() + 1e-3);
  double max_y = 0.0;
  for (const Vec2 &q : r.traj.q) max_y = std::max(max_y, q.y);
  EXPECT_GT(max_y, 100.0);
}

TEST(OptimizeTrajectory, RejectsInfeasibleStart) {
  const Scenario s = reference_scenario(45);
  Trajectory t = fly_hover_fly_init(s);
  t.h[3] = 400.0;
  EXPECT_THROW(optimize_trajectory(t, constant_power(s, 1.0), s, {}), ValidationError);
}
