#include <gtest/gtest.h>

#include <random>

#include "uavsec/chain_solver.hpp"
#include "uavsec/init.hpp"
#include "uavsec/sca.hpp"

using namespace uavsec;

namespace {

ChainBounds small_chain() {
  ChainBounds c;
  c.q_start = {0.0, 0.0};
  c.q_end = {40.0, 0.0};
  c.h_start = c.h_end = 100.0;
  c.max_step = 10.0;
  c.max_climb = 2.0;
  c.max_descent = 3.0;
  c.h_min = 90.0;
  c.h_max = 110.0;
  c.slots = 5;
  return c;
}

Trajectory straight(const ChainBounds &c) {
  Trajectory t;
  for (std::size_t i = 0; i <= c.slots + 1; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(c.slots + 1);
    t.q.push_back(c.q_start + f * (c.q_end - c.q_start));
    t.h.push_back(c.h_start);
  }
  return t;
}

// Concave quadratic pulling every slot toward `target`.
struct Pull {
  Vec3 target;
  std::optional<SlotTerm> operator()(std::size_t, const Vec3 &x, bool) const {
    SlotTerm t;
    const Vec3 d = x - target;
    t.value = -d.squaredNorm();
    t.grad = -2.0 * d;
    t.hess = -2.0 * Mat3::Identity();
    return t;
  }
};

} // namespace

TEST(ChainSolver, ReachesInteriorMaximizer) {
  ChainBounds c = small_chain();
  c.max_step = 30.0; // target reachable by every slot
  const FreeComponents free = free_components(c);
  ASSERT_TRUE(free.q && free.h);
  const Pull f{Vec3(20.0, 3.0, 101.0)};
  const Trajectory start = interior_reference(c, free, straight(c));
  const ChainSolveResult r = maximize_on_chain(c, free, f, start);
  ASSERT_TRUE(r.ok) << r.message;
  for (std::size_t i = 1; i <= c.slots; ++i) {
    EXPECT_NEAR(r.traj.q[i].x, 20.0, 1e-6);
    EXPECT_NEAR(r.traj.q[i].y, 3.0, 1e-6);
    EXPECT_NEAR(r.traj.h[i], 101.0, 1e-6);
  }
}

TEST(ChainSolver, ActiveAltitudeBoxAndSpeedLimits) {
  const ChainBounds c = small_chain();
  const FreeComponents free = free_components(c);
  const Pull f{Vec3(20.0, 500.0, 500.0)};
  const ChainSolveResult r = maximize_on_chain(c, free, f, interior_reference(c, free, straight(c)));
  ASSERT_TRUE(r.ok) << r.message;
  double best_h = 0.0;
  for (std::size_t i = 0; i <= c.slots; ++i) {
    EXPECT_LE(distance(r.traj.q[i + 1], r.traj.q[i]), c.max_step + 1e-9);
    EXPECT_LE(r.traj.h[i + 1] - r.traj.h[i], c.max_climb + 1e-9);
    EXPECT_LE(r.traj.h[i] - r.traj.h[i + 1], c.max_descent + 1e-9);
    best_h = std::max(best_h, r.traj.h[i]);
  }
  // Middle slot climbs as far as the climb/descent limits allow: 3 steps up
  // from the start (6 m) and 3 steps down to the end (9 m).
  EXPECT_NEAR(best_h, 106.0, 1e-6);
}

TEST(ChainSolver, FrozenChainReturnsStart) {
  ChainBounds c = small_chain();
  c.q_end = c.q_start;
  c.max_step = c.max_climb = c.max_descent = 0.0;
  const FreeComponents free = free_components(c);
  EXPECT_FALSE(free.q);
  EXPECT_FALSE(free.h);
  Trajectory t;
  t.q.assign(c.slots + 2, c.q_start);
  t.h.assign(c.slots + 2, c.h_start);
  const ChainSolveResult r = maximize_on_chain(c, free, Pull{Vec3(5, 5, 105)}, t);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.traj, t);
}

TEST(ChainSolver, BlockTridiagonalSolveMatchesDense) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  const std::size_t n = 6;
  std::vector<Mat3> diag(n + 2, Mat3::Zero()), off(n + 2, Mat3::Zero());
  std::vector<Vec3> rhs(n + 2, Vec3::Zero()), x;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (std::size_t i = 1; i <= n; ++i) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) m(r, k) = nd(rng);
    diag[i] = m * m.transpose() + 10.0 * Mat3::Identity();
    for (int r = 0; r < 3; ++r) rhs[i](r) = nd(rng);
    dense.block<3, 3>(3 * (i - 1), 3 * (i - 1)) = diag[i];
    if (i < n) {
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) off[i](r, k) = nd(rng);
      dense.block<3, 3>(3 * (i - 1), 3 * i) = off[i];
      dense.block<3, 3>(3 * i, 3 * (i - 1)) = off[i].transpose();
    }
  }
  ASSERT_TRUE(detail::solve_block_tridiagonal(diag, off, rhs, n, x));
  Eigen::VectorXd b(3 * n);
  for (std::size_t i = 1; i <= n; ++i) b.segment<3>(3 * (i - 1)) = rhs[i];
  const Eigen::VectorXd ref = dense.ldlt().solve(b);
  for (std::size_t i = 1; i <= n; ++i)
    EXPECT_LT((x[i] - ref.segment<3>(3 * (i - 1))).norm(), 1e-10);
}

TEST(ReducedSurrogate, HessianMatchesGradientDifferences) {
  for (double alpha : {2.0, 2.5, 3.0}) {
    Scenario s = reference_scenario(45);
    s.path_loss_exp = alpha;
    const Trajectory init = fly_hover_fly_init(s);
    const ReducedSurrogate model(make_surrogate_point(init, s),
                                 PowerProfile{std::vector<double>(s.slots(), s.p_ave)}, s);
    for (std::size_t slot : {std::size_t{1}, std::size_t{20}, s.slots()}) {
      const Vec3 x(init.q[slot].x + 3.0, init.q[slot].y - 2.0, init.h[slot] + 1.0);
      const auto t = model(slot, x, true);
      ASSERT_TRUE(t.has_value());
      const double step = 1e-4;
      for (int k = 0; k < 3; ++k) {
        Vec3 xp = x, xm = x;
        xp(k) += step;
        xm(k) -= step;
        const Vec3 col = (model(slot, xp, true)->grad - model(slot, xm, true)->grad) / (2 * step);
        const double scale = std::max(t->hess.cwiseAbs().maxCoeff(), 1e-300);
        EXPECT_LT((col - t->hess.col(k)).cwiseAbs().maxCoeff() / scale, 1e-5)
            << "alpha=" << alpha << " slot=" << slot << " k=" << k;
      }
    }
  }
}
