#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uavsec/channel.hpp"

using namespace uavsec;

TEST(ChannelGain, ReferenceDistanceGivesReferenceGain) {
  EXPECT_DOUBLE_EQ(channel_gain({0, 0}, 1.0, {0, 0}, 2.0, 1e5), 1e5);
}

TEST(ChannelGain, SlantDistanceOfHundredMeters) {
  EXPECT_NEAR(channel_gain({0, 0}, 60.0, {80, 0}, 2.0, 1e5), 10.0, 1e-12);
}

TEST(ChannelGain, CubicPathLoss) {
  EXPECT_NEAR(channel_gain({0, 0}, 100.0, {0, 0}, 3.0, 1e5), 0.1, 1e-14);
}

TEST(ChannelGain, ZeroDistanceThrows) {
  EXPECT_THROW(channel_gain({1, 2}, 0.0, {1, 2}, 2.0, 1.0), std::domain_error);
}

TEST(ChannelGain, StrictlyDecreasingInDistanceAndAltitude) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1.0, 500.0), ua(0.5, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double alpha = ua(rng);
    const double h = u(rng), x = u(rng);
    const double g = channel_gain({x, 0}, h, {0, 0}, alpha, 1e5);
    EXPECT_GT(g, channel_gain({x + 1.0, 0}, h, {0, 0}, alpha, 1e5));
    EXPECT_GT(g, channel_gain({x, 0}, h + 1.0, {0, 0}, alpha, 1e5));
  }
}

TEST(SlotGains, ReferenceScenarioAboveMiddleNode) {
  Scenario s = reference_scenario();
  s.ref_gain_over_noise = 1e5;
  Trajectory t;
  t.q.assign(s.slots() + 2, {0.0, 300.0});
  t.h.assign(s.slots() + 2, 200.0);
  const SlotGains g = slot_gains(t, s);
  EXPECT_NEAR(g.a[0], 1e5 * (1.0 / 50000 + 1.0 / 40000 + 1.0 / 50000), 1e-12);
}

TEST(SlotGains, SymmetricPlacementGivesEqualGains) {
  Scenario s = reference_scenario();
  s.gn_positions = {{0.0, 100.0}};
  s.eve_positions = {{0.0, -100.0}};
  Trajectory t;
  t.q.assign(s.slots() + 2, {0.0, 0.0});
  t.h.assign(s.slots() + 2, 200.0);
  const SlotGains g = slot_gains(t, s);
  EXPECT_DOUBLE_EQ(g.a[3], g.b[3]);
}

TEST(SlotGains, DuplicatedNodeDoublesContribution) {
  Scenario s = reference_scenario(45);
  s.gn_positions = {{30.0, 200.0}};
  Trajectory t;
  for (std::size_t i = 0; i < s.slots() + 2; ++i) {
    t.q.push_back({-500.0 + 10.0 * static_cast<double>(i), 0.0});
    t.h.push_back(200.0);
  }
  const SlotGains single = slot_gains(t, s);
  s.gn_positions.push_back(s.gn_positions[0]);
  const SlotGains twice = slot_gains(t, s);
  for (std::size_t i = 0; i < single.a.size(); ++i) EXPECT_DOUBLE_EQ(twice.a[i], 2.0 * single.a[i]);
}

TEST(SecrecyRate, HandExamples) {
  EXPECT_NEAR(slot_secrecy_rate(1.0, 0.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(slot_secrecy_rate(3.0, 1.0, 1.0), 1.0, 1e-15);
  const SlotGains g{{0.5}, {1.0}};
  const PowerProfile p{{1.0}};
  EXPECT_EQ(secrecy_rate_per_slot(g, p, true)[0], 0.0);
  EXPECT_LT(secrecy_rate_per_slot(g, p, false)[0], 0.0);
}

TEST(SecrecyRate, ClampIsNonNegativeAndExactWhenFavorable) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  SlotGains g;
  PowerProfile p;
  for (int i = 0; i < 500; ++i) {
    g.a.push_back(u(rng));
    g.b.push_back(u(rng));
    p.p.push_back(u(rng));
  }
  const auto clamped = secrecy_rate_per_slot(g, p, true);
  const auto raw = secrecy_rate_per_slot(g, p, false);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_GE(clamped[i], 0.0);
    if (g.a[i] > g.b[i]) {
      EXPECT_EQ(clamped[i], raw[i]);
    }
  }
}

namespace {
// Direct summation with log2 and explicit distances.
double direct_average(const Trajectory &t, const PowerProfile &p, const Scenario &s) {
  double total = 0.0;
  for (std::size_t n = 1; n <= s.slots(); ++n) {
    double a = 0.0, b = 0.0;
    for (const Vec2 &w : s.gn_positions) {
      const double d2 = std::pow(t.q[n].x - w.x, 2) + std::pow(t.q[n].y - w.y, 2) + t.h[n] * t.h[n];
      a += s.ref_gain_over_noise / std::pow(d2, s.path_loss_exp / 2);
    }
    for (const Vec2 &w : s.eve_positions) {
      const double d2 = std::pow(t.q[n].x - w.x, 2) + std::pow(t.q[n].y - w.y, 2) + t.h[n] * t.h[n];
      b += s.ref_gain_over_noise / std::pow(d2, s.path_loss_exp / 2);
    }
    total += std::max(0.0, std::log2(1 + a * p.p[n - 1]) - std::log2(1 + b * p.p[n - 1]));
  }
  return total / static_cast<double>(s.slots());
}

Trajectory random_path(const Scenario &s, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> ux(-400, 400), uy(-50, 400), uh(150, 250);
  Trajectory t;
  t.q.push_back(s.q_start);
  t.h.push_back(s.h_start);
  for (std::size_t i = 0; i < s.slots(); ++i) {
    t.q.push_back({ux(rng), uy(rng)});
    t.h.push_back(uh(rng));
  }
  t.q.push_back(s.q_end);
  t.h.push_back(s.h_end);
  return t;
}
} // namespace

TEST(AverageSecrecyRate, ZeroPowerIsZero) {
  const Scenario s = reference_scenario(45);
  std::mt19937_64 rng(1);
  const Trajectory t = random_path(s, rng);
  EXPECT_EQ(average_secrecy_rate(t, PowerProfile{std::vector<double>(s.slots(), 0.0)}, s), 0.0);
}

TEST(AverageSecrecyRate, SingleSlotEqualsSlotRate) {
  Scenario s = reference_scenario();
  s.num_slots = 1;
  s.v_horiz = 1000.0;
  std::mt19937_64 rng(2);
  const Trajectory t = random_path(s, rng);
  const PowerProfile p{{0.7}};
  EXPECT_DOUBLE_EQ(average_secrecy_rate(t, p, s), secrecy_rate_per_slot(slot_gains(t, s), p, true)[0]);
}

TEST(AverageSecrecyRate, MatchesDirectSummationOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> up(0.0, 4.0), ua(1.5, 3.5);
  for (int trial = 0; trial < 20; ++trial) {
    Scenario s = reference_scenario(10);
    s.path_loss_exp = ua(rng);
    s.v_horiz = 1e4;
    const Trajectory t = random_path(s, rng);
    PowerProfile p;
    for (std::size_t i = 0; i < s.slots(); ++i) p.p.push_back(up(rng));
    const double ours = average_secrecy_rate(t, p, s);
    EXPECT_NEAR(ours, direct_average(t, p, s), 1e-12 * std::max(1.0, ours));
  }
}

TEST(AverageSecrecyRate, InvariantUnderRelabeling) {
  std::mt19937_64 rng(5);
  Scenario s = reference_scenario(20);
  s.v_horiz = 1e4;
  const Trajectory t = random_path(s, rng);
  const PowerProfile p{std::vector<double>(s.slots(), 1.5)};
  const double base = average_secrecy_rate(t, p, s);
  Scenario r = s;
  std::reverse(r.gn_positions.begin(), r.gn_positions.end());
  std::reverse(r.eve_positions.begin(), r.eve_positions.end());
  EXPECT_NEAR(average_secrecy_rate(t, p, r), base, 1e-14);
}

TEST(Units, Conversions) {
  EXPECT_DOUBLE_EQ(dbm_to_watt(30.0), 1.0);
  EXPECT_NEAR(db_to_linear(50.0), 1e5, 1e-9);
  EXPECT_NEAR(watt_to_dbm(4.0), 30.0 + 10.0 * std::log10(4.0), 1e-12);
}

TEST(ScenarioValidation, RejectsBadInstances) {
  Scenario s = reference_scenario();
  EXPECT_NO_THROW(validate(s));
  Scenario bad = s;
  bad.h_min = 260;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = s;
  bad.p_ave = 5.0;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = s;
  bad.num_slots = 30;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = s;
  bad.eve_positions.clear();
  EXPECT_THROW(validate(bad), ValidationError);
}

TEST(ScenarioValidation, MinimalSlotsForReference) {
  const Scenario s = reference_scenario();
  EXPECT_EQ(minimal_feasible_slots(s), 79);
  Scenario m = s;
  m.num_slots = 79;
  EXPECT_NO_THROW(validate(m));
  m.num_slots = 78;
  EXPECT_THROW(validate(m), ValidationError);
}
