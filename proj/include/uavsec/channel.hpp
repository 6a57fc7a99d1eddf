#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "uavsec/scenario.hpp"

namespace uavsec {

inline constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

/// Channel-power-to-noise ratio of a line-of-sight link:
/// (beta0 / sigma^2) / (horizontal^2 + altitude^2)^(alpha/2).
inline double channel_gain(const Vec2 &uav_q, double uav_h, const Vec2 &ground, double alpha,
                           double ref_gain_over_noise) {
  const double d2 = squared_norm(uav_q - ground) + uav_h * uav_h;
  if (!(d2 > 0.0)) throw std::domain_error("channel_gain: UAV collocated with ground node");
  return ref_gain_over_noise / std::pow(d2, 0.5 * alpha);
}

inline double channel_gain(const Vec2 &uav_q, double uav_h, const Vec2 &ground,
                           const Scenario &s) {
  return channel_gain(uav_q, uav_h, ground, s.path_loss_exp, s.ref_gain_over_noise);
}

/// MRC-combined gains of the cooperating ground nodes (a) and of the colluding
/// eavesdroppers (b) for slots 1..N.
inline SlotGains slot_gains(const Trajectory &t, const Scenario &s) {
  const std::size_t n = t.slots();
  SlotGains g;
  g.a.assign(n, 0.0);
  g.b.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 &q = t.q[i + 1];
    const double h = t.h[i + 1];
    for (const Vec2 &w : s.gn_positions) g.a[i] += channel_gain(q, h, w, s);
    for (const Vec2 &w : s.eve_positions) g.b[i] += channel_gain(q, h, w, s);
  }
  return g;
}

/// log2(1 + a p) - log2(1 + b p) for one slot.
inline double slot_secrecy_rate(double a, double b, double p) {
  return (std::log1p(a * p) - std::log1p(b * p)) * kInvLn2;
}

/// Per-slot secrecy rate in bps/Hz; `clamp` applies [x]^+.
inline std::vector<double> secrecy_rate_per_slot(const SlotGains &g, const PowerProfile &p,
                                                 bool clamp) {
  if (g.a.size() != p.p.size() || g.b.size() != p.p.size())
    throw std::invalid_argument("secrecy_rate_per_slot: length mismatch");
  std::vector<double> r(p.p.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = slot_secrecy_rate(g.a[i], g.b[i], p.p[i]);
    if (clamp && r[i] < 0.0) r[i] = 0.0;
  }
  return r;
}

inline double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Average secrecy rate over the mission (clamped per slot by default).
inline double average_secrecy_rate(const Trajectory &t, const PowerProfile &p, const Scenario &s,
                                   bool clamp = true) {
  return mean(secrecy_rate_per_slot(slot_gains(t, s), p, clamp));
}

} // namespace uavsec
