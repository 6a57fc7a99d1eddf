#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "uavsec/channel.hpp"

namespace uavsec {

/// Optimal power schedule for a fixed trajectory.
struct PowerSolution {
  PowerProfile profile;
  double multiplier = 0.0;          // price on the average-power budget
  std::vector<std::size_t> active;  // 0-based slots with a > b
  double objective = 0.0;           // (1/N) sum of unclamped rates
  int bisection_iters = 0;
};

/// Slots where the legitimate link is strictly stronger; ties are inactive.
inline std::vector<std::size_t> active_slot_set(const SlotGains &g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.a.size(); ++i)
    if (g.a[i] > g.b[i]) out.push_back(i);
  return out;
}

/// d/dp of log2(1+ap) - log2(1+bp).
inline double marginal_rate(double a, double b, double p) {
  return kInvLn2 * (a / (1.0 + a * p) - b / (1.0 + b * p));
}

/// Stationary power of one slot at price `nu`, ignoring the peak cap.
///
/// Solves marginal_rate(a, b, p) = nu for p >= 0. The root of
/// a b p^2 + (a+b) p + 1 - (a-b)/(nu ln2) = 0 is evaluated in the
/// cancellation-free form 2 (k - 1) / (sqrt(D) + a + b), k = (a-b)/(nu ln2).
inline double unconstrained_slot_power(double a, double b, double nu) {
  if (!(a > b)) return 0.0;
  if (nu <= 0.0) return std::numeric_limits<double>::infinity();
  const double k = (a - b) * kInvLn2 / nu;
  if (k <= 1.0) return 0.0;
  const double d = (a - b) * (a - b) + 4.0 * a * b * k;
  return std::max(0.0, 2.0 * (k - 1.0) / (std::sqrt(d) + a + b));
}

namespace detail {
inline double capped_power(double a, double b, double nu, double p_peak) {
  return std::min(p_peak, unconstrained_slot_power(a, b, nu));
}
} // namespace detail

/// Globally optimal schedule under the average and peak power limits.
///
/// The price is zero when every active slot can run at peak within budget;
/// otherwise it is found by bisection on the (monotone) budget residual, with
/// the peak cap applied inside the residual.
inline PowerSolution solve_power(const SlotGains &g, double p_ave, double p_peak) {
  const std::size_t n = g.a.size();
  PowerSolution sol;
  sol.profile.p.assign(n, 0.0);
  sol.active = active_slot_set(g);
  if (sol.active.empty() || n == 0) return sol;

  const double budget = p_ave * static_cast<double>(n);
  auto total = [&](double nu) {
    double s = 0.0;
    for (std::size_t i : sol.active) s += detail::capped_power(g.a[i], g.b[i], nu, p_peak);
    return s;
  };

  double nu = 0.0;
  if (p_peak * static_cast<double>(sol.active.size()) > budget) {
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i : sol.active) hi = std::max(hi, (g.a[i] - g.b[i]) * kInvLn2);
    // total(lo) > budget, total(hi) = 0 < budget.
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      ++sol.bisection_iters;
      const double r = total(mid) - budget;
      if (r > 0.0) {
        lo = mid;
      } else {
        hi = mid;
        if (-r <= 1e-13 * budget) break;
      }
    }
    nu = hi; // feasible side
  }
  sol.multiplier = nu;
  double obj = 0.0;
  for (std::size_t i : sol.active) {
    const double p = nu > 0.0 ? detail::capped_power(g.a[i], g.b[i], nu, p_peak) : p_peak;
    sol.profile.p[i] = p;
    obj += slot_secrecy_rate(g.a[i], g.b[i], p);
  }
  sol.objective = obj / static_cast<double>(n);
  return sol;
}

inline PowerSolution solve_power(const SlotGains &g, const Scenario &s) {
  return solve_power(g, s.p_ave, s.p_peak);
}

} // namespace uavsec
