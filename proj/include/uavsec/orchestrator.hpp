#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavsec/channel.hpp"
#include "uavsec/config.hpp"
#include "uavsec/init.hpp"
#include "uavsec/power.hpp"
#include "uavsec/sca.hpp"

namespace uavsec {

enum class Scheme {
  joint3d,      // alternating power / 3D trajectory optimization
  joint2d,      // same with the altitude frozen at SolverConfig::joint2d_altitude
  fhf_adaptive, // fly-hover-fly trajectory, optimal power
  fhf_constant, // fly-hover-fly trajectory, p[n] = P_ave
};

inline constexpr Scheme kAllSchemes[] = {Scheme::joint3d, Scheme::joint2d, Scheme::fhf_adaptive,
                                         Scheme::fhf_constant};

inline std::string_view to_string(Scheme s) {
  switch (s) {
  case Scheme::joint3d: return "joint3d";
  case Scheme::joint2d: return "joint2d";
  case Scheme::fhf_adaptive: return "fhf_adaptive";
  case Scheme::fhf_constant: return "fhf_constant";
  }
  return "unknown";
}

inline std::optional<Scheme> parse_scheme(std::string_view name) {
  for (Scheme s : kAllSchemes)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

struct PerSlot {
  std::vector<double> rate; // clamped secrecy rate
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> p;
  std::vector<double> h;
};

struct SolveReport {
  Scheme scheme = Scheme::joint3d;
  Scenario scenario;                   // the instance actually solved
  std::vector<double> objective_trace; // clamped average rate; entry 0 is the initialization
  Trajectory final_traj;
  PowerProfile final_power;
  PerSlot per_slot;
  double objective = 0.0;
  int outer_iters = 0;
  int sca_iters = 0;
  bool converged = false;
  double wall_time = 0.0;
};

namespace detail {

inline PerSlot per_slot_view(const Trajectory &t, const PowerProfile &p, const Scenario &s) {
  PerSlot v;
  const SlotGains g = slot_gains(t, s);
  v.rate = secrecy_rate_per_slot(g, p, true);
  v.a = g.a;
  v.b = g.b;
  v.p = p.p;
  v.h.assign(t.h.begin() + 1, t.h.end() - 1);
  return v;
}

} // namespace detail

/// Scenario seen by a scheme: joint2d pins the altitude box to one value.
inline Scenario scheme_scenario(const Scenario &s, Scheme scheme, const SolverConfig &cfg) {
  Scenario out = s;
  if (scheme == Scheme::joint2d) {
    out.h_min = cfg.joint2d_altitude;
    out.h_max = cfg.joint2d_altitude;
  }
  return out;
}

/// Runs one scheme end to end. For the joint schemes the power step comes
/// first, then trajectory and power alternate until the clamped average
/// secrecy rate improves by less than outer_rel_tol (relative).
inline SolveReport solve_joint(const Scenario &scenario, const SolverConfig &cfg, Scheme scheme) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(cfg);
  const Scenario s = scheme_scenario(scenario, scheme, cfg);
  validate(s);

  SolveReport rep;
  rep.scheme = scheme;
  rep.scenario = s;
  Trajectory traj = fly_hover_fly_init(s);
  PowerProfile power;

  if (scheme == Scheme::fhf_constant) {
    power.p.assign(s.slots(), s.p_ave);
  } else {
    power = solve_power(slot_gains(traj, s), s).profile;
  }
  double obj = average_secrecy_rate(traj, power, s);
  rep.objective_trace.push_back(obj);
  rep.converged = true;

  if (scheme == Scheme::joint3d || scheme == Scheme::joint2d) {
    rep.converged = false;
    for (int it = 0; it < cfg.outer_max_iters; ++it) {
      const TrajectoryResult tr = optimize_trajectory(traj, power, s, cfg);
      rep.sca_iters += tr.iterations;
      const PowerProfile next_power = solve_power(slot_gains(tr.traj, s), s).profile;
      const double next = average_secrecy_rate(tr.traj, next_power, s);
      ++rep.outer_iters;
      if (next < obj) { // cannot happen beyond rounding; keep the incumbent
        rep.objective_trace.push_back(obj);
        rep.converged = true;
        break;
      }
      traj = tr.traj;
      power = next_power;
      rep.objective_trace.push_back(next);
      const bool small = next - obj <= cfg.outer_rel_tol * std::max(std::abs(obj), 1e-12);
      obj = next;
      if (small) {
        rep.converged = true;
        break;
      }
    }
  }

  rep.final_traj = traj;
  rep.final_power = power;
  rep.objective = obj;
  rep.per_slot = detail::per_slot_view(traj, power, s);
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

} // namespace uavsec
