#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsec/geometry.hpp"

namespace uavsec {

/// Absolute tolerance (native units) for every feasibility check.
inline constexpr double kFeasibilityTol = 1e-6;

/// Raised when a scenario, trajectory or configuration violates an invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1000.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Immutable problem instance. Powers in watts, gains as linear
/// channel-power-to-noise ratios at the 1 m reference distance.
struct Scenario {
  std::vector<Vec2> gn_positions;
  std::vector<Vec2> eve_positions;
  Vec2 q_start;
  Vec2 q_end;
  double h_start = 0.0;
  double h_end = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  double v_horiz = 0.0; // m/s
  double v_up = 0.0;    // m/s
  double v_down = 0.0;  // m/s
  double slot_duration = 0.0;
  int num_slots = 0;
  double path_loss_exp = 2.0;
  double ref_gain_over_noise = 1.0;
  double p_ave = 0.0;
  double p_peak = 0.0;

  // Per-slot displacement limits.
  double max_step() const { return v_horiz * slot_duration; }
  double max_climb() const { return v_up * slot_duration; }
  double max_descent() const { return v_down * slot_duration; }
  double mission_duration() const { return num_slots * slot_duration; }
  std::size_t slots() const { return static_cast<std::size_t>(num_slots); }
};

/// Per-slot UAV states including the fixed endpoints: indices 0..N+1.
struct Trajectory {
  std::vector<Vec2> q;
  std::vector<double> h;

  std::size_t slots() const { return q.size() < 2 ? 0 : q.size() - 2; }
  friend bool operator==(const Trajectory &, const Trajectory &) = default;
};

/// Transmit power per slot 1..N, stored at index n-1.
struct PowerProfile {
  std::vector<double> p;

  std::size_t slots() const { return p.size(); }
  double average() const {
    double s = 0.0;
    for (double v : p) s += v;
    return p.empty() ? 0.0 : s / static_cast<double>(p.size());
  }
  friend bool operator==(const PowerProfile &, const PowerProfile &) = default;
};

/// Effective legitimate (a) and eavesdropper (b) gains per slot, in 1/W.
struct SlotGains {
  std::vector<double> a;
  std::vector<double> b;

  std::size_t slots() const { return a.size(); }
};

namespace detail {
inline void require(bool ok, const std::string &what) {
  if (!ok) throw ValidationError("scenario: " + what);
}
inline bool finite(double v) { return std::isfinite(v); }
} // namespace detail

/// Throws ValidationError naming the first violated invariant.
inline void validate(const Scenario &s) {
  using detail::require;
  require(!s.gn_positions.empty(), "at least one ground node required");
  require(!s.eve_positions.empty(), "at least one eavesdropper required");
  require(s.num_slots >= 1, "num_slots must be >= 1");
  for (double v : {s.h_start, s.h_end, s.h_min, s.h_max, s.v_horiz, s.v_up, s.v_down,
                   s.slot_duration, s.path_loss_exp, s.ref_gain_over_noise, s.p_ave, s.p_peak,
                   s.q_start.x, s.q_start.y, s.q_end.x, s.q_end.y})
    require(detail::finite(v), "all parameters must be finite");
  require(s.slot_duration > 0.0, "slot_duration must be > 0");
  require(s.h_min > 0.0, "h_min must be > 0");
  require(s.h_min <= s.h_max, "h_min must be <= h_max");
  require(s.h_start >= s.h_min && s.h_start <= s.h_max, "h_start must lie in [h_min, h_max]");
  require(s.h_end >= s.h_min && s.h_end <= s.h_max, "h_end must lie in [h_min, h_max]");
  require(s.v_horiz >= 0.0 && s.v_up >= 0.0 && s.v_down >= 0.0, "speeds must be >= 0");
  require(s.p_ave > 0.0, "p_ave must be > 0");
  require(s.p_ave <= s.p_peak, "p_ave must be <= p_peak");
  require(s.path_loss_exp > 0.0, "path_loss_exp must be > 0");
  require(s.ref_gain_over_noise > 0.0, "ref_gain_over_noise must be > 0");

  const double edges = static_cast<double>(s.num_slots + 1);
  require(distance(s.q_end, s.q_start) <= edges * s.max_step() + kFeasibilityTol,
          "q_end unreachable from q_start within the mission duration");
  require(s.h_end - s.h_start <= edges * s.max_climb() + kFeasibilityTol,
          "h_end unreachable from h_start (climb rate)");
  require(s.h_start - s.h_end <= edges * s.max_descent() + kFeasibilityTol,
          "h_end unreachable from h_start (descent rate)");
}

/// Returns a description of the first violated trajectory invariant, if any.
inline std::optional<std::string> trajectory_violation(const Trajectory &t, const Scenario &s,
                                                       double tol = kFeasibilityTol) {
  const std::size_t n = s.slots();
  if (t.q.size() != n + 2 || t.h.size() != n + 2)
    return "trajectory length must be N+2 = " + std::to_string(n + 2);
  if (!(t.q.front() == s.q_start) || !(t.q.back() == s.q_end))
    return std::string("horizontal endpoints differ from scenario");
  if (t.h.front() != s.h_start || t.h.back() != s.h_end)
    return std::string("altitude endpoints differ from scenario");
  for (std::size_t i = 0; i <= n; ++i) {
    const std::string at = " at edge " + std::to_string(i);
    if (!(distance(t.q[i + 1], t.q[i]) <= s.max_step() + tol)) return "horizontal speed" + at;
    const double dh = t.h[i + 1] - t.h[i];
    if (!(dh <= s.max_climb() + tol)) return "climb rate" + at;
    if (!(-dh <= s.max_descent() + tol)) return "descent rate" + at;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    if (!(t.h[i] >= s.h_min - tol && t.h[i] <= s.h_max + tol))
      return "altitude box at slot " + std::to_string(i);
  }
  return std::nullopt;
}

inline std::optional<std::string> power_violation(const PowerProfile &p, const Scenario &s,
                                                  double tol = kFeasibilityTol) {
  if (p.p.size() != s.slots()) return "power profile length must be N = " + std::to_string(s.slots());
  for (std::size_t i = 0; i < p.p.size(); ++i) {
    if (!(p.p[i] >= -tol && p.p[i] <= s.p_peak + tol))
      return "peak power at slot " + std::to_string(i + 1);
  }
  if (!(p.average() <= s.p_ave + tol)) return std::string("average power budget");
  return std::nullopt;
}

inline void require_feasible(const Trajectory &t, const Scenario &s) {
  if (auto v = trajectory_violation(t, s)) throw ValidationError("trajectory: " + *v);
}

/// Number of slots for a mission of `duration` seconds at the given slot length.
inline int slots_for_duration(double duration, double slot_duration) {
  return static_cast<int>(std::lround(duration / slot_duration));
}

/// The reference deployment: three ground nodes in a row, two eavesdroppers
/// between them and the straight flight corridor.
inline Scenario reference_scenario(double mission_duration = 60.0) {
  Scenario s;
  s.gn_positions = {{-100.0, 300.0}, {0.0, 300.0}, {100.0, 300.0}};
  s.eve_positions = {{-100.0, 100.0}, {100.0, 100.0}};
  s.q_start = {-500.0, 0.0};
  s.q_end = {500.0, 0.0};
  s.h_start = 200.0;
  s.h_end = 200.0;
  s.h_min = 150.0;
  s.h_max = 250.0;
  s.v_horiz = 25.0;
  s.v_up = 4.0;
  s.v_down = 6.0;
  s.slot_duration = 0.5;
  s.num_slots = slots_for_duration(mission_duration, s.slot_duration);
  s.path_loss_exp = 2.0;
  s.ref_gain_over_noise = db_to_linear(50.0);
  s.p_ave = dbm_to_watt(30.0);
  s.p_peak = 4.0 * s.p_ave;
  return s;
}

/// Smallest slot count for which the endpoints are horizontally reachable.
inline int minimal_feasible_slots(const Scenario &s) {
  const double v = s.max_step();
  if (v <= 0.0) return 1;
  const double edges = std::ceil(distance(s.q_end, s.q_start) / v - 1e-12);
  return std::max(1, static_cast<int>(edges) - 1);
}

} // namespace uavsec
