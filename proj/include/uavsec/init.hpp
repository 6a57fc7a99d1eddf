#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "uavsec/scenario.hpp"

namespace uavsec {

/// Index of the ground node minimizing the summed distance to all others;
/// lowest index wins ties.
inline std::size_t central_gn_index(const std::vector<Vec2> &gns) {
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gns.size(); ++k) {
    double sum = 0.0;
    for (const Vec2 &w : gns) sum += distance(gns[k], w);
    if (sum < best_sum) {
      best_sum = sum;
      best = k;
    }
  }
  return best;
}

namespace detail {

inline Vec2 toward(const Vec2 &from, const Vec2 &to, double step) {
  const double len = distance(to, from);
  if (len <= step || len == 0.0) return to;
  return from + (step / len) * (to - from);
}

/// Horizontal fly-hover-fly path over `edges` steps of length <= v.
inline std::vector<Vec2> fly_hover_fly_xy(const Vec2 &start, const Vec2 &hover, const Vec2 &end,
                                          double v, std::size_t edges) {
  std::vector<Vec2> q(edges + 1);
  q.front() = start;
  q.back() = end;
  if (edges == 0) return q;
  const double out_len = distance(hover, start);
  const double back_len = distance(end, hover);
  const auto steps_for = [v](double len) {
    return v > 0.0 ? static_cast<std::size_t>(std::ceil(len / v - 1e-12)) : (len > 0.0 ? SIZE_MAX : 0);
  };
  const std::size_t out_steps = steps_for(out_len);
  const std::size_t back_steps = steps_for(back_len);

  if (out_steps != SIZE_MAX && back_steps != SIZE_MAX && out_steps + back_steps <= edges) {
    // Reachable: max speed out, hover, max speed back.
    for (std::size_t i = 1; i < edges; ++i) {
      const std::size_t to_end = edges - i;
      if (to_end < back_steps) {
        q[i] = detail::toward(end, hover, static_cast<double>(to_end) * v);
      } else {
        q[i] = detail::toward(start, hover, static_cast<double>(i) * v);
      }
    }
    return q;
  }

  // Turnpike truncation: head for the hover point at max speed while the end
  // remains reachable, then fly straight to the end at max speed.
  const Vec2 dir = out_len > 0.0 ? (1.0 / out_len) * (hover - start) : Vec2{};
  std::size_t i = 0;
  Vec2 cur = start;
  while (i + 1 < edges) {
    const Vec2 next = cur + v * dir;
    if (distance(end, next) > static_cast<double>(edges - i - 1) * v) break;
    cur = next;
    q[++i] = cur;
  }
  if (i + 1 < edges) {
    // Partial step along the ray: largest s in [0, v] keeping the end
    // reachable, else a full step toward the end.
    const double reach = static_cast<double>(edges - i - 1) * v;
    const Vec2 w = cur - end;
    // |w + s dir|^2 = reach^2  ->  s^2 + 2 (w.dir) s + |w|^2 - reach^2 = 0
    const double bq = dot(w, dir);
    const double cq = squared_norm(w) - reach * reach;
    const double disc = bq * bq - cq;
    // Admissible s form the interval between the two roots.
    const double root = disc >= 0.0 ? std::sqrt(disc) : -1.0;
    const double s_hi = std::min(v, -bq + root);
    if (root >= 0.0 && s_hi >= std::max(0.0, -bq - root)) {
      cur = cur + s_hi * dir;
    } else {
      cur = detail::toward(cur, end, v);
    }
    q[++i] = cur;
    const std::size_t rest = edges - i;
    for (std::size_t j = 1; j < rest; ++j) {
      const double f = static_cast<double>(j) / static_cast<double>(rest);
      q[i + j] = cur + f * (end - cur);
    }
  }
  return q;
}

} // namespace detail

/// Fly-hover-fly initial trajectory: fly at maximum speed toward the point
/// above the most central ground node, hover there as long as possible, then
/// fly at maximum speed to the final location. Altitude holds at
/// clamp(h_start, h_min, h_max) and ramps at the end-point rates.
inline Trajectory fly_hover_fly_init(const Scenario &s) {
  validate(s);
  const std::size_t n = s.slots();
  const std::size_t edges = n + 1;
  const Vec2 hover = s.gn_positions[central_gn_index(s.gn_positions)];

  Trajectory t;
  t.q = detail::fly_hover_fly_xy(s.q_start, hover, s.q_end, s.max_step(), edges);
  t.q.front() = s.q_start;
  t.q.back() = s.q_end;

  // Altitude: target clamped into the reachable band from both ends.
  const double target = std::clamp(s.h_start, s.h_min, s.h_max);
  t.h.resize(n + 2);
  t.h.front() = s.h_start;
  t.h.back() = s.h_end;
  for (std::size_t i = 1; i <= n; ++i) {
    const double fi = static_cast<double>(i);
    const double bi = static_cast<double>(edges - i);
    const double lo = std::max(s.h_start - fi * s.max_descent(), s.h_end - bi * s.max_climb());
    const double hi = std::min(s.h_start + fi * s.max_climb(), s.h_end + bi * s.max_descent());
    t.h[i] = std::clamp(target, std::min(lo, hi), hi);
  }
  if (auto v = trajectory_violation(t, s))
    throw ValidationError("fly-hover-fly initialization infeasible: " + *v);
  return t;
}

} // namespace uavsec
