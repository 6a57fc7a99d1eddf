#pragma once

// Log-barrier interior-point maximization of a slot-separable concave
// objective over the UAV kinematic set:
//
//   |q[n+1] - q[n]| <= V,  -V_down <= h[n+1] - h[n] <= V_up   (n = 0..N)
//   h_min <= h[n] <= h_max                                  (n = 1..N)
//
// with both endpoints fixed. Every constraint couples at most two consecutive
// slots, so the Newton system is block tridiagonal with 3x3 blocks and is
// solved in O(N).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "uavsec/scenario.hpp"

namespace uavsec {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct ChainBounds {
  Vec2 q_start;
  Vec2 q_end;
  double h_start = 0.0;
  double h_end = 0.0;
  double max_step = 0.0;
  double max_climb = 0.0;
  double max_descent = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  std::size_t slots = 0;

  static ChainBounds from(const Scenario &s) {
    return {s.q_start, s.q_end, s.h_start, s.h_end, s.max_step(), s.max_climb(),
            s.max_descent(), s.h_min, s.h_max, s.slots()};
  }
};

/// Value, gradient and Hessian of one slot's objective term in (x, y, h).
struct SlotTerm {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
};

struct BarrierOptions {
  double gap_tol = 1e-10;       // stop when (#barrier terms)/t falls below this
  double initial_gap = 1.0;
  double t_growth = 10.0;
  double centering_tol = 1e-10; // half squared Newton decrement, relative to max(1, |F|)
  int max_newton = 2000;
};

struct ChainSolveResult {
  Trajectory traj;
  double objective = 0.0;
  int newton_iters = 0;
  bool ok = false;
  std::string message;
};

/// Which coordinate groups have a nonempty interior and are optimized.
struct FreeComponents {
  bool q = false;
  bool h = false;
};

/// Strictly feasible altitude profile, or nullopt when the altitude set has
/// (numerically) empty interior.
inline std::optional<std::vector<double>> interior_altitude(const ChainBounds &c) {
  const std::size_t n = c.slots;
  const double span = std::min(c.h_max - c.h_min, c.max_climb + c.max_descent);
  if (!(span > 0.0)) return std::nullopt;
  for (double margin = 0.25 * span; margin >= 1e-7; margin *= 0.5) {
    const double lo_box = c.h_min + margin;
    const double hi_box = c.h_max - margin;
    const double up = c.max_climb - margin;
    const double down = c.max_descent - margin;
    if (lo_box > hi_box || up < -down) continue;
    // Backward-reachable intervals from h_end under the tightened limits.
    std::vector<double> blo(n + 2), bhi(n + 2);
    blo[n + 1] = bhi[n + 1] = c.h_end;
    bool ok = true;
    for (std::size_t i = n + 1; i-- > 1;) {
      blo[i] = std::max(lo_box, blo[i + 1] - up);
      bhi[i] = std::min(hi_box, bhi[i + 1] + down);
      if (blo[i] > bhi[i]) { ok = false; break; }
    }
    if (!ok) continue;
    const double mid = 0.5 * (c.h_min + c.h_max);
    std::vector<double> h(n + 2);
    h[0] = c.h_start;
    h[n + 1] = c.h_end;
    for (std::size_t i = 1; i <= n && ok; ++i) {
      const double lo = std::max(blo[i], h[i - 1] - down);
      const double hi = std::min(bhi[i], h[i - 1] + up);
      if (lo > hi) ok = false;
      else h[i] = std::clamp(mid, lo, hi);
    }
    if (ok && h[n + 1] - h[n] <= up && h[n] - h[n + 1] <= down) return h;
  }
  return std::nullopt;
}

inline FreeComponents free_components(const ChainBounds &c) {
  FreeComponents f;
  const double edges = static_cast<double>(c.slots + 1);
  const double slack = c.max_step - distance(c.q_end, c.q_start) / edges;
  f.q = c.max_step > 0.0 && slack > 1e-6 * std::max(1.0, c.max_step);
  f.h = interior_altitude(c).has_value();
  return f;
}

/// Strictly interior point for the free components; fixed components are
/// copied from `base`.
inline Trajectory interior_reference(const ChainBounds &c, const FreeComponents &free,
                                     const Trajectory &base) {
  Trajectory t = base;
  const std::size_t n = c.slots;
  if (free.q) {
    for (std::size_t i = 1; i <= n; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(n + 1);
      t.q[i] = c.q_start + s * (c.q_end - c.q_start);
    }
  }
  if (free.h) t.h = *interior_altitude(c);
  return t;
}

namespace detail {

class ChainBarrier {
public:
  ChainBarrier(const ChainBounds &c, FreeComponents free) : c_(c), free_(free) {}

  std::size_t terms() const {
    const std::size_t n = c_.slots;
    return (free_.q ? n + 1 : 0) + (free_.h ? 2 * (n + 1) + 2 * n : 0);
  }

  /// Adds the barrier to value/gradient/negated Hessian. Returns false when
  /// a constraint is not strictly satisfied.
  bool accumulate(const std::vector<Vec3> &x, double &value, std::vector<Vec3> *grad,
                  std::vector<Mat3> *diag, std::vector<Mat3> *off) const {
    const std::size_t n = c_.slots;
    const double v2 = c_.max_step * c_.max_step;
    for (std::size_t e = 0; e <= n; ++e) {
      const bool first_free = e >= 1;
      const bool second_free = e + 1 <= n;
      if (free_.q) {
        const Eigen::Vector2d d = x[e + 1].head<2>() - x[e].head<2>();
        const double s = v2 - d.squaredNorm();
        if (!(s > 0.0)) return false;
        value += std::log(s);
        if (grad) {
          const Eigen::Vector2d gd = -2.0 * d / s; // d/dd of log(s)
          const Eigen::Matrix2d m =
              2.0 / s * Eigen::Matrix2d::Identity() + 4.0 / (s * s) * d * d.transpose();
          if (second_free) {
            (*grad)[e + 1].head<2>() += gd;
            (*diag)[e + 1].topLeftCorner<2, 2>() += m;
          }
          if (first_free) {
            (*grad)[e].head<2>() -= gd;
            (*diag)[e].topLeftCorner<2, 2>() += m;
          }
          if (first_free && second_free) (*off)[e].topLeftCorner<2, 2>() -= m;
        }
      }
      if (free_.h) {
        const double dh = x[e + 1](2) - x[e](2);
        const double s1 = c_.max_climb - dh;
        const double s2 = c_.max_descent + dh;
        if (!(s1 > 0.0) || !(s2 > 0.0)) return false;
        value += std::log(s1) + std::log(s2);
        if (grad) {
          const double g = -1.0 / s1 + 1.0 / s2;
          const double m = 1.0 / (s1 * s1) + 1.0 / (s2 * s2);
          if (second_free) {
            (*grad)[e + 1](2) += g;
            (*diag)[e + 1](2, 2) += m;
          }
          if (first_free) {
            (*grad)[e](2) -= g;
            (*diag)[e](2, 2) += m;
          }
          if (first_free && second_free) (*off)[e](2, 2) -= m;
        }
      }
    }
    if (free_.h) {
      for (std::size_t i = 1; i <= n; ++i) {
        const double s1 = x[i](2) - c_.h_min;
        const double s2 = c_.h_max - x[i](2);
        if (!(s1 > 0.0) || !(s2 > 0.0)) return false;
        value += std::log(s1) + std::log(s2);
        if (grad) {
          (*grad)[i](2) += 1.0 / s1 - 1.0 / s2;
          (*diag)[i](2, 2) += 1.0 / (s1 * s1) + 1.0 / (s2 * s2);
        }
      }
    }
    return true;
  }

private:
  ChainBounds c_;
  FreeComponents free_;
};

/// Solves Q d = g for a symmetric positive definite block-tridiagonal Q
/// given by diagonal blocks diag[1..n] and upper blocks off[i] = Q(i, i+1).
inline bool solve_block_tridiagonal(const std::vector<Mat3> &diag, const std::vector<Mat3> &off,
                                    const std::vector<Vec3> &g, std::size_t n,
                                    std::vector<Vec3> &d) {
  std::vector<Eigen::LLT<Mat3>> fac(n + 1);
  std::vector<Vec3> z(n + 2, Vec3::Zero());
  Mat3 s = diag[1];
  z[1] = g[1];
  for (std::size_t i = 1; i <= n; ++i) {
    if (i > 1) {
      const Mat3 w = fac[i - 1].solve(off[i - 1]);
      s = diag[i] - off[i - 1].transpose() * w;
      z[i] = g[i] - off[i - 1].transpose() * fac[i - 1].solve(z[i - 1]);
    }
    fac[i].compute(s);
    if (fac[i].info() != Eigen::Success) return false;
  }
  d.assign(n + 2, Vec3::Zero());
  d[n] = fac[n].solve(z[n]);
  for (std::size_t i = n; i-- > 1;) d[i] = fac[i].solve(z[i] - off[i] * d[i + 1]);
  for (const Vec3 &v : d)
    if (!v.allFinite()) return false;
  return true;
}

inline std::vector<Vec3> to_points(const Trajectory &t) {
  std::vector<Vec3> x(t.q.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = Vec3(t.q[i].x, t.q[i].y, t.h[i]);
  return x;
}

inline Trajectory to_trajectory(const std::vector<Vec3> &x, const Trajectory &endpoints) {
  Trajectory t = endpoints;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    t.q[i] = {x[i](0), x[i](1)};
    t.h[i] = x[i](2);
  }
  return t;
}

} // namespace detail

/// Maximizes sum_n f(n, x[n]) over the kinematic set, starting from the
/// strictly interior point `start`. Components not marked free keep their
/// values from `start`.
///
/// `f(n, x, need_derivatives)` returns std::optional<SlotTerm>, empty when x
/// lies outside the objective's domain; n runs over 1..N.
template <class SlotFn>
ChainSolveResult maximize_on_chain(const ChainBounds &c, FreeComponents free, const SlotFn &f,
                                   const Trajectory &start, const BarrierOptions &opt = {}) {
  ChainSolveResult res;
  const std::size_t n = c.slots;
  std::vector<Vec3> x = detail::to_points(start);
  const detail::ChainBarrier barrier(c, free);
  const double m = static_cast<double>(barrier.terms());

  auto objective = [&](const std::vector<Vec3> &pt, double &value) {
    value = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      auto term = f(i, pt[i], false);
      if (!term) return false;
      value += term->value;
    }
    return true;
  };

  if (!free.q && !free.h) {
    res.ok = objective(x, res.objective);
    res.traj = start;
    if (!res.ok) res.message = "start outside objective domain";
    return res;
  }

  std::vector<Vec3> grad(n + 2), step;
  std::vector<Mat3> diag(n + 2), off(n + 2);

  // Mask for fixed coordinates: identity rows decouple them in the solve.
  auto mask = [&](std::vector<Vec3> &g, std::vector<Mat3> &dg, std::vector<Mat3> &od) {
    for (std::size_t i = 1; i <= n; ++i) {
      for (int k = 0; k < 3; ++k) {
        const bool is_free = k < 2 ? free.q : free.h;
        if (is_free) continue;
        g[i](k) = 0.0;
        dg[i].row(k).setZero();
        dg[i].col(k).setZero();
        dg[i](k, k) = 1.0;
        od[i].row(k).setZero();
        od[i].col(k).setZero();
        if (i > 1) {
          od[i - 1].col(k).setZero();
        }
      }
    }
  };

  // Barrier-augmented value F = t f + phi, plus ascent gradient and -Hessian.
  auto evaluate = [&](const std::vector<Vec3> &pt, double t, bool derivs, double &value) {
    value = 0.0;
    if (derivs) {
      std::fill(grad.begin(), grad.end(), Vec3::Zero());
      std::fill(diag.begin(), diag.end(), Mat3::Zero());
      std::fill(off.begin(), off.end(), Mat3::Zero());
    }
    for (std::size_t i = 1; i <= n; ++i) {
      auto term = f(i, pt[i], derivs);
      if (!term) return false;
      value += t * term->value;
      if (derivs) {
        grad[i] += t * term->grad;
        diag[i] -= t * term->hess;
      }
    }
    if (!barrier.accumulate(pt, value, derivs ? &grad : nullptr, derivs ? &diag : nullptr,
                            derivs ? &off : nullptr))
      return false;
    if (derivs) mask(grad, diag, off);
    return true;
  };

  auto directional = [&](const std::vector<Vec3> &d) {
    double s = 0.0;
    for (std::size_t i = 1; i <= n; ++i) s += grad[i].dot(d[i]);
    return s;
  };

  double value = 0.0;
  if (!evaluate(x, 1.0, false, value)) {
    res.message = "start point not strictly feasible";
    res.traj = start;
    return res;
  }

  // Initial weight: at most m / initial_gap, and small enough that the
  // objective does not swamp the barrier at the start (least-squares
  // balance of the two gradients).
  double t = m / opt.initial_gap;
  {
    evaluate(x, 0.0, true, value);
    const std::vector<Vec3> barrier_grad = grad;
    evaluate(x, 1.0, true, value);
    double ff = 0.0, fb = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const Vec3 gf = grad[i] - barrier_grad[i];
      ff += gf.squaredNorm();
      fb += gf.dot(barrier_grad[i]);
    }
    if (ff > 0.0) t = std::min(t, std::max(-fb / ff, std::sqrt(m / ff) * 1e-3));
    evaluate(x, t, false, value);
  }

  int iters = 0;
  bool failed = false;
  while (!failed) {
    for (;;) {
      if (iters >= opt.max_newton) break;
      evaluate(x, t, true, value);
      std::vector<Mat3> dg = diag;
      bool solved = detail::solve_block_tridiagonal(dg, off, grad, n, step);
      for (double reg = 1e-12; !solved && reg < 1e12; reg *= 100.0) {
        // Lift an indefinite Hessian (possible for path-loss exponents < 1).
        double scale = 0.0;
        for (std::size_t i = 1; i <= n; ++i) scale = std::max(scale, diag[i].norm());
        for (std::size_t i = 1; i <= n; ++i) dg[i] = diag[i] + reg * scale * Mat3::Identity();
        solved = detail::solve_block_tridiagonal(dg, off, grad, n, step);
      }
      if (!solved) { failed = true; res.message = "Newton system singular"; break; }
      ++iters;
      const double lambda2 = directional(step);
      if (!(lambda2 > 0.0) || 0.5 * lambda2 <= opt.centering_tol * std::max(1.0, std::abs(value)))
        break;

      // Backtracking along the Newton direction: accept once the slope is
      // still non-negative (concave along the ray) or Armijo holds.
      const double previous = value;
      double s = 1.0;
      bool accepted = false;
      std::vector<Vec3> trial(x);
      for (int ls = 0; ls < 80; ++ls, s *= 0.5) {
        for (std::size_t i = 1; i <= n; ++i) trial[i] = x[i] + s * step[i];
        double v_new = 0.0;
        if (!evaluate(trial, t, true, v_new)) continue;
        if (directional(step) >= 0.0 || v_new >= value + 0.25 * s * lambda2) {
          accepted = true;
          value = v_new;
          break;
        }
      }
      if (!accepted) break; // numerically centered
      const bool progress = value > previous;
      x.swap(trial);
      if (!progress) break;
    }
    if (failed || iters >= opt.max_newton) break;
    if (m / t <= opt.gap_tol) break;
    t *= opt.t_growth;
  }

  res.newton_iters = iters;
  if (!failed && iters >= opt.max_newton) res.message = "Newton iteration cap reached";
  res.traj = detail::to_trajectory(x, start);
  res.ok = !failed && objective(x, res.objective);
  if (!res.ok && res.message.empty()) res.message = "final point outside objective domain";
  return res;
}

} // namespace uavsec
