#pragma once

// Successive convex approximation of the trajectory subproblem for a fixed
// power schedule.
//
// With auxiliary variables zeta_k >= d_k^alpha (ground nodes) and
// eta_j <= d_ej^alpha (eavesdroppers) the per-slot rate
//
//   R^[n] = log2(1 + sum_k c/zeta_k) - log2(1 + sum_j c/eta_j),  c = (beta0/sigma^2) p[n]
//
// is made concave by linearizing the first log in zeta around the expansion
// point and replacing d_ej^alpha by its first-order Taylor minorant E_lb.
// The surrogate is decreasing in every zeta_k and increasing in every eta_j,
// so at the optimum zeta_k = d_k^alpha and eta_j = E_lb; both are substituted
// and the reduced problem is solved over (q, h) only.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

#include "uavsec/chain_solver.hpp"
#include "uavsec/channel.hpp"
#include "uavsec/config.hpp"

namespace uavsec {

/// Expansion point of one SCA iteration with the auxiliaries it induces
/// (K x N and J x N, column n-1 for slot n).
struct SurrogatePoint {
  Trajectory traj_local;
  Eigen::MatrixXd zeta_local;
  Eigen::MatrixXd eta_local;
};

/// d^alpha between a UAV state and a ground position.
inline double distance_pow(const Vec2 &q, double h, const Vec2 &w, double alpha) {
  return std::pow(squared_norm(q - w) + h * h, 0.5 * alpha);
}

inline SurrogatePoint make_surrogate_point(const Trajectory &t, const Scenario &s) {
  const std::size_t n = t.slots();
  SurrogatePoint p;
  p.traj_local = t;
  p.zeta_local.resize(static_cast<Eigen::Index>(s.gn_positions.size()), static_cast<Eigen::Index>(n));
  p.eta_local.resize(static_cast<Eigen::Index>(s.eve_positions.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < s.gn_positions.size(); ++k)
      p.zeta_local(static_cast<Eigen::Index>(k), col) =
          distance_pow(t.q[i + 1], t.h[i + 1], s.gn_positions[k], s.path_loss_exp);
    for (std::size_t j = 0; j < s.eve_positions.size(); ++j)
      p.eta_local(static_cast<Eigen::Index>(j), col) =
          distance_pow(t.q[i + 1], t.h[i + 1], s.eve_positions[j], s.path_loss_exp);
  }
  return p;
}

/// Affine minorant of (|q - w_e|^2 + h^2)^(alpha/2) built at (q0, h0); exact
/// at the expansion point.
inline double eavesdropper_distance_lb(const Vec2 &q, double h, const Vec2 &q0, double h0,
                                       const Vec2 &w_e, double alpha) {
  const Vec2 u0 = q0 - w_e;
  const double r0 = squared_norm(u0) + h0 * h0;
  const double slope = alpha * std::pow(r0, 0.5 * (alpha - 2.0));
  return slope * (h0 * (h - h0) + dot(u0, q - q0)) + std::pow(r0, 0.5 * alpha);
}

/// Average SCA surrogate for explicit auxiliaries: the legitimate log is
/// linearized in zeta around the expansion point, the eavesdropper log is exact.
inline double surrogate_rate(const Eigen::MatrixXd &zeta, const Eigen::MatrixXd &eta,
                             const PowerProfile &power, const SurrogatePoint &point,
                             const Scenario &s) {
  const std::size_t n = power.slots();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double c = s.ref_gain_over_noise * power.p[i];
    if (c == 0.0) continue;
    double s0 = 0.0;
    double lin = 0.0;
    for (Eigen::Index k = 0; k < zeta.rows(); ++k) {
      const double z0 = point.zeta_local(k, col);
      s0 += c / z0;
      lin += c / (z0 * z0) * (zeta(k, col) - z0);
    }
    double se = 0.0;
    for (Eigen::Index j = 0; j < eta.rows(); ++j) se += c / eta(j, col);
    total += (std::log1p(s0) - lin / (1.0 + s0) - std::log1p(se)) * kInvLn2;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

/// Surrogate with the auxiliaries eliminated: a concave, slot-separable
/// function of the UAV states. Slot terms include the 1/N averaging.
class ReducedSurrogate {
public:
  ReducedSurrogate(const SurrogatePoint &point, const PowerProfile &power, const Scenario &s,
                   double eta_floor = 1e-6)
      : gns_(s.gn_positions), eves_(s.eve_positions), alpha_(s.path_loss_exp),
        eta_floor_(eta_floor) {
    const std::size_t n = power.slots();
    scale_ = n == 0 ? 0.0 : kInvLn2 / static_cast<double>(n);
    slots_.resize(n);
    const Trajectory &t = point.traj_local;
    for (std::size_t i = 0; i < n; ++i) {
      Slot &sl = slots_[i];
      const auto col = static_cast<Eigen::Index>(i);
      sl.c = s.ref_gain_over_noise * power.p[i];
      if (sl.c == 0.0) continue;
      double s0 = 0.0;
      for (std::size_t k = 0; k < gns_.size(); ++k) s0 += sl.c / point.zeta_local(static_cast<Eigen::Index>(k), col);
      sl.constant = std::log1p(s0);
      sl.weights.resize(gns_.size());
      for (std::size_t k = 0; k < gns_.size(); ++k) {
        const double z0 = point.zeta_local(static_cast<Eigen::Index>(k), col);
        sl.weights[k] = sl.c / (z0 * z0) / (1.0 + s0);
        sl.constant += sl.weights[k] * z0;
      }
      const Vec2 q0 = t.q[i + 1];
      const double h0 = t.h[i + 1];
      sl.x0 = Vec3(q0.x, q0.y, h0);
      sl.e0.resize(eves_.size());
      sl.slope.resize(eves_.size());
      for (std::size_t j = 0; j < eves_.size(); ++j) {
        const Vec2 u0 = q0 - eves_[j];
        const double r0 = squared_norm(u0) + h0 * h0;
        sl.e0[j] = std::pow(r0, 0.5 * alpha_);
        sl.slope[j] = alpha_ * std::pow(r0, 0.5 * (alpha_ - 2.0)) * Vec3(u0.x, u0.y, h0);
      }
    }
  }

  std::size_t slots() const { return slots_.size(); }

  /// Term of slot n (1-based) at state x = (x, y, h).
  std::optional<SlotTerm> operator()(std::size_t slot, const Vec3 &x, bool derivs) const {
    const Slot &sl = slots_[slot - 1];
    SlotTerm out;
    if (sl.c == 0.0) return out;

    double v = sl.constant;
    for (std::size_t k = 0; k < gns_.size(); ++k) {
      const Vec3 u(x(0) - gns_[k].x, x(1) - gns_[k].y, x(2));
      const double r = u.squaredNorm();
      const double zeta = std::pow(r, 0.5 * alpha_);
      v -= sl.weights[k] * zeta;
      if (derivs) {
        const double d1 = alpha_ * zeta / r; // alpha r^(alpha/2 - 1)
        out.grad -= sl.weights[k] * d1 * u;
        out.hess -= sl.weights[k] * (d1 * Mat3::Identity() +
                                     (alpha_ - 2.0) * d1 / r * u * u.transpose());
      }
    }
    double se = 0.0;
    Vec3 g = Vec3::Zero();
    Mat3 curv = Mat3::Zero();
    const Vec3 dx = x - sl.x0;
    for (std::size_t j = 0; j < eves_.size(); ++j) {
      const double e = sl.e0[j] + sl.slope[j].dot(dx);
      if (!(e > eta_floor_)) return std::nullopt;
      se += sl.c / e;
      if (derivs) {
        g += sl.c / (e * e) * sl.slope[j];
        curv += 2.0 * sl.c / (e * e * e) * sl.slope[j] * sl.slope[j].transpose();
      }
    }
    v -= std::log1p(se);
    out.value = scale_ * v;
    if (derivs) {
      const double inv = 1.0 / (1.0 + se);
      out.grad += inv * g;
      out.hess += -inv * curv + inv * inv * g * g.transpose();
      out.grad *= scale_;
      out.hess *= scale_;
    }
    return out;
  }

  /// Average surrogate along a whole trajectory; nullopt outside the domain.
  std::optional<double> value(const Trajectory &t) const {
    double v = 0.0;
    for (std::size_t i = 1; i <= slots(); ++i) {
      auto term = (*this)(i, Vec3(t.q[i].x, t.q[i].y, t.h[i]), false);
      if (!term) return std::nullopt;
      v += term->value;
    }
    return v;
  }

  /// Gradient stacked as (x_1, y_1, h_1, ..., x_N, y_N, h_N).
  std::optional<Eigen::VectorXd> gradient(const Trajectory &t) const {
    Eigen::VectorXd g(static_cast<Eigen::Index>(3 * slots()));
    for (std::size_t i = 1; i <= slots(); ++i) {
      auto term = (*this)(i, Vec3(t.q[i].x, t.q[i].y, t.h[i]), true);
      if (!term) return std::nullopt;
      g.segment<3>(static_cast<Eigen::Index>(3 * (i - 1))) = term->grad;
    }
    return g;
  }

private:
  struct Slot {
    double c = 0.0;
    double constant = 0.0;
    std::vector<double> weights;
    Vec3 x0 = Vec3::Zero();
    std::vector<double> e0;
    std::vector<Vec3> slope;
  };

  std::vector<Vec2> gns_;
  std::vector<Vec2> eves_;
  double alpha_;
  double eta_floor_;
  double scale_ = 0.0;
  std::vector<Slot> slots_;
};

struct ScaStepResult {
  Trajectory traj;
  double surrogate_objective = 0.0;
  bool stalled = false;
  int newton_iters = 0;
};

/// One convexify-and-solve step around `point`. Never returns a point with a
/// lower surrogate than the expansion point itself.
inline ScaStepResult sca_step(const SurrogatePoint &point, const PowerProfile &power,
                              const Scenario &s, const SolverConfig &cfg) {
  const ReducedSurrogate model(point, power, s, cfg.eta_floor);
  ScaStepResult out;
  out.traj = point.traj_local;
  const auto at_expansion = model.value(point.traj_local);
  if (!at_expansion) {
    out.stalled = true;
    return out;
  }
  out.surrogate_objective = *at_expansion;

  const ChainBounds bounds = ChainBounds::from(s);
  const FreeComponents free = free_components(bounds);
  if (!free.q && !free.h) return out;

  const Trajectory ref = interior_reference(bounds, free, point.traj_local);
  double theta = cfg.interior_blend;
  for (int attempt = 0; attempt <= cfg.max_blend_halvings; ++attempt, theta *= 0.5) {
    Trajectory start = point.traj_local;
    for (std::size_t i = 1; i <= start.slots(); ++i) {
      start.q[i] = (1.0 - theta) * start.q[i] + theta * ref.q[i];
      start.h[i] = (1.0 - theta) * start.h[i] + theta * ref.h[i];
    }
    if (!model.value(start)) continue;
    const ChainSolveResult res = maximize_on_chain(bounds, free, model, start, cfg.barrier());
    out.newton_iters = res.newton_iters;
    if (!res.ok) continue;
    if (res.objective > out.surrogate_objective) {
      out.traj = res.traj;
      out.surrogate_objective = res.objective;
    }
    return out;
  }
  out.stalled = true;
  return out;
}

struct TrajectoryResult {
  Trajectory traj;
  std::vector<double> trace; // true (unclamped) average rate, initial point first
  int iterations = 0;
  bool converged = false;
};

/// Repeats sca_step until the true objective stops improving by more than
/// sca_rel_tol (relative) or sca_max_iters is reached.
inline TrajectoryResult optimize_trajectory(const Trajectory &init, const PowerProfile &power,
                                            const Scenario &s, const SolverConfig &cfg) {
  require_feasible(init, s);
  TrajectoryResult out;
  out.traj = init;
  double obj = average_secrecy_rate(init, power, s, false);
  out.trace.push_back(obj);
  for (int m = 0; m < cfg.sca_max_iters; ++m) {
    const ScaStepResult step = sca_step(make_surrogate_point(out.traj, s), power, s, cfg);
    ++out.iterations;
    const double next = average_secrecy_rate(step.traj, power, s, false);
    if (next < obj) { // numerical noise only; keep the better point
      out.trace.push_back(obj);
      out.converged = true;
      break;
    }
    out.traj = step.traj;
    out.trace.push_back(next);
    const bool small = next - obj <= cfg.sca_rel_tol * std::max(std::abs(obj), 1e-12);
    obj = next;
    if (small || step.stalled) {
      out.converged = !step.stalled || small;
      break;
    }
  }
  return out;
}

} // namespace uavsec
