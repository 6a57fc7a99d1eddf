#pragma once

// Independent oracles for the closed-form power allocation and the SCA
// bounds. Formulas here are transcribed separately from the solver headers;
// only the functions under test are called from the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsec/power.hpp"
#include "uavsec/sca.hpp"

namespace uavsec::validation {

struct OracleReport {
  std::string name;
  std::size_t cases = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::string worst_case; // snapshot of the worst input
  bool pass = true;

  void record(double violation, const std::string &snapshot) {
    ++cases;
    if (cases == 1 || violation > max_violation) {
      max_violation = std::max(max_violation, violation);
      worst_case = snapshot;
    }
  }
  void finish() { pass = max_violation <= tolerance; }
};

inline std::string describe(const OracleReport &r) {
  std::ostringstream os;
  os << (r.pass ? "PASS " : "FAIL ") << r.name << ": cases=" << r.cases
     << " max_violation=" << r.max_violation << " tolerance=" << r.tolerance;
  if (!r.pass) os << " worst=[" << r.worst_case << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// Power allocation: grid search under the average budget.

/// log2((1 + a p) / (1 + b p)), written independently of the library.
inline double oracle_slot_rate(double a, double b, double p) {
  return std::log2((1.0 + a * p) / (1.0 + b * p));
}

struct GridOracleResult {
  PowerProfile profile;
  double objective = 0.0;
};

/// Best profile on the grid {0, step, 2 step, ...} <= p_peak per slot with
/// sum p <= N p_ave. Each slot's rate is concave in p, so handing out grid
/// units in order of decreasing marginal utility is exact on the grid.
/// Desk-scale only: refuses N > 8.
inline GridOracleResult power_grid_oracle(const SlotGains &g, double p_ave, double p_peak,
                                          double grid_step) {
  const std::size_t n = g.a.size();
  if (n > 8) throw std::invalid_argument("power_grid_oracle: N > 8 is not supported");
  if (!(grid_step > 0.0)) throw std::invalid_argument("power_grid_oracle: grid_step must be > 0");
  const auto max_level = static_cast<long>(std::floor(p_peak / grid_step + 1e-9));
  long units = static_cast<long>(std::floor(static_cast<double>(n) * p_ave / grid_step + 1e-9));
  std::vector<long> level(n, 0);

  using Entry = std::pair<double, std::size_t>;
  auto gain = [&](std::size_t i) {
    const double p0 = static_cast<double>(level[i]) * grid_step;
    return oracle_slot_rate(g.a[i], g.b[i], p0 + grid_step) - oracle_slot_rate(g.a[i], g.b[i], p0);
  };
  std::priority_queue<Entry> heap;
  for (std::size_t i = 0; i < n; ++i)
    if (max_level > 0) heap.emplace(gain(i), i);
  while (units > 0 && !heap.empty()) {
    const auto [du, i] = heap.top();
    heap.pop();
    if (!(du > 0.0)) break;
    ++level[i];
    --units;
    if (level[i] < max_level) heap.emplace(gain(i), i);
  }

  GridOracleResult out;
  out.profile.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.profile.p[i] = static_cast<double>(level[i]) * grid_step;
    out.objective += oracle_slot_rate(g.a[i], g.b[i], out.profile.p[i]);
  }
  if (n > 0) out.objective /= static_cast<double>(n);
  return out;
}

/// Upper bound on (continuous optimum - grid optimum): rounding each optimal
/// power down to the grid loses at most step times the slot's largest
/// marginal, (a - b)/ln 2.
inline double grid_gap_bound(const SlotGains &g, double grid_step) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.a.size(); ++i)
    if (g.a[i] > g.b[i]) s += (g.a[i] - g.b[i]) / std::log(2.0);
  return g.a.empty() ? 0.0 : grid_step * s / static_cast<double>(g.a.size());
}

struct PowerInstance {
  SlotGains gains;
  double p_ave = 0.0;
  double p_peak = 0.0;
};

/// Random desk-scale power instance: N <= 8 slots, gains summed over up to 3
/// receivers per side, with a_n > b_n on a random subset of slots.
inline PowerInstance random_power_instance(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> slots(1, 8), receivers(1, 3);
  std::uniform_real_distribution<double> log_gain(0.0, 5.0), unit(0.0, 1.0);
  const int n = slots(rng);
  const int k = receivers(rng);
  const int j = receivers(rng);
  PowerInstance inst;
  for (int i = 0; i < n; ++i) {
    double a = 0.0, b = 0.0;
    for (int r = 0; r < k; ++r) a += std::pow(10.0, log_gain(rng));
    for (int r = 0; r < j; ++r) b += std::pow(10.0, log_gain(rng));
    const bool favorable = unit(rng) < 0.6;
    if (favorable != (a > b)) std::swap(a, b);
    inst.gains.a.push_back(a);
    inst.gains.b.push_back(b);
  }
  inst.p_ave = std::pow(10.0, -3.0 + 3.0 * unit(rng));
  inst.p_peak = inst.p_ave * (1.0 + 7.0 * unit(rng));
  return inst;
}

/// Closed-form allocation against the grid oracle with step
/// `step_fraction * p_peak`. Violation per instance is |closed - oracle|
/// in bps/Hz.
inline OracleReport power_oracle_check(const std::vector<PowerInstance> &instances,
                                       double step_fraction = 1e-3, double tol = 1e-4) {
  OracleReport rep;
  rep.name = "power_grid_oracle";
  rep.tolerance = tol;
  for (const PowerInstance &inst : instances) {
    const PowerSolution sol = solve_power(inst.gains, inst.p_ave, inst.p_peak);
    double closed = 0.0;
    for (std::size_t i = 0; i < inst.gains.a.size(); ++i)
      closed += std::max(0.0, oracle_slot_rate(inst.gains.a[i], inst.gains.b[i], sol.profile.p[i]));
    closed /= static_cast<double>(inst.gains.a.size());
    const double step = step_fraction * inst.p_peak;
    const GridOracleResult grid = power_grid_oracle(inst.gains, inst.p_ave, inst.p_peak, step);
    std::ostringstream snap;
    snap << "N=" << inst.gains.a.size() << " p_ave=" << inst.p_ave << " p_peak=" << inst.p_peak
         << " closed=" << closed << " oracle=" << grid.objective
         << " gap_bound=" << grid_gap_bound(inst.gains, step);
    rep.record(std::abs(closed - grid.objective), snap.str());
  }
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification.

/// Central differences of `value` against `gradient` at x. The error of
/// coordinate i is |fd_i - g_i| / max(|g_i|, 1e-4 |g|_inf); coordinates with
/// negligible analytic slope are compared on the scale of the largest one.
inline OracleReport finite_diff_gradient_check(
    const std::function<double(const Eigen::VectorXd &)> &value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &gradient,
    const Eigen::VectorXd &x, double h_step, double tol = 1e-5) {
  OracleReport rep;
  rep.name = "finite_diff_gradient_check";
  rep.tolerance = tol;
  const Eigen::VectorXd g = gradient(x);
  const double floor = std::max(1e-4 * g.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h_step;
    const double fp = value(xp);
    xp(i) = x(i) - h_step;
    const double fm = value(xp);
    xp(i) = x(i);
    const double fd = (fp - fm) / (2.0 * h_step);
    const double err = fd == g(i) ? 0.0 : std::abs(fd - g(i)) / std::max(std::abs(g(i)), floor);
    std::ostringstream snap;
    snap << "coord=" << i << " analytic=" << g(i) << " fd=" << fd;
    rep.record(err, snap.str());
  }
  rep.finish();
  return rep;
}

namespace detail {
inline Eigen::VectorXd stack(const Trajectory &t) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(3 * t.slots()));
  for (std::size_t i = 1; i <= t.slots(); ++i) {
    const auto o = static_cast<Eigen::Index>(3 * (i - 1));
    x(o) = t.q[i].x;
    x(o + 1) = t.q[i].y;
    x(o + 2) = t.h[i];
  }
  return x;
}
inline Trajectory unstack(const Eigen::VectorXd &x, const Trajectory &base) {
  Trajectory t = base;
  for (std::size_t i = 1; i <= t.slots(); ++i) {
    const auto o = static_cast<Eigen::Index>(3 * (i - 1));
    t.q[i] = {x(o), x(o + 1)};
    t.h[i] = x(o + 2);
  }
  return t;
}
} // namespace detail

/// Gradient check of the reduced SCA objective at `point`. The difference
/// step is h_step times the trajectory's length scale max(1, max |coordinate|).
inline OracleReport finite_diff_gradient_check(const ReducedSurrogate &objective,
                                               const Trajectory &point, double h_step = 1e-5,
                                               double tol = 1e-5) {
  auto value = [&](const Eigen::VectorXd &x) {
    auto v = objective.value(detail::unstack(x, point));
    if (!v) throw std::domain_error("finite_diff_gradient_check: left objective domain");
    return *v;
  };
  auto gradient = [&](const Eigen::VectorXd &x) {
    auto g = objective.gradient(detail::unstack(x, point));
    if (!g) throw std::domain_error("finite_diff_gradient_check: left objective domain");
    return *g;
  };
  const Eigen::VectorXd x = detail::stack(point);
  const double scale = std::max(1.0, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
  return finite_diff_gradient_check(value, gradient, x, h_step * scale, tol);
}

// ---------------------------------------------------------------------------
// SCA bound sampling.

/// (|q - w|^2 + h^2)^(alpha/2) via the Euclidean distance.
inline double oracle_distance_pow(double x, double y, double h, const Vec2 &w, double alpha) {
  return std::pow(std::sqrt((x - w.x) * (x - w.x) + (y - w.y) * (y - w.y) + h * h), alpha);
}

/// log2(1 + sum c/zeta) - log2(1 + sum c/eta) for one slot.
inline double oracle_aux_rate(double c, const Eigen::VectorXd &zeta, const Eigen::VectorXd &eta) {
  double num = 1.0;
  double den = 1.0;
  for (Eigen::Index k = 0; k < zeta.size(); ++k) num += c / zeta(k);
  for (Eigen::Index j = 0; j < eta.size(); ++j) den += c / eta(j);
  return std::log2(num) - std::log2(den);
}

/// Draws random expansion/evaluation pairs inside the scenario's bounding
/// region and altitude box and checks, per pair:
///   E_lb <= d_e^alpha              (relative violation)
///   surrogate <= exact rate        (absolute, bps/Hz)
///   surrogate == exact at the expansion point (absolute, bps/Hz)
/// The first pair always evaluates at the expansion point.
inline OracleReport surrogate_bound_sampler(const Scenario &s, std::size_t samples,
                                            std::uint64_t seed, double tol = 1e-9) {
  OracleReport rep;
  rep.name = "surrogate_bound_sampler";
  rep.tolerance = tol;
  std::mt19937_64 rng(seed);

  double xmin = std::min(s.q_start.x, s.q_end.x), xmax = std::max(s.q_start.x, s.q_end.x);
  double ymin = std::min(s.q_start.y, s.q_end.y), ymax = std::max(s.q_start.y, s.q_end.y);
  for (const auto *set : {&s.gn_positions, &s.eve_positions})
    for (const Vec2 &w : *set) {
      xmin = std::min(xmin, w.x); xmax = std::max(xmax, w.x);
      ymin = std::min(ymin, w.y); ymax = std::max(ymax, w.y);
    }
  const double pad = 100.0;
  std::uniform_real_distribution<double> ux(xmin - pad, xmax + pad);
  std::uniform_real_distribution<double> uy(ymin - pad, ymax + pad);
  std::uniform_real_distribution<double> uh(s.h_min, s.h_max);
  std::uniform_real_distribution<double> up(0.0, s.p_peak);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double alpha = s.path_loss_exp;
  const auto k_count = static_cast<Eigen::Index>(s.gn_positions.size());
  const auto j_count = static_cast<Eigen::Index>(s.eve_positions.size());

  for (std::size_t m = 0; m < samples; ++m) {
    const double x0 = ux(rng), y0 = uy(rng), h0 = uh(rng);
    double x1 = x0, y1 = y0, h1 = h0;
    if (m > 0) {
      // Mix of near (local) and far evaluation points.
      const double spread = unit(rng) < 0.5 ? 25.0 : 400.0;
      std::normal_distribution<double> nd(0.0, spread);
      x1 = x0 + nd(rng);
      y1 = y0 + nd(rng);
      h1 = uh(rng);
    }
    const PowerProfile power{{up(rng)}};
    const double c = s.ref_gain_over_noise * power.p[0];

    Trajectory expansion;
    expansion.q = {s.q_start, {x0, y0}, s.q_end};
    expansion.h = {s.h_start, h0, s.h_end};
    const SurrogatePoint point = make_surrogate_point(expansion, s);

    std::ostringstream snap;
    snap << "expansion=(" << x0 << "," << y0 << "," << h0 << ") eval=(" << x1 << "," << y1 << ","
         << h1 << ") p=" << power.p[0];

    double worst = 0.0;
    Eigen::MatrixXd zeta(k_count, 1), eta(j_count, 1);
    Eigen::VectorXd zeta0(k_count), eta_true(j_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const Vec2 &w = s.gn_positions[static_cast<std::size_t>(k)];
      zeta(k, 0) = oracle_distance_pow(x1, y1, h1, w, alpha);
      zeta0(k) = oracle_distance_pow(x0, y0, h0, w, alpha);
    }
    for (Eigen::Index j = 0; j < j_count; ++j) {
      const Vec2 &w = s.eve_positions[static_cast<std::size_t>(j)];
      const double truth = oracle_distance_pow(x1, y1, h1, w, alpha);
      const double lb = eavesdropper_distance_lb({x1, y1}, h1, {x0, y0}, h0, w, alpha);
      worst = std::max(worst, (lb - truth) / std::max(1.0, truth));
      eta_true(j) = truth;
      eta(j, 0) = truth;
    }

    const double sur = surrogate_rate(zeta, eta, power, point, s);
    const double exact = oracle_aux_rate(c, zeta.col(0), eta_true);
    worst = std::max(worst, sur - exact);

    Eigen::MatrixXd zeta_at(k_count, 1);
    zeta_at.col(0) = zeta0;
    const double tangent = surrogate_rate(zeta_at, eta, power, point, s);
    const double exact_at = oracle_aux_rate(c, zeta0, eta_true);
    worst = std::max(worst, std::abs(tangent - exact_at));

    rep.record(worst, snap.str());
  }
  rep.finish();
  return rep;
}

} // namespace uavsec::validation
