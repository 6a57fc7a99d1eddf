#pragma once

#include <cstdint>
#include <string>

#include "uavsec/chain_solver.hpp"
#include "uavsec/scenario.hpp"

namespace uavsec {

struct SolverConfig {
  // Alternation between power allocation and trajectory design.
  double outer_rel_tol = 1e-4;
  int outer_max_iters = 30;
  // Successive convex approximation of the trajectory subproblem.
  double sca_rel_tol = 1e-4;
  int sca_max_iters = 50;
  // Interior-point solve of each convexified subproblem.
  double subproblem_gap_tol = 1e-10;
  int subproblem_max_newton = 2000;
  double centering_tol = 1e-10;
  // Smallest admissible eavesdropper-distance lower bound.
  double eta_floor = 1e-6;
  // Blend toward a strictly interior point when warm-starting the barrier;
  // halved (up to `max_blend_halvings` times) until the start is admissible.
  double interior_blend = 1e-3;
  int max_blend_halvings = 20;
  // Fixed altitude of the 2D benchmark.
  double joint2d_altitude = 200.0;
  // Seed for randomized verification only; the solver is deterministic.
  std::uint64_t rng_seed = 1;

  BarrierOptions barrier() const {
    BarrierOptions b;
    b.gap_tol = subproblem_gap_tol;
    b.max_newton = subproblem_max_newton;
    b.centering_tol = centering_tol;
    return b;
  }
};

inline void validate(const SolverConfig &c) {
  auto require = [](bool ok, const char *what) {
    if (!ok) throw ValidationError(std::string("solver config: ") + what);
  };
  require(c.outer_rel_tol > 0.0, "outer_rel_tol must be > 0");
  require(c.sca_rel_tol > 0.0, "sca_rel_tol must be > 0");
  require(c.subproblem_gap_tol > 0.0, "subproblem_gap_tol must be > 0");
  require(c.centering_tol > 0.0, "centering_tol must be > 0");
  require(c.eta_floor > 0.0, "eta_floor must be > 0");
  require(c.interior_blend > 0.0 && c.interior_blend < 1.0, "interior_blend must be in (0, 1)");
  require(c.outer_max_iters >= 1, "outer_max_iters must be >= 1");
  require(c.sca_max_iters >= 1, "sca_max_iters must be >= 1");
  require(c.subproblem_max_newton >= 1, "subproblem_max_newton must be >= 1");
  require(c.max_blend_halvings >= 0, "max_blend_halvings must be >= 0");
  require(c.joint2d_altitude > 0.0, "joint2d_altitude must be > 0");
}

} // namespace uavsec
