#pragma once

#include <string>
#include <vector>

#include "sdtp/types.hpp"

namespace sdtp {

// Per-family worst margins. A margin >= 0 means the family is satisfied
// (strict families already include the kStrictMargin slack). Families:
//   simplex    kSimplexTol minus the worst scheduling row-sum residual
//   weights    slack of the per-server bandwidth sum constraints
//   capacity   slack of the per-server cache capacity
//   box        nonnegativity / upper-bound slack (schedule, weights,
//              placement, t > 0)
//   stability  (1 - kStrictMargin) - rho over loaded streams
//   rate       relative slack of t_i below alpha for streams file i uses
//   pk         positive-denominator slack of the waiting-time transform
struct FeasibilityReport {
  bool feasible = false;
  double simplex_margin = 0.0;
  double weights_margin = 0.0;
  double capacity_margin = 0.0;
  double box_margin = 0.0;
  double stability_margin = 0.0;
  double rate_margin = 0.0;
  double pk_margin = 0.0;
  std::vector<std::string> violations;

  double worst_margin() const;
};

// Evaluates every constraint family at the given point. Infeasibility is a
// report outcome, not an error; malformed dimensions throw DimensionError.
FeasibilityReport check_feasibility(const SystemTopology& topo,
                                    const VideoCatalog& cat,
                                    const ControlPoint& point);

// Projects the structurally convex blocks (scheduling simplexes, bandwidth
// polytopes, placement box/capacity) to the nearest feasible values with t
// held fixed, then halves any t_i that still breaks MGF existence, up to 64
// times. Idempotent on already-feasible points. Throws
// InfeasibleInstanceError if no feasible point is reached.
ControlPoint closest_feasible(const ControlPoint& point,
                              const SystemTopology& topo,
                              const VideoCatalog& cat);

// Only the fixed-t convex projection step of closest_feasible (no
// feasibility check, no t shrinking). Non-expansive in the Euclidean metric.
ControlPoint project_convex_blocks(const ControlPoint& point,
                                   const SystemTopology& topo,
                                   const VideoCatalog& cat);

// Uniform starting point: pi = 1/m, p = 1/e_j, q = 1/d_j, equal bandwidth
// splits, every server caching the leading cache_fill fraction of each file,
// t_i = t0. Capacity defaults to cache_fill times the catalog size.
ControlPoint uniform_control_point(const SystemTopology& topo,
                                   const VideoCatalog& cat, double t0 = 0.01,
                                   double cache_fill = 0.35);

// Euclidean distance between two control points (placement included).
double control_point_distance(const ControlPoint& a, const ControlPoint& b);

}  // namespace sdtp
