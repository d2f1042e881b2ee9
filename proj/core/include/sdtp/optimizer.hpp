#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdtp/objective.hpp"
#include "sdtp/types.hpp"

namespace sdtp {

struct OptimizerSettings {
  double epsilon = 1e-6;     // relative objective-decrease stop rule
  double gamma0 = 1.0;       // step-size scale in (0, 1]
  bool diminishing = true;   // gamma_nu = gamma0 / (1 + 0.01 nu)
  int max_outer = 300;
  int max_inner = 50;        // budget for the single-block refinements
  int inner_per_cycle = 1;   // surrogate steps per block per outer cycle
  double prox_weight = 1.0;  // strong-convexity weight of the surrogate
  bool fd_gradients = false; // finite-difference fallback instead of adjoints

  void validate() const;
};

struct TraceRow {
  int outer = 0;
  VarBlock block = VarBlock::kSchedule;
  double objective = 0.0;
  int inner_iters = 0;
  double worst_margin = 0.0;
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
};

// Proximal-linear surrogate around x0: f0 + <g, x - x0> + (prox/2)|x - x0|^2.
// Its constrained minimizer is one projected gradient step with step 1/prox.
double surrogate_value(double f0, const std::vector<double>& g,
                       const std::vector<double>& x,
                       const std::vector<double>& x0, double prox);

// Blocks a strategy leaves free.
struct BlockMask {
  bool schedule = true;
  bool aux = true;
  bool bandwidth = true;
  bool placement = true;

  bool allows(VarBlock b) const;
};

std::vector<VarBlock> default_block_order();

// Inner loop for one block: repeat { gradient, surrogate minimizer via
// projection, convex-combination step with feasibility/descent backoff }
// until the improvement drops below epsilon. Returns the final objective;
// d is updated in place and stays feasible. Placement passes relax the
// integer placement and round back (floor + gradient-scored re-adds),
// guarded so the rounded result is never worse than the incumbent.
// step_counter, when given, is the global iteration index nu driving the
// diminishing step-size schedule across blocks and cycles; it advances by
// one per accepted step. max_steps caps the steps taken in this call.
double optimize_block(const BoundEvaluator& eval, Decision& d, VarBlock block,
                      const OptimizerSettings& settings, int* inner_used,
                      int max_steps = 0, int* step_counter = nullptr);

// Single-block refinements of a feasible point (the four subproblems).
ControlPoint optimize_scheduling(const SystemTopology& topo,
                                 const VideoCatalog& cat,
                                 const ControlPoint& point,
                                 const OptimizerSettings& settings);
ControlPoint optimize_aux(const SystemTopology& topo, const VideoCatalog& cat,
                          const ControlPoint& point,
                          const OptimizerSettings& settings);
ControlPoint optimize_bandwidth(const SystemTopology& topo,
                                const VideoCatalog& cat,
                                const ControlPoint& point,
                                const OptimizerSettings& settings);
ControlPoint optimize_placement(const SystemTopology& topo,
                                const VideoCatalog& cat,
                                const ControlPoint& point,
                                const OptimizerSettings& settings);

// Alternating block descent from a feasible point. The trace records one row
// per (outer, block) with a monotone non-increasing objective column.
std::pair<ControlPoint, OptimizationTrace> alternate(
    const SystemTopology& topo, const VideoCatalog& cat,
    const ControlPoint& start, const OptimizerSettings& settings,
    const std::vector<VarBlock>& block_order = default_block_order(),
    const BlockMask& mask = BlockMask{});

enum class Strategy { kOpt, kPEA, kPEB, kPSP, kPEC, kCHF, kFixedT };

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

struct StrategyResult {
  ControlPoint point;
  double objective = 0.0;
  OptimizationTrace trace;
};

// Applies the strategy's initialization/freeze pattern, alternates over the
// free blocks, and reports the final objective at the catalog's sigma.
StrategyResult run_strategy(Strategy s, const SystemTopology& topo,
                            const VideoCatalog& cat,
                            const OptimizerSettings& settings);

}  // namespace sdtp
