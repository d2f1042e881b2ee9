#pragma once

#include <limits>
#include <vector>

#include "sdtp/types.hpp"

namespace sdtp {

// Decision vector used by the optimizer: the control point with cache
// placement relaxed to real values in [0, L_i].
struct Decision {
  ScheduleMatrices schedule;
  BandwidthWeights bandwidth;
  std::vector<std::vector<double>> placement;  // [j][i]
  std::vector<double> capacity;                // C_j (carried through)
  std::vector<double> t;

  static Decision from_point(const ControlPoint& pt);
  // Nearest-integer placement (callers are responsible for capacity repair).
  ControlPoint to_point() const;
};

// Gradient buffers matching the Decision layout. Only the block that was
// requested is meaningful.
struct Gradients {
  std::vector<std::vector<double>> pi;
  std::vector<std::vector<std::vector<double>>> p;
  std::vector<std::vector<std::vector<double>>> q;
  std::vector<std::vector<double>> w_d;
  std::vector<std::vector<double>> w_dbar;
  std::vector<std::vector<double>> w_e;
  std::vector<std::vector<double>> placement;
  std::vector<double> t;
};

enum class VarBlock { kSchedule, kAux, kBandwidth, kPlacement };

struct Evaluation {
  double objective = std::numeric_limits<double>::infinity();
  bool feasible = false;
  std::vector<double> file_bound;  // raw per-file tail bounds
};

// Weight-normalized raw tail-bound objective with hand-derived adjoint
// gradients per variable block. Mirrors the reference path in analysis.hpp;
// the two are cross-checked in tests.
class BoundEvaluator {
 public:
  BoundEvaluator(const SystemTopology& topo, const VideoCatalog& cat,
                 double sigma);

  Evaluation evaluate(const Decision& d) const {
    return run(d, nullptr, VarBlock::kAux);
  }
  Evaluation evaluate_with_gradient(const Decision& d, VarBlock block,
                                    Gradients* grad) const {
    return run(d, grad, block);
  }

  Gradients zero_gradients(const Decision& d) const;
  double sigma() const { return sigma_; }
  const SystemTopology& topology() const { return topo_; }
  const VideoCatalog& catalog() const { return cat_; }

 private:
  Evaluation run(const Decision& d, Gradients* grad, VarBlock block) const;

  const SystemTopology& topo_;
  const VideoCatalog& cat_;
  double sigma_;
  std::vector<double> wbar_;  // normalized per-file weights
};

}  // namespace sdtp
