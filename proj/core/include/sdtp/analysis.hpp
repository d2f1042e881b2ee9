#pragma once

#include <vector>

#include "sdtp/types.hpp"

namespace sdtp {

// A transform value together with its existence flag. Undefined values must
// not be read.
struct MgfValue {
  double value = 0.0;
  bool defined = false;
};

struct QueueStats {
  double rho = 0.0;      // load intensity
  double b_at_t = 0.0;   // whole-request service transform at t
  double pk_at_t = 0.0;  // waiting-time transform at t
  bool pk_defined = false;
};

enum class QueueClass { kE, kD, kDbar };

// alpha e^{eta t} / (alpha - t), defined iff t < alpha.
MgfValue shifted_exp_mgf(double alpha, double eta, double t);

// Effective per-stream rates: bandwidth fraction times base link rate.
StreamRates stream_rates(const SystemTopology& topo,
                         const BandwidthWeights& weights);

// Per-stream Poisson arrival rates under two-stage scheduling. The relay
// array mirrors the origin array (tandem identity).
AggregateArrivals aggregate_arrivals(const VideoCatalog& cat,
                                     const ScheduleMatrices& sched);

// Load intensities. The cached-content queue serves the stored prefix of
// each file, the origin and relay queues serve the remainder. Routing
// positive traffic to a zero-rate stream throws.
double load_intensity_e(const SystemTopology& topo, const VideoCatalog& cat,
                        const CachePlacement& pl, const ScheduleMatrices& sched,
                        const StreamRates& rates, int j, int nu);
double load_intensity_d(const SystemTopology& topo, const VideoCatalog& cat,
                        const CachePlacement& pl, const ScheduleMatrices& sched,
                        const StreamRates& rates, int j, int beta);
double load_intensity_dbar(const SystemTopology& topo, const VideoCatalog& cat,
                           const CachePlacement& pl,
                           const ScheduleMatrices& sched,
                           const StreamRates& rates, int j, int beta);

// Transform of the whole-request service time at a stream: the
// arrival-probability mixture over files of per-segment transforms raised to
// that file's segment count at the queue. Throws if the stream has zero
// aggregate arrivals (the mixture is undefined).
MgfValue batch_service_mgf(QueueClass cls, const SystemTopology& topo,
                           const VideoCatalog& cat, const CachePlacement& pl,
                           const ScheduleMatrices& sched,
                           const StreamRates& rates, int j, int stream,
                           double t);

// Pollaczek-Khinchine waiting-time transform (1-rho) t B(t) /
// (t - lambda (B(t) - 1)). Throws if rho >= 1; undefined when the
// denominator is not positive.
MgfValue pk_waiting_mgf(double lambda, double rho, double b_at_t, double t);

// Download-time transform of cached segment g (waiting transform times the
// g-th power of the stream transform). g = 0 degenerates to the pure
// waiting transform.
MgfValue cached_download_mgf(const SystemTopology& topo,
                             const VideoCatalog& cat, const CachePlacement& pl,
                             const ScheduleMatrices& sched,
                             const StreamRates& rates, int i, int j, int nu,
                             int g, double t);

// Union bound on the download-time transform of non-cached segment v: the
// sum over bottleneck positions y of the tandem-path transforms. Reference
// oracle for the collapsed delta terms; requires v > cached[j][i].
MgfValue noncached_download_mgf_bruteforce(const SystemTopology& topo,
                                           const VideoCatalog& cat,
                                           const CachePlacement& pl,
                                           const ScheduleMatrices& sched,
                                           const StreamRates& rates, int i,
                                           int j, int beta, int nu, int v,
                                           double t);

// Closed-form components of the per-(j, beta, nu) tail contribution,
// aggregated over segments 1..v with the per-segment playback-offset factor
// e^{(1-u) tau t} applied inside each sum:
//   d1  cached-queue geometric sum (zero when nothing is cached)
//   d2  relay-queue bottleneck terms (segment waits on the relay server)
//   d3  origin-queue bottleneck at the first non-cached segment
//   d4  origin-queue bottleneck at later segments
// The caller multiplies the total by e^{-(sigma + d_s) t}. d2..d4 vanish
// when v <= cached[j][i].
struct DeltaTerms {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
  double d4 = 0.0;
  bool defined = false;

  double sum() const { return d1 + d2 + d3 + d4; }
};

DeltaTerms delta_terms(const SystemTopology& topo, const VideoCatalog& cat,
                       const CachePlacement& pl, const ScheduleMatrices& sched,
                       const StreamRates& rates, int i, int j, int beta,
                       int nu, double t_i, int v);

// Tail-probability bound for one file at threshold sigma, with the
// probability-weighted delta aggregates used for reporting.
struct BoundRow {
  int file = 0;
  double raw = 0.0;      // may exceed 1
  double clipped = 0.0;  // min(raw, 1)
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double delta4 = 0.0;
  bool feasible = false;
};

// Throws std::domain_error naming the violated constraint when the point is
// infeasible for file i.
BoundRow sdtp_bound(int i, double sigma, const SystemTopology& topo,
                    const VideoCatalog& cat, const ControlPoint& point);

// Weight-normalized sum of raw per-file bounds (the optimization objective).
double weighted_objective(double sigma, const SystemTopology& topo,
                          const VideoCatalog& cat, const ControlPoint& point);

// All files at one threshold; per-file infeasibility is recorded in the row
// rather than thrown. objective is the weight-normalized clipped sum, NaN if
// any row is infeasible.
struct BoundReport {
  std::vector<BoundRow> rows;
  double objective = 0.0;
  bool feasible = false;
};

BoundReport bound_report(double sigma, const SystemTopology& topo,
                         const VideoCatalog& cat, const ControlPoint& point);

// Numerical convexity witness for the MGF-existence constraint families.
// kAuxExponent probes E(t) = S(t) - (Lambda + t) along t for one queue;
// kStreamRate probes the same expression along the stream rate alpha at a
// fixed t. Returns the minimum central second difference over the interior
// grid points; throws if the grid leaves the region where the sums exist.
enum class ConstraintAxis { kAuxExponent, kStreamRate };

double constraint_curvature_probe(const SystemTopology& topo,
                                  const VideoCatalog& cat,
                                  const CachePlacement& pl,
                                  const ScheduleMatrices& sched,
                                  const StreamRates& rates, QueueClass cls,
                                  int j, int stream, ConstraintAxis axis,
                                  double fixed_t,
                                  const std::vector<double>& grid);

}  // namespace sdtp
