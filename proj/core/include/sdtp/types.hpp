#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdtp {

// Numerical guard rails used across feasibility and bound evaluation.
// Strict inequalities (rho < 1, t < alpha, positive P-K denominator) are
// enforced with this much slack so MGFs stay finite near the boundary.
inline constexpr double kStrictMargin = 1e-6;
// Scheduling rows must sum to one within this tolerance; rows are
// renormalized on load.
inline constexpr double kSimplexTol = 1e-9;

// One cache server: stream counts and base link parameters.
// d_streams feed the origin->cache link, e_streams serve cached content on
// the cache->edge link; the same cache->edge link also carries the
// relay streams paired one-to-one with the origin streams.
struct ServerSpec {
  int d_streams = 1;
  int e_streams = 1;
  double alpha_d_base = 1.0;  // origin->cache service rate, 1/s
  double alpha_f_base = 1.0;  // cache->edge service rate, 1/s
  double eta_d = 0.0;         // service-time shift, origin->cache streams (s)
  double eta_dbar = 0.0;      // shift, cache->edge relay streams (s)
  double eta_e = 0.0;         // shift, cache->edge cached-content streams (s)
};

struct SystemTopology {
  std::vector<ServerSpec> servers;

  int server_count() const { return static_cast<int>(servers.size()); }
  void validate() const;
};

struct VideoCatalog {
  std::vector<int> segments;        // L_i, per file
  std::vector<double> arrival_rate; // lambda_i, 1/s
  std::vector<double> weight;       // nonnegative tail-probability weights
  double tau = 4.0;                 // segment playback length, s
  double startup_delay = 4.0;       // d_s, s
  double sigma = 40.0;              // default stall-duration threshold, s

  int file_count() const { return static_cast<int>(segments.size()); }
  int total_segments() const;
  void validate() const;
};

// cached[j][i]: how many leading segments of file i server j stores.
struct CachePlacement {
  std::vector<std::vector<int>> cached;
  std::vector<double> capacity;  // C_j, in segments

  void validate(const SystemTopology& topo, const VideoCatalog& cat) const;
};

// Two-stage scheduling probabilities: server choice pi[i][j], cached-stream
// choice p[i][j][nu], origin-stream choice q[i][j][beta].
struct ScheduleMatrices {
  std::vector<std::vector<double>> pi;
  std::vector<std::vector<std::vector<double>>> p;
  std::vector<std::vector<std::vector<double>>> q;

  void validate(const SystemTopology& topo, const VideoCatalog& cat) const;
  // Rescales every row whose sum is within kSimplexTol of one.
  void renormalize();
};

// Per-stream bandwidth fractions. Per server j, sum(w_d) <= 1 and
// sum(w_dbar) + sum(w_e) <= 1 (the two cache->edge classes share a link).
struct BandwidthWeights {
  std::vector<std::vector<double>> w_d;
  std::vector<std::vector<double>> w_dbar;
  std::vector<std::vector<double>> w_e;

  void validate(const SystemTopology& topo) const;
};

// Per-file exponent used by the Chernoff step of the tail bound; an
// optimization variable in its own right.
struct AuxVars {
  std::vector<double> t;

  void validate(const VideoCatalog& cat) const;
};

// One full decision vector. Structural (type-level) invariants are enforced
// by validate(); full feasibility is a queryable property, not a
// construction invariant (see check_feasibility).
struct ControlPoint {
  ScheduleMatrices schedule;
  BandwidthWeights bandwidth;
  CachePlacement placement;
  AuxVars aux;

  void validate(const SystemTopology& topo, const VideoCatalog& cat) const;
};

// Effective per-stream service rates: weight times base rate. A zero weight
// makes the stream unusable.
struct StreamRates {
  std::vector<std::vector<double>> alpha_d;
  std::vector<std::vector<double>> alpha_dbar;
  std::vector<std::vector<double>> alpha_e;
};

// Per-stream Poisson arrival rates after two-stage thinning/superposition.
// The relay queue sees exactly the origin queue's arrivals, so
// lambda_dbar[j][beta] == lambda_d[j][beta] always.
struct AggregateArrivals {
  std::vector<std::vector<double>> lambda_d;
  std::vector<std::vector<double>> lambda_dbar;
  std::vector<std::vector<double>> lambda_e;
};

class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what)
      : std::invalid_argument(what) {}
};

class InfeasibleInstanceError : public std::runtime_error {
 public:
  explicit InfeasibleInstanceError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace sdtp
