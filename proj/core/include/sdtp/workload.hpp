#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdtp/types.hpp"

namespace sdtp {

// Reproducible synthetic catalogs: Pareto-distributed video lengths,
// rejected above max_length, rounded up to whole segments, with piecewise
// per-file arrival rates.
struct RateBand {
  int count = 0;      // number of files the band covers
  double rate = 0.0;  // 1/s
};

struct WorkloadSpec {
  int files = 1000;
  double pareto_shape = 2.0;
  double pareto_scale = 300.0;   // seconds
  double max_length = 3600.0;    // seconds; draws at or above are rejected
  double tau = 4.0;              // seconds
  double startup_delay = 4.0;    // seconds
  double sigma = 40.0;           // default tail threshold, seconds
  std::vector<RateBand> rate_bands = {{500, 0.002}, {500, 0.003}};
  double weight = 1.0;           // uniform per-file weight
  uint64_t seed = 1;

  void validate() const;
};

VideoCatalog generate_catalog(const WorkloadSpec& spec);

// Mean of the Pareto distribution truncated (by rejection) to [scale, cap).
double truncated_pareto_mean(double shape, double scale, double cap);

// Scenario sweeps: clones of a base instance with one quantity scaled.
struct Instance {
  SystemTopology topology;
  VideoCatalog catalog;
};

enum class SweepScenario { kArrivalScale, kRateScale, kStreamScale, kFileCount };

std::vector<Instance> sweep(const Instance& base, SweepScenario scenario,
                            const std::vector<double>& factors);

}  // namespace sdtp
