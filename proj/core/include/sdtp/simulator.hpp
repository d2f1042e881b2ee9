#pragma once

#include <cstdint>
#include <vector>

#include "sdtp/types.hpp"

namespace sdtp {

// Event-driven ground truth: Poisson request arrivals, two-stage random
// dispatch, per-stream FIFO queues at request (batch) granularity with
// shifted-exponential segment service, tandem origin->relay coupling, and
// the playback recursion. Fully deterministic given the seed.
struct SimConfig {
  SystemTopology topology;
  VideoCatalog catalog;
  ControlPoint point;
  double horizon = 1e5;   // simulated seconds
  double warmup = -1.0;   // seconds discarded; < 0 means 20% of horizon
  uint64_t seed = 1;
  bool keep_segments = true;  // retain per-segment download/play times
};

struct RequestRecord {
  int file = 0;
  int server = 0;
  int beta = 0;
  int nu = 0;
  double arrival = 0.0;
  double wait_cached = 0.0;  // queueing delay before the cached batch
  double wait_origin = 0.0;  // queueing delay before the origin batch
  double gamma = 0.0;        // total stall duration
  size_t seg_offset = 0;     // into the segment pools when kept
  int seg_count = 0;
};

struct SimTrace {
  std::vector<RequestRecord> requests;  // post-warmup only
  std::vector<double> seg_download;     // D_g relative to arrival (pooled)
  std::vector<double> seg_play;         // T_g relative to arrival (pooled)
  // Relay-queue arrival epochs per stream (one per request: its first
  // origin departure), post-warmup.
  std::vector<std::vector<std::vector<double>>> relay_arrivals;
  bool saturation_warning = false;
  double horizon = 0.0;
  double warmup = 0.0;
  uint64_t seed = 0;
};

SimTrace run_sim(const SimConfig& config);

struct EmpiricalRow {
  int file = 0;
  double sigma = 0.0;
  double p_hat = 0.0;
  double std_err = 0.0;
  long n = 0;
  bool valid = false;  // false when the file has no samples
};

// Per-(file, sigma) empirical tail probabilities with binomial standard
// errors. Counts use the >= convention.
std::vector<EmpiricalRow> empirical_sdtp(const SimTrace& trace,
                                         const VideoCatalog& cat,
                                         const std::vector<double>& sigma_grid);

struct DispersionResult {
  double statistic = 0.0;  // variance / mean of fixed-window counts
  long windows = 0;
  long epochs = 0;
  bool conclusive = false;
};

// Index of dispersion of an epoch sequence on [t0, t1).
DispersionResult dispersion_index(const std::vector<double>& epochs, double t0,
                                  double t1, int windows);

// Epoch-weighted dispersion across relay streams with enough samples;
// a Poisson arrival stream gives a statistic near one.
DispersionResult second_queue_arrival_check(const SimTrace& trace,
                                            int windows = 10000,
                                            long min_epochs = 1000);

}  // namespace sdtp
