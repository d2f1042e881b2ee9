#include "sdtp/workload.hpp"

#include <cmath>
#include <stdexcept>

#include "sdtp/rng.hpp"

namespace sdtp {

void WorkloadSpec::validate() const {
  if (files < 1) throw std::invalid_argument("workload: files must be >= 1");
  if (pareto_shape <= 1.0) {
    throw std::invalid_argument("workload: pareto shape must exceed 1");
  }
  if (pareto_scale <= 0.0) {
    throw std::invalid_argument("workload: pareto scale must be positive");
  }
  if (max_length < pareto_scale) {
    throw std::invalid_argument("workload: max_length below pareto scale");
  }
  if (tau <= 0.0) throw std::invalid_argument("workload: tau must be positive");
  if (rate_bands.empty()) {
    throw std::invalid_argument("workload: need at least one rate band");
  }
  for (const RateBand& band : rate_bands) {
    if (band.rate <= 0.0) {
      throw std::invalid_argument("workload: band rate must be positive");
    }
  }
}

VideoCatalog generate_catalog(const WorkloadSpec& spec) {
  spec.validate();
  VideoCatalog cat;
  cat.tau = spec.tau;
  cat.startup_delay = spec.startup_delay;
  cat.sigma = spec.sigma;
  Rng rng(mix_seed(spec.seed, {0x776c6f6164ULL}));
  const long long max_draws = 100LL * spec.files;
  long long draws = 0;
  while (cat.segments.size() < static_cast<size_t>(spec.files)) {
    if (++draws > max_draws) {
      throw std::invalid_argument(
          "workload: rejection sampling exceeded 100 draws per file");
    }
    const double u = rng.uniform();
    const double length =
        spec.pareto_scale * std::pow(1.0 - u, -1.0 / spec.pareto_shape);
    if (length >= spec.max_length) continue;
    cat.segments.push_back(
        static_cast<int>(std::ceil(length / spec.tau - 1e-12)));
  }
  cat.arrival_rate.resize(spec.files);
  cat.weight.assign(spec.files, spec.weight);
  int next = 0;
  double rate = spec.rate_bands.back().rate;
  for (const RateBand& band : spec.rate_bands) {
    for (int k = 0; k < band.count && next < spec.files; ++k) {
      cat.arrival_rate[next++] = band.rate;
    }
  }
  while (next < spec.files) cat.arrival_rate[next++] = rate;
  cat.validate();
  return cat;
}

double truncated_pareto_mean(double shape, double scale, double cap) {
  // E[X | X < cap] for a Pareto(shape, scale) variable.
  const double a = shape;
  const double frac = std::pow(scale / cap, a);
  const double mean_num =
      a * scale / (a - 1.0) * (1.0 - std::pow(scale / cap, a - 1.0));
  return mean_num / (1.0 - frac);
}

std::vector<Instance> sweep(const Instance& base, SweepScenario scenario,
                            const std::vector<double>& factors) {
  std::vector<Instance> out;
  out.reserve(factors.size());
  for (double f : factors) {
    if (f <= 0.0) throw std::invalid_argument("sweep: factor must be positive");
    Instance inst = base;
    switch (scenario) {
      case SweepScenario::kArrivalScale:
        for (double& lam : inst.catalog.arrival_rate) lam *= f;
        break;
      case SweepScenario::kRateScale:
        for (ServerSpec& s : inst.topology.servers) {
          s.alpha_d_base *= f;
          s.alpha_f_base *= f;
        }
        break;
      case SweepScenario::kStreamScale:
        for (ServerSpec& s : inst.topology.servers) {
          s.d_streams = std::max(1, static_cast<int>(std::lround(s.d_streams * f)));
          s.e_streams = std::max(1, static_cast<int>(std::lround(s.e_streams * f)));
        }
        break;
      case SweepScenario::kFileCount: {
        const int r = std::max(
            1, std::min(inst.catalog.file_count(),
                        static_cast<int>(std::lround(
                            inst.catalog.file_count() * f))));
        inst.catalog.segments.resize(r);
        inst.catalog.arrival_rate.resize(r);
        inst.catalog.weight.resize(r);
        break;
      }
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace sdtp
