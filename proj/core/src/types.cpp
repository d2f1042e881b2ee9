#include "sdtp/types.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace sdtp {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

void SystemTopology::validate() const {
  require(!servers.empty(), "topology: need at least one server");
  for (size_t j = 0; j < servers.size(); ++j) {
    const ServerSpec& s = servers[j];
    const std::string tag = "server " + std::to_string(j) + ": ";
    require(s.d_streams >= 1, tag + "d_streams must be >= 1");
    require(s.e_streams >= 1, tag + "e_streams must be >= 1");
    require(s.alpha_d_base > 0.0 && s.alpha_f_base > 0.0,
            tag + "base rates must be positive");
    require(s.eta_d >= 0.0 && s.eta_dbar >= 0.0 && s.eta_e >= 0.0,
            tag + "shifts must be nonnegative");
  }
}

int VideoCatalog::total_segments() const {
  return std::accumulate(segments.begin(), segments.end(), 0);
}

void VideoCatalog::validate() const {
  require(!segments.empty(), "catalog: need at least one file");
  require_dims(arrival_rate.size() == segments.size() &&
                   weight.size() == segments.size(),
               "catalog: per-file arrays disagree in length");
  double wsum = 0.0;
  for (size_t i = 0; i < segments.size(); ++i) {
    const std::string tag = "file " + std::to_string(i) + ": ";
    require(segments[i] >= 1, tag + "segment count must be >= 1");
    require(arrival_rate[i] > 0.0, tag + "arrival rate must be positive");
    require(weight[i] >= 0.0, tag + "weight must be nonnegative");
    wsum += weight[i];
  }
  require(wsum > 0.0, "catalog: weights must not all be zero");
  require(tau > 0.0, "catalog: tau must be positive");
  require(startup_delay >= 0.0, "catalog: startup delay must be nonnegative");
  require(sigma >= 0.0, "catalog: sigma must be nonnegative");
}

void CachePlacement::validate(const SystemTopology& topo,
                              const VideoCatalog& cat) const {
  const size_t m = topo.servers.size();
  const size_t r = cat.segments.size();
  require_dims(cached.size() == m && capacity.size() == m,
               "placement: server dimension mismatch");
  for (size_t j = 0; j < m; ++j) {
    require_dims(cached[j].size() == r, "placement: file dimension mismatch");
    int used = 0;
    for (size_t i = 0; i < r; ++i) {
      require(cached[j][i] >= 0 && cached[j][i] <= cat.segments[i],
              "placement: cached segments outside [0, L_i]");
      used += cached[j][i];
    }
    require(used <= capacity[j] + 1e-9,
            "placement: capacity exceeded at server " + std::to_string(j));
  }
}

void ScheduleMatrices::validate(const SystemTopology& topo,
                                const VideoCatalog& cat) const {
  const size_t m = topo.servers.size();
  const size_t r = cat.segments.size();
  require_dims(pi.size() == r && p.size() == r && q.size() == r,
               "schedule: file dimension mismatch");
  for (size_t i = 0; i < r; ++i) {
    require_dims(pi[i].size() == m && p[i].size() == m && q[i].size() == m,
                 "schedule: server dimension mismatch");
    double pi_sum = 0.0;
    for (size_t j = 0; j < m; ++j) {
      require_dims(
          p[i][j].size() == static_cast<size_t>(topo.servers[j].e_streams),
          "schedule: p stream dimension mismatch");
      require_dims(
          q[i][j].size() == static_cast<size_t>(topo.servers[j].d_streams),
          "schedule: q stream dimension mismatch");
      require(pi[i][j] >= 0.0, "schedule: negative probability");
      pi_sum += pi[i][j];
      double ps = 0.0, qs = 0.0;
      for (double x : p[i][j]) {
        require(x >= 0.0, "schedule: negative probability");
        ps += x;
      }
      for (double x : q[i][j]) {
        require(x >= 0.0, "schedule: negative probability");
        qs += x;
      }
      require(std::fabs(ps - 1.0) <= kSimplexTol,
              "schedule: p row does not sum to one");
      require(std::fabs(qs - 1.0) <= kSimplexTol,
              "schedule: q row does not sum to one");
    }
    require(std::fabs(pi_sum - 1.0) <= kSimplexTol,
            "schedule: pi row does not sum to one");
  }
}

void ScheduleMatrices::renormalize() {
  auto fix = [](std::vector<double>& row) {
    double s = 0.0;
    for (double x : row) s += x;
    if (s > 0.0 && std::fabs(s - 1.0) <= kSimplexTol) {
      for (double& x : row) x /= s;
    }
  };
  for (auto& row : pi) fix(row);
  for (auto& per_file : p)
    for (auto& row : per_file) fix(row);
  for (auto& per_file : q)
    for (auto& row : per_file) fix(row);
}

void BandwidthWeights::validate(const SystemTopology& topo) const {
  const size_t m = topo.servers.size();
  require_dims(w_d.size() == m && w_dbar.size() == m && w_e.size() == m,
               "weights: server dimension mismatch");
  for (size_t j = 0; j < m; ++j) {
    require_dims(
        w_d[j].size() == static_cast<size_t>(topo.servers[j].d_streams) &&
            w_dbar[j].size() == static_cast<size_t>(topo.servers[j].d_streams) &&
            w_e[j].size() == static_cast<size_t>(topo.servers[j].e_streams),
        "weights: stream dimension mismatch");
    double d_sum = 0.0, f_sum = 0.0;
    for (double x : w_d[j]) {
      require(x >= 0.0, "weights: negative entry");
      d_sum += x;
    }
    for (double x : w_dbar[j]) {
      require(x >= 0.0, "weights: negative entry");
      f_sum += x;
    }
    for (double x : w_e[j]) {
      require(x >= 0.0, "weights: negative entry");
      f_sum += x;
    }
    require(d_sum <= 1.0 + 1e-12, "weights: origin-link sum exceeds one");
    require(f_sum <= 1.0 + 1e-12, "weights: cache-link sum exceeds one");
  }
}

void AuxVars::validate(const VideoCatalog& cat) const {
  require_dims(t.size() == cat.segments.size(),
               "aux: file dimension mismatch");
  for (double x : t) require(x > 0.0, "aux: t must be positive");
}

void ControlPoint::validate(const SystemTopology& topo,
                            const VideoCatalog& cat) const {
  schedule.validate(topo, cat);
  bandwidth.validate(topo);
  placement.validate(topo, cat);
  aux.validate(cat);
}

}  // namespace sdtp
