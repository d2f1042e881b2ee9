#include "sdtp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdtp/analysis.hpp"
#include "sdtp/rng.hpp"

namespace sdtp {

namespace {

struct Arrival {
  double time;
  int file;
  int seq;
};

}  // namespace

SimTrace run_sim(const SimConfig& config) {
  const SystemTopology& topo = config.topology;
  const VideoCatalog& cat = config.catalog;
  const ControlPoint& pt = config.point;
  pt.validate(topo, cat);
  if (config.horizon <= 0.0) {
    throw std::invalid_argument("run_sim: horizon must be positive");
  }
  const double warmup =
      config.warmup < 0.0 ? 0.2 * config.horizon : config.warmup;
  if (warmup >= config.horizon) {
    throw std::invalid_argument("run_sim: warmup must precede the horizon");
  }

  const int m = topo.server_count();
  const int r = cat.file_count();
  const StreamRates rates = stream_rates(topo, pt.bandwidth);

  SimTrace trace;
  trace.horizon = config.horizon;
  trace.warmup = warmup;
  trace.seed = config.seed;
  trace.relay_arrivals.resize(m);
  for (int j = 0; j < m; ++j) {
    trace.relay_arrivals[j].resize(topo.servers[j].d_streams);
  }

  // Stability scan: the run proceeds under overload, but callers get a flag.
  for (int j = 0; j < m && !trace.saturation_warning; ++j) {
    for (int nu = 0; nu < topo.servers[j].e_streams; ++nu) {
      try {
        if (load_intensity_e(topo, cat, pt.placement, pt.schedule, rates, j,
                             nu) >= 1.0) {
          trace.saturation_warning = true;
        }
      } catch (const std::domain_error&) {
        trace.saturation_warning = true;
      }
    }
    for (int b = 0; b < topo.servers[j].d_streams; ++b) {
      try {
        if (load_intensity_d(topo, cat, pt.placement, pt.schedule, rates, j,
                             b) >= 1.0 ||
            load_intensity_dbar(topo, cat, pt.placement, pt.schedule, rates, j,
                                b) >= 1.0) {
          trace.saturation_warning = true;
        }
      } catch (const std::domain_error&) {
        trace.saturation_warning = true;
      }
    }
  }

  // Independent Poisson arrival stream per file.
  std::vector<Arrival> arrivals;
  for (int i = 0; i < r; ++i) {
    Rng rng(mix_seed(config.seed, {1, static_cast<uint64_t>(i)}));
    double t = 0.0;
    int seq = 0;
    for (;;) {
      t += rng.exponential(cat.arrival_rate[i]);
      if (t >= config.horizon) break;
      arrivals.push_back({t, i, seq++});
    }
  }
  std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a,
                                                 const Arrival& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.file != b.file) return a.file < b.file;
    return a.seq < b.seq;
  });

  // Dispatch choices per file; service draws per stream.
  std::vector<Rng> choice;
  choice.reserve(r);
  for (int i = 0; i < r; ++i) {
    choice.emplace_back(mix_seed(config.seed, {2, static_cast<uint64_t>(i)}));
  }
  std::vector<std::vector<Rng>> svc_e(m), svc_d(m), svc_db(m);
  std::vector<std::vector<double>> free_e(m), free_d(m), free_db(m);
  for (int j = 0; j < m; ++j) {
    const ServerSpec& s = topo.servers[j];
    for (int nu = 0; nu < s.e_streams; ++nu) {
      svc_e[j].emplace_back(mix_seed(
          config.seed, {3, static_cast<uint64_t>(j), static_cast<uint64_t>(nu)}));
    }
    for (int b = 0; b < s.d_streams; ++b) {
      svc_d[j].emplace_back(mix_seed(
          config.seed, {4, static_cast<uint64_t>(j), static_cast<uint64_t>(b)}));
      svc_db[j].emplace_back(mix_seed(
          config.seed, {5, static_cast<uint64_t>(j), static_cast<uint64_t>(b)}));
    }
    free_e[j].assign(s.e_streams, 0.0);
    free_d[j].assign(s.d_streams, 0.0);
    free_db[j].assign(s.d_streams, 0.0);
  }

  std::vector<double> d_abs, e_abs, t_rel;
  for (const Arrival& ar : arrivals) {
    const int i = ar.file;
    const double a = ar.time;
    const int L = cat.segments[i];
    Rng& ch = choice[i];
    const int j = ch.discrete(pt.schedule.pi[i]);
    const int nu = ch.discrete(pt.schedule.p[i][j]);
    const int b = ch.discrete(pt.schedule.q[i][j]);
    const ServerSpec& srv = topo.servers[j];
    const int cached = pt.placement.cached[j][i];
    const bool keep = a >= warmup;

    d_abs.assign(L + 1, 0.0);
    double wait_cached = 0.0, wait_origin = 0.0;
    if (cached > 0) {
      const double alpha = rates.alpha_e[j][nu];
      if (alpha <= 0.0) {
        throw std::domain_error("run_sim: request dispatched to a zero-rate "
                                "cached-content stream");
      }
      const double start = std::max(a, free_e[j][nu]);
      wait_cached = start - a;
      double cur = start;
      for (int g = 1; g <= cached; ++g) {
        cur += svc_e[j][nu].shifted_exp(alpha, srv.eta_e);
        d_abs[g] = cur;
      }
      free_e[j][nu] = cur;
    }
    if (cached < L) {
      const double alpha_d = rates.alpha_d[j][b];
      const double alpha_db = rates.alpha_dbar[j][b];
      if (alpha_d <= 0.0 || alpha_db <= 0.0) {
        throw std::domain_error(
            "run_sim: request dispatched to a zero-rate origin-path stream");
      }
      e_abs.assign(L + 1, 0.0);
      const double start = std::max(a, free_d[j][b]);
      wait_origin = start - a;
      double cur = start;
      for (int g = cached + 1; g <= L; ++g) {
        cur += svc_d[j][b].shifted_exp(alpha_d, srv.eta_d);
        e_abs[g] = cur;
      }
      free_d[j][b] = cur;
      // One relay arrival per request: the batch shows up at the relay
      // queue when its first segment departs the origin queue.
      if (keep) trace.relay_arrivals[j][b].push_back(e_abs[cached + 1]);
      // Relay service: segment g starts once it left the origin queue and
      // the relay server finished this request's previous segment.
      double prev = free_db[j][b];
      for (int g = cached + 1; g <= L; ++g) {
        const double begin = std::max(prev, e_abs[g]);
        prev = begin + svc_db[j][b].shifted_exp(alpha_db, srv.eta_dbar);
        d_abs[g] = prev;
      }
      free_db[j][b] = prev;
    }

    if (!keep) continue;

    t_rel.assign(L + 1, 0.0);
    t_rel[1] = std::max(cat.startup_delay, d_abs[1] - a);
    for (int g = 2; g <= L; ++g) {
      t_rel[g] = std::max(t_rel[g - 1] + cat.tau, d_abs[g] - a);
    }
    const double gamma = std::max(
        0.0, t_rel[L] - cat.startup_delay - (L - 1) * cat.tau);

    RequestRecord rec;
    rec.file = i;
    rec.server = j;
    rec.beta = b;
    rec.nu = nu;
    rec.arrival = a;
    rec.wait_cached = wait_cached;
    rec.wait_origin = wait_origin;
    rec.gamma = gamma;
    rec.seg_count = L;
    if (config.keep_segments) {
      rec.seg_offset = trace.seg_download.size();
      for (int g = 1; g <= L; ++g) {
        trace.seg_download.push_back(d_abs[g] - a);
        trace.seg_play.push_back(t_rel[g]);
      }
    }
    trace.requests.push_back(rec);
  }
  return trace;
}

std::vector<EmpiricalRow> empirical_sdtp(
    const SimTrace& trace, const VideoCatalog& cat,
    const std::vector<double>& sigma_grid) {
  const int r = cat.file_count();
  std::vector<long> count(r, 0);
  for (const RequestRecord& rec : trace.requests) ++count[rec.file];
  std::vector<EmpiricalRow> rows;
  rows.reserve(r * sigma_grid.size());
  for (int i = 0; i < r; ++i) {
    for (double sigma : sigma_grid) {
      EmpiricalRow row;
      row.file = i;
      row.sigma = sigma;
      row.n = count[i];
      if (count[i] > 0) {
        long hits = 0;
        for (const RequestRecord& rec : trace.requests) {
          if (rec.file == i && rec.gamma >= sigma) ++hits;
        }
        row.p_hat = static_cast<double>(hits) / count[i];
        row.std_err = std::sqrt(row.p_hat * (1.0 - row.p_hat) / count[i]);
        row.valid = true;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

DispersionResult dispersion_index(const std::vector<double>& epochs, double t0,
                                  double t1, int windows) {
  DispersionResult res;
  if (windows < 2 || t1 <= t0) return res;
  std::vector<long> counts(windows, 0);
  const double width = (t1 - t0) / windows;
  long used = 0;
  for (double e : epochs) {
    if (e < t0 || e >= t1) continue;
    const int k =
        std::min(windows - 1, static_cast<int>((e - t0) / width));
    ++counts[k];
    ++used;
  }
  res.epochs = used;
  res.windows = windows;
  if (used < 2) return res;
  double mean = 0.0;
  for (long c : counts) mean += c;
  mean /= windows;
  if (mean <= 0.0) return res;
  double var = 0.0;
  for (long c : counts) var += (c - mean) * (c - mean);
  var /= (windows - 1);
  res.statistic = var / mean;
  res.conclusive = true;
  return res;
}

DispersionResult second_queue_arrival_check(const SimTrace& trace, int windows,
                                            long min_epochs) {
  DispersionResult agg;
  double weighted = 0.0;
  long total = 0;
  for (const auto& per_server : trace.relay_arrivals) {
    for (const auto& epochs : per_server) {
      if (static_cast<long>(epochs.size()) < min_epochs) continue;
      // Keep a sensible mean count per window for this stream.
      const int w = std::clamp<int>(static_cast<int>(epochs.size() / 5), 100,
                                    windows);
      const DispersionResult one =
          dispersion_index(epochs, trace.warmup, trace.horizon, w);
      if (!one.conclusive) continue;
      weighted += one.statistic * one.epochs;
      total += one.epochs;
      agg.windows += one.windows;
    }
  }
  if (total == 0) return agg;
  agg.statistic = weighted / total;
  agg.epochs = total;
  agg.conclusive = true;
  return agg;
}

}  // namespace sdtp
