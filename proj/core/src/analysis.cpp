#include "sdtp/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sdtp/geomsum.hpp"

namespace sdtp {

namespace {

double route_weight(QueueClass cls, const ScheduleMatrices& sched, int i,
                    int j, int stream) {
  const double pij = sched.pi[i][j];
  if (cls == QueueClass::kE) return pij * sched.p[i][j][stream];
  return pij * sched.q[i][j][stream];
}

// Segments file i pushes through this queue class at server j.
int queue_segments(QueueClass cls, const VideoCatalog& cat,
                   const CachePlacement& pl, int j, int i) {
  const int cached = pl.cached[j][i];
  return cls == QueueClass::kE ? cached : cat.segments[i] - cached;
}

double stream_alpha(QueueClass cls, const StreamRates& rates, int j,
                    int stream) {
  switch (cls) {
    case QueueClass::kE:
      return rates.alpha_e[j][stream];
    case QueueClass::kD:
      return rates.alpha_d[j][stream];
    default:
      return rates.alpha_dbar[j][stream];
  }
}

double stream_eta(QueueClass cls, const SystemTopology& topo, int j) {
  switch (cls) {
    case QueueClass::kE:
      return topo.servers[j].eta_e;
    case QueueClass::kD:
      return topo.servers[j].eta_d;
    default:
      return topo.servers[j].eta_dbar;
  }
}

double aggregate_lambda(QueueClass cls, const VideoCatalog& cat,
                        const ScheduleMatrices& sched, int j, int stream) {
  double lam = 0.0;
  for (int i = 0; i < cat.file_count(); ++i) {
    lam += cat.arrival_rate[i] * route_weight(cls, sched, i, j, stream);
  }
  return lam;
}

double load_intensity(QueueClass cls, const SystemTopology& topo,
                      const VideoCatalog& cat, const CachePlacement& pl,
                      const ScheduleMatrices& sched, const StreamRates& rates,
                      int j, int stream) {
  const double alpha = stream_alpha(cls, rates, j, stream);
  const double eta = stream_eta(cls, topo, j);
  double work = 0.0;
  for (int i = 0; i < cat.file_count(); ++i) {
    work += cat.arrival_rate[i] * route_weight(cls, sched, i, j, stream) *
            queue_segments(cls, cat, pl, j, i);
  }
  if (work <= 0.0) return 0.0;
  if (alpha <= 0.0) {
    throw std::domain_error("positive traffic routed to a zero-rate stream");
  }
  return work * (eta + 1.0 / alpha);
}

// Stream + queue quantities at one exponent value, with the empty-queue
// limit (lambda = 0 => B = 1, waiting transform = 1).
struct QueueEval {
  double lambda = 0.0;
  double rho = 0.0;
  double mgf = 0.0;  // per-segment stream transform at t
  double pk = 0.0;   // waiting-time transform at t
  bool defined = false;
};

QueueEval eval_queue(QueueClass cls, const SystemTopology& topo,
                     const VideoCatalog& cat, const CachePlacement& pl,
                     const ScheduleMatrices& sched, const StreamRates& rates,
                     int j, int stream, double t) {
  QueueEval out;
  const double alpha = stream_alpha(cls, rates, j, stream);
  const double eta = stream_eta(cls, topo, j);
  if (alpha <= 0.0 || t > alpha * (1.0 - kStrictMargin)) return out;
  out.mgf = alpha * std::exp(eta * t) / (alpha - t);
  out.lambda = aggregate_lambda(cls, cat, sched, j, stream);
  if (out.lambda <= 0.0) {
    out.pk = 1.0;
    out.defined = true;
    return out;
  }
  out.rho = load_intensity(cls, topo, cat, pl, sched, rates, j, stream);
  if (out.rho > 1.0 - kStrictMargin) return out;
  if (t == 0.0) {
    out.pk = 1.0;
    out.defined = true;
    return out;
  }
  double weighted = 0.0;  // lambda * B(t)
  for (int i = 0; i < cat.file_count(); ++i) {
    const double w =
        cat.arrival_rate[i] * route_weight(cls, sched, i, j, stream);
    if (w == 0.0) continue;
    weighted += w * std::pow(out.mgf, queue_segments(cls, cat, pl, j, i));
  }
  const double den = t + out.lambda - weighted;
  if (den < kStrictMargin * t) return out;
  out.pk = (1.0 - out.rho) * t * weighted / (out.lambda * den);
  out.defined = true;
  return out;
}

// Cached-side aggregate: pk_e * sum_{u=1}^{min(v, cached)} phi^{1-u} M_e^u.
double delta_e_part(const QueueEval& qe, int cached, int v, double t,
                    double tau) {
  const int c = std::min(v, cached);
  if (c <= 0) return 0.0;
  const double x = std::log(qe.mgf) - tau * t;
  return qe.pk * qe.mgf * geom0(x, c);
}

struct DeltaD {
  double d2 = 0.0, d3 = 0.0, d4 = 0.0;
};

// Origin-side aggregates over segments cached+1..v, bottleneck-partitioned:
// relay-wait terms (d2), first-origin-segment terms (d3), later-origin
// -segment terms (d4).
DeltaD delta_d_part(const QueueEval& qd, const QueueEval& qdb, int cached,
                    int v, double t, double tau) {
  DeltaD out;
  const int n = v - cached;
  if (n <= 0) return out;
  const double phi_pow = std::exp((1.0 - cached) * tau * t);
  const double xb = std::log(qdb.mgf) - tau * t;
  const double lm = std::log(qd.mgf) - std::log(qdb.mgf);
  const double g = geom1(xb, n);
  out.d2 = qdb.pk * phi_pow * g;
  out.d3 = qd.pk * phi_pow * g;
  out.d4 = qd.pk * phi_pow * (hsum(xb, lm, n) - g);
  return out;
}

}  // namespace

MgfValue shifted_exp_mgf(double alpha, double eta, double t) {
  if (alpha <= 0.0 || eta < 0.0) {
    throw std::invalid_argument("shifted_exp_mgf: need alpha > 0, eta >= 0");
  }
  if (t >= alpha) return {0.0, false};
  return {alpha * std::exp(eta * t) / (alpha - t), true};
}

StreamRates stream_rates(const SystemTopology& topo,
                         const BandwidthWeights& weights) {
  weights.validate(topo);
  const int m = topo.server_count();
  StreamRates r;
  r.alpha_d.resize(m);
  r.alpha_dbar.resize(m);
  r.alpha_e.resize(m);
  for (int j = 0; j < m; ++j) {
    const ServerSpec& s = topo.servers[j];
    r.alpha_d[j].resize(s.d_streams);
    r.alpha_dbar[j].resize(s.d_streams);
    r.alpha_e[j].resize(s.e_streams);
    for (int b = 0; b < s.d_streams; ++b) {
      r.alpha_d[j][b] = weights.w_d[j][b] * s.alpha_d_base;
      r.alpha_dbar[j][b] = weights.w_dbar[j][b] * s.alpha_f_base;
    }
    for (int nu = 0; nu < s.e_streams; ++nu) {
      r.alpha_e[j][nu] = weights.w_e[j][nu] * s.alpha_f_base;
    }
  }
  return r;
}

AggregateArrivals aggregate_arrivals(const VideoCatalog& cat,
                                     const ScheduleMatrices& sched) {
  const int m = sched.pi.empty() ? 0 : static_cast<int>(sched.pi[0].size());
  AggregateArrivals out;
  out.lambda_d.resize(m);
  out.lambda_dbar.resize(m);
  out.lambda_e.resize(m);
  for (int j = 0; j < m; ++j) {
    const int d = static_cast<int>(sched.q[0][j].size());
    const int e = static_cast<int>(sched.p[0][j].size());
    out.lambda_d[j].assign(d, 0.0);
    out.lambda_e[j].assign(e, 0.0);
    for (int b = 0; b < d; ++b) {
      out.lambda_d[j][b] = aggregate_lambda(QueueClass::kD, cat, sched, j, b);
    }
    for (int nu = 0; nu < e; ++nu) {
      out.lambda_e[j][nu] = aggregate_lambda(QueueClass::kE, cat, sched, j, nu);
    }
    out.lambda_dbar[j] = out.lambda_d[j];
  }
  return out;
}

double load_intensity_e(const SystemTopology& topo, const VideoCatalog& cat,
                        const CachePlacement& pl, const ScheduleMatrices& sched,
                        const StreamRates& rates, int j, int nu) {
  return load_intensity(QueueClass::kE, topo, cat, pl, sched, rates, j, nu);
}

double load_intensity_d(const SystemTopology& topo, const VideoCatalog& cat,
                        const CachePlacement& pl, const ScheduleMatrices& sched,
                        const StreamRates& rates, int j, int beta) {
  return load_intensity(QueueClass::kD, topo, cat, pl, sched, rates, j, beta);
}

double load_intensity_dbar(const SystemTopology& topo, const VideoCatalog& cat,
                           const CachePlacement& pl,
                           const ScheduleMatrices& sched,
                           const StreamRates& rates, int j, int beta) {
  return load_intensity(QueueClass::kDbar, topo, cat, pl, sched, rates, j,
                        beta);
}

MgfValue batch_service_mgf(QueueClass cls, const SystemTopology& topo,
                           const VideoCatalog& cat, const CachePlacement& pl,
                           const ScheduleMatrices& sched,
                           const StreamRates& rates, int j, int stream,
                           double t) {
  const double lambda = aggregate_lambda(cls, cat, sched, j, stream);
  if (lambda <= 0.0) {
    throw std::domain_error("batch_service_mgf: stream has no arrivals");
  }
  const double alpha = stream_alpha(cls, rates, j, stream);
  const double eta = stream_eta(cls, topo, j);
  if (alpha <= 0.0 || t >= alpha) return {0.0, false};
  const double m = alpha * std::exp(eta * t) / (alpha - t);
  double b = 0.0;
  for (int i = 0; i < cat.file_count(); ++i) {
    const double w =
        cat.arrival_rate[i] * route_weight(cls, sched, i, j, stream);
    if (w == 0.0) continue;
    b += w / lambda * std::pow(m, queue_segments(cls, cat, pl, j, i));
  }
  return {b, true};
}

MgfValue pk_waiting_mgf(double lambda, double rho, double b_at_t, double t) {
  if (rho >= 1.0) {
    throw std::domain_error("pk_waiting_mgf: unstable queue (rho >= 1)");
  }
  if (t == 0.0) return {1.0, true};
  const double den = t - lambda * (b_at_t - 1.0);
  if (den <= 0.0) return {0.0, false};
  return {(1.0 - rho) * t * b_at_t / den, true};
}

MgfValue cached_download_mgf(const SystemTopology& topo,
                             const VideoCatalog& cat, const CachePlacement& pl,
                             const ScheduleMatrices& sched,
                             const StreamRates& rates, int i, int j, int nu,
                             int g, double t) {
  if (g < 0 || g > pl.cached[j][i]) {
    throw std::invalid_argument("cached_download_mgf: segment out of range");
  }
  const QueueEval q =
      eval_queue(QueueClass::kE, topo, cat, pl, sched, rates, j, nu, t);
  if (!q.defined) return {0.0, false};
  return {q.pk * std::pow(q.mgf, g), true};
}

MgfValue noncached_download_mgf_bruteforce(const SystemTopology& topo,
                                           const VideoCatalog& cat,
                                           const CachePlacement& pl,
                                           const ScheduleMatrices& sched,
                                           const StreamRates& rates, int i,
                                           int j, int beta, int nu, int v,
                                           double t) {
  (void)nu;
  const int cached = pl.cached[j][i];
  if (v <= cached || v > cat.segments[i]) {
    throw std::invalid_argument(
        "noncached_download_mgf_bruteforce: need cached < v <= L_i");
  }
  const QueueEval qd =
      eval_queue(QueueClass::kD, topo, cat, pl, sched, rates, j, beta, t);
  const QueueEval qdb =
      eval_queue(QueueClass::kDbar, topo, cat, pl, sched, rates, j, beta, t);
  if (!qd.defined || !qdb.defined) return {0.0, false};
  // Bottleneck at the relay queue itself.
  double total = qdb.pk * std::pow(qdb.mgf, v - cached);
  // Bottleneck at the origin departure of segment y.
  for (int y = cached + 1; y <= v; ++y) {
    total += qd.pk * std::pow(qd.mgf, y - cached - 1) *
             std::pow(qdb.mgf, v - y + 1);
  }
  return {total, true};
}

DeltaTerms delta_terms(const SystemTopology& topo, const VideoCatalog& cat,
                       const CachePlacement& pl, const ScheduleMatrices& sched,
                       const StreamRates& rates, int i, int j, int beta,
                       int nu, double t_i, int v) {
  if (v < 1 || v > cat.segments[i]) {
    throw std::invalid_argument("delta_terms: segment index out of range");
  }
  DeltaTerms out;
  const int cached = pl.cached[j][i];
  const double tau = cat.tau;
  if (cached > 0) {
    const QueueEval qe =
        eval_queue(QueueClass::kE, topo, cat, pl, sched, rates, j, nu, t_i);
    if (!qe.defined) return out;
    out.d1 = delta_e_part(qe, cached, v, t_i, tau);
  }
  if (v > cached) {
    const QueueEval qd =
        eval_queue(QueueClass::kD, topo, cat, pl, sched, rates, j, beta, t_i);
    const QueueEval qdb = eval_queue(QueueClass::kDbar, topo, cat, pl, sched,
                                     rates, j, beta, t_i);
    if (!qd.defined || !qdb.defined) return out;
    const DeltaD dd = delta_d_part(qd, qdb, cached, v, t_i, tau);
    out.d2 = dd.d2;
    out.d3 = dd.d3;
    out.d4 = dd.d4;
  }
  out.defined = true;
  return out;
}

BoundRow sdtp_bound(int i, double sigma, const SystemTopology& topo,
                    const VideoCatalog& cat, const ControlPoint& point) {
  if (sigma < 0.0) throw std::invalid_argument("sdtp_bound: sigma < 0");
  const StreamRates rates = stream_rates(topo, point.bandwidth);
  const ScheduleMatrices& sched = point.schedule;
  const CachePlacement& pl = point.placement;
  const double t = point.aux.t[i];
  const int L = cat.segments[i];
  const double tail_scale = std::exp(-(sigma + cat.startup_delay) * t);

  BoundRow row;
  row.file = i;
  double raw = 0.0;
  for (int j = 0; j < topo.server_count(); ++j) {
    const double pij = sched.pi[i][j];
    if (pij == 0.0) continue;
    const int cached = pl.cached[j][i];
    double e_part = 0.0;
    if (cached > 0) {
      for (int nu = 0; nu < topo.servers[j].e_streams; ++nu) {
        const double pr = sched.p[i][j][nu];
        if (pr == 0.0) continue;
        const QueueEval qe =
            eval_queue(QueueClass::kE, topo, cat, pl, sched, rates, j, nu, t);
        if (!qe.defined) {
          throw std::domain_error(
              "sdtp_bound: transform does not exist on a cached-content "
              "stream used by file " +
              std::to_string(i));
        }
        const double d1 = delta_e_part(qe, cached, L, t, cat.tau);
        e_part += pr * d1;
        row.delta1 += pij * pr * d1;
      }
    }
    double d_part = 0.0;
    if (L > cached) {
      for (int beta = 0; beta < topo.servers[j].d_streams; ++beta) {
        const double qr = sched.q[i][j][beta];
        if (qr == 0.0) continue;
        const QueueEval qd =
            eval_queue(QueueClass::kD, topo, cat, pl, sched, rates, j, beta, t);
        const QueueEval qdb = eval_queue(QueueClass::kDbar, topo, cat, pl,
                                         sched, rates, j, beta, t);
        if (!qd.defined || !qdb.defined) {
          throw std::domain_error(
              "sdtp_bound: transform does not exist on an origin-path stream "
              "used by file " +
              std::to_string(i));
        }
        const DeltaD dd = delta_d_part(qd, qdb, cached, L, t, cat.tau);
        d_part += qr * (dd.d2 + dd.d3 + dd.d4);
        row.delta2 += pij * qr * dd.d2;
        row.delta3 += pij * qr * dd.d3;
        row.delta4 += pij * qr * dd.d4;
      }
    }
    raw += pij * (std::exp(-t * sigma) + tail_scale * (e_part + d_part));
  }
  row.raw = raw;
  row.clipped = std::min(raw, 1.0);
  row.feasible = true;
  return row;
}

double weighted_objective(double sigma, const SystemTopology& topo,
                          const VideoCatalog& cat, const ControlPoint& point) {
  double wsum = 0.0;
  double acc = 0.0;
  for (int i = 0; i < cat.file_count(); ++i) {
    wsum += cat.weight[i];
    if (cat.weight[i] == 0.0) continue;
    acc += cat.weight[i] * sdtp_bound(i, sigma, topo, cat, point).raw;
  }
  return acc / wsum;
}

BoundReport bound_report(double sigma, const SystemTopology& topo,
                         const VideoCatalog& cat, const ControlPoint& point) {
  BoundReport rep;
  rep.feasible = true;
  double wsum = 0.0;
  double acc = 0.0;
  for (int i = 0; i < cat.file_count(); ++i) {
    wsum += cat.weight[i];
    try {
      rep.rows.push_back(sdtp_bound(i, sigma, topo, cat, point));
      acc += cat.weight[i] * rep.rows.back().clipped;
    } catch (const std::domain_error&) {
      BoundRow row;
      row.file = i;
      row.feasible = false;
      rep.rows.push_back(row);
      rep.feasible = false;
    }
  }
  rep.objective = rep.feasible ? acc / wsum
                               : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

double constraint_curvature_probe(const SystemTopology& topo,
                                  const VideoCatalog& cat,
                                  const CachePlacement& pl,
                                  const ScheduleMatrices& sched,
                                  const StreamRates& rates, QueueClass cls,
                                  int j, int stream, ConstraintAxis axis,
                                  double fixed_t,
                                  const std::vector<double>& grid) {
  if (grid.size() < 3) {
    throw std::invalid_argument("curvature probe: need at least 3 grid points");
  }
  const double h = grid[1] - grid[0];
  for (size_t k = 1; k < grid.size(); ++k) {
    if (std::fabs((grid[k] - grid[k - 1]) - h) > 1e-9 * std::fabs(h)) {
      throw std::invalid_argument("curvature probe: grid must be uniform");
    }
  }
  const double base_alpha = stream_alpha(cls, rates, j, stream);
  const double eta = stream_eta(cls, topo, j);
  const double lambda = aggregate_lambda(cls, cat, sched, j, stream);

  auto constraint_fn = [&](double x) {
    const double alpha = axis == ConstraintAxis::kStreamRate ? x : base_alpha;
    const double t = axis == ConstraintAxis::kStreamRate ? fixed_t : x;
    if (t >= alpha || alpha <= 0.0) {
      throw std::domain_error("curvature probe: grid leaves feasible region");
    }
    const double m = alpha * std::exp(eta * t) / (alpha - t);
    double s = 0.0;
    for (int i = 0; i < cat.file_count(); ++i) {
      const double w =
          cat.arrival_rate[i] * route_weight(cls, sched, i, j, stream);
      if (w == 0.0) continue;
      s += w * std::pow(m, queue_segments(cls, cat, pl, j, i));
    }
    return s - (lambda + t);
  };

  std::vector<double> f(grid.size());
  for (size_t k = 0; k < grid.size(); ++k) f[k] = constraint_fn(grid[k]);
  double min_dd = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k + 1 < grid.size(); ++k) {
    min_dd = std::min(min_dd, (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (h * h));
  }
  return min_dd;
}

}  // namespace sdtp
