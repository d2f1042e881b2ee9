#include "sdtp/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "sdtp/projection.hpp"

namespace sdtp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dims(const SystemTopology& topo, const VideoCatalog& cat,
                const ControlPoint& pt) {
  topo.validate();
  cat.validate();
  const size_t m = topo.servers.size();
  const size_t r = cat.segments.size();
  auto bad = [](const std::string& what) { throw DimensionError(what); };
  if (pt.schedule.pi.size() != r || pt.schedule.p.size() != r ||
      pt.schedule.q.size() != r) {
    bad("schedule: file dimension mismatch");
  }
  for (size_t i = 0; i < r; ++i) {
    if (pt.schedule.pi[i].size() != m || pt.schedule.p[i].size() != m ||
        pt.schedule.q[i].size() != m) {
      bad("schedule: server dimension mismatch");
    }
    for (size_t j = 0; j < m; ++j) {
      if (pt.schedule.p[i][j].size() !=
              static_cast<size_t>(topo.servers[j].e_streams) ||
          pt.schedule.q[i][j].size() !=
              static_cast<size_t>(topo.servers[j].d_streams)) {
        bad("schedule: stream dimension mismatch");
      }
    }
  }
  if (pt.bandwidth.w_d.size() != m || pt.bandwidth.w_dbar.size() != m ||
      pt.bandwidth.w_e.size() != m) {
    bad("weights: server dimension mismatch");
  }
  for (size_t j = 0; j < m; ++j) {
    if (pt.bandwidth.w_d[j].size() !=
            static_cast<size_t>(topo.servers[j].d_streams) ||
        pt.bandwidth.w_dbar[j].size() !=
            static_cast<size_t>(topo.servers[j].d_streams) ||
        pt.bandwidth.w_e[j].size() !=
            static_cast<size_t>(topo.servers[j].e_streams)) {
      bad("weights: stream dimension mismatch");
    }
  }
  if (pt.placement.cached.size() != m || pt.placement.capacity.size() != m) {
    bad("placement: server dimension mismatch");
  }
  for (size_t j = 0; j < m; ++j) {
    if (pt.placement.cached[j].size() != r) {
      bad("placement: file dimension mismatch");
    }
  }
  if (pt.aux.t.size() != r) bad("aux: file dimension mismatch");
}

struct StreamCheck {
  double alpha = 0.0;
  double eta = 0.0;
  double lambda = 0.0;
  double work = 0.0;  // arrival-weighted segments
};

// Internal margins plus per-file aggregation for the t-shrink loop.
struct InternalReport {
  FeasibilityReport rep;
  std::vector<double> file_margin;  // min(rate, pk) margin per file
};

InternalReport evaluate(const SystemTopology& topo, const VideoCatalog& cat,
                        const ControlPoint& pt) {
  const int m = topo.server_count();
  const int r = cat.file_count();
  InternalReport out;
  FeasibilityReport& rep = out.rep;
  out.file_margin.assign(r, kInf);
  rep.simplex_margin = kInf;
  rep.weights_margin = kInf;
  rep.capacity_margin = kInf;
  rep.box_margin = kInf;
  rep.stability_margin = kInf;
  rep.rate_margin = kInf;
  rep.pk_margin = kInf;

  auto note = [&rep](double margin, const std::string& what) {
    if (margin < 0.0 && rep.violations.size() < 32) {
      rep.violations.push_back(what);
    }
  };

  // Scheduling rows: nonnegativity (box) and unit sums (simplex).
  auto scan_row = [&](const std::vector<double>& row, const std::string& tag) {
    double s = 0.0;
    for (double x : row) {
      s += x;
      rep.box_margin = std::min(rep.box_margin, x);
    }
    const double margin = kSimplexTol - std::fabs(s - 1.0);
    rep.simplex_margin = std::min(rep.simplex_margin, margin);
    note(margin, tag + " row sum != 1");
  };
  for (int i = 0; i < r; ++i) {
    scan_row(pt.schedule.pi[i], "pi[" + std::to_string(i) + "]");
    for (int j = 0; j < m; ++j) {
      scan_row(pt.schedule.p[i][j],
               "p[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      scan_row(pt.schedule.q[i][j],
               "q[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }

  // Bandwidth sums and entry signs.
  for (int j = 0; j < m; ++j) {
    double d_sum = 0.0, f_sum = 0.0;
    for (double x : pt.bandwidth.w_d[j]) {
      d_sum += x;
      rep.box_margin = std::min(rep.box_margin, x);
    }
    for (double x : pt.bandwidth.w_dbar[j]) {
      f_sum += x;
      rep.box_margin = std::min(rep.box_margin, x);
    }
    for (double x : pt.bandwidth.w_e[j]) {
      f_sum += x;
      rep.box_margin = std::min(rep.box_margin, x);
    }
    // 1e-12 slack absorbs projection round-off on the unit sums.
    rep.weights_margin = std::min(
        {rep.weights_margin, 1.0 + 1e-12 - d_sum, 1.0 + 1e-12 - f_sum});
    note(1.0 + 1e-12 - d_sum,
         "server " + std::to_string(j) + ": origin weight sum");
    note(1.0 + 1e-12 - f_sum,
         "server " + std::to_string(j) + ": cache weight sum");
  }

  // Placement box and capacity.
  for (int j = 0; j < m; ++j) {
    double used = 0.0;
    for (int i = 0; i < r; ++i) {
      const int c = pt.placement.cached[j][i];
      used += c;
      rep.box_margin = std::min(rep.box_margin, static_cast<double>(c));
      rep.box_margin =
          std::min(rep.box_margin, static_cast<double>(cat.segments[i] - c));
    }
    const double margin = pt.placement.capacity[j] + 1e-9 - used;
    rep.capacity_margin = std::min(rep.capacity_margin, margin);
    note(margin, "server " + std::to_string(j) + ": cache capacity");
  }

  // t positivity.
  for (int i = 0; i < r; ++i) {
    rep.box_margin = std::min(rep.box_margin, pt.aux.t[i]);
    note(pt.aux.t[i], "t[" + std::to_string(i) + "] <= 0");
  }

  // Per-stream queue checks for the three classes.
  enum Class { kE = 0, kD = 1, kDbar = 2 };
  for (int j = 0; j < m; ++j) {
    const ServerSpec& srv = topo.servers[j];
    for (int cls = kE; cls <= kDbar; ++cls) {
      const int count = cls == kE ? srv.e_streams : srv.d_streams;
      for (int s = 0; s < count; ++s) {
        StreamCheck sc;
        switch (cls) {
          case kE:
            sc.alpha = pt.bandwidth.w_e[j][s] * srv.alpha_f_base;
            sc.eta = srv.eta_e;
            break;
          case kD:
            sc.alpha = pt.bandwidth.w_d[j][s] * srv.alpha_d_base;
            sc.eta = srv.eta_d;
            break;
          default:
            sc.alpha = pt.bandwidth.w_dbar[j][s] * srv.alpha_f_base;
            sc.eta = srv.eta_dbar;
            break;
        }
        // Users: files with positive routing and positive work here.
        // Group by distinct t so the mixture sum is computed once per value.
        std::map<double, double> users;  // t -> worst own margin placeholder
        for (int i = 0; i < r; ++i) {
          const double route =
              pt.schedule.pi[i][j] * (cls == kE ? pt.schedule.p[i][j][s]
                                                : pt.schedule.q[i][j][s]);
          if (route <= 0.0) continue;
          const int segs = cls == kE
                               ? pt.placement.cached[j][i]
                               : cat.segments[i] - pt.placement.cached[j][i];
          sc.lambda += cat.arrival_rate[i] * route;
          sc.work += cat.arrival_rate[i] * route * segs;
          if (segs > 0) users.emplace(pt.aux.t[i], 0.0);
        }
        const std::string stag = (cls == kE ? "e" : cls == kD ? "d" : "dbar");
        const std::string where =
            stag + "(" + std::to_string(j) + "," + std::to_string(s) + ")";
        if (sc.work > 0.0 && sc.alpha <= 0.0) {
          rep.rate_margin = std::min(rep.rate_margin, -1.0);
          note(-1.0, where + ": traffic routed to zero-rate stream");
          continue;
        }
        if (sc.work > 0.0) {
          const double rho = sc.work * (sc.eta + 1.0 / sc.alpha);
          const double margin = (1.0 - kStrictMargin) - rho;
          rep.stability_margin = std::min(rep.stability_margin, margin);
          note(margin, where + ": rho >= 1");
        }
        if (users.empty()) continue;
        for (auto& [t, unused] : users) {
          (void)unused;
          const double rate_margin = (sc.alpha - t) / sc.alpha - kStrictMargin;
          rep.rate_margin = std::min(rep.rate_margin, rate_margin);
          note(rate_margin, where + ": t exceeds rate");
          double pk_margin;
          if (rate_margin < 0.0) {
            pk_margin = -1.0;  // transform undefined already
          } else {
            const double mgf = sc.alpha * std::exp(sc.eta * t) / (sc.alpha - t);
            double weighted = 0.0;
            for (int i = 0; i < r; ++i) {
              const double route =
                  pt.schedule.pi[i][j] * (cls == kE ? pt.schedule.p[i][j][s]
                                                    : pt.schedule.q[i][j][s]);
              if (route <= 0.0) continue;
              const int segs =
                  cls == kE ? pt.placement.cached[j][i]
                            : cat.segments[i] - pt.placement.cached[j][i];
              weighted += cat.arrival_rate[i] * route * std::pow(mgf, segs);
            }
            const double den = t + sc.lambda - weighted;
            pk_margin = den / t - kStrictMargin;
            rep.pk_margin = std::min(rep.pk_margin, pk_margin);
            note(pk_margin, where + ": waiting-transform denominator <= 0");
          }
          // Attribute to every file using this stream at this t.
          for (int i = 0; i < r; ++i) {
            if (pt.aux.t[i] != t) continue;
            const double route =
                pt.schedule.pi[i][j] * (cls == kE ? pt.schedule.p[i][j][s]
                                                  : pt.schedule.q[i][j][s]);
            const int segs = cls == kE
                                 ? pt.placement.cached[j][i]
                                 : cat.segments[i] - pt.placement.cached[j][i];
            if (route <= 0.0 || segs <= 0) continue;
            out.file_margin[i] =
                std::min({out.file_margin[i], rate_margin, pk_margin});
          }
        }
      }
    }
  }

  rep.feasible = rep.worst_margin() >= 0.0;
  return out;
}

std::vector<int> integer_capacity_repair(std::vector<double> relaxed,
                                         const std::vector<int>& upper,
                                         double capacity) {
  std::vector<int> result(relaxed.size());
  long long used = 0;
  for (size_t i = 0; i < relaxed.size(); ++i) {
    result[i] = std::clamp(static_cast<int>(std::lround(relaxed[i])), 0,
                           upper[i]);
    used += result[i];
  }
  while (used > static_cast<long long>(std::floor(capacity + 1e-9))) {
    // Take a unit from the largest entry (lowest index on ties).
    int best = -1;
    for (size_t i = 0; i < result.size(); ++i) {
      if (result[i] > 0 && (best < 0 || result[i] > result[best])) {
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    --result[best];
    --used;
  }
  return result;
}

}  // namespace

double FeasibilityReport::worst_margin() const {
  return std::min({simplex_margin, weights_margin, capacity_margin, box_margin,
                   stability_margin, rate_margin, pk_margin});
}

FeasibilityReport check_feasibility(const SystemTopology& topo,
                                    const VideoCatalog& cat,
                                    const ControlPoint& point) {
  check_dims(topo, cat, point);
  return evaluate(topo, cat, point).rep;
}

ControlPoint project_convex_blocks(const ControlPoint& point,
                                   const SystemTopology& topo,
                                   const VideoCatalog& cat) {
  ControlPoint out = point;
  const int m = topo.server_count();
  const int r = cat.file_count();
  for (int i = 0; i < r; ++i) {
    out.schedule.pi[i] = project_simplex(out.schedule.pi[i]);
    for (int j = 0; j < m; ++j) {
      out.schedule.p[i][j] = project_simplex(out.schedule.p[i][j]);
      out.schedule.q[i][j] = project_simplex(out.schedule.q[i][j]);
    }
  }
  for (int j = 0; j < m; ++j) {
    out.bandwidth.w_d[j] = project_capped_simplex(out.bandwidth.w_d[j]);
    std::vector<double> shared = out.bandwidth.w_dbar[j];
    shared.insert(shared.end(), out.bandwidth.w_e[j].begin(),
                  out.bandwidth.w_e[j].end());
    shared = project_capped_simplex(std::move(shared));
    const size_t d = out.bandwidth.w_dbar[j].size();
    std::copy(shared.begin(), shared.begin() + d,
              out.bandwidth.w_dbar[j].begin());
    std::copy(shared.begin() + d, shared.end(), out.bandwidth.w_e[j].begin());

    std::vector<double> relaxed(r);
    std::vector<double> upper_real(r);
    std::vector<int> upper(r);
    for (int i = 0; i < r; ++i) {
      relaxed[i] = out.placement.cached[j][i];
      upper[i] = cat.segments[i];
      upper_real[i] = cat.segments[i];
    }
    relaxed = project_box_capacity(std::move(relaxed), upper_real,
                                   out.placement.capacity[j]);
    out.placement.cached[j] =
        integer_capacity_repair(std::move(relaxed), upper,
                                out.placement.capacity[j]);
  }
  return out;
}

ControlPoint closest_feasible(const ControlPoint& point,
                              const SystemTopology& topo,
                              const VideoCatalog& cat) {
  check_dims(topo, cat, point);
  {
    const InternalReport pre = evaluate(topo, cat, point);
    if (pre.rep.feasible) return point;
  }
  ControlPoint out = project_convex_blocks(point, topo, cat);
  for (int attempt = 0; attempt <= 64; ++attempt) {
    const InternalReport res = evaluate(topo, cat, out);
    if (res.rep.feasible) return out;
    // Only the transform-existence families depend on t; everything else
    // was fixed by the projection, so shrinking t is the remaining lever.
    bool shrank = false;
    for (int i = 0; i < cat.file_count(); ++i) {
      if (res.file_margin[i] < 0.0) {
        out.aux.t[i] *= 0.5;
        shrank = true;
      }
    }
    if (!shrank) break;
  }
  throw InfeasibleInstanceError(
      "closest_feasible: no feasible point after 64 t-shrink steps");
}

ControlPoint uniform_control_point(const SystemTopology& topo,
                                   const VideoCatalog& cat, double t0,
                                   double cache_fill) {
  const int m = topo.server_count();
  const int r = cat.file_count();
  ControlPoint pt;
  pt.schedule.pi.assign(r, std::vector<double>(m, 1.0 / m));
  pt.schedule.p.resize(r);
  pt.schedule.q.resize(r);
  for (int i = 0; i < r; ++i) {
    pt.schedule.p[i].resize(m);
    pt.schedule.q[i].resize(m);
    for (int j = 0; j < m; ++j) {
      pt.schedule.p[i][j].assign(topo.servers[j].e_streams,
                                 1.0 / topo.servers[j].e_streams);
      pt.schedule.q[i][j].assign(topo.servers[j].d_streams,
                                 1.0 / topo.servers[j].d_streams);
    }
  }
  pt.bandwidth.w_d.resize(m);
  pt.bandwidth.w_dbar.resize(m);
  pt.bandwidth.w_e.resize(m);
  for (int j = 0; j < m; ++j) {
    pt.bandwidth.w_d[j].assign(topo.servers[j].d_streams,
                               1.0 / topo.servers[j].d_streams);
    pt.bandwidth.w_dbar[j].assign(topo.servers[j].d_streams,
                                  1.0 / topo.servers[j].d_streams);
    pt.bandwidth.w_e[j].assign(topo.servers[j].e_streams,
                               1.0 / topo.servers[j].e_streams);
  }
  pt.placement.cached.resize(m);
  pt.placement.capacity.assign(m, cache_fill * cat.total_segments());
  for (int j = 0; j < m; ++j) {
    pt.placement.cached[j].resize(r);
    for (int i = 0; i < r; ++i) {
      pt.placement.cached[j][i] =
          static_cast<int>(std::floor(cache_fill * cat.segments[i]));
    }
  }
  pt.aux.t.assign(r, t0);
  return pt;
}

double control_point_distance(const ControlPoint& a, const ControlPoint& b) {
  double sq = 0.0;
  auto acc = [&sq](double x, double y) {
    sq += (x - y) * (x - y);
  };
  for (size_t i = 0; i < a.schedule.pi.size(); ++i) {
    for (size_t j = 0; j < a.schedule.pi[i].size(); ++j) {
      acc(a.schedule.pi[i][j], b.schedule.pi[i][j]);
      for (size_t s = 0; s < a.schedule.p[i][j].size(); ++s) {
        acc(a.schedule.p[i][j][s], b.schedule.p[i][j][s]);
      }
      for (size_t s = 0; s < a.schedule.q[i][j].size(); ++s) {
        acc(a.schedule.q[i][j][s], b.schedule.q[i][j][s]);
      }
    }
  }
  for (size_t j = 0; j < a.bandwidth.w_d.size(); ++j) {
    for (size_t s = 0; s < a.bandwidth.w_d[j].size(); ++s) {
      acc(a.bandwidth.w_d[j][s], b.bandwidth.w_d[j][s]);
      acc(a.bandwidth.w_dbar[j][s], b.bandwidth.w_dbar[j][s]);
    }
    for (size_t s = 0; s < a.bandwidth.w_e[j].size(); ++s) {
      acc(a.bandwidth.w_e[j][s], b.bandwidth.w_e[j][s]);
    }
    for (size_t i = 0; i < a.placement.cached[j].size(); ++i) {
      acc(a.placement.cached[j][i], b.placement.cached[j][i]);
    }
  }
  for (size_t i = 0; i < a.aux.t.size(); ++i) acc(a.aux.t[i], b.aux.t[i]);
  return std::sqrt(sq);
}

}  // namespace sdtp
