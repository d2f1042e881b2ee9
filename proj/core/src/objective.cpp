#include "sdtp/objective.hpp"

#include <algorithm>
#include <cmath>

#include "sdtp/geomsum.hpp"

namespace sdtp {

Decision Decision::from_point(const ControlPoint& pt) {
  Decision d;
  d.schedule = pt.schedule;
  d.bandwidth = pt.bandwidth;
  d.capacity = pt.placement.capacity;
  d.placement.resize(pt.placement.cached.size());
  for (size_t j = 0; j < pt.placement.cached.size(); ++j) {
    d.placement[j].assign(pt.placement.cached[j].begin(),
                          pt.placement.cached[j].end());
  }
  d.t = pt.aux.t;
  return d;
}

ControlPoint Decision::to_point() const {
  ControlPoint pt;
  pt.schedule = schedule;
  pt.bandwidth = bandwidth;
  pt.placement.capacity = capacity;
  pt.placement.cached.resize(placement.size());
  for (size_t j = 0; j < placement.size(); ++j) {
    pt.placement.cached[j].resize(placement[j].size());
    for (size_t i = 0; i < placement[j].size(); ++i) {
      pt.placement.cached[j][i] =
          static_cast<int>(std::lround(placement[j][i]));
    }
  }
  pt.aux.t = t;
  return pt;
}

namespace {

struct QueueAgg {
  double lambda = 0.0;
  double work = 0.0;  // arrival-weighted segment count
};

// One queue at one exponent value plus the partials the adjoints need.
// S = lambda * B(t); den = t + lambda - S; pk = (1-rho) t S / (lambda den).
struct PkEval {
  double s = 0.0;
  double sl = 0.0;  // sum of c_f * n_f * M^{n_f}
  double den = 0.0;
  double pk = 1.0;
  double dpk_ds = 0.0;
  double dpk_dlam = 0.0;
  double dpk_drho = 0.0;
  double dpk_dt = 0.0;
  bool loaded = false;  // lambda > 0 (otherwise pk == 1 identically)
  bool ok = false;
};

}  // namespace

BoundEvaluator::BoundEvaluator(const SystemTopology& topo,
                               const VideoCatalog& cat, double sigma)
    : topo_(topo), cat_(cat), sigma_(sigma) {
  double wsum = 0.0;
  for (double w : cat.weight) wsum += w;
  wbar_.resize(cat.weight.size());
  for (size_t i = 0; i < cat.weight.size(); ++i) {
    wbar_[i] = cat.weight[i] / wsum;
  }
}

Gradients BoundEvaluator::zero_gradients(const Decision& d) const {
  Gradients g;
  const int m = topo_.server_count();
  const int r = cat_.file_count();
  g.pi.assign(r, std::vector<double>(m, 0.0));
  g.p.resize(r);
  g.q.resize(r);
  for (int i = 0; i < r; ++i) {
    g.p[i].resize(m);
    g.q[i].resize(m);
    for (int j = 0; j < m; ++j) {
      g.p[i][j].assign(d.schedule.p[i][j].size(), 0.0);
      g.q[i][j].assign(d.schedule.q[i][j].size(), 0.0);
    }
  }
  g.w_d.resize(m);
  g.w_dbar.resize(m);
  g.w_e.resize(m);
  g.placement.resize(m);
  for (int j = 0; j < m; ++j) {
    g.w_d[j].assign(d.bandwidth.w_d[j].size(), 0.0);
    g.w_dbar[j].assign(d.bandwidth.w_dbar[j].size(), 0.0);
    g.w_e[j].assign(d.bandwidth.w_e[j].size(), 0.0);
    g.placement[j].assign(r, 0.0);
  }
  g.t.assign(r, 0.0);
  return g;
}

Evaluation BoundEvaluator::run(const Decision& d, Gradients* grad,
                               VarBlock block) const {
  const int m = topo_.server_count();
  const int r = cat_.file_count();
  const double tau = cat_.tau;
  Evaluation out;
  out.file_bound.assign(r, 0.0);
  if (grad) *grad = zero_gradients(d);

  // t-independent per-stream aggregates.
  std::vector<std::vector<QueueAgg>> agg_e(m), agg_d(m);
  for (int j = 0; j < m; ++j) {
    const ServerSpec& srv = topo_.servers[j];
    agg_e[j].resize(srv.e_streams);
    agg_d[j].resize(srv.d_streams);
    for (int i = 0; i < r; ++i) {
      const double pij = d.schedule.pi[i][j];
      if (pij == 0.0) continue;
      const double ell = std::clamp(d.placement[j][i], 0.0,
                                    static_cast<double>(cat_.segments[i]));
      const double lam = cat_.arrival_rate[i];
      for (int nu = 0; nu < srv.e_streams; ++nu) {
        const double c = lam * pij * d.schedule.p[i][j][nu];
        agg_e[j][nu].lambda += c;
        agg_e[j][nu].work += c * ell;
      }
      const double rem = cat_.segments[i] - ell;
      for (int b = 0; b < srv.d_streams; ++b) {
        const double c = lam * pij * d.schedule.q[i][j][b];
        agg_d[j][b].lambda += c;
        agg_d[j][b].work += c * rem;
      }
    }
  }

  const bool want_schedule = grad && block == VarBlock::kSchedule;
  const bool want_aux = grad && block == VarBlock::kAux;
  const bool want_bw = grad && block == VarBlock::kBandwidth;
  const bool want_place = grad && block == VarBlock::kPlacement;

  std::vector<double> scratch_a(r), scratch_b(r);

  // Evaluates one queue at exponent t; exponent_of(f) is the segment count
  // of file f at this queue. scratch (when given) receives M^{n_f} for every
  // routed file.
  auto eval_pk = [&](double t, double mgf, const QueueAgg& qa, double kappa,
                     int j, bool use_q, int stream, auto&& exponent_of,
                     double* scratch) -> PkEval {
    PkEval pe;
    if (qa.lambda <= 0.0) {
      pe.ok = true;  // empty queue: waiting transform is identically one
      return pe;
    }
    pe.loaded = true;
    const double rho = kappa * qa.work;
    if (rho > 1.0 - kStrictMargin) return pe;
    double s = 0.0, sl = 0.0;
    for (int f = 0; f < r; ++f) {
      const double route = d.schedule.pi[f][j] *
                           (use_q ? d.schedule.q[f][j][stream]
                                  : d.schedule.p[f][j][stream]);
      if (route == 0.0) {
        if (scratch) scratch[f] = 0.0;
        continue;
      }
      const double n_f = exponent_of(f);
      const double pw = std::pow(mgf, n_f);
      if (scratch) scratch[f] = pw;
      const double c = cat_.arrival_rate[f] * route;
      s += c * pw;
      sl += c * n_f * pw;
    }
    const double den = t + qa.lambda - s;
    if (!(den >= kStrictMargin * t)) return pe;
    pe.s = s;
    pe.sl = sl;
    pe.den = den;
    pe.pk = (1.0 - rho) * t * s / (qa.lambda * den);
    pe.dpk_ds = pe.pk * (1.0 / s + 1.0 / den);
    pe.dpk_dlam = -pe.pk * (1.0 / qa.lambda + 1.0 / den);
    pe.dpk_drho = -pe.pk / (1.0 - rho);
    pe.dpk_dt = pe.pk * (1.0 / t - 1.0 / den);
    pe.ok = true;
    return pe;
  };

  double objective = 0.0;
  for (int i = 0; i < r; ++i) {
    const double t = d.t[i];
    if (!(t > 0.0)) return out;  // nonpositive exponent: not evaluable
    const double wb = wbar_[i];
    const int L = cat_.segments[i];
    const double exp_sig = std::exp(-t * sigma_);
    const double ci = std::exp(-(sigma_ + cat_.startup_delay) * t);
    const double dci = -(sigma_ + cat_.startup_delay) * ci;
    double bound_i = 0.0;

    for (int j = 0; j < m; ++j) {
      const double pij = d.schedule.pi[i][j];
      if (pij == 0.0 && !want_schedule) continue;
      const ServerSpec& srv = topo_.servers[j];
      const double ell =
          std::clamp(d.placement[j][i], 0.0, static_cast<double>(L));
      const double n_rem = L - ell;

      double sum_e = 0.0, dsum_e_dt = 0.0;
      for (int nu = 0; nu < srv.e_streams; ++nu) {
        const double pr = d.schedule.p[i][j][nu];
        if (pr == 0.0 && !want_schedule) continue;
        if (ell <= 0.0 && !want_place) continue;
        const double route = pij * pr;
        const bool used = route > 0.0 && ell > 0.0;
        const double alpha = d.bandwidth.w_e[j][nu] * srv.alpha_f_base;
        const double eta = srv.eta_e;
        if (alpha <= 0.0 || t > alpha * (1.0 - kStrictMargin)) {
          if (used) return out;
          continue;
        }
        const double lnm_t = eta + 1.0 / (alpha - t);
        const double mgf = alpha * std::exp(eta * t) / (alpha - t);
        const double kappa = eta + 1.0 / alpha;
        const PkEval pe = eval_pk(
            t, mgf, agg_e[j][nu], kappa, j, false, nu,
            [&](int f) {
              return std::clamp(d.placement[j][f], 0.0,
                                static_cast<double>(cat_.segments[f]));
            },
            grad ? scratch_a.data() : nullptr);
        if (!pe.ok) {
          if (used) return out;
          continue;
        }
        const double x = std::log(mgf) - tau * t;
        const GeomD g0 =
            grad ? geom0_d(x, ell) : GeomD{geom0(x, ell), 0.0, 0.0};
        const double t1 = mgf * g0.value;
        const double d1 = pe.pk * t1;
        sum_e += pr * d1;

        if (!grad || wb == 0.0) continue;
        const double common = wb * route * ci;
        if (want_aux) {
          const double s_t = pe.sl * lnm_t;
          const double pk_t = pe.loaded ? pe.dpk_dt + pe.dpk_ds * s_t : 0.0;
          const double t1_t =
              mgf * lnm_t * g0.value + mgf * g0.dx * (lnm_t - tau);
          dsum_e_dt += pr * (t1 * pk_t + pe.pk * t1_t);
        } else if (want_bw) {
          const double lnm_a = 1.0 / alpha - 1.0 / (alpha - t);
          const double rho_a = -agg_e[j][nu].work / (alpha * alpha);
          const double pk_a =
              pe.loaded ? pe.dpk_ds * pe.sl * lnm_a + pe.dpk_drho * rho_a
                        : 0.0;
          const double t1_a = mgf * lnm_a * g0.value + mgf * g0.dx * lnm_a;
          grad->w_e[j][nu] +=
              common * (t1 * pk_a + pe.pk * t1_a) * srv.alpha_f_base;
        } else if (want_schedule) {
          grad->p[i][j][nu] += wb * pij * ci * d1;
          if (pe.loaded) {
            const double adj_s = common * t1 * pe.dpk_ds;
            const double adj_lam = common * t1 * pe.dpk_dlam;
            const double adj_r = common * t1 * pe.dpk_drho * kappa;
            for (int f = 0; f < r; ++f) {
              const double pf = d.schedule.p[f][j][nu];
              const double pif = d.schedule.pi[f][j];
              if (pf == 0.0 && pif == 0.0) continue;
              const double ell_f =
                  std::clamp(d.placement[j][f], 0.0,
                             static_cast<double>(cat_.segments[f]));
              const double pw =
                  pif * pf == 0.0 ? std::pow(mgf, ell_f) : scratch_a[f];
              const double coef = adj_s * pw + adj_lam + adj_r * ell_f;
              const double lam_f = cat_.arrival_rate[f];
              grad->pi[f][j] += coef * lam_f * pf;
              grad->p[f][j][nu] += coef * lam_f * pif;
            }
          }
        } else if (want_place) {
          grad->placement[j][i] += common * pe.pk * mgf * g0.dn;
          if (pe.loaded) {
            const double adj_s = common * t1 * pe.dpk_ds;
            const double adj_r = common * t1 * pe.dpk_drho * kappa;
            const double lnm = std::log(mgf);
            for (int f = 0; f < r; ++f) {
              const double c_f = cat_.arrival_rate[f] * d.schedule.pi[f][j] *
                                 d.schedule.p[f][j][nu];
              if (c_f == 0.0) continue;
              grad->placement[j][f] +=
                  c_f * (adj_s * lnm * scratch_a[f] + adj_r);
            }
          }
        }
      }

      double sum_d = 0.0, dsum_d_dt = 0.0;
      for (int b = 0; b < srv.d_streams; ++b) {
        const double qr = d.schedule.q[i][j][b];
        if (qr == 0.0 && !want_schedule) continue;
        if (n_rem <= 0.0 && !want_place) continue;
        const double route = pij * qr;
        const bool used = route > 0.0 && n_rem > 0.0;
        const double alpha_d = d.bandwidth.w_d[j][b] * srv.alpha_d_base;
        const double alpha_db = d.bandwidth.w_dbar[j][b] * srv.alpha_f_base;
        if (alpha_d <= 0.0 || alpha_db <= 0.0 ||
            t > alpha_d * (1.0 - kStrictMargin) ||
            t > alpha_db * (1.0 - kStrictMargin)) {
          if (used) return out;
          continue;
        }
        const double eta_d = srv.eta_d, eta_db = srv.eta_dbar;
        const double mgf_d = alpha_d * std::exp(eta_d * t) / (alpha_d - t);
        const double mgf_db = alpha_db * std::exp(eta_db * t) / (alpha_db - t);
        const double lnmd_t = eta_d + 1.0 / (alpha_d - t);
        const double lnmdb_t = eta_db + 1.0 / (alpha_db - t);
        const double kappa_d = eta_d + 1.0 / alpha_d;
        const double kappa_db = eta_db + 1.0 / alpha_db;
        auto rem_of = [&](int f) {
          return cat_.segments[f] -
                 std::clamp(d.placement[j][f], 0.0,
                            static_cast<double>(cat_.segments[f]));
        };
        const PkEval pd =
            eval_pk(t, mgf_d, agg_d[j][b], kappa_d, j, true, b, rem_of,
                    grad ? scratch_a.data() : nullptr);
        const PkEval pdb =
            eval_pk(t, mgf_db, agg_d[j][b], kappa_db, j, true, b, rem_of,
                    grad ? scratch_b.data() : nullptr);
        if (!pd.ok || !pdb.ok) {
          if (used) return out;
          continue;
        }
        const double e_pow = std::exp((1.0 - ell) * tau * t);
        const double xb = std::log(mgf_db) - tau * t;
        const double lm = std::log(mgf_d) - std::log(mgf_db);
        GeomD g1{0.0, 0.0, 0.0};
        HsumD hs;
        if (grad) {
          g1 = geom1_d(xb, n_rem);
          hs = hsum_d(xb, lm, n_rem);
        } else {
          g1.value = geom1(xb, n_rem);
          hs.value = hsum(xb, lm, n_rem);
        }
        const double delta = e_pow * (pdb.pk * g1.value + pd.pk * hs.value);
        sum_d += qr * delta;

        if (!grad || wb == 0.0) continue;
        const double common = wb * route * ci;
        if (want_aux) {
          const double sd_t = pd.sl * lnmd_t;
          const double sdb_t = pdb.sl * lnmdb_t;
          const double pkd_t = pd.loaded ? pd.dpk_dt + pd.dpk_ds * sd_t : 0.0;
          const double pkdb_t =
              pdb.loaded ? pdb.dpk_dt + pdb.dpk_ds * sdb_t : 0.0;
          const double xb_t = lnmdb_t - tau;
          const double lm_t = lnmd_t - lnmdb_t;
          const double g_t = g1.dx * xb_t;
          const double h_t = hs.dx * xb_t + hs.dm * lm_t;
          const double delta_t =
              (1.0 - ell) * tau * delta +
              e_pow * (pkdb_t * g1.value + pdb.pk * g_t + pkd_t * hs.value +
                       pd.pk * h_t);
          dsum_d_dt += qr * delta_t;
        } else if (want_bw) {
          const double lnmd_a = 1.0 / alpha_d - 1.0 / (alpha_d - t);
          const double lnmdb_a = 1.0 / alpha_db - 1.0 / (alpha_db - t);
          const double rho_d_a = -agg_d[j][b].work / (alpha_d * alpha_d);
          const double rho_db_a = -agg_d[j][b].work / (alpha_db * alpha_db);
          const double pkd_a =
              pd.loaded ? pd.dpk_ds * pd.sl * lnmd_a + pd.dpk_drho * rho_d_a
                        : 0.0;
          const double pkdb_a =
              pdb.loaded
                  ? pdb.dpk_ds * pdb.sl * lnmdb_a + pdb.dpk_drho * rho_db_a
                  : 0.0;
          const double dd_dad =
              e_pow * (pd.pk * hs.dm * lnmd_a + pkd_a * hs.value);
          const double dd_dadb =
              e_pow * (pdb.pk * g1.dx * lnmdb_a +
                       pd.pk * (hs.dx - hs.dm) * lnmdb_a + pkdb_a * g1.value);
          grad->w_d[j][b] += common * dd_dad * srv.alpha_d_base;
          grad->w_dbar[j][b] += common * dd_dadb * srv.alpha_f_base;
        } else if (want_schedule) {
          grad->q[i][j][b] += wb * pij * ci * delta;
          if (pd.loaded) {  // pd and pdb share lambda, so loaded together
            const double adj_sd = common * e_pow * hs.value * pd.dpk_ds;
            const double adj_sdb = common * e_pow * g1.value * pdb.dpk_ds;
            const double adj_lam =
                common * e_pow *
                (hs.value * pd.dpk_dlam + g1.value * pdb.dpk_dlam);
            const double adj_r = common * e_pow *
                                 (hs.value * pd.dpk_drho * kappa_d +
                                  g1.value * pdb.dpk_drho * kappa_db);
            for (int f = 0; f < r; ++f) {
              const double qf = d.schedule.q[f][j][b];
              const double pif = d.schedule.pi[f][j];
              if (qf == 0.0 && pif == 0.0) continue;
              const double n_f = rem_of(f);
              const double pw_d =
                  pif * qf == 0.0 ? std::pow(mgf_d, n_f) : scratch_a[f];
              const double pw_db =
                  pif * qf == 0.0 ? std::pow(mgf_db, n_f) : scratch_b[f];
              const double coef =
                  adj_sd * pw_d + adj_sdb * pw_db + adj_lam + adj_r * n_f;
              const double lam_f = cat_.arrival_rate[f];
              grad->pi[f][j] += coef * lam_f * qf;
              grad->q[f][j][b] += coef * lam_f * pif;
            }
          }
        } else if (want_place) {
          const double delta_ell =
              -tau * t * delta - e_pow * (pdb.pk * g1.dn + pd.pk * hs.dn);
          grad->placement[j][i] += common * delta_ell;
          if (pd.loaded) {
            const double adj_sd = common * e_pow * hs.value * pd.dpk_ds;
            const double adj_sdb = common * e_pow * g1.value * pdb.dpk_ds;
            const double adj_r = common * e_pow *
                                 (hs.value * pd.dpk_drho * kappa_d +
                                  g1.value * pdb.dpk_drho * kappa_db);
            const double lnmd = std::log(mgf_d);
            const double lnmdb = std::log(mgf_db);
            for (int f = 0; f < r; ++f) {
              const double c_f = cat_.arrival_rate[f] * d.schedule.pi[f][j] *
                                 d.schedule.q[f][j][b];
              if (c_f == 0.0) continue;
              grad->placement[j][f] -=
                  c_f * (adj_sd * lnmd * scratch_a[f] +
                         adj_sdb * lnmdb * scratch_b[f] + adj_r);
            }
          }
        }
      }

      const double bound_ij = exp_sig + ci * (sum_e + sum_d);
      bound_i += pij * bound_ij;
      if (want_schedule && wb != 0.0) grad->pi[i][j] += wb * bound_ij;
      if (want_aux && wb != 0.0) {
        const double dbound_dt = -sigma_ * exp_sig + dci * (sum_e + sum_d) +
                                 ci * (dsum_e_dt + dsum_d_dt);
        grad->t[i] += wb * pij * dbound_dt;
      }
    }
    out.file_bound[i] = bound_i;
    objective += wb * bound_i;
  }

  out.objective = objective;
  out.feasible = true;
  return out;
}

}  // namespace sdtp
