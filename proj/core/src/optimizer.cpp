#include "sdtp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sdtp/feasibility.hpp"
#include "sdtp/projection.hpp"

namespace sdtp {

namespace {

constexpr double kGammaMin = 1e-7;
// Relative descent slack: a step counts as an improvement only if it beats
// the current value by this fraction of it.
constexpr double kDescentSlack = 1e-12;

// Applies the surrogate-minimizer projection for one block:
// x_hat = proj_block(x - g / prox).
void surrogate_minimizer(const Decision& d, const Gradients& g, VarBlock block,
                         double prox, const VideoCatalog& cat,
                         Decision* out) {
  *out = d;
  const double step = 1.0 / prox;
  switch (block) {
    case VarBlock::kSchedule: {
      for (size_t i = 0; i < d.schedule.pi.size(); ++i) {
        std::vector<double> row = d.schedule.pi[i];
        for (size_t j = 0; j < row.size(); ++j) row[j] -= step * g.pi[i][j];
        out->schedule.pi[i] = project_simplex(std::move(row));
        for (size_t j = 0; j < d.schedule.p[i].size(); ++j) {
          std::vector<double> prow = d.schedule.p[i][j];
          for (size_t s = 0; s < prow.size(); ++s) {
            prow[s] -= step * g.p[i][j][s];
          }
          out->schedule.p[i][j] = project_simplex(std::move(prow));
          std::vector<double> qrow = d.schedule.q[i][j];
          for (size_t s = 0; s < qrow.size(); ++s) {
            qrow[s] -= step * g.q[i][j][s];
          }
          out->schedule.q[i][j] = project_simplex(std::move(qrow));
        }
      }
      break;
    }
    case VarBlock::kAux: {
      for (size_t i = 0; i < d.t.size(); ++i) {
        out->t[i] = std::max(1e-9, d.t[i] - step * g.t[i]);
      }
      break;
    }
    case VarBlock::kBandwidth: {
      for (size_t j = 0; j < d.bandwidth.w_d.size(); ++j) {
        std::vector<double> wd = d.bandwidth.w_d[j];
        for (size_t s = 0; s < wd.size(); ++s) wd[s] -= step * g.w_d[j][s];
        out->bandwidth.w_d[j] = project_capped_simplex(std::move(wd));
        std::vector<double> shared = d.bandwidth.w_dbar[j];
        shared.insert(shared.end(), d.bandwidth.w_e[j].begin(),
                      d.bandwidth.w_e[j].end());
        const size_t dn = d.bandwidth.w_dbar[j].size();
        for (size_t s = 0; s < dn; ++s) shared[s] -= step * g.w_dbar[j][s];
        for (size_t s = 0; s < d.bandwidth.w_e[j].size(); ++s) {
          shared[dn + s] -= step * g.w_e[j][s];
        }
        shared = project_capped_simplex(std::move(shared));
        std::copy(shared.begin(), shared.begin() + dn,
                  out->bandwidth.w_dbar[j].begin());
        std::copy(shared.begin() + dn, shared.end(),
                  out->bandwidth.w_e[j].begin());
      }
      break;
    }
    case VarBlock::kPlacement: {
      for (size_t j = 0; j < d.placement.size(); ++j) {
        std::vector<double> row = d.placement[j];
        std::vector<double> upper(row.size());
        for (size_t i = 0; i < row.size(); ++i) {
          row[i] -= step * g.placement[j][i];
          upper[i] = cat.segments[i];
        }
        out->placement[j] =
            project_box_capacity(std::move(row), upper, d.capacity[j]);
      }
      break;
    }
  }
}

void blend_block(const Decision& base, const Decision& target, double gamma,
                 VarBlock block, Decision* out) {
  *out = base;
  auto mix = [gamma](double a, double b) { return a + gamma * (b - a); };
  switch (block) {
    case VarBlock::kSchedule:
      for (size_t i = 0; i < base.schedule.pi.size(); ++i) {
        for (size_t j = 0; j < base.schedule.pi[i].size(); ++j) {
          out->schedule.pi[i][j] =
              mix(base.schedule.pi[i][j], target.schedule.pi[i][j]);
          for (size_t s = 0; s < base.schedule.p[i][j].size(); ++s) {
            out->schedule.p[i][j][s] =
                mix(base.schedule.p[i][j][s], target.schedule.p[i][j][s]);
          }
          for (size_t s = 0; s < base.schedule.q[i][j].size(); ++s) {
            out->schedule.q[i][j][s] =
                mix(base.schedule.q[i][j][s], target.schedule.q[i][j][s]);
          }
        }
      }
      break;
    case VarBlock::kAux:
      for (size_t i = 0; i < base.t.size(); ++i) {
        out->t[i] = mix(base.t[i], target.t[i]);
      }
      break;
    case VarBlock::kBandwidth:
      for (size_t j = 0; j < base.bandwidth.w_d.size(); ++j) {
        for (size_t s = 0; s < base.bandwidth.w_d[j].size(); ++s) {
          out->bandwidth.w_d[j][s] =
              mix(base.bandwidth.w_d[j][s], target.bandwidth.w_d[j][s]);
          out->bandwidth.w_dbar[j][s] =
              mix(base.bandwidth.w_dbar[j][s], target.bandwidth.w_dbar[j][s]);
        }
        for (size_t s = 0; s < base.bandwidth.w_e[j].size(); ++s) {
          out->bandwidth.w_e[j][s] =
              mix(base.bandwidth.w_e[j][s], target.bandwidth.w_e[j][s]);
        }
      }
      break;
    case VarBlock::kPlacement:
      for (size_t j = 0; j < base.placement.size(); ++j) {
        for (size_t i = 0; i < base.placement[j].size(); ++i) {
          out->placement[j][i] =
              mix(base.placement[j][i], target.placement[j][i]);
        }
      }
      break;
  }
}

// Central-difference gradient of the active block (fallback path).
void fd_gradient(const BoundEvaluator& eval, Decision& d, VarBlock block,
                 Gradients* g) {
  *g = eval.zero_gradients(d);
  auto diff = [&](double* slot, double h) {
    const double x0 = *slot;
    *slot = x0 + h;
    const double up = eval.evaluate(d).objective;
    *slot = x0 - h;
    const double dn = eval.evaluate(d).objective;
    *slot = x0;
    return (up - dn) / (2.0 * h);
  };
  switch (block) {
    case VarBlock::kSchedule:
      for (size_t i = 0; i < d.schedule.pi.size(); ++i) {
        for (size_t j = 0; j < d.schedule.pi[i].size(); ++j) {
          g->pi[i][j] = diff(&d.schedule.pi[i][j], 1e-6);
          for (size_t s = 0; s < d.schedule.p[i][j].size(); ++s) {
            g->p[i][j][s] = diff(&d.schedule.p[i][j][s], 1e-6);
          }
          for (size_t s = 0; s < d.schedule.q[i][j].size(); ++s) {
            g->q[i][j][s] = diff(&d.schedule.q[i][j][s], 1e-6);
          }
        }
      }
      break;
    case VarBlock::kAux:
      for (size_t i = 0; i < d.t.size(); ++i) {
        g->t[i] = diff(&d.t[i], 1e-6 * std::max(1.0, std::fabs(d.t[i])));
      }
      break;
    case VarBlock::kBandwidth:
      for (size_t j = 0; j < d.bandwidth.w_d.size(); ++j) {
        for (size_t s = 0; s < d.bandwidth.w_d[j].size(); ++s) {
          g->w_d[j][s] = diff(&d.bandwidth.w_d[j][s], 1e-7);
          g->w_dbar[j][s] = diff(&d.bandwidth.w_dbar[j][s], 1e-7);
        }
        for (size_t s = 0; s < d.bandwidth.w_e[j].size(); ++s) {
          g->w_e[j][s] = diff(&d.bandwidth.w_e[j][s], 1e-7);
        }
      }
      break;
    case VarBlock::kPlacement:
      for (size_t j = 0; j < d.placement.size(); ++j) {
        for (size_t i = 0; i < d.placement[j].size(); ++i) {
          g->placement[j][i] = diff(&d.placement[j][i], 1e-5);
        }
      }
      break;
  }
}

// Floor the relaxed placement, then hand units back to the entries whose
// first-order improvement is largest while capacity permits. The caller
// compares the result against the incumbent.
void round_placement(const BoundEvaluator& eval, Decision* d) {
  Gradients g;
  const Evaluation ev =
      eval.evaluate_with_gradient(*d, VarBlock::kPlacement, &g);
  struct Cand {
    double score;
    int j;
    int i;
  };
  std::vector<Cand> cands;
  for (size_t j = 0; j < d->placement.size(); ++j) {
    double used = 0.0;
    for (size_t i = 0; i < d->placement[j].size(); ++i) {
      const double frac = d->placement[j][i];
      d->placement[j][i] = std::floor(frac + 1e-9);
      used += d->placement[j][i];
      if (frac - d->placement[j][i] > 1e-9) {
        cands.push_back({ev.feasible ? g.placement[j][i] : 0.0,
                         static_cast<int>(j), static_cast<int>(i)});
      }
    }
    // Most negative gradient first: the unit that helps most.
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score < b.score;
      if (a.j != b.j) return a.j < b.j;
      return a.i < b.i;
    });
    for (const Cand& c : cands) {
      if (c.j != static_cast<int>(j)) continue;
      if (used + 1.0 > d->capacity[j] + 1e-9) break;
      d->placement[c.j][c.i] += 1.0;
      used += 1.0;
    }
    cands.clear();
  }
}

}  // namespace

void OptimizerSettings::validate() const {
  if (epsilon <= 0.0) throw std::invalid_argument("settings: epsilon <= 0");
  if (gamma0 <= 0.0 || gamma0 > 1.0) {
    throw std::invalid_argument("settings: gamma0 outside (0, 1]");
  }
  if (max_outer < 1 || max_inner < 1 || inner_per_cycle < 1) {
    throw std::invalid_argument("settings: iteration caps must be >= 1");
  }
  if (prox_weight <= 0.0) {
    throw std::invalid_argument("settings: prox weight must be positive");
  }
}

double surrogate_value(double f0, const std::vector<double>& g,
                       const std::vector<double>& x,
                       const std::vector<double>& x0, double prox) {
  double v = f0;
  for (size_t k = 0; k < g.size(); ++k) {
    const double dx = x[k] - x0[k];
    v += g[k] * dx + 0.5 * prox * dx * dx;
  }
  return v;
}

bool BlockMask::allows(VarBlock b) const {
  switch (b) {
    case VarBlock::kSchedule:
      return schedule;
    case VarBlock::kAux:
      return aux;
    case VarBlock::kBandwidth:
      return bandwidth;
    case VarBlock::kPlacement:
      return placement;
  }
  return false;
}

std::vector<VarBlock> default_block_order() {
  return {VarBlock::kSchedule, VarBlock::kAux, VarBlock::kBandwidth,
          VarBlock::kPlacement};
}

namespace {

// Euclidean norms of one block of the gradient and of the matching
// variables, used to cap the surrogate step length.
void block_norms(const Decision& d, const Gradients& g, VarBlock block,
                 double* gnorm, double* xnorm) {
  double gs = 0.0, xs = 0.0;
  auto acc = [&](double gv, double xv) {
    gs += gv * gv;
    xs += xv * xv;
  };
  switch (block) {
    case VarBlock::kSchedule:
      for (size_t i = 0; i < d.schedule.pi.size(); ++i) {
        for (size_t j = 0; j < d.schedule.pi[i].size(); ++j) {
          acc(g.pi[i][j], d.schedule.pi[i][j]);
          for (size_t s = 0; s < d.schedule.p[i][j].size(); ++s) {
            acc(g.p[i][j][s], d.schedule.p[i][j][s]);
          }
          for (size_t s = 0; s < d.schedule.q[i][j].size(); ++s) {
            acc(g.q[i][j][s], d.schedule.q[i][j][s]);
          }
        }
      }
      break;
    case VarBlock::kAux:
      for (size_t i = 0; i < d.t.size(); ++i) acc(g.t[i], d.t[i]);
      break;
    case VarBlock::kBandwidth:
      for (size_t j = 0; j < d.bandwidth.w_d.size(); ++j) {
        for (size_t s = 0; s < d.bandwidth.w_d[j].size(); ++s) {
          acc(g.w_d[j][s], d.bandwidth.w_d[j][s]);
          acc(g.w_dbar[j][s], d.bandwidth.w_dbar[j][s]);
        }
        for (size_t s = 0; s < d.bandwidth.w_e[j].size(); ++s) {
          acc(g.w_e[j][s], d.bandwidth.w_e[j][s]);
        }
      }
      break;
    case VarBlock::kPlacement:
      for (size_t j = 0; j < d.placement.size(); ++j) {
        for (size_t i = 0; i < d.placement[j].size(); ++i) {
          acc(g.placement[j][i], d.placement[j][i]);
        }
      }
      break;
  }
  *gnorm = std::sqrt(gs);
  *xnorm = std::sqrt(xs);
}

}  // namespace

double optimize_block(const BoundEvaluator& eval, Decision& d, VarBlock block,
                      const OptimizerSettings& settings, int* inner_used,
                      int max_steps, int* step_counter) {
  settings.validate();
  if (max_steps <= 0) max_steps = settings.max_inner;
  int local_counter = 0;
  int* nu = step_counter ? step_counter : &local_counter;
  Evaluation cur = eval.evaluate(d);
  if (!cur.feasible) {
    throw std::domain_error("optimize_block: starting point is infeasible");
  }
  double f = cur.objective;
  const Decision incumbent = d;
  Gradients g;
  Decision target = d, cand = d;
  int inner = 0;
  for (; inner < max_steps; ++inner) {
    if (settings.fd_gradients) {
      fd_gradient(eval, d, block, &g);
    } else {
      const Evaluation ge = eval.evaluate_with_gradient(d, block, &g);
      if (!ge.feasible) break;
    }
    // Cap the surrogate step length: objective magnitudes vary over many
    // orders along the path, so a fixed prox weight alone would make steps
    // either explosive or vanishing.
    double gnorm = 0.0, xnorm = 0.0;
    block_norms(d, g, block, &gnorm, &xnorm);
    if (gnorm == 0.0) break;
    // Normalized step: the surrogate minimizer lands one trust length away
    // in the gradient direction; the blend factor then backs off overshoot.
    const double trust = 0.25 * (1.0 + xnorm) / settings.prox_weight;
    const double prox_eff = gnorm / trust;
    surrogate_minimizer(d, g, block, prox_eff, eval.catalog(), &target);
    double gamma = settings.diminishing
                       ? settings.gamma0 / (1.0 + 0.01 * *nu)
                       : settings.gamma0;
    bool accepted = false;
    double f_new = f;
    while (gamma >= kGammaMin) {
      blend_block(d, target, gamma, block, &cand);
      const Evaluation ev = eval.evaluate(cand);
      if (ev.feasible && ev.objective <= f * (1.0 - kDescentSlack)) {
        accepted = true;
        f_new = ev.objective;
        break;
      }
      gamma *= 0.5;
    }
    if (!accepted) break;
    ++*nu;
    d = cand;
    const double drop = f - f_new;
    f = f_new;
    if (drop <= settings.epsilon * std::fabs(f)) {
      ++inner;
      break;
    }
  }
  if (inner_used) *inner_used = inner;

  if (block == VarBlock::kPlacement) {
    Decision rounded = d;
    round_placement(eval, &rounded);
    const Evaluation ev = eval.evaluate(rounded);
    if (ev.feasible && ev.objective <= f) {
      d = rounded;
      f = ev.objective;
    } else {
      // Keep the incumbent integer placement: never leave the block worse.
      const Evaluation back = eval.evaluate(incumbent);
      if (ev.feasible && ev.objective <= back.objective) {
        d = rounded;
        f = ev.objective;
      } else {
        d.placement = incumbent.placement;
        f = back.objective;
      }
    }
  }
  return f;
}

namespace {

ControlPoint run_single_block(const SystemTopology& topo,
                              const VideoCatalog& cat,
                              const ControlPoint& point,
                              const OptimizerSettings& settings,
                              VarBlock block) {
  const BoundEvaluator eval(topo, cat, cat.sigma);
  Decision d = Decision::from_point(point);
  optimize_block(eval, d, block, settings, nullptr);
  return d.to_point();
}

}  // namespace

ControlPoint optimize_scheduling(const SystemTopology& topo,
                                 const VideoCatalog& cat,
                                 const ControlPoint& point,
                                 const OptimizerSettings& settings) {
  return run_single_block(topo, cat, point, settings, VarBlock::kSchedule);
}

ControlPoint optimize_aux(const SystemTopology& topo, const VideoCatalog& cat,
                          const ControlPoint& point,
                          const OptimizerSettings& settings) {
  return run_single_block(topo, cat, point, settings, VarBlock::kAux);
}

ControlPoint optimize_bandwidth(const SystemTopology& topo,
                                const VideoCatalog& cat,
                                const ControlPoint& point,
                                const OptimizerSettings& settings) {
  return run_single_block(topo, cat, point, settings, VarBlock::kBandwidth);
}

ControlPoint optimize_placement(const SystemTopology& topo,
                                const VideoCatalog& cat,
                                const ControlPoint& point,
                                const OptimizerSettings& settings) {
  return run_single_block(topo, cat, point, settings, VarBlock::kPlacement);
}

std::pair<ControlPoint, OptimizationTrace> alternate(
    const SystemTopology& topo, const VideoCatalog& cat,
    const ControlPoint& start, const OptimizerSettings& settings,
    const std::vector<VarBlock>& block_order, const BlockMask& mask) {
  settings.validate();
  const BoundEvaluator eval(topo, cat, cat.sigma);
  Decision d = Decision::from_point(start);
  Evaluation ev = eval.evaluate(d);
  if (!ev.feasible) {
    throw std::domain_error("alternate: starting point is infeasible");
  }
  double f = ev.objective;
  OptimizationTrace trace;
  int global_step = 0;
  for (int outer = 1; outer <= settings.max_outer; ++outer) {
    const double f_start = f;
    for (VarBlock block : block_order) {
      if (!mask.allows(block)) continue;
      int inner = 0;
      f = optimize_block(eval, d, block, settings, &inner,
                         settings.inner_per_cycle, &global_step);
      const FeasibilityReport rep =
          check_feasibility(topo, cat, d.to_point());
      trace.rows.push_back({outer, block, f, inner, rep.worst_margin()});
    }
    if (f_start - f < settings.epsilon * std::fabs(f_start)) {
      break;
    }
  }
  return {d.to_point(), trace};
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "OPT") return Strategy::kOpt;
  if (name == "PEA") return Strategy::kPEA;
  if (name == "PEB") return Strategy::kPEB;
  if (name == "PSP") return Strategy::kPSP;
  if (name == "PEC") return Strategy::kPEC;
  if (name == "CHF") return Strategy::kCHF;
  if (name == "FIXED_T") return Strategy::kFixedT;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kOpt:
      return "OPT";
    case Strategy::kPEA:
      return "PEA";
    case Strategy::kPEB:
      return "PEB";
    case Strategy::kPSP:
      return "PSP";
    case Strategy::kPEC:
      return "PEC";
    case Strategy::kCHF:
      return "CHF";
    case Strategy::kFixedT:
      return "FIXED_T";
  }
  throw std::invalid_argument("unknown strategy");
}

StrategyResult run_strategy(Strategy s, const SystemTopology& topo,
                            const VideoCatalog& cat,
                            const OptimizerSettings& settings) {
  ControlPoint init = uniform_control_point(topo, cat);
  BlockMask mask;
  switch (s) {
    case Strategy::kOpt:
      break;
    case Strategy::kPEA:
      mask.schedule = false;
      break;
    case Strategy::kPEB:
      mask.bandwidth = false;
      break;
    case Strategy::kPSP: {
      // Access probabilities proportional to total server base rate.
      double total = 0.0;
      std::vector<double> mu(topo.server_count());
      for (int j = 0; j < topo.server_count(); ++j) {
        mu[j] = topo.servers[j].alpha_d_base + topo.servers[j].alpha_f_base;
        total += mu[j];
      }
      for (auto& row : init.schedule.pi) {
        for (int j = 0; j < topo.server_count(); ++j) row[j] = mu[j] / total;
      }
      mask.schedule = false;
      break;
    }
    case Strategy::kPEC: {
      // Equal cache share per file.
      for (int j = 0; j < topo.server_count(); ++j) {
        const int share = static_cast<int>(
            std::floor(init.placement.capacity[j] / cat.file_count()));
        for (int i = 0; i < cat.file_count(); ++i) {
          init.placement.cached[j][i] = std::min(cat.segments[i], share);
        }
      }
      mask.placement = false;
      break;
    }
    case Strategy::kCHF: {
      // Hottest files first, whole prefixes, lowest index on rate ties.
      std::vector<int> order(cat.file_count());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return cat.arrival_rate[a] > cat.arrival_rate[b];
      });
      for (int j = 0; j < topo.server_count(); ++j) {
        double left = init.placement.capacity[j];
        for (int i = 0; i < cat.file_count(); ++i) {
          init.placement.cached[j][i] = 0;
        }
        for (int i : order) {
          const int take =
              std::min(cat.segments[i], static_cast<int>(std::floor(left)));
          init.placement.cached[j][i] = take;
          left -= take;
          if (left < 1.0) break;
        }
      }
      mask.placement = false;
      break;
    }
    case Strategy::kFixedT:
      for (double& t : init.aux.t) t = 0.01;
      mask.aux = false;
      break;
  }
  const ControlPoint feasible_init = closest_feasible(init, topo, cat);
  StrategyResult res;
  std::tie(res.point, res.trace) =
      alternate(topo, cat, feasible_init, settings, default_block_order(),
                mask);
  res.objective =
      BoundEvaluator(topo, cat, cat.sigma)
          .evaluate(Decision::from_point(res.point))
          .objective;
  return res;
}

}  // namespace sdtp
