#include "lbopt/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace lbopt {

void descent_update(DesignField& d, const std::vector<double>& grad, double zeta) {
  if (grad.size() != d.nodes.size())
    throw ConfigError("gradient length does not match the design region");
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    double w = d.w[d.nodes[i]] + zeta * grad[i];
    w = std::clamp(w, 0.0, 1.0);  // projection onto the box, not a warning case
    d.w[d.nodes[i]] = w;
  }
}

double zeta_at(const std::vector<ZetaStage>& stages, long iteration) {
  double z = 0.0;
  for (const ZetaStage& s : stages)
    if (iteration >= s.start) z = s.value;
  return z;
}

template <class R>
OneShotResult one_shot_run(System& sys, const ObjectiveSpec& obj, StateField<R>& f,
                           StateField<R>& v, const OneShotOptions& opt, RunRecord* rec) {
  opt.penalty.validate();
  OneShotResult res;
  std::vector<double> comp(sys.design.nodes.size());

  for (long it = 1; it <= opt.iterations; ++it) {
    primal_step(sys, f);
    adjoint_step(sys, obj, f, v, opt.kernel);
    ++res.primal_steps;
    ++res.adjoint_steps;

    const double zeta = zeta_at(opt.zeta, it);
    const double lambda = opt.penalty.weight_at(it);
    GradientVector grad = param_gradient(sys, v, f, opt.kernel);
    for (std::size_t i = 0; i < comp.size(); ++i) {
      comp[i] = grad.design[i];
      if (lambda != 0.0) comp[i] -= lambda * (1.0 - 2.0 * sys.design.w[sys.design.nodes[i]]);
    }
    descent_update(sys.design, comp, zeta);
    res.iterations = it;

    if (rec && (it % opt.record_interval == 0 || it == opt.iterations)) {
      RunRow row;
      row.iteration = it;
      row.residual = step_residual(f);
      row.objective = evaluate_raw(obj, sys, f);
      const PenaltyValue p = penalty(sys.design);
      row.penalty = p.value;
      row.penalty_weight = lambda;
      row.composite = row.objective - lambda * p.value;
      double gn = 0.0;
      for (double gi : comp) gn = std::max(gn, std::abs(gi));
      row.grad_norm = gn;
      rec->rows.push_back(row);
    }
    if (opt.on_snapshot && opt.snapshot_interval > 0 &&
        (it % opt.snapshot_interval == 0 || it == opt.iterations))
      opt.on_snapshot(it);
  }
  res.final_objective = evaluate_raw(obj, sys, f);
  if (rec) {
    rec->iterations = res.iterations;
    rec->final_objective = res.final_objective;
  }
  return res;
}

namespace {

// Svanberg-style asymptote bookkeeping; all ranges are in the natural design
// box [0,1], so the range factor is 1.
void update_asymptotes(const std::vector<double>& x, MmaState& st, const MmaOptions& opt) {
  const std::size_t n = x.size();
  if (st.low.size() != n) {
    st.low.assign(n, 0.0);
    st.upp.assign(n, 0.0);
  }
  if (st.iter < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      st.low[i] = x[i] - opt.asy_init;
      st.upp[i] = x[i] + opt.asy_init;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double osc = (x[i] - st.x_prev[i]) * (st.x_prev[i] - st.x_prev2[i]);
      const double gamma = osc > 0 ? opt.asy_expand : (osc < 0 ? opt.asy_contract : 1.0);
      st.low[i] = x[i] - gamma * (st.x_prev[i] - st.low[i]);
      st.upp[i] = x[i] + gamma * (st.upp[i] - st.x_prev[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    st.low[i] = std::clamp(st.low[i], x[i] - 10.0, x[i] - 0.01);
    st.upp[i] = std::clamp(st.upp[i], x[i] + 0.01, x[i] + 10.0);
  }
}

}  // namespace

std::vector<double> mma_update(const std::vector<double>& x, const std::vector<double>& grad,
                               MmaState& st, const MmaOptions& opt) {
  const std::size_t n = x.size();
  if (grad.size() != n) throw ConfigError("mma gradient length mismatch");
  update_asymptotes(x, st, opt);

  std::vector<double> xn(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double L = st.low[i], U = st.upp[i];
    const double alpha = std::max({0.0, L + 0.1 * (x[i] - L), x[i] - opt.move_limit});
    const double beta = std::min({1.0, U - 0.1 * (U - x[i]), x[i] + opt.move_limit});

    // Minimization convention inside the subproblem.
    const double gm = -grad[i];
    const double p = (U - x[i]) * (U - x[i]) *
                     (1.001 * std::max(gm, 0.0) + 0.001 * std::max(-gm, 0.0));
    const double q = (x[i] - L) * (x[i] - L) *
                     (0.001 * std::max(gm, 0.0) + 1.001 * std::max(-gm, 0.0));

    double xi;
    if (p == 0.0 && q == 0.0) {
      xi = x[i];  // no information: stay put
    } else {
      const double sp = std::sqrt(p), sq = std::sqrt(q);
      xi = (L * sp + U * sq) / (sp + sq);
    }
    xn[i] = std::clamp(xi, alpha, beta);
  }

  st.x_prev2 = st.iter >= 1 ? st.x_prev : x;
  st.x_prev = x;
  ++st.iter;
  return xn;
}

template <class R>
MmaRunResult mma_run(System& sys, const ObjectiveSpec& obj, StateField<R>& f,
                     StateField<R>& v, const MmaOptions& opt, RunRecord* rec) {
  opt.penalty.validate();
  MmaRunResult res;

  SolveOptions<R> popt;
  popt.tol = opt.primal_tol;
  popt.max_iter = opt.max_inner;
  popt.record_interval = 1L << 30;

  auto record_outer = [&](long outer, const SolveResult& pr, double grad_norm) {
    if (!rec || (outer % opt.record_interval && outer != opt.outer_iterations)) return;
    RunRow row;
    row.iteration = outer;
    row.residual = pr.residual;
    row.objective = evaluate_raw(obj, sys, f);
    const PenaltyValue p = penalty(sys.design);
    row.penalty = p.value;
    row.penalty_weight = opt.penalty.weight_at(res.primal_steps);
    row.composite = row.objective - row.penalty_weight * p.value;
    row.grad_norm = grad_norm;
    rec->rows.push_back(row);
  };

  SolveResult pr = solve_fixed_point(sys, f, popt);
  res.primal_steps += pr.iterations;
  res.all_converged = res.all_converged && pr.converged;
  record_outer(0, pr, std::numeric_limits<double>::quiet_NaN());

  MmaState st;
  std::vector<double> x(sys.design.nodes.size()), comp(sys.design.nodes.size());

  for (long outer = 1; outer <= opt.outer_iterations; ++outer) {
    AdjointSolveOptions<R> aopt;
    aopt.kernel = opt.kernel;
    aopt.tol = opt.adjoint_tol;
    aopt.max_iter = opt.max_inner;
    aopt.record_interval = 1L << 30;
    if (opt.adjoint_match_count) aopt.fixed_iters = std::max<long>(pr.iterations, 1);
    const SolveResult ar = solve_adjoint(sys, obj, f, v, aopt);
    res.adjoint_steps += ar.iterations;

    GradientVector grad = param_gradient(sys, v, f, opt.kernel);
    const double lambda = opt.penalty.weight_at(res.primal_steps);
    double gn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = sys.design.w[sys.design.nodes[i]];
      comp[i] = grad.design[i];
      if (lambda != 0.0) comp[i] -= lambda * (1.0 - 2.0 * x[i]);
      gn = std::max(gn, std::abs(comp[i]));
    }
    std::vector<double> xn = mma_update(x, comp, st, opt);
    for (std::size_t i = 0; i < xn.size(); ++i) sys.design.w[sys.design.nodes[i]] = xn[i];

    pr = solve_fixed_point(sys, f, popt);
    res.primal_steps += pr.iterations;
    res.all_converged = res.all_converged && pr.converged;
    res.outer_iterations = outer;
    record_outer(outer, pr, gn);
    if (opt.on_snapshot && opt.snapshot_interval > 0 &&
        (outer % opt.snapshot_interval == 0 || outer == opt.outer_iterations))
      opt.on_snapshot(outer);
  }

  res.final_objective = evaluate_raw(obj, sys, f);
  if (rec) {
    rec->iterations = res.outer_iterations;
    rec->final_objective = res.final_objective;
    rec->converged = res.all_converged;
  }
  return res;
}

template <class R>
ThresholdResult threshold_sweep(const System& sys, const ObjectiveSpec& obj,
                                const std::vector<double>& etas, double tol, long max_iter) {
  ThresholdResult res;
  for (double eta : etas) {
    System trial = sys;
    trial.design = apply_threshold(sys.design, eta);
    StateField<R> f(trial.shape, trial.m);
    initialize_state(trial, f);
    SolveOptions<R> opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.record_interval = 1L << 30;

    ThresholdPoint pt;
    pt.eta = eta;
    try {
      const SolveResult sr = solve_fixed_point(trial, f, opt);
      pt.converged = sr.converged;
      if (sr.converged) pt.objective = evaluate_raw(obj, trial, f);
    } catch (const NumericError&) {
      pt.converged = false;  // diverged designs are reported, not fatal
    }
    if (pt.converged &&
        (!res.any_converged || pt.objective > res.best_objective)) {
      res.any_converged = true;
      res.best_objective = pt.objective;
      res.best_eta = eta;  // strict > keeps the smallest eta on ties
    }
    res.points.push_back(pt);
  }
  return res;
}

#define LBOPT_INSTANTIATE_OPT(R)                                                        \
  template OneShotResult one_shot_run<R>(System&, const ObjectiveSpec&, StateField<R>&, \
                                         StateField<R>&, const OneShotOptions&,         \
                                         RunRecord*);                                   \
  template MmaRunResult mma_run<R>(System&, const ObjectiveSpec&, StateField<R>&,       \
                                   StateField<R>&, const MmaOptions&, RunRecord*);      \
  template ThresholdResult threshold_sweep<R>(const System&, const ObjectiveSpec&,      \
                                              const std::vector<double>&, double, long);

LBOPT_INSTANTIATE_OPT(float)
LBOPT_INSTANTIATE_OPT(double)
#undef LBOPT_INSTANTIATE_OPT

}  // namespace lbopt
