#pragma once

#include <vector>

#include "lbopt/adjoint.hpp"
#include "lbopt/objective.hpp"

namespace lbopt {

// Projected ascent step on the design field: w <- clamp(w + zeta * grad, 0, 1)
// inside the mask. grad is ordered like DesignField::nodes. zeta = 0 leaves
// the field bit-identical.
void descent_update(DesignField& d, const std::vector<double>& grad, double zeta);

// Step size schedule: the stage with the largest start <= iteration wins.
struct ZetaStage {
  long start = 0;
  double value = 0.0;
};
double zeta_at(const std::vector<ZetaStage>& stages, long iteration);

struct OneShotOptions {
  long iterations = 10000;
  std::vector<ZetaStage> zeta{{0, 10.0}};
  PenaltySchedule penalty;
  AdjointKernel kernel = AdjointKernel::Analytic;
  long record_interval = 100;
  long snapshot_interval = 0;  // 0 = no snapshots
  std::function<void(long)> on_snapshot;
};

struct OneShotResult {
  long iterations = 0;
  long primal_steps = 0, adjoint_steps = 0;
  double final_objective = 0.0;  // monitoring value at the last iteration
};

// Interleaved one-shot optimization: every iteration advances the state one
// step, the adjoint one reverse sweep against the fresh state, and then moves
// the design along the composite gradient (objective minus penalty).
template <class R>
OneShotResult one_shot_run(System& sys, const ObjectiveSpec& obj, StateField<R>& f,
                           StateField<R>& v, const OneShotOptions& opt,
                           RunRecord* rec = nullptr);

// --- MMA (method of moving asymptotes), bound constraints only ---

struct MmaOptions {
  long outer_iterations = 30;
  double move_limit = 0.2;
  double asy_init = 0.5;      // initial asymptote distance (times range 1)
  double asy_expand = 1.2;    // oscillation-free growth
  double asy_contract = 0.7;  // shrink on sign flips
  double primal_tol = 1e-9;
  double adjoint_tol = 1e-9;
  long max_inner = 200000;
  bool adjoint_match_count = true;  // adjoint sweeps = primal iterations
  AdjointKernel kernel = AdjointKernel::Analytic;
  PenaltySchedule penalty;
  long record_interval = 1;
  long snapshot_interval = 0;  // in outer iterations; 0 = no snapshots
  std::function<void(long)> on_snapshot;
};

struct MmaState {
  long iter = 0;  // completed updates
  std::vector<double> x_prev, x_prev2, low, upp;
};

// One separable MMA update for a box-constrained maximization: returns the
// closed-form minimizer of the convex approximation per coordinate, clamped to
// the move limits. `grad` follows the ascent convention.
std::vector<double> mma_update(const std::vector<double>& x, const std::vector<double>& grad,
                               MmaState& st, const MmaOptions& opt);

struct MmaRunResult {
  long outer_iterations = 0;
  long primal_steps = 0, adjoint_steps = 0;
  double final_objective = 0.0;
  bool all_converged = true;
};

// Nested-loop optimization: converge the primal, run the adjoint for the same
// number of sweeps (or to tolerance), update the design through mma_update,
// repeat. Zero outer iterations still performs the baseline solve.
template <class R>
MmaRunResult mma_run(System& sys, const ObjectiveSpec& obj, StateField<R>& f,
                     StateField<R>& v, const MmaOptions& opt, RunRecord* rec = nullptr);

// --- threshold sweep ---

struct ThresholdPoint {
  double eta = 0.0;
  double objective = 0.0;
  bool converged = false;
};

struct ThresholdResult {
  std::vector<ThresholdPoint> points;
  double best_eta = 0.0;
  double best_objective = 0.0;
  bool any_converged = false;
};

// Re-solve from scratch for each thresholded design and report the objective
// curve. Ties on the objective keep the smallest eta; non-converged solves are
// excluded from the best pick.
template <class R>
ThresholdResult threshold_sweep(const System& sys, const ObjectiveSpec& obj,
                                const std::vector<double>& etas, double tol, long max_iter);

}  // namespace lbopt
