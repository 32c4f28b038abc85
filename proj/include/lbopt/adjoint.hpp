#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lbopt/collision.hpp"
#include "lbopt/objective.hpp"

namespace lbopt {

// Which per-node transpose kernel the adjoint sweep uses.
//  Analytic  - hand-derived vector-Jacobian products for interior/wall/heater
//              nodes, dual-number sweeps only on the pressure faces.
//  DualSweep - every node via dual-number Jacobian columns (reference path,
//              one kernel evaluation per coupled slot).
enum class AdjointKernel : std::uint8_t { Analytic, DualSweep };

// Dense per-node Jacobian transposes, usable while design and base state are
// frozen (plain adjoint solves; rejected for interleaved one-shot runs).
struct JacobianCache {
  int m = 0;
  std::vector<double> jt;  // nodes * m * m, row-major J^T per node
  const double* node(long idx) const {
    return jt.data() + static_cast<std::size_t>(idx) * m * m;
  }
};

// Exact node Jacobian J_jk = d fout_j / d fin_k via one dual sweep per slot.
template <class R>
void node_jacobian(const System& sys, NodeTag tag, int axis, int sign, double bc_T,
                   std::span<const R> fin, R w, Matrix& jac);

template <class R>
JacobianCache build_jacobian_cache(const System& sys, const StateField<R>& f_hat);

// v_out = J(x)^T v_in + dF^x/df (the objective term enters only on support
// nodes). `fin` is the base state the Jacobian is evaluated at.
template <class R>
void adjoint_collide_node(const System& sys, const ObjectiveSpec& obj, long idx,
                          std::span<const R> fin, std::span<const R> v_in,
                          std::span<R> v_out, AdjointKernel kernel,
                          const JacobianCache* cache = nullptr);

// One reverse sweep: per node apply adjoint_collide_node against the current
// buffer of `base`, then scatter component k along -e_k into the back buffer.
template <class R>
void adjoint_step(const System& sys, const ObjectiveSpec& obj, const StateField<R>& base,
                  StateField<R>& v, AdjointKernel kernel,
                  const JacobianCache* cache = nullptr);

template <class R>
struct AdjointSolveOptions {
  double tol = 1e-9;
  long max_iter = 200000;
  long record_interval = 1;
  long fixed_iters = -1;  // >= 0: exactly this many sweeps
  AdjointKernel kernel = AdjointKernel::Analytic;
  bool use_cache = false;
};

// Iterate adjoint_step from v = 0 against the frozen base state until the
// max-norm update drops to tol.
template <class R>
SolveResult solve_adjoint(const System& sys, const ObjectiveSpec& obj,
                          const StateField<R>& base, StateField<R>& v,
                          const AdjointSolveOptions<R>& opt, RunRecord* rec = nullptr);

// Objective gradient: design component i = sum_j v_j(x_i) dW_j/dw(x_i), plus
// named global parameters (inlet overpressure).
struct GradientVector {
  std::vector<double> design;  // order = DesignField::nodes
  std::vector<std::pair<std::string, double>> globals;

  double max_abs() const;
};

template <class R>
GradientVector param_gradient(const System& sys, const StateField<R>& v,
                              const StateField<R>& base, AdjointKernel kernel);

// A direction in design space (plus the global inlet parameter).
struct Direction {
  std::vector<double> dw;  // per design node
  double d_inlet_dp = 0.0;
};

// Forward/tangent mode: propagate state perturbations df alongside the frozen
// base state and return dF once df reaches its own fixed point. Used to check
// adjoint/tangent duality.
template <class R>
struct TangentResult {
  double dF = 0.0;
  SolveResult solve;
};

template <class R>
TangentResult<R> tangent_solve(const System& sys, const ObjectiveSpec& obj,
                               const StateField<R>& base, const Direction& dir,
                               double tol, long max_iter);

// Central finite difference of the raw objective along one component.
// Re-solves the primal from the cold start for w - h and w + h; when
// fixed_iters >= 0 both solves run exactly that many steps so the difference
// is free of tolerance-stop noise.
struct FdComponent {
  bool is_global = false;
  long design_ordinal = 0;     // index into DesignField::nodes
  std::string global = "";     // "inlet_dp"
};

template <class R>
double fd_gradient(const System& sys, const ObjectiveSpec& obj, const FdComponent& comp,
                   double h, double tol, long max_iter, long fixed_iters);

// Gradient verification summary (assembled by the case driver).
struct GradCheckRow {
  bool is_global = false;
  int x = -1, y = -1, z = -1;
  std::string name;
  double adjoint = 0.0, fd = 0.0, rel_err = 0.0, best_step = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckRow> rows;
  double max_rel_err = 0.0;
  long primal_iterations = 0;
  double seconds = 0.0;
};

}  // namespace lbopt
