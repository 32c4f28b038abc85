#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lbopt/dual.hpp"
#include "lbopt/errors.hpp"
#include "lbopt/lattice.hpp"
#include "lbopt/matrix.hpp"
#include "lbopt/run_record.hpp"
#include "lbopt/topology.hpp"

namespace lbopt {

inline constexpr int kMaxFlow = 19;   // largest flow lattice (D3Q19)
inline constexpr int kMaxTherm = 9;   // largest thermal lattice (D2Q9)
inline constexpr int kMaxM = kMaxFlow + kMaxTherm;

enum class NodeTag : std::uint8_t { Interior, Wall, PressureInlet, PressureOutlet, Heater };

// Per-node boundary/tag data. Pressure nodes carry the inward normal as an
// axis index plus sign; anything non-axis-aligned is rejected up front.
struct TagMap {
  LatticeShape shape;
  std::vector<NodeTag> tag;
  std::vector<double> bc_T;       // prescribed temperature (inlet, heater)
  std::vector<std::int8_t> bc_axis;
  std::vector<std::int8_t> bc_sign;

  TagMap() = default;
  explicit TagMap(LatticeShape s)
      : shape(s),
        tag(s.nodes(), NodeTag::Interior),
        bc_T(s.nodes(), 0.0),
        bc_axis(s.nodes(), 0),
        bc_sign(s.nodes(), 0) {}

  void validate() const;
};

enum class CollisionKind : std::uint8_t { FMRT, BGK };

// Physical / numerical model parameters (lattice units).
struct ModelSpec {
  double nu = 0.02;           // kinematic viscosity
  double beta_fluid = 0.003;  // thermal diffusivity of fluid
  double beta_solid = 0.003;  // ... of solid
  double inlet_dp = 0.0;      // inlet overpressure, p = c_s^2 (rho - 1)
  double u_clamp = 0.05;      // inlet axial velocity limit
  CollisionKind collision = CollisionKind::FMRT;
  double omega_nonhydro = 1.0;  // relaxation rate of non-hydrodynamic moments
  SwitchingSpec switching;

  double omega() const { return 1.0 / (0.5 + 3.0 * nu); }
  double rho_inlet() const { return 1.0 + 3.0 * inlet_dp; }
  double rho_outlet() const { return 1.0; }
};

// Precomputed relaxation data for the flow lattice. The factorised update
//   f' = feq_post + A (f - feq_pre),  A = U^-1 (I - T) U
// needs only A; U and its inverse are kept for the generic moment-space path
// used in tests. BGK is the U = I, T = omega*I special case.
struct ModelTables {
  Matrix U, Uinv, A, At;              // At = A^T, used by the adjoint
  std::vector<double> relax;          // diagonal of T

  static ModelTables build(const LatticeDescriptor& flow, const ModelSpec& spec);
};

// Everything a kernel needs to process one node; shared by every scalar type
// and by the partition workers. Holds no state-field data.
struct System {
  LatticeShape shape;
  const LatticeDescriptor* flow = nullptr;
  const LatticeDescriptor* thermal = nullptr;
  ModelSpec model;
  ModelTables tables;
  TagMap tags;
  DesignField design;

  int mf = 0, mt = 0, m = 0;
  std::vector<Vec3i> vel;  // coupled plane velocities (flow then thermal)
  std::vector<int> opp;    // coupled opposite map (within each sublattice)

  void finalize();  // builds tables/caches, validates everything
};

// --- macroscopic moments and equilibria (templated so duals flow through) ---

template <class T>
void flow_moments(const LatticeDescriptor& d, std::span<const T> f, T& rho, T u[3]) {
  rho = T(0);
  T q[3] = {T(0), T(0), T(0)};
  for (int j = 0; j < d.size(); ++j) {
    rho += f[j];
    const Vec3i& e = d.velocities[j];
    if (e.x) q[0] += T(double(e.x)) * f[j];
    if (e.y) q[1] += T(double(e.y)) * f[j];
    if (e.z) q[2] += T(double(e.z)) * f[j];
  }
  if (!(value_of(rho) > 0)) throw NumericError("non-positive density");
  for (int a = 0; a < 3; ++a) u[a] = q[a] / rho;
}

template <class T>
T thermal_moment(std::span<const T> g) {
  T s(0);
  for (const T& v : g) s += v;
  return s;
}

// feq_j = w_j rho (1 + 3 e.u + 4.5 (e.u)^2 - 1.5 u.u)
template <class T>
void flow_equilibrium(const LatticeDescriptor& d, T rho, const T u[3], T* feq) {
  const T usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
  for (int j = 0; j < d.size(); ++j) {
    const Vec3i& e = d.velocities[j];
    const T eu = T(double(e.x)) * u[0] + T(double(e.y)) * u[1] + T(double(e.z)) * u[2];
    feq[j] = T(d.weights[j]) * rho *
             (T(1.0) + T(3.0) * eu + T(4.5) * eu * eu - T(1.5) * usq);
  }
}

// geq_j = w_j T (1 + 3 e.u)  (linear advection-diffusion equilibrium)
template <class T>
void thermal_equilibrium(const LatticeDescriptor& d, T temp, const T u[3], T* geq) {
  for (int j = 0; j < d.size(); ++j) {
    const Vec3i& e = d.velocities[j];
    const T eu = T(double(e.x)) * u[0] + T(double(e.y)) * u[1] + T(double(e.z)) * u[2];
    geq[j] = T(d.weights[j]) * temp * (T(1.0) + T(3.0) * eu);
  }
}

// Generic moment-space collision: fout = U^-1 (m_eq_post + (I-T)(U f - m_eq_pre)).
template <class T>
void collide_fmrt(const Matrix& U, const Matrix& Uinv, std::span<const double> relax,
                  std::span<const T> f, std::span<const T> m_eq_pre,
                  std::span<const T> m_eq_post, std::span<T> fout);

// fout_j = fin_opp(j): full-way bounce-back.
template <class T>
void bounce_back(const LatticeDescriptor& d, std::span<const T> fin, std::span<T> fout) {
  for (int j = 0; j < d.size(); ++j) fout[j] = fin[d.opposite[j]];
}

// Zou-He pressure boundary on an axis-aligned face. Reconstructs the slots
// pointing inward (e[axis] == sign) so that density equals rho_target and the
// tangential momentum vanishes. If the axial speed would exceed u_clamp it is
// clamped and the density is recomputed from the clamped speed instead
// (velocity-mode fallback). Returns the axial velocity through *u_axis.
template <class T>
void zou_he_pressure(const LatticeDescriptor& d, std::span<const T> fin, T rho_target,
                     int axis, int sign, double u_clamp, std::span<T> fout, T* u_axis);

// Full coupled collision for one node (flow sublattice then thermal).
// `w` is the design value and `rho_target` the inlet density; both enter as T
// so they can carry dual seeds.
template <class T>
void collide_node(const System& sys, NodeTag tag, int axis, int sign, double bc_T,
                  std::span<const T> fin, T w, T rho_target, std::span<T> fout);

// --- drivers ---

// rho = 1, u = 0 equilibrium for flow planes, zero temperature planes.
template <class R>
void initialize_state(const System& sys, StateField<R>& f);

// One collide-and-stream step over the whole field (fused scatter into the
// back buffer, then flip). Throws NumericError with node coordinates when a
// node produces a non-positive density.
template <class R>
void primal_step(const System& sys, StateField<R>& f);

// Max-norm difference between the two buffers of a just-stepped field
// (current vs previous state). NaN anywhere propagates into the result.
template <class R>
double step_residual(const StateField<R>& f);

template <class R>
struct SolveOptions {
  double tol = 1e-9;
  long max_iter = 200000;
  long record_interval = 1;   // RunRecord row cadence
  long fixed_iters = -1;      // >= 0: run exactly this many steps, ignore tol
  std::function<double(const StateField<R>&)> monitor;  // objective hook
};

struct SolveResult {
  bool converged = false;
  long iterations = 0;
  double residual = 0.0;
};

// Iterate primal_step until the max-norm step residual drops to tol.
// Residuals are exact max norms; NaN/Inf residuals raise NumericError naming
// the iteration.
template <class R>
SolveResult solve_fixed_point(const System& sys, StateField<R>& f,
                              const SolveOptions<R>& opt, RunRecord* rec = nullptr);

}  // namespace lbopt
