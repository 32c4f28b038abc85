#pragma once

// Shared helpers for the unit tests: small case builders, naive reference
// implementations (streaming by explicit index shifts, direct summation),
// and deterministic random fields. Everything here is independent of the
// library's optimized paths so tests compare against a second opinion.

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lbopt/collision.hpp"
#include "lbopt/config.hpp"
#include "lbopt/lattice.hpp"
#include "lbopt/objective.hpp"

namespace oracles {

using namespace lbopt;

// ---------------------------------------------------------------------------
// case builders

// Tiny mixer-like channel: pressure-driven, split-temperature inlet, full
// design box in the middle. Small enough that fixed points take < 1 s.
inline std::string small_channel_cfg(int nx = 12, int ny = 8) {
  std::ostringstream os;
  os << "[lattice]\n"
     << "nx = " << nx << "\nny = " << ny << "\nnz = 1\n"
     << "[model]\n"
     << "nu = 0.02\nbeta_fluid = 0.003\nbeta_solid = 0.003\n"
     << "inlet_dp = 0.002\n"
     << "[tags]\n"
     << "design_x0 = " << nx / 3 << "\ndesign_x1 = " << 2 * nx / 3 << "\n"
     << "inlet_profile = split\n"
     << "[objective]\nkind = mixing\nplane_offset = 1\n"
     << "[output]\ndir = /tmp/lbopt_test_out\nwrite_vtk = false\nwrite_csv = false\n";
  return os.str();
}

// All-interior periodic box (no boundaries): conservation-law playground.
inline std::string periodic_cfg(int nx = 8, int ny = 6) {
  std::ostringstream os;
  os << "[lattice]\nnx = " << nx << "\nny = " << ny << "\nnz = 1\n"
     << "[model]\nnu = 0.02\nbeta_fluid = 0.003\nbeta_solid = 0.01\n"
     << "[tags]\ngeometry = periodic\n"
     << "design_x0 = 1\ndesign_x1 = " << nx - 2 << "\n"
     << "[objective]\nkind = synthetic\nplane_offset = 1\n"
     << "[output]\ndir = /tmp/lbopt_test_out\nwrite_vtk = false\nwrite_csv = false\n";
  return os.str();
}

inline BuiltCase built(const std::string& text) {
  CaseConfig cfg = CaseConfig::parse_text(text, "<test>");
  cfg.validate();
  return build_case(cfg);
}

// ---------------------------------------------------------------------------
// deterministic random data

inline std::mt19937_64 rng(unsigned long seed) { return std::mt19937_64(seed); }

// Positive, equilibrium-like random populations (safe for moment kernels).
template <class R>
void fill_positive(StateField<R>& f, std::mt19937_64& gen, double lo = 0.02, double hi = 0.2) {
  std::uniform_real_distribution<double> d(lo, hi);
  auto raw = f.raw(f.buffer_id());
  for (auto& v : raw) v = R(d(gen));
}

// Arbitrary signed values (streaming and adjoint fields are linear objects).
template <class R>
void fill_signed(StateField<R>& f, std::mt19937_64& gen, double amp = 1.0) {
  std::uniform_real_distribution<double> d(-amp, amp);
  auto raw = f.raw(f.buffer_id());
  for (auto& v : raw) v = R(d(gen));
}

// Random node populations around the thermal/flow equilibrium at rest.
template <class R>
std::vector<R> random_node(const System& sys, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> d(0.8, 1.2);
  std::vector<R> fin(sys.m);
  for (int j = 0; j < sys.mf; ++j) fin[j] = R(sys.flow->weights[j] * d(gen));
  for (int j = 0; j < sys.mt; ++j)
    fin[sys.mf + j] = R(sys.thermal->weights[j] * (d(gen) - 1.0));
  return fin;
}

// ---------------------------------------------------------------------------
// naive reference kernels

// Streaming by explicit periodic index arithmetic, one scalar at a time.
template <class R>
std::vector<R> naive_stream(const LatticeShape& s, const LatticeDescriptor& d,
                            const std::vector<R>& in) {
  std::vector<R> out(in.size(), R(0));
  const long n = s.nodes();
  for (int j = 0; j < d.size(); ++j) {
    const Vec3i e = d.velocities[j];
    for (int z = 0; z < s.nz; ++z)
      for (int y = 0; y < s.ny; ++y)
        for (int x = 0; x < s.nx; ++x) {
          const int xt = (x + e.x + s.nx) % s.nx;
          const int yt = (y + e.y + s.ny) % s.ny;
          const int zt = (z + e.z + s.nz) % s.nz;
          out[j * n + flat_index(s, xt, yt, zt)] = in[j * n + flat_index(s, x, y, z)];
        }
  }
  return out;
}

template <class R>
std::vector<R> dump_state(const StateField<R>& f) {
  auto raw = f.raw(f.buffer_id());
  return std::vector<R>(raw.begin(), raw.end());
}

template <class R>
void load_state(StateField<R>& f, const std::vector<R>& data) {
  auto raw = f.raw(f.buffer_id());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = data[i];
}

// Plain left-to-right summation in long double: an independent reduction.
template <class R>
long double naive_sum(const std::vector<R>& v) {
  long double s = 0.0L;
  for (const R& x : v) s += static_cast<long double>(x);
  return s;
}

// Central finite difference of one node collision with respect to input slot k.
inline std::vector<double> fd_jacobian_column(const System& sys, NodeTag tag, int axis,
                                              int sign, double bc_T,
                                              std::vector<double> fin, double w,
                                              double rho_target, int k, double h) {
  std::vector<double> plus(sys.m), minus(sys.m);
  fin[k] += h;
  collide_node<double>(sys, tag, axis, sign, bc_T, fin, w, rho_target,
                       std::span<double>(plus));
  fin[k] -= 2 * h;
  collide_node<double>(sys, tag, axis, sign, bc_T, fin, w, rho_target,
                       std::span<double>(minus));
  std::vector<double> col(sys.m);
  for (int j = 0; j < sys.m; ++j) col[j] = (plus[j] - minus[j]) / (2 * h);
  return col;
}

// One full adjoint sweep done the slow, obvious way: build every node's
// Jacobian by central differences of collide_node, apply the transpose plus
// the objective partial, then scatter component k along -e_k periodically.
inline std::vector<double> naive_adjoint_sweep(const System& sys, const ObjectiveSpec& obj,
                                               const StateField<double>& base,
                                               const StateField<double>& v, double h) {
  const LatticeShape& s = sys.shape;
  const long n = s.nodes();
  std::vector<double> out(static_cast<std::size_t>(sys.m) * n, 0.0);
  std::vector<double> fin(sys.m), vin(sys.m), y(sys.m);

  for (int z = 0; z < s.nz; ++z)
    for (int y0 = 0; y0 < s.ny; ++y0)
      for (int x = 0; x < s.nx; ++x) {
        const long idx = flat_index(s, x, y0, z);
        for (int p = 0; p < sys.m; ++p) {
          fin[p] = base.plane(p)[idx];
          vin[p] = v.plane(p)[idx];
        }
        const NodeTag tag = sys.tags.tag[idx];
        const int axis = sys.tags.bc_axis[idx];
        const int sign = sys.tags.bc_sign[idx];
        const double bcT = sys.tags.bc_T[idx];
        const double w = sys.design.w[idx];
        const double rt = sys.model.rho_inlet();

        // y_k = sum_j J_jk v_j  via FD columns.
        for (int k = 0; k < sys.m; ++k) {
          const std::vector<double> col =
              fd_jacobian_column(sys, tag, axis, sign, bcT, fin, w, rt, k, h);
          double acc = 0.0;
          for (int j = 0; j < sys.m; ++j) acc += col[j] * vin[j];
          y[k] = acc;
        }
        if (obj.on_support[idx]) {
          std::vector<double> b(sys.m);
          node_partial<double>(obj, sys, fin, b);
          for (int k = 0; k < sys.m; ++k) y[k] += b[k];
        }
        for (int k = 0; k < sys.m; ++k) {
          const Vec3i e = sys.vel[k];
          const int xt = (x - e.x + s.nx) % s.nx;
          const int yt = (y0 - e.y + s.ny) % s.ny;
          const int zt = (z - e.z + s.nz) % s.nz;
          out[k * n + flat_index(s, xt, yt, zt)] = y[k];
        }
      }
  return out;
}

}  // namespace oracles
