#include "lbopt/collision.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <string>

namespace lbopt {

void TagMap::validate() const {
  const long n = shape.nodes();
  if (static_cast<long>(tag.size()) != n || static_cast<long>(bc_T.size()) != n ||
      static_cast<long>(bc_axis.size()) != n || static_cast<long>(bc_sign.size()) != n)
    throw ConfigError("tag map arrays do not match the lattice shape");
  for (long i = 0; i < n; ++i) {
    if (tag[i] == NodeTag::PressureInlet || tag[i] == NodeTag::PressureOutlet) {
      if (bc_axis[i] < 0 || bc_axis[i] > 2 || (shape.is2d() && bc_axis[i] == 2))
        throw ConfigError("pressure node has a normal off the lattice axes");
      if (bc_sign[i] != 1 && bc_sign[i] != -1)
        throw ConfigError("pressure node normal sign must be +1 or -1");
    }
    if (!std::isfinite(bc_T[i])) throw ConfigError("prescribed temperature is not finite");
  }
}

namespace {

// Moment rows relaxed at omega(nu); everything else non-conserved relaxes at
// omega_nonhydro. Conserved rows get rate 1: their moment difference is
// identically zero, so the value never matters.
void classify_rows(const LatticeDescriptor& d, std::vector<int>& shear,
                   std::vector<int>& conserved) {
  if (d.name == VelocitySet::D2Q9) {
    shear = {7, 8};
    conserved = {0, 3, 5};
  } else if (d.name == VelocitySet::D3Q19) {
    shear = {9, 11, 13, 14, 15};
    conserved = {0, 3, 5, 7};
  } else {
    throw ConfigError("no moment basis for this lattice");
  }
}

}  // namespace

ModelTables ModelTables::build(const LatticeDescriptor& flow, const ModelSpec& spec) {
  ModelTables t;
  const int m = flow.size();
  const double om = spec.omega();

  if (spec.collision == CollisionKind::BGK || !flow.moment_matrix) {
    t.U = Matrix::identity(m);
    t.Uinv = Matrix::identity(m);
    t.relax.assign(m, om);
  } else {
    t.U = *flow.moment_matrix;
    t.Uinv = inverse(t.U);
    t.relax.assign(m, spec.omega_nonhydro);
    std::vector<int> shear, conserved;
    classify_rows(flow, shear, conserved);
    for (int i : shear) t.relax[i] = om;
    for (int i : conserved) t.relax[i] = 1.0;
  }

  // A = U^-1 (I - T) U
  Matrix imt = Matrix::identity(m);
  for (int i = 0; i < m; ++i) imt.at(i, i) = 1.0 - t.relax[i];
  t.A = t.Uinv * (imt * t.U);
  t.At = t.A.transposed();
  return t;
}

void System::finalize() {
  if (!flow || !thermal) throw ConfigError("system lattice descriptors not set");
  flow->validate();
  thermal->validate();
  mf = flow->size();
  mt = thermal->size();
  m = mf + mt;
  if (mf > kMaxFlow || mt > kMaxTherm) throw ConfigError("lattice too large for kernels");
  tags.validate();
  if (!(tags.shape == shape)) throw ConfigError("tag map shape mismatch");
  if (!(design.shape == shape)) throw ConfigError("design field shape mismatch");
  if (!(model.nu > 0)) throw ConfigError("viscosity must be positive");
  if (model.beta_fluid < 0 || model.beta_solid < 0)
    throw ConfigError("diffusivities must be non-negative");
  if (!(model.u_clamp > 0)) throw ConfigError("velocity clamp must be positive");
  if (!(model.switching.theta > 0)) throw ConfigError("switching exponent must be positive");

  tables = ModelTables::build(*flow, model);

  vel.clear();
  opp.clear();
  for (int j = 0; j < mf; ++j) {
    vel.push_back(flow->velocities[j]);
    opp.push_back(flow->opposite[j]);
  }
  for (int j = 0; j < mt; ++j) {
    vel.push_back(thermal->velocities[j]);
    opp.push_back(mf + thermal->opposite[j]);
  }
}

template <class T>
void collide_fmrt(const Matrix& U, const Matrix& Uinv, std::span<const double> relax,
                  std::span<const T> f, std::span<const T> m_eq_pre,
                  std::span<const T> m_eq_post, std::span<T> fout) {
  const int m = U.n;
  std::array<T, kMaxFlow> mom;
  for (int i = 0; i < m; ++i) {
    T acc(0);
    for (int j = 0; j < m; ++j) acc += T(U.at(i, j)) * f[j];
    mom[i] = m_eq_post[i] + T(1.0 - relax[i]) * (acc - m_eq_pre[i]);
  }
  for (int j = 0; j < m; ++j) {
    T acc(0);
    for (int i = 0; i < m; ++i) acc += T(Uinv.at(j, i)) * mom[i];
    fout[j] = acc;
  }
}

template <class T>
void zou_he_pressure(const LatticeDescriptor& d, std::span<const T> fin, T rho_target,
                     int axis, int sign, double u_clamp, std::span<T> fout, T* u_axis) {
  const int m = d.size();
  const int comp[3] = {0, 1, 2};
  (void)comp;

  auto evel = [&](int j, int a) {
    return a == 0 ? d.velocities[j].x : (a == 1 ? d.velocities[j].y : d.velocities[j].z);
  };

  // Knowns: slots with e[axis] != sign. K0 over tangential slots, Km over
  // outgoing ones.
  T k0(0), km(0);
  for (int j = 0; j < m; ++j) {
    const int ea = evel(j, axis);
    if (ea == 0)
      k0 += fin[j];
    else if (ea == -sign)
      km += fin[j];
  }

  const T s = T(double(sign));
  T ua = s * (T(1.0) - (k0 + T(2.0) * km) / rho_target);
  T rho = rho_target;
  if (abs(ua) > T(u_clamp)) {
    // Clamp the axial speed and fall back to prescribing it, recomputing the
    // density the face can actually sustain.
    ua = value_of(ua) > 0 ? T(u_clamp) : T(-u_clamp);
    rho = (k0 + T(2.0) * km) / (T(1.0) - s * ua);
  }

  T u[3] = {T(0), T(0), T(0)};
  u[axis] = ua;
  std::array<T, kMaxFlow> feq;
  flow_equilibrium(d, rho, u, feq.data());

  // Tangential momentum carried by the slots parallel to the face.
  T nb[3] = {T(0), T(0), T(0)};
  for (int j = 0; j < m; ++j) {
    if (evel(j, axis) != 0) continue;
    for (int b = 0; b < 3; ++b)
      if (b != axis && evel(j, b)) nb[b] += T(0.5 * evel(j, b)) * fin[j];
  }

  for (int j = 0; j < m; ++j) fout[j] = fin[j];
  for (int j = 0; j < m; ++j) {
    if (evel(j, axis) != sign) continue;
    const int o = d.opposite[j];
    T corr(0);
    for (int b = 0; b < 3; ++b)
      if (b != axis && evel(j, b)) corr += T(double(evel(j, b))) * nb[b];
    fout[j] = fin[o] + (feq[j] - feq[o]) - corr;
  }
  if (u_axis) *u_axis = ua;
}

namespace {

template <class T>
void interior_collide(const System& sys, std::span<const T> f, std::span<const T> g, T w,
                      std::span<T> of, std::span<T> og) {
  const LatticeDescriptor& fl = *sys.flow;
  const LatticeDescriptor& th = *sys.thermal;

  T rho, u[3];
  flow_moments(fl, f, rho, u);

  // Darcy-type velocity switch: the post-collision equilibrium advects with
  // G(w) u, which is also what the temperature field sees.
  const T G = switching_eval(sys.model.switching, w);
  T upost[3] = {G * u[0], G * u[1], G * u[2]};

  std::array<T, kMaxFlow> feq_pre, feq_post;
  flow_equilibrium(fl, rho, u, feq_pre.data());
  flow_equilibrium(fl, rho, upost, feq_post.data());

  std::array<T, kMaxFlow> df;
  for (int j = 0; j < sys.mf; ++j) df[j] = f[j] - feq_pre[j];
  const Matrix& A = sys.tables.A;
  for (int i = 0; i < sys.mf; ++i) {
    T acc = feq_post[i];
    for (int j = 0; j < sys.mf; ++j) acc += T(A.at(i, j)) * df[j];
    of[i] = acc;
  }

  // Thermal BGK at the blended diffusivity, advected by the switched velocity.
  const T temp = thermal_moment(g);
  const T beta = diffusivity(w, sys.model.beta_fluid, sys.model.beta_solid);
  const T om = T(1.0) / (T(0.5) + T(3.0) * beta);
  std::array<T, kMaxTherm> geq;
  thermal_equilibrium(th, temp, upost, geq.data());
  for (int j = 0; j < sys.mt; ++j) og[j] = g[j] + om * (geq[j] - g[j]);
}

}  // namespace

template <class T>
void collide_node(const System& sys, NodeTag tag, int axis, int sign, double bc_T,
                  std::span<const T> fin, T w, T rho_target, std::span<T> fout) {
  const auto f = fin.first(sys.mf);
  const auto g = fin.subspan(sys.mf);
  auto of = fout.first(sys.mf);
  auto og = fout.subspan(sys.mf);
  const LatticeDescriptor& fl = *sys.flow;
  const LatticeDescriptor& th = *sys.thermal;

  switch (tag) {
    case NodeTag::Interior:
      interior_collide(sys, f, g, w, of, og);
      return;

    case NodeTag::Wall:
      bounce_back(fl, f, of);
      bounce_back(th, g, og);
      return;

    case NodeTag::Heater: {
      // No-slip plate held at the prescribed temperature: flow bounces back,
      // the thermal populations leave at the rest equilibrium.
      bounce_back(fl, f, of);
      const T u0[3] = {T(0), T(0), T(0)};
      thermal_equilibrium(th, T(bc_T), u0, og.data());
      return;
    }

    case NodeTag::PressureInlet: {
      // Wet node: reconstruct the unknown slots at the target density, impose
      // the inlet temperature, then relax like a fluid node. The collision
      // conserves the imposed moments, and it keeps the boundary column from
      // carrying neutral (never-relaxed) slots.
      std::array<T, kMaxFlow> frec;
      std::array<T, kMaxTherm> grec;
      T ua;
      zou_he_pressure(fl, f, rho_target, axis, sign, sys.model.u_clamp,
                      std::span<T>(frec.data(), sys.mf), &ua);
      T u[3] = {T(0), T(0), T(0)};
      u[axis] = ua;
      thermal_equilibrium(th, T(bc_T), u, grec.data());
      interior_collide(sys, std::span<const T>(frec.data(), sys.mf),
                       std::span<const T>(grec.data(), sys.mt), w, of, og);
      return;
    }

    case NodeTag::PressureOutlet: {
      std::array<T, kMaxFlow> frec;
      std::array<T, kMaxTherm> grec;
      T ua;
      zou_he_pressure(fl, f, T(sys.model.rho_outlet()), axis, sign, sys.model.u_clamp,
                      std::span<T>(frec.data(), sys.mf), &ua);
      T u[3] = {T(0), T(0), T(0)};
      u[axis] = ua;
      // Outflow: rebuild the local temperature from the slots that streamed in
      // from the interior, set the node to its equilibrium (zero-gradient),
      // then relax like a fluid node (same wet-node treatment as the inlet).
      T tnum(0), tden(0);
      auto evel = [&](int j, int a) {
        return a == 0 ? th.velocities[j].x : (a == 1 ? th.velocities[j].y : th.velocities[j].z);
      };
      for (int j = 0; j < sys.mt; ++j) {
        if (evel(j, axis) == sign) continue;
        const Vec3i& e = th.velocities[j];
        const T eu = T(double(e.x)) * u[0] + T(double(e.y)) * u[1] + T(double(e.z)) * u[2];
        tnum += g[j];
        tden += T(th.weights[j]) * (T(1.0) + T(3.0) * eu);
      }
      thermal_equilibrium(th, tnum / tden, u, grec.data());
      interior_collide(sys, std::span<const T>(frec.data(), sys.mf),
                       std::span<const T>(grec.data(), sys.mt), w, of, og);
      return;
    }
  }
}

template <class R>
void initialize_state(const System& sys, StateField<R>& f) {
  for (int j = 0; j < sys.mf; ++j) {
    auto p = f.plane(j);
    std::fill(p.begin(), p.end(), R(sys.flow->weights[j]));
  }
  for (int j = 0; j < sys.mt; ++j) {
    auto p = f.plane(sys.mf + j);
    std::fill(p.begin(), p.end(), R(0));
  }
}

template <class R>
void primal_step(const System& sys, StateField<R>& f) {
  const LatticeShape& s = sys.shape;
  const int nx = s.nx, ny = s.ny, nz = s.nz;
  const int m = sys.m;

  std::array<const R*, kMaxM> src;
  std::array<R*, kMaxM> dst;
  std::array<long, kMaxM> off;  // wrap-free scatter offsets for interior nodes
  for (int p = 0; p < m; ++p) {
    src[p] = f.plane(p).data();
    dst[p] = f.scratch_plane(p).data();
    const Vec3i& e = sys.vel[p];
    off[p] = e.x + long(nx) * (e.y + long(ny) * e.z);
  }

  const R rho_in = R(sys.model.rho_inlet());
  std::array<R, kMaxM> fin, fout;

  long at = -1;
  try {
    for (int z = 0; z < nz; ++z) {
      const bool zin = (nz == 1) || (z > 0 && z < nz - 1);
      for (int y = 0; y < ny; ++y) {
        const bool yin = y > 0 && y < ny - 1;
        long idx = flat_index(s, 0, y, z);
        for (int x = 0; x < nx; ++x, ++idx) {
          at = idx;
          for (int p = 0; p < m; ++p) fin[p] = src[p][idx];
          collide_node<R>(sys, sys.tags.tag[idx], sys.tags.bc_axis[idx],
                          sys.tags.bc_sign[idx], sys.tags.bc_T[idx],
                          {fin.data(), size_t(m)}, R(sys.design.w[idx]), rho_in,
                          {fout.data(), size_t(m)});
          if (zin && yin && x > 0 && x < nx - 1) {
            for (int p = 0; p < m; ++p) dst[p][idx + off[p]] = fout[p];
          } else {
            for (int p = 0; p < m; ++p) {
              const Vec3i& e = sys.vel[p];
              const int xt = (x + e.x + nx) % nx;
              const int yt = (y + e.y + ny) % ny;
              const int zt = (z + e.z + nz) % nz;
              dst[p][flat_index(s, xt, yt, zt)] = fout[p];
            }
          }
        }
      }
    }
  } catch (const NumericError& err) {
    const int z = int(at / (long(nx) * ny));
    const int y = int((at / nx) % ny);
    const int x = int(at % nx);
    throw NumericError(std::string(err.what()) + " at node (" + std::to_string(x) + "," +
                       std::to_string(y) + "," + std::to_string(z) + ")");
  }
  f.flip();
}

template <class R>
double step_residual(const StateField<R>& f) {
  const auto cur = f.raw(f.buffer_id());
  const auto old = f.raw(1 - f.buffer_id());
  double r = 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const double d = std::abs(double(cur[i]) - double(old[i]));
    if (!(d <= r)) r = d;  // picks up NaN as well as larger values
  }
  return r;
}

template <class R>
SolveResult solve_fixed_point(const System& sys, StateField<R>& f,
                              const SolveOptions<R>& opt, RunRecord* rec) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  const long n = opt.fixed_iters >= 0 ? opt.fixed_iters : opt.max_iter;

  for (long it = 1; it <= n; ++it) {
    try {
      primal_step(sys, f);
    } catch (const NumericError& err) {
      throw NumericError(std::string(err.what()) + " (iteration " + std::to_string(it) + ")");
    }
    const double r = step_residual(f);
    if (!std::isfinite(r))
      throw NumericError("state diverged (non-finite residual) at iteration " +
                         std::to_string(it));
    res.iterations = it;
    res.residual = r;
    const bool done =
        (opt.fixed_iters >= 0) ? (it == n) : (r <= opt.tol || it == n);
    if (rec && (it % opt.record_interval == 0 || done)) {
      RunRow row;
      row.iteration = it;
      row.residual = r;
      if (opt.monitor) row.objective = opt.monitor(f);
      rec->rows.push_back(row);
    }
    if (opt.fixed_iters < 0 && r <= opt.tol) break;
  }
  res.converged = res.residual <= opt.tol;
  if (rec) {
    rec->converged = res.converged;
    rec->iterations = res.iterations;
    rec->final_residual = res.residual;
    rec->wall_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return res;
}

// --- explicit instantiations ---

#define LBOPT_INSTANTIATE_SCALAR(T)                                                        \
  template void collide_fmrt<T>(const Matrix&, const Matrix&, std::span<const double>,     \
                                std::span<const T>, std::span<const T>,                    \
                                std::span<const T>, std::span<T>);                         \
  template void zou_he_pressure<T>(const LatticeDescriptor&, std::span<const T>, T, int,   \
                                   int, double, std::span<T>, T*);                         \
  template void collide_node<T>(const System&, NodeTag, int, int, double,                  \
                                std::span<const T>, T, T, std::span<T>);

LBOPT_INSTANTIATE_SCALAR(float)
LBOPT_INSTANTIATE_SCALAR(double)
LBOPT_INSTANTIATE_SCALAR(Dual<float>)
LBOPT_INSTANTIATE_SCALAR(Dual<double>)
#undef LBOPT_INSTANTIATE_SCALAR

#define LBOPT_INSTANTIATE_REAL(R)                                                       \
  template void initialize_state<R>(const System&, StateField<R>&);                     \
  template void primal_step<R>(const System&, StateField<R>&);                          \
  template double step_residual<R>(const StateField<R>&);                               \
  template SolveResult solve_fixed_point<R>(const System&, StateField<R>&,              \
                                            const SolveOptions<R>&, RunRecord*);

LBOPT_INSTANTIATE_REAL(float)
LBOPT_INSTANTIATE_REAL(double)
#undef LBOPT_INSTANTIATE_REAL

}  // namespace lbopt
