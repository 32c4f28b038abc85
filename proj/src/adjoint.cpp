#include "lbopt/adjoint.hpp"

#include <array>
#include <chrono>
#include <cmath>

#include "lbopt/reduce.hpp"

namespace lbopt {

namespace {

// Gather one node's coupled populations from the current buffer.
template <class R>
inline void gather(const StateField<R>& f, long idx, int m, R* out) {
  for (int p = 0; p < m; ++p) out[p] = f.plane(p)[idx];
}

// One dual-number evaluation of the node kernel with slot `seed` seeded.
// Returns the derivative part of every output (one Jacobian column).
template <class R>
void jacobian_column(const System& sys, NodeTag tag, int axis, int sign, double bc_T,
                     std::span<const R> fin, R w, int seed, std::array<Dual<R>, kMaxM>& col) {
  std::array<Dual<R>, kMaxM> din;
  for (int p = 0; p < sys.m; ++p) din[p] = {fin[p], R(p == seed ? 1 : 0)};
  collide_node<Dual<R>>(sys, tag, axis, sign, bc_T, {din.data(), size_t(sys.m)},
                        Dual<R>(w), Dual<R>(R(sys.model.rho_inlet())),
                        {col.data(), size_t(sys.m)});
}

// v_out = J^T v_in with J obtained column-by-column from dual sweeps.
template <class R>
void vjp_dual(const System& sys, NodeTag tag, int axis, int sign, double bc_T,
              std::span<const R> fin, R w, std::span<const R> v_in, std::span<R> v_out) {
  std::array<Dual<R>, kMaxM> col;
  for (int k = 0; k < sys.m; ++k) {
    jacobian_column(sys, tag, axis, sign, bc_T, fin, w, k, col);
    R acc(0);
    for (int j = 0; j < sys.m; ++j) acc += v_in[j] * col[j].d;
    v_out[k] = acc;
  }
}

// Hand-derived transpose of the interior collision. The Jacobian splits into
// the constant relaxation matrix A plus rank-structured pieces from the
// moments, so J^T v costs about the same as the primal kernel:
//   vf' = A^T vf + s0 + sum_a c_a (e_ka - u_a) / rho
//   vg' = (1 - om) vg + om * sigma
// with the scalars below accumulated from the base state.
template <class R>
void interior_vjp(const System& sys, std::span<const R> f, std::span<const R> g, R w,
                  std::span<const R> vf, std::span<const R> vg, std::span<R> outf,
                  std::span<R> outg) {
  const LatticeDescriptor& fl = *sys.flow;
  const LatticeDescriptor& th = *sys.thermal;
  const int mf = sys.mf, mt = sys.mt;

  R rho, u[3];
  flow_moments(fl, f, rho, u);
  const R G = switching_eval(sys.model.switching, w);
  const R upost[3] = {G * u[0], G * u[1], G * u[2]};

  std::array<R, kMaxFlow> feq_pre, feq_post, r;
  flow_equilibrium(fl, rho, u, feq_pre.data());
  flow_equilibrium(fl, rho, upost, feq_post.data());

  const Matrix& At = sys.tables.At;
  for (int k = 0; k < mf; ++k) {
    R acc(0);
    for (int j = 0; j < mf; ++j) acc += R(At.at(k, j)) * vf[j];
    r[k] = acc;
  }

  // d feq / d rho contracts to feq/rho; d feq / d u_a below.
  R Pr(0), Rr(0), Pu[3] = {R(0), R(0), R(0)}, Ru[3] = {R(0), R(0), R(0)};
  for (int j = 0; j < mf; ++j) {
    Pr += vf[j] * feq_post[j];
    Rr += r[j] * feq_pre[j];
    const Vec3i& e = fl.velocities[j];
    const R ex = R(double(e.x)), ey = R(double(e.y)), ez = R(double(e.z));
    const R wjrho = R(fl.weights[j]) * rho;
    const R eup = ex * upost[0] + ey * upost[1] + ez * upost[2];
    const R eu = ex * u[0] + ey * u[1] + ez * u[2];
    const R cp = vf[j] * wjrho, cr = r[j] * wjrho;
    Pu[0] += cp * (R(3) * ex + R(9) * eup * ex - R(3) * upost[0]);
    Pu[1] += cp * (R(3) * ey + R(9) * eup * ey - R(3) * upost[1]);
    Pu[2] += cp * (R(3) * ez + R(9) * eup * ez - R(3) * upost[2]);
    Ru[0] += cr * (R(3) * ex + R(9) * eu * ex - R(3) * u[0]);
    Ru[1] += cr * (R(3) * ey + R(9) * eu * ey - R(3) * u[1]);
    Ru[2] += cr * (R(3) * ez + R(9) * eu * ez - R(3) * u[2]);
  }
  Pr /= rho;
  Rr /= rho;

  const R temp = thermal_moment(g);
  const R beta = diffusivity(w, sys.model.beta_fluid, sys.model.beta_solid);
  const R om = R(1) / (R(0.5) + R(3) * beta);
  R sigma(0), S[3] = {R(0), R(0), R(0)};
  for (int j = 0; j < mt; ++j) {
    const Vec3i& e = th.velocities[j];
    const R tw = R(th.weights[j]);
    const R eup = R(double(e.x)) * upost[0] + R(double(e.y)) * upost[1] +
                  R(double(e.z)) * upost[2];
    sigma += vg[j] * tw * (R(1) + R(3) * eup);
    const R c = R(3) * om * temp * vg[j] * tw;
    S[0] += c * R(double(e.x));
    S[1] += c * R(double(e.y));
    S[2] += c * R(double(e.z));
  }

  // Chain rule through u_post = G u and u = q / rho.
  R c[3];
  for (int a = 0; a < 3; ++a) c[a] = G * (Pu[a] + S[a]) - Ru[a];
  const R s0 = Pr - Rr - (c[0] * u[0] + c[1] * u[1] + c[2] * u[2]) / rho;
  for (int k = 0; k < mf; ++k) {
    const Vec3i& e = fl.velocities[k];
    outf[k] = r[k] + s0 +
              (c[0] * R(double(e.x)) + c[1] * R(double(e.y)) + c[2] * R(double(e.z))) / rho;
  }
  for (int k = 0; k < mt; ++k) outg[k] = (R(1) - om) * vg[k] + om * sigma;
}

}  // namespace

template <class R>
void node_jacobian(const System& sys, NodeTag tag, int axis, int sign, double bc_T,
                   std::span<const R> fin, R w, Matrix& jac) {
  jac = Matrix(sys.m);
  std::array<Dual<R>, kMaxM> col;
  for (int k = 0; k < sys.m; ++k) {
    jacobian_column(sys, tag, axis, sign, bc_T, fin, w, k, col);
    for (int j = 0; j < sys.m; ++j) jac.at(j, k) = double(col[j].d);
  }
}

template <class R>
JacobianCache build_jacobian_cache(const System& sys, const StateField<R>& f_hat) {
  JacobianCache cache;
  cache.m = sys.m;
  cache.jt.resize(static_cast<std::size_t>(f_hat.nodes()) * sys.m * sys.m);
  std::array<R, kMaxM> fin;
  std::array<Dual<R>, kMaxM> col;
  for (long idx = 0; idx < f_hat.nodes(); ++idx) {
    gather(f_hat, idx, sys.m, fin.data());
    double* jt = cache.jt.data() + static_cast<std::size_t>(idx) * sys.m * sys.m;
    for (int k = 0; k < sys.m; ++k) {
      jacobian_column<R>(sys, sys.tags.tag[idx], sys.tags.bc_axis[idx],
                         sys.tags.bc_sign[idx], sys.tags.bc_T[idx],
                         {fin.data(), size_t(sys.m)}, R(sys.design.w[idx]), k, col);
      for (int j = 0; j < sys.m; ++j) jt[static_cast<std::size_t>(k) * sys.m + j] = double(col[j].d);
    }
  }
  return cache;
}

template <class R>
void adjoint_collide_node(const System& sys, const ObjectiveSpec& obj, long idx,
                          std::span<const R> fin, std::span<const R> v_in,
                          std::span<R> v_out, AdjointKernel kernel,
                          const JacobianCache* cache) {
  const NodeTag tag = sys.tags.tag[idx];
  const int axis = sys.tags.bc_axis[idx], sign = sys.tags.bc_sign[idx];
  const double bc_T = sys.tags.bc_T[idx];
  const R w = R(sys.design.w[idx]);

  if (cache) {
    const double* jt = cache->node(idx);
    for (int k = 0; k < sys.m; ++k) {
      R acc(0);
      const double* row = jt + static_cast<std::size_t>(k) * sys.m;
      for (int j = 0; j < sys.m; ++j) acc += R(row[j]) * v_in[j];
      v_out[k] = acc;
    }
  } else if (kernel == AdjointKernel::DualSweep) {
    vjp_dual(sys, tag, axis, sign, bc_T, fin, w, v_in, v_out);
  } else {
    switch (tag) {
      case NodeTag::Interior:
        interior_vjp(sys, fin.first(sys.mf), fin.subspan(sys.mf), w, v_in.first(sys.mf),
                     v_in.subspan(sys.mf), v_out.first(sys.mf), v_out.subspan(sys.mf));
        break;
      case NodeTag::Wall:
        // Transpose of a permutation is the inverse permutation; bounce-back
        // is an involution, so it is its own transpose.
        for (int k = 0; k < sys.mf; ++k) v_out[k] = v_in[sys.flow->opposite[k]];
        for (int k = 0; k < sys.mt; ++k)
          v_out[sys.mf + k] = v_in[sys.mf + sys.thermal->opposite[k]];
        break;
      case NodeTag::Heater:
        for (int k = 0; k < sys.mf; ++k) v_out[k] = v_in[sys.flow->opposite[k]];
        for (int k = 0; k < sys.mt; ++k) v_out[sys.mf + k] = R(0);  // output is constant
        break;
      default:
        vjp_dual(sys, tag, axis, sign, bc_T, fin, w, v_in, v_out);
        break;
    }
  }

  if (obj.on_support.size() && obj.on_support[idx]) {
    std::array<R, kMaxM> b;
    node_partial<R>(obj, sys, fin, {b.data(), size_t(sys.m)});
    for (int k = 0; k < sys.m; ++k) v_out[k] += b[k];
  }
}

template <class R>
void adjoint_step(const System& sys, const ObjectiveSpec& obj, const StateField<R>& base,
                  StateField<R>& v, AdjointKernel kernel, const JacobianCache* cache) {
  const LatticeShape& s = sys.shape;
  const int nx = s.nx, ny = s.ny, nz = s.nz;
  const int m = sys.m;

  std::array<const R*, kMaxM> vsrc, bsrc;
  std::array<R*, kMaxM> dst;
  std::array<long, kMaxM> off;
  for (int p = 0; p < m; ++p) {
    vsrc[p] = v.plane(p).data();
    bsrc[p] = base.plane(p).data();
    dst[p] = v.scratch_plane(p).data();
    const Vec3i& e = sys.vel[p];
    off[p] = e.x + long(nx) * (e.y + long(ny) * e.z);
  }

  std::array<R, kMaxM> fin, vin, vout;
  for (int z = 0; z < nz; ++z) {
    const bool zin = (nz == 1) || (z > 0 && z < nz - 1);
    for (int y = 0; y < ny; ++y) {
      const bool yin = y > 0 && y < ny - 1;
      long idx = flat_index(s, 0, y, z);
      for (int x = 0; x < nx; ++x, ++idx) {
        for (int p = 0; p < m; ++p) {
          fin[p] = bsrc[p][idx];
          vin[p] = vsrc[p][idx];
        }
        adjoint_collide_node<R>(sys, obj, idx, {fin.data(), size_t(m)},
                                {vin.data(), size_t(m)}, {vout.data(), size_t(m)}, kernel,
                                cache);
        // Adjoint information travels against the lattice links.
        if (zin && yin && x > 0 && x < nx - 1) {
          for (int p = 0; p < m; ++p) dst[p][idx - off[p]] = vout[p];
        } else {
          for (int p = 0; p < m; ++p) {
            const Vec3i& e = sys.vel[p];
            const int xt = (x - e.x + nx) % nx;
            const int yt = (y - e.y + ny) % ny;
            const int zt = (z - e.z + nz) % nz;
            dst[p][flat_index(s, xt, yt, zt)] = vout[p];
          }
        }
      }
    }
  }
  v.flip();
}

template <class R>
SolveResult solve_adjoint(const System& sys, const ObjectiveSpec& obj,
                          const StateField<R>& base, StateField<R>& v,
                          const AdjointSolveOptions<R>& opt, RunRecord* rec) {
  const auto t0 = std::chrono::steady_clock::now();
  v.fill(R(0));

  JacobianCache cache;
  const JacobianCache* cp = nullptr;
  if (opt.use_cache) {
    cache = build_jacobian_cache(sys, base);
    cp = &cache;
  }

  SolveResult res;
  const long n = opt.fixed_iters >= 0 ? opt.fixed_iters : opt.max_iter;
  for (long it = 1; it <= n; ++it) {
    adjoint_step(sys, obj, base, v, opt.kernel, cp);
    const double r = step_residual(v);
    if (!std::isfinite(r))
      throw NumericError("adjoint diverged (non-finite residual) at iteration " +
                         std::to_string(it));
    res.iterations = it;
    res.residual = r;
    if (rec && (it % opt.record_interval == 0 || it == n || r <= opt.tol)) {
      RunRow row;
      row.iteration = it;
      row.residual = r;
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

double GradientVector::max_abs() const {
  double m = 0.0;
  for (double g : design) m = std::max(m, std::abs(g));
  for (const auto& [name, g] : globals) m = std::max(m, std::abs(g));
  return m;
}

namespace {

// Analytic v . dW/dw for an interior node; shares the scalar accumulations
// with interior_vjp. dW/dw flows through u_post = G(w) u (both equilibria)
// and through the thermal relaxation rate om(beta(w)).
template <class R>
double design_gradient_node(const System& sys, std::span<const R> f, std::span<const R> g,
                            R w, std::span<const R> vf, std::span<const R> vg) {
  const LatticeDescriptor& fl = *sys.flow;
  const LatticeDescriptor& th = *sys.thermal;

  R rho, u[3];
  flow_moments(fl, f, rho, u);
  const R G = switching_eval(sys.model.switching, w);
  const R upost[3] = {G * u[0], G * u[1], G * u[2]};
  const R dG = R(switching_derivative(sys.model.switching, double(w)));

  std::array<R, kMaxFlow> feq_post;
  flow_equilibrium(fl, rho, upost, feq_post.data());

  R Pu[3] = {R(0), R(0), R(0)};
  for (int j = 0; j < sys.mf; ++j) {
    const Vec3i& e = fl.velocities[j];
    const R ex = R(double(e.x)), ey = R(double(e.y)), ez = R(double(e.z));
    const R eup = ex * upost[0] + ey * upost[1] + ez * upost[2];
    const R cp = vf[j] * R(fl.weights[j]) * rho;
    Pu[0] += cp * (R(3) * ex + R(9) * eup * ex - R(3) * upost[0]);
    Pu[1] += cp * (R(3) * ey + R(9) * eup * ey - R(3) * upost[1]);
    Pu[2] += cp * (R(3) * ez + R(9) * eup * ez - R(3) * upost[2]);
  }

  const R temp = thermal_moment(g);
  const R beta = diffusivity(w, sys.model.beta_fluid, sys.model.beta_solid);
  const R om = R(1) / (R(0.5) + R(3) * beta);
  const R dom = R(-3) * (R(sys.model.beta_fluid) - R(sys.model.beta_solid)) * om * om;

  std::array<R, kMaxTherm> geq;
  thermal_equilibrium(th, temp, upost, geq.data());

  R S[3] = {R(0), R(0), R(0)}, relax_term(0);
  for (int j = 0; j < sys.mt; ++j) {
    const Vec3i& e = th.velocities[j];
    const R c = R(3) * om * temp * vg[j] * R(th.weights[j]);
    S[0] += c * R(double(e.x));
    S[1] += c * R(double(e.y));
    S[2] += c * R(double(e.z));
    relax_term += vg[j] * (geq[j] - g[j]);
  }

  R acc(0);
  for (int a = 0; a < 3; ++a) acc += u[a] * (Pu[a] + S[a]);
  return double(dG * acc + dom * relax_term);
}

// v . dW/dw via a dual seed on w (reference path).
template <class R>
double design_gradient_node_dual(const System& sys, long idx, std::span<const R> fin,
                                 std::span<const R> vin) {
  std::array<Dual<R>, kMaxM> din, dout;
  for (int p = 0; p < sys.m; ++p) din[p] = Dual<R>(fin[p]);
  collide_node<Dual<R>>(sys, sys.tags.tag[idx], sys.tags.bc_axis[idx],
                        sys.tags.bc_sign[idx], sys.tags.bc_T[idx],
                        {din.data(), size_t(sys.m)}, Dual<R>(R(sys.design.w[idx]), R(1)),
                        Dual<R>(R(sys.model.rho_inlet())), {dout.data(), size_t(sys.m)});
  R acc(0);
  for (int j = 0; j < sys.m; ++j) acc += vin[j] * dout[j].d;
  return double(acc);
}

}  // namespace

template <class R>
GradientVector param_gradient(const System& sys, const StateField<R>& v,
                              const StateField<R>& base, AdjointKernel kernel) {
  GradientVector out;
  out.design.resize(sys.design.nodes.size());

  std::array<R, kMaxM> fin, vin;
  for (std::size_t i = 0; i < sys.design.nodes.size(); ++i) {
    const long idx = sys.design.nodes[i];
    gather(base, idx, sys.m, fin.data());
    gather(v, idx, sys.m, vin.data());
    if (kernel == AdjointKernel::Analytic && sys.tags.tag[idx] == NodeTag::Interior) {
      out.design[i] = design_gradient_node<R>(
          sys, {fin.data(), size_t(sys.mf)}, {fin.data() + sys.mf, size_t(sys.mt)},
          R(sys.design.w[idx]), {vin.data(), size_t(sys.mf)},
          {vin.data() + sys.mf, size_t(sys.mt)});
    } else {
      out.design[i] = design_gradient_node_dual<R>(sys, idx, {fin.data(), size_t(sys.m)},
                                                   {vin.data(), size_t(sys.m)});
    }
  }

  // Global: inlet overpressure. rho_target = 1 + 3 dp, so seed rho with 3.
  std::vector<long> inlets;
  for (long idx = 0; idx < sys.shape.nodes(); ++idx)
    if (sys.tags.tag[idx] == NodeTag::PressureInlet) inlets.push_back(idx);
  std::array<Dual<R>, kMaxM> din, dout;
  const double gdp = pairwise_sum_fn(0, inlets.size(), [&](std::size_t i) {
    const long idx = inlets[i];
    gather(base, idx, sys.m, fin.data());
    gather(v, idx, sys.m, vin.data());
    for (int p = 0; p < sys.m; ++p) din[p] = Dual<R>(fin[p]);
    collide_node<Dual<R>>(sys, sys.tags.tag[idx], sys.tags.bc_axis[idx],
                          sys.tags.bc_sign[idx], sys.tags.bc_T[idx],
                          {din.data(), size_t(sys.m)}, Dual<R>(R(sys.design.w[idx])),
                          Dual<R>(R(sys.model.rho_inlet()), R(3)),
                          {dout.data(), size_t(sys.m)});
    R acc(0);
    for (int j = 0; j < sys.m; ++j) acc += vin[j] * dout[j].d;
    return double(acc);
  });
  out.globals.emplace_back("inlet_dp", gdp);
  return out;
}

template <class R>
TangentResult<R> tangent_solve(const System& sys, const ObjectiveSpec& obj,
                               const StateField<R>& base, const Direction& dir,
                               double tol, long max_iter) {
  const LatticeShape& s = sys.shape;
  const int m = sys.m;

  // Full-grid design perturbation.
  std::vector<double> dw(s.nodes(), 0.0);
  for (std::size_t i = 0; i < dir.dw.size() && i < sys.design.nodes.size(); ++i)
    dw[sys.design.nodes[i]] = dir.dw[i];

  StateField<R> df(s, m);
  TangentResult<R> res;

  std::array<Dual<R>, kMaxM> din, dout;
  for (long it = 1; it <= max_iter; ++it) {
    std::array<const R*, kMaxM> bsrc, dsrc;
    std::array<R*, kMaxM> dst;
    for (int p = 0; p < m; ++p) {
      bsrc[p] = base.plane(p).data();
      dsrc[p] = df.plane(p).data();
      dst[p] = df.scratch_plane(p).data();
    }
    const int nx = s.nx, ny = s.ny, nz = s.nz;
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y) {
        long idx = flat_index(s, 0, y, z);
        for (int x = 0; x < nx; ++x, ++idx) {
          for (int p = 0; p < m; ++p) din[p] = {bsrc[p][idx], dsrc[p][idx]};
          collide_node<Dual<R>>(sys, sys.tags.tag[idx], sys.tags.bc_axis[idx],
                                sys.tags.bc_sign[idx], sys.tags.bc_T[idx],
                                {din.data(), size_t(m)},
                                Dual<R>(R(sys.design.w[idx]), R(dw[idx])),
                                Dual<R>(R(sys.model.rho_inlet()), R(3.0 * dir.d_inlet_dp)),
                                {dout.data(), size_t(m)});
          for (int p = 0; p < m; ++p) {
            const Vec3i& e = sys.vel[p];
            const int xt = (x + e.x + nx) % nx;
            const int yt = (y + e.y + ny) % ny;
            const int zt = (z + e.z + nz) % nz;
            dst[p][flat_index(s, xt, yt, zt)] = dout[p].d;
          }
        }
      }
    df.flip();
    const double r = step_residual(df);
    if (!std::isfinite(r))
      throw NumericError("tangent diverged at iteration " + std::to_string(it));
    res.solve.iterations = it;
    res.solve.residual = r;
    if (r <= tol) break;
  }
  res.solve.converged = res.solve.residual <= tol;

  // dF = sum over support of dF^x/df . df
  std::array<R, kMaxM> fin, dfin, b;
  res.dF = pairwise_sum_fn(0, obj.support.size(), [&](std::size_t i) {
    const long idx = obj.support[i];
    gather(base, idx, m, fin.data());
    gather(df, idx, m, dfin.data());
    node_partial<R>(obj, sys, {fin.data(), size_t(m)}, {b.data(), size_t(m)});
    double acc = 0.0;
    for (int p = 0; p < m; ++p) acc += double(b[p]) * double(dfin[p]);
    return acc;
  });
  return res;
}

template <class R>
double fd_gradient(const System& sys, const ObjectiveSpec& obj, const FdComponent& comp,
                   double h, double tol, long max_iter, long fixed_iters) {
  auto run = [&](double delta) {
    System pert = sys;
    if (comp.is_global) {
      if (comp.global != "inlet_dp") throw ConfigError("unknown global parameter: " + comp.global);
      pert.model.inlet_dp += delta;
    } else {
      const long idx = pert.design.nodes.at(comp.design_ordinal);
      pert.design.w[idx] += delta;  // deliberate raw write: FD probes must not clamp
    }
    StateField<R> f(pert.shape, pert.m);
    initialize_state(pert, f);
    SolveOptions<R> opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.fixed_iters = fixed_iters;
    opt.record_interval = 1L << 30;
    solve_fixed_point(pert, f, opt);
    return evaluate_raw(obj, pert, f);
  };
  const double fp = run(+h);
  const double fm = run(-h);
  return (fp - fm) / (2.0 * h);
}

// --- explicit instantiations ---

#define LBOPT_INSTANTIATE_ADJ(R)                                                           \
  template void node_jacobian<R>(const System&, NodeTag, int, int, double,                 \
                                 std::span<const R>, R, Matrix&);                          \
  template JacobianCache build_jacobian_cache<R>(const System&, const StateField<R>&);     \
  template void adjoint_collide_node<R>(const System&, const ObjectiveSpec&, long,         \
                                        std::span<const R>, std::span<const R>,            \
                                        std::span<R>, AdjointKernel, const JacobianCache*);\
  template void adjoint_step<R>(const System&, const ObjectiveSpec&, const StateField<R>&, \
                                StateField<R>&, AdjointKernel, const JacobianCache*);      \
  template SolveResult solve_adjoint<R>(const System&, const ObjectiveSpec&,               \
                                        const StateField<R>&, StateField<R>&,              \
                                        const AdjointSolveOptions<R>&, RunRecord*);        \
  template GradientVector param_gradient<R>(const System&, const StateField<R>&,           \
                                            const StateField<R>&, AdjointKernel);          \
  template TangentResult<R> tangent_solve<R>(const System&, const ObjectiveSpec&,          \
                                             const StateField<R>&, const Direction&,       \
                                             double, long);                                \
  template double fd_gradient<R>(const System&, const ObjectiveSpec&, const FdComponent&,  \
                                 double, double, long, long);

LBOPT_INSTANTIATE_ADJ(float)
LBOPT_INSTANTIATE_ADJ(double)
#undef LBOPT_INSTANTIATE_ADJ

}  // namespace lbopt
