#include "lbopt/partition.hpp"

#include <array>
#include <chrono>
#include <cmath>

namespace lbopt {

std::vector<SubdomainSpec> decompose(const LatticeShape& s, int n_parts) {
  if (n_parts < 1) throw ConfigError("worker count must be at least 1");
  if (n_parts > s.nx) throw ConfigError("more workers than lattice columns");
  std::vector<SubdomainSpec> out(n_parts);
  const int base = s.nx / n_parts, rem = s.nx % n_parts;
  int x = 0;
  for (int i = 0; i < n_parts; ++i) {
    const int span = base + (i < rem ? 1 : 0);
    out[i] = {i, x, x + span, (i - 1 + n_parts) % n_parts, (i + 1) % n_parts};
    x += span;
  }
  return out;
}

ExchangePlan ExchangePlan::build(const System& sys) {
  ExchangePlan p;
  for (int j = 0; j < sys.m; ++j) {
    if (sys.vel[j].x == 1) p.right_slots.push_back(j);
    if (sys.vel[j].x == -1) p.left_slots.push_back(j);
  }
  return p;
}

template <class T>
T Channel<T>::recv(double timeout_s) {
  std::unique_lock<std::mutex> lock(mu_);
  if (!cv_.wait_for(lock, std::chrono::duration<double>(timeout_s),
                    [&] { return !q_.empty(); }))
    throw ProtocolError("halo exchange timed out");
  T msg = std::move(q_.front());
  q_.pop_front();
  return msg;
}

template <class R>
PartitionedRun<R>::PartitionedRun(const System& sys, const ObjectiveSpec& obj, int n_parts,
                                  AdjointKernel kernel)
    : sys_(sys),
      obj_(obj),
      kernel_(kernel),
      plan_(ExchangePlan::build(sys)),
      errors_(n_parts),
      start_(n_parts + 1),
      done_(n_parts + 1) {
  const auto specs = decompose(sys.shape, n_parts);
  slabs_.resize(n_parts);
  for (int i = 0; i < n_parts; ++i) {
    Slab& sl = slabs_[i];
    sl.spec = specs[i];
    sl.shape = {sl.spec.x1 - sl.spec.x0 + 2, sys.shape.ny, sys.shape.nz};
    sl.f = StateField<R>(sl.shape, sys.m);
    sl.v = StateField<R>(sl.shape, sys.m);
    to_right_.push_back(std::make_unique<Channel<HaloMsg<R>>>());
    to_left_.push_back(std::make_unique<Channel<HaloMsg<R>>>());
  }
  for (int i = 0; i < n_parts; ++i) threads_.emplace_back([this, i] { worker(i); });
}

template <class R>
PartitionedRun<R>::~PartitionedRun() {
  cmd_ = Cmd::Stop;
  start_.arrive_and_wait();
  for (auto& t : threads_) t.join();
}

template <class R>
void PartitionedRun<R>::worker(int i) {
  for (;;) {
    start_.arrive_and_wait();
    if (cmd_ == Cmd::Stop) return;
    try {
      do_step(slabs_[i], cmd_ == Cmd::StepAdjoint);
    } catch (...) {
      errors_[i] = std::current_exception();
      // Unblock the neighbours that may be waiting for our halo.
      HaloMsg<R> poison;
      poison.step = -1;
      to_right_[i]->send(poison);
      to_left_[i]->send(HaloMsg<R>{poison});
    }
    done_.arrive_and_wait();
  }
}

template <class R>
void PartitionedRun<R>::do_step(Slab& sl, bool adjoint) {
  const LatticeShape& gs = sys_.shape;
  const LatticeShape& ls = sl.shape;
  const int span = sl.spec.x1 - sl.spec.x0;
  const int ny = gs.ny, nz = gs.nz, m = sys_.m;
  const long step = adjoint ? adjoint_steps_ : primal_steps_;
  const int phase = adjoint ? 1 : 0;
  StateField<R>& fld = adjoint ? sl.v : sl.f;

  std::array<const R*, kMaxM> src, bsrc;
  std::array<R*, kMaxM> dst;
  for (int p = 0; p < m; ++p) {
    src[p] = fld.plane(p).data();
    bsrc[p] = sl.f.plane(p).data();
    dst[p] = fld.scratch_plane(p).data();
  }

  const R rho_in = R(sys_.model.rho_inlet());
  std::array<R, kMaxM> fin, vin, fout;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int lx = 1; lx <= span; ++lx) {
        const long lidx = flat_index(ls, lx, y, z);
        const long gidx = flat_index(gs, sl.spec.x0 + lx - 1, y, z);
        if (!adjoint) {
          for (int p = 0; p < m; ++p) fin[p] = src[p][lidx];
          collide_node<R>(sys_, sys_.tags.tag[gidx], sys_.tags.bc_axis[gidx],
                          sys_.tags.bc_sign[gidx], sys_.tags.bc_T[gidx],
                          {fin.data(), size_t(m)}, R(sys_.design.w[gidx]), rho_in,
                          {fout.data(), size_t(m)});
        } else {
          for (int p = 0; p < m; ++p) {
            fin[p] = bsrc[p][lidx];
            vin[p] = src[p][lidx];
          }
          adjoint_collide_node<R>(sys_, obj_, gidx, {fin.data(), size_t(m)},
                                  {vin.data(), size_t(m)}, {fout.data(), size_t(m)},
                                  kernel_);
        }
        for (int p = 0; p < m; ++p) {
          const Vec3i& e = sys_.vel[p];
          const int ex = adjoint ? -e.x : e.x;
          const int ey = adjoint ? -e.y : e.y;
          const int ez = adjoint ? -e.z : e.z;
          // x never wraps locally: spill lands in a ghost column.
          dst[p][flat_index(ls, lx + ex, (y + ey + ny) % ny, (z + ez + nz) % nz)] = fout[p];
        }
      }

  // Ship the ghost columns. In the primal the +x slots cross to the right;
  // the adjoint plan is the transpose (slot lists swapped).
  const std::vector<int>& rs = adjoint ? plan_.left_slots : plan_.right_slots;
  const std::vector<int>& lsl = adjoint ? plan_.right_slots : plan_.left_slots;

  HaloMsg<R> right{step, phase, {}}, left{step, phase, {}};
  right.data.reserve(rs.size() * ny * nz);
  left.data.reserve(lsl.size() * ny * nz);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y) {
      for (int s : rs) right.data.push_back(dst[s][flat_index(ls, span + 1, y, z)]);
      for (int s : lsl) left.data.push_back(dst[s][flat_index(ls, 0, y, z)]);
    }
  to_right_[sl.spec.id]->send(std::move(right));
  to_left_[sl.spec.id]->send(std::move(left));

  // Receive the matching spill from both neighbours and install it into the
  // owned boundary columns. Every slot is written exactly once per step.
  HaloMsg<R> from_left = to_right_[sl.spec.left]->recv();
  HaloMsg<R> from_right = to_left_[sl.spec.right]->recv();
  for (const HaloMsg<R>* msg : {&from_left, &from_right})
    if (msg->step != step || msg->phase != phase)
      throw ProtocolError("halo message out of lock step");

  std::size_t o = 0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int s : rs) dst[s][flat_index(ls, 1, y, z)] = from_left.data[o++];
  o = 0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int s : lsl) dst[s][flat_index(ls, span, y, z)] = from_right.data[o++];

  // Owned-node residual of this step, then publish the new state.
  double r = 0.0;
  for (int p = 0; p < m; ++p)
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int lx = 1; lx <= span; ++lx) {
          const long lidx = flat_index(ls, lx, y, z);
          const double d = std::abs(double(dst[p][lidx]) - double(src[p][lidx]));
          if (!(d <= r)) r = d;
        }
  sl.residual = r;
  fld.flip();
}

template <class R>
void PartitionedRun<R>::check_errors() {
  for (auto& e : errors_)
    if (e) {
      const std::exception_ptr err = e;
      for (auto& x : errors_) x = nullptr;
      std::rethrow_exception(err);
    }
}

template <class R>
void PartitionedRun<R>::step_primal() {
  cmd_ = Cmd::StepPrimal;
  start_.arrive_and_wait();
  done_.arrive_and_wait();
  ++primal_steps_;
  check_errors();
}

template <class R>
void PartitionedRun<R>::step_adjoint() {
  cmd_ = Cmd::StepAdjoint;
  start_.arrive_and_wait();
  done_.arrive_and_wait();
  ++adjoint_steps_;
  check_errors();
}

template <class R>
void PartitionedRun<R>::load_state(const StateField<R>& f) {
  for (Slab& sl : slabs_) {
    const int span = sl.spec.x1 - sl.spec.x0;
    for (int p = 0; p < sys_.m; ++p) {
      auto dst = sl.f.plane(p);
      auto src = f.plane(p);
      for (int z = 0; z < sys_.shape.nz; ++z)
        for (int y = 0; y < sys_.shape.ny; ++y)
          for (int lx = 1; lx <= span; ++lx)
            dst[flat_index(sl.shape, lx, y, z)] =
                src[flat_index(sys_.shape, sl.spec.x0 + lx - 1, y, z)];
    }
  }
}

template <class R>
void PartitionedRun<R>::reset_adjoint() {
  for (Slab& sl : slabs_) sl.v.fill(R(0));
}

template <class R>
void PartitionedRun<R>::gather_state(StateField<R>& out) const {
  for (const Slab& sl : slabs_) {
    const int span = sl.spec.x1 - sl.spec.x0;
    for (int p = 0; p < sys_.m; ++p) {
      auto dst = out.plane(p);
      auto src = sl.f.plane(p);
      for (int z = 0; z < sys_.shape.nz; ++z)
        for (int y = 0; y < sys_.shape.ny; ++y)
          for (int lx = 1; lx <= span; ++lx)
            dst[flat_index(sys_.shape, sl.spec.x0 + lx - 1, y, z)] =
                src[flat_index(sl.shape, lx, y, z)];
    }
  }
}

template <class R>
void PartitionedRun<R>::gather_adjoint(StateField<R>& out) const {
  for (const Slab& sl : slabs_) {
    const int span = sl.spec.x1 - sl.spec.x0;
    for (int p = 0; p < sys_.m; ++p) {
      auto dst = out.plane(p);
      auto src = sl.v.plane(p);
      for (int z = 0; z < sys_.shape.nz; ++z)
        for (int y = 0; y < sys_.shape.ny; ++y)
          for (int lx = 1; lx <= span; ++lx)
            dst[flat_index(sys_.shape, sl.spec.x0 + lx - 1, y, z)] =
                src[flat_index(sl.shape, lx, y, z)];
    }
  }
}

template <class R>
double PartitionedRun<R>::last_residual() const {
  double r = 0.0;
  for (const Slab& sl : slabs_)
    if (!(sl.residual <= r)) r = sl.residual;
  return r;
}

template <class R>
SolveResult partitioned_fixed_point(const System& sys, const ObjectiveSpec& obj,
                                    StateField<R>& f, int n_parts,
                                    const SolveOptions<R>& opt, RunRecord* rec) {
  PartitionedRun<R> run(sys, obj, n_parts);
  run.load_state(f);

  SolveResult res;
  const long n = opt.fixed_iters >= 0 ? opt.fixed_iters : opt.max_iter;
  for (long it = 1; it <= n; ++it) {
    run.step_primal();
    const double r = run.last_residual();
    if (!std::isfinite(r))
      throw NumericError("state diverged (non-finite residual) at iteration " +
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
  run.gather_state(f);
  if (rec) {
    rec->converged = res.converged;
    rec->iterations = res.iterations;
    rec->final_residual = res.residual;
  }
  return res;
}

template <class R>
PartitionCheckResult partition_check(const System& sys, const ObjectiveSpec& obj,
                                     int n_parts, long steps) {
  PartitionCheckResult res;
  res.steps = steps;

  StateField<R> mono(sys.shape, sys.m), gathered(sys.shape, sys.m);
  initialize_state(sys, mono);

  PartitionedRun<R> run(sys, obj, n_parts);
  run.load_state(mono);

  auto max_diff = [&](const StateField<R>& a, const StateField<R>& b) {
    const auto ra = a.raw(a.buffer_id());
    const auto rb = b.raw(b.buffer_id());
    double d = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const double x = std::abs(double(ra[i]) - double(rb[i]));
      if (!(x <= d)) d = x;
    }
    return d;
  };

  for (long it = 0; it < steps; ++it) {
    primal_step(sys, mono);
    run.step_primal();
    run.gather_state(gathered);
    const double d = max_diff(mono, gathered);
    if (!(d <= res.max_primal_diff)) res.max_primal_diff = d;
  }

  // Adjoint phase against the state both sides now hold.
  run.load_state(mono);
  run.reset_adjoint();
  StateField<R> v(sys.shape, sys.m), vg(sys.shape, sys.m);
  for (long it = 0; it < steps; ++it) {
    adjoint_step(sys, obj, mono, v, AdjointKernel::Analytic);
    run.step_adjoint();
    run.gather_adjoint(vg);
    const double d = max_diff(v, vg);
    if (!(d <= res.max_adjoint_diff)) res.max_adjoint_diff = d;
  }
  return res;
}

template <class R>
std::vector<ScalingRow> scaling_report(const System& sys, const ObjectiveSpec& obj,
                                       const std::vector<int>& workers, long steps) {
  StateField<R> f(sys.shape, sys.m);
  initialize_state(sys, f);

  std::vector<ScalingRow> rows;
  for (int w : workers) {
    PartitionedRun<R> run(sys, obj, w);
    run.load_state(f);
    ScalingRow row;
    row.workers = w;

    auto t0 = std::chrono::steady_clock::now();
    for (long i = 0; i < steps; ++i) run.step_primal();
    auto t1 = std::chrono::steady_clock::now();
    for (long i = 0; i < steps; ++i) run.step_adjoint();
    auto t2 = std::chrono::steady_clock::now();

    row.primal_steps_per_s = steps / std::chrono::duration<double>(t1 - t0).count();
    row.adjoint_steps_per_s = steps / std::chrono::duration<double>(t2 - t1).count();
    rows.push_back(row);
  }
  return rows;
}

template class PartitionedRun<float>;
template class PartitionedRun<double>;

#define LBOPT_INSTANTIATE_PART(R)                                                          \
  template SolveResult partitioned_fixed_point<R>(const System&, const ObjectiveSpec&,     \
                                                  StateField<R>&, int,                     \
                                                  const SolveOptions<R>&, RunRecord*);     \
  template PartitionCheckResult partition_check<R>(const System&, const ObjectiveSpec&,    \
                                                   int, long);                             \
  template std::vector<ScalingRow> scaling_report<R>(const System&, const ObjectiveSpec&,  \
                                                     const std::vector<int>&, long);

LBOPT_INSTANTIATE_PART(float)
LBOPT_INSTANTIATE_PART(double)
#undef LBOPT_INSTANTIATE_PART

template class Channel<HaloMsg<float>>;
template class Channel<HaloMsg<double>>;

}  // namespace lbopt
