#pragma once

#include <barrier>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "lbopt/adjoint.hpp"
#include "lbopt/collision.hpp"
#include "lbopt/objective.hpp"

namespace lbopt {

// One x-slab of the domain: owned global columns [x0, x1), periodic neighbors.
struct SubdomainSpec {
  int id = 0;
  int x0 = 0, x1 = 0;
  int left = 0, right = 0;
};

// Contiguous x-slabs with sizes differing by at most one.
std::vector<SubdomainSpec> decompose(const LatticeShape& s, int n_parts);

// Which coupled planes cross a slab face. The adjoint swaps the two lists
// (information flows against the links), which is exactly the transposed plan.
struct ExchangePlan {
  std::vector<int> right_slots;  // e_x = +1
  std::vector<int> left_slots;   // e_x = -1
  static ExchangePlan build(const System& sys);
};

// Blocking MPSC channel used for halo messages between workers.
template <class T>
class Channel {
 public:
  void send(T msg) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      q_.push_back(std::move(msg));
    }
    cv_.notify_one();
  }
  // Throws ProtocolError after `timeout_s` without a message.
  T recv(double timeout_s = 60.0);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> q_;
};

template <class R>
struct HaloMsg {
  long step = 0;
  int phase = 0;  // 0 = primal, 1 = adjoint
  std::vector<R> data;
};

// Thread-per-slab runner. Each lock step collides+scatters into per-slab
// extended buffers (one ghost column per side), exchanges the crossing slots
// through the channels, and only then flips. Node arithmetic is the exact
// monolithic kernel on the same inputs, and halo slots are stored into unique
// locations, so a gathered state is bit-identical to the monolithic run.
template <class R>
class PartitionedRun {
 public:
  PartitionedRun(const System& sys, const ObjectiveSpec& obj, int n_parts,
                 AdjointKernel kernel = AdjointKernel::Analytic);
  ~PartitionedRun();

  PartitionedRun(const PartitionedRun&) = delete;
  PartitionedRun& operator=(const PartitionedRun&) = delete;

  int parts() const { return int(slabs_.size()); }

  // Distribute a monolithic state into the slabs (current buffers).
  void load_state(const StateField<R>& f);
  // Reset the adjoint slabs to zero.
  void reset_adjoint();

  void step_primal();   // one lock step of every worker
  void step_adjoint();  // one reverse sweep against the loaded state

  void gather_state(StateField<R>& out) const;
  void gather_adjoint(StateField<R>& out) const;

  // Max-norm update of the last step over owned nodes (deterministic).
  double last_residual() const;
  long primal_steps() const { return primal_steps_; }
  long adjoint_steps() const { return adjoint_steps_; }

 private:
  struct Slab {
    SubdomainSpec spec;
    LatticeShape shape;  // (span + 2, ny, nz)
    StateField<R> f, v;
    double residual = 0.0;
  };

  enum class Cmd { StepPrimal, StepAdjoint, Stop };

  void worker(int i);
  void do_step(Slab& sl, bool adjoint);
  void check_errors();

  const System& sys_;
  const ObjectiveSpec& obj_;
  AdjointKernel kernel_;
  ExchangePlan plan_;
  std::vector<Slab> slabs_;
  std::vector<std::unique_ptr<Channel<HaloMsg<R>>>> to_right_, to_left_;
  std::vector<std::thread> threads_;
  std::vector<std::exception_ptr> errors_;
  std::barrier<> start_, done_;
  Cmd cmd_ = Cmd::Stop;
  long primal_steps_ = 0, adjoint_steps_ = 0;
};

// Full solve through the partitioned stepper; the result state is gathered
// back into `f`. Bitwise equal to the monolithic solve_fixed_point.
template <class R>
SolveResult partitioned_fixed_point(const System& sys, const ObjectiveSpec& obj,
                                    StateField<R>& f, int n_parts,
                                    const SolveOptions<R>& opt, RunRecord* rec = nullptr);

// Per-iteration equivalence of the partitioned stepper against the monolithic
// kernels, primal then adjoint phase.
struct PartitionCheckResult {
  long steps = 0;
  double max_primal_diff = 0.0;
  double max_adjoint_diff = 0.0;
};

template <class R>
PartitionCheckResult partition_check(const System& sys, const ObjectiveSpec& obj,
                                     int n_parts, long steps);

// Steps-per-second of both sweeps for each worker count.
struct ScalingRow {
  int workers = 0;
  double primal_steps_per_s = 0.0;
  double adjoint_steps_per_s = 0.0;
};

template <class R>
std::vector<ScalingRow> scaling_report(const System& sys, const ObjectiveSpec& obj,
                                       const std::vector<int>& workers, long steps);

}  // namespace lbopt
