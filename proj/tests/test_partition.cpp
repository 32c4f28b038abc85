#include <cstring>
#include <thread>

#include "doctest.h"
#include "lbopt/partition.hpp"
#include "oracles.hpp"

using namespace lbopt;

TEST_SUITE("partition") {

TEST_CASE("decomposition covers the domain with near-equal slabs") {
  LatticeShape s{37, 8, 1};
  for (int parts : {1, 2, 3, 4, 5}) {
    const auto slabs = decompose(s, parts);
    REQUIRE(int(slabs.size()) == parts);
    int covered = 0, wmin = s.nx, wmax = 0;
    for (int i = 0; i < parts; ++i) {
      const SubdomainSpec& sd = slabs[i];
      CHECK(sd.id == i);
      CHECK(sd.x0 == covered);  // contiguous, ascending
      CHECK(sd.x1 > sd.x0);
      covered = sd.x1;
      wmin = std::min(wmin, sd.x1 - sd.x0);
      wmax = std::max(wmax, sd.x1 - sd.x0);
      CHECK(sd.left == (i + parts - 1) % parts);
      CHECK(sd.right == (i + 1) % parts);
    }
    CHECK(covered == s.nx);
    CHECK(wmax - wmin <= 1);
  }
  CHECK_THROWS_AS(decompose(s, 0), ConfigError);
  CHECK_THROWS_AS(decompose(LatticeShape{3, 8, 1}, 4), ConfigError);
}

TEST_CASE("exchange plan lists exactly the face-crossing slots") {
  auto bc = oracles::built(oracles::small_channel_cfg());
  const System& sys = bc.sys;
  const ExchangePlan plan = ExchangePlan::build(sys);

  std::vector<int> right, left;
  for (int j = 0; j < sys.m; ++j) {
    if (sys.vel[j].x == 1) right.push_back(j);
    if (sys.vel[j].x == -1) left.push_back(j);
  }
  CHECK(plan.right_slots == right);
  CHECK(plan.left_slots == left);
  // D2Q9 + D2Q5: three flow slots each way plus one thermal slot
  CHECK(plan.right_slots.size() == 4);
  CHECK(plan.left_slots.size() == 4);
}

TEST_CASE("partitioned stepping is bit-identical to the monolithic kernels") {
  auto bc = oracles::built(oracles::small_channel_cfg(20, 10));
  System& sys = bc.sys;
  sys.design.fill_design(0.6);

  for (int parts : {1, 2, 4}) {
    CAPTURE(parts);
    const PartitionCheckResult res = partition_check<double>(sys, bc.objective, parts, 50);
    CHECK(res.steps == 50);
    CHECK(res.max_primal_diff == 0.0);
    CHECK(res.max_adjoint_diff == 0.0);
  }
}

TEST_CASE("manual lock stepping round-trips states exactly") {
  auto bc = oracles::built(oracles::small_channel_cfg(16, 8));
  System& sys = bc.sys;
  auto gen = oracles::rng(91);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);

  StateField<double> f(sys.shape, sys.m);
  initialize_state(sys, f);
  // perturb interior slots a little so the halo paths carry nontrivial data
  for (int j = 0; j < sys.m; ++j) {
    auto pl = f.plane(j);
    for (auto& vv : pl) vv += sys.flow->weights[j % sys.mf] * jitter(gen);
  }

  PartitionedRun<double> run(sys, bc.objective, 3);
  run.load_state(f);

  StateField<double> gathered(sys.shape, sys.m);
  run.gather_state(gathered);
  const auto before_a = oracles::dump_state(f);
  const auto before_b = oracles::dump_state(gathered);
  REQUIRE(std::memcmp(before_a.data(), before_b.data(),
                      sizeof(double) * before_a.size()) == 0);

  StateField<double> mono = f;
  for (int s = 0; s < 25; ++s) {
    run.step_primal();
    primal_step(sys, mono);
  }
  run.gather_state(gathered);
  const auto after_a = oracles::dump_state(mono);
  const auto after_b = oracles::dump_state(gathered);
  CHECK(std::memcmp(after_a.data(), after_b.data(), sizeof(double) * after_a.size()) == 0);
  CHECK(run.primal_steps() == 25);

  // adjoint phase: zero start, same number of reverse sweeps
  StateField<double> v(sys.shape, sys.m);
  run.reset_adjoint();
  for (int s = 0; s < 10; ++s) {
    run.step_adjoint();
    adjoint_step(sys, bc.objective, mono, v, AdjointKernel::Analytic);
  }
  StateField<double> vg(sys.shape, sys.m);
  run.gather_adjoint(vg);
  const auto adj_a = oracles::dump_state(v);
  const auto adj_b = oracles::dump_state(vg);
  CHECK(std::memcmp(adj_a.data(), adj_b.data(), sizeof(double) * adj_a.size()) == 0);
  CHECK(run.adjoint_steps() == 10);
}

TEST_CASE("partitioned fixed point matches the monolithic solve bitwise") {
  auto bc = oracles::built(oracles::small_channel_cfg(14, 8));
  System& sys = bc.sys;
  sys.design.fill_design(0.8);

  StateField<double> f_mono(sys.shape, sys.m);
  initialize_state(sys, f_mono);
  SolveOptions<double> opt;
  opt.tol = 1e-10;
  opt.max_iter = 60000;
  opt.record_interval = 1L << 30;
  const SolveResult mono = solve_fixed_point(sys, f_mono, opt);
  REQUIRE(mono.converged);

  StateField<double> f_part(sys.shape, sys.m);
  initialize_state(sys, f_part);
  const SolveResult part = partitioned_fixed_point(sys, bc.objective, f_part, 4, opt);
  CHECK(part.converged);
  CHECK(part.iterations == mono.iterations);
  CHECK(part.residual == mono.residual);

  const auto a = oracles::dump_state(f_mono);
  const auto b = oracles::dump_state(f_part);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("channel delivers in order and times out when starved") {
  Channel<HaloMsg<double>> ch;
  HaloMsg<double> m1{1, 0, {1.0, 2.0}};
  HaloMsg<double> m2{2, 1, {3.0}};
  ch.send(m1);
  ch.send(m2);
  CHECK(ch.recv(1.0).step == 1);
  CHECK(ch.recv(1.0).step == 2);
  CHECK_THROWS_AS((void)ch.recv(0.05), ProtocolError);

  // a sender on another thread wakes a blocked receiver
  std::thread t([&ch] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    ch.send(HaloMsg<double>{7, 0, {}});
  });
  CHECK(ch.recv(5.0).step == 7);
  t.join();
}

}  // TEST_SUITE
