#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lbopt/adjoint.hpp"
#include "lbopt/collision.hpp"
#include "lbopt/config.hpp"
#include "oracles.hpp"

using namespace lbopt;

namespace {

// Converged primal of the standard small channel.
struct SmallCase {
  BuiltCase bc;
  StateField<double> f;
  SmallCase() : bc(oracles::built(oracles::small_channel_cfg())), f(bc.sys.shape, bc.sys.m) {
    initialize_state(bc.sys, f);
    SolveOptions<double> opt;
    opt.tol = 1e-12;
    opt.record_interval = 1L << 30;
    if (!solve_fixed_point(bc.sys, f, opt).converged)
      throw std::runtime_error("small case failed to converge");
  }
};

SmallCase& small_case() {
  static SmallCase sc;
  return sc;
}

}  // namespace

TEST_SUITE("adjoint") {

TEST_CASE("dual numbers differentiate the collision branch-consistently") {
  // d/dx of x*x/(x+2) at x=3 is (x^2+4x)/(x+2)^2 = 21/25
  Dual<double> x{3.0, 1.0};
  Dual<double> y = x * x / (x + Dual<double>{2.0, 0.0});
  CHECK(y.v == doctest::Approx(9.0 / 5.0).epsilon(1e-15));
  CHECK(y.d == doctest::Approx(21.0 / 25.0).epsilon(1e-15));
  CHECK(pow(Dual<double>{2.0, 1.0}, 3.0).d == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("node jacobians match central finite differences on every tag") {
  auto& sc = small_case();
  System& sys = sc.bc.sys;
  auto gen = oracles::rng(31);
  const double h = 1e-6;

  struct Probe {
    NodeTag tag;
    int axis, sign;
    double bcT, w;
  };
  for (const Probe& p : {Probe{NodeTag::Interior, 0, 0, 0.0, 0.63},
                         Probe{NodeTag::Wall, 0, 0, 0.0, 1.0},
                         Probe{NodeTag::Heater, 0, 0, 1.0, 1.0},
                         Probe{NodeTag::PressureInlet, 0, +1, 0.5, 1.0},
                         Probe{NodeTag::PressureOutlet, 0, -1, 0.0, 1.0}}) {
    const std::vector<double> fin = oracles::random_node<double>(sys, gen);
    Matrix jac;
    node_jacobian<double>(sys, p.tag, p.axis, p.sign, p.bcT,
                          {fin.data(), fin.size()}, p.w, jac);
    for (int k = 0; k < sys.m; ++k) {
      const std::vector<double> col = oracles::fd_jacobian_column(
          sys, p.tag, p.axis, p.sign, p.bcT, fin, p.w, sys.model.rho_inlet(), k, h);
      for (int j = 0; j < sys.m; ++j)
        CHECK(jac.at(j, k) == doctest::Approx(col[j]).epsilon(5e-6).scale(1.0));
    }
  }
}

TEST_CASE("analytic vjp equals the dual-sweep vjp on all tags") {
  auto& sc = small_case();
  System& sys = sc.bc.sys;
  const ObjectiveSpec& obj = sc.bc.objective;
  auto gen = oracles::rng(32);

  StateField<double> v(sys.shape, sys.m);
  oracles::fill_signed(v, gen, 0.5);

  StateField<double> va = v, vd = v;
  adjoint_step(sys, obj, sc.f, va, AdjointKernel::Analytic);
  adjoint_step(sys, obj, sc.f, vd, AdjointKernel::DualSweep);
  for (int p = 0; p < sys.m; ++p) {
    auto a = va.plane(p), d = vd.plane(p);
    for (long i = 0; i < sys.shape.nodes(); ++i)
      CHECK(a[i] == doctest::Approx(d[i]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("one adjoint sweep equals the finite-difference transpose oracle") {
  auto& sc = small_case();
  System& sys = sc.bc.sys;
  const ObjectiveSpec& obj = sc.bc.objective;
  auto gen = oracles::rng(33);

  StateField<double> v(sys.shape, sys.m);
  oracles::fill_signed(v, gen, 0.3);

  const std::vector<double> expect = oracles::naive_adjoint_sweep(sys, obj, sc.f, v, 1e-6);
  StateField<double> vn = v;
  adjoint_step(sys, obj, sc.f, vn, AdjointKernel::Analytic);

  const long n = sys.shape.nodes();
  double max_err = 0.0;
  for (int p = 0; p < sys.m; ++p) {
    auto got = vn.plane(p);
    for (long i = 0; i < n; ++i)
      max_err = std::max(max_err, std::abs(got[i] - expect[p * n + i]));
  }
  CHECK(max_err < 1e-7);
}

TEST_CASE("jacobian cache reproduces the uncached sweep bitwise") {
  auto& sc = small_case();
  System& sys = sc.bc.sys;
  const ObjectiveSpec& obj = sc.bc.objective;
  auto gen = oracles::rng(34);

  const JacobianCache cache = build_jacobian_cache(sys, sc.f);
  StateField<double> v(sys.shape, sys.m);
  oracles::fill_signed(v, gen, 0.4);
  StateField<double> vc = v, vp = v;
  adjoint_step(sys, obj, sc.f, vc, AdjointKernel::DualSweep, &cache);
  adjoint_step(sys, obj, sc.f, vp, AdjointKernel::DualSweep);
  for (int p = 0; p < sys.m; ++p) {
    auto a = vc.plane(p), b = vp.plane(p);
    for (long i = 0; i < sys.shape.nodes(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13).scale(1.0));
  }
}

TEST_CASE("adjoint solve converges and gradients match finite differences") {
  auto& sc = small_case();
  System& sys = sc.bc.sys;
  const ObjectiveSpec& obj = sc.bc.objective;

  StateField<double> v(sys.shape, sys.m);
  AdjointSolveOptions<double> aopt;
  aopt.tol = 1e-12;
  aopt.record_interval = 1L << 30;
  const SolveResult ar = solve_adjoint(sys, obj, sc.f, v, aopt);
  REQUIRE(ar.converged);

  GradientVector grad = param_gradient(sys, v, sc.f, AdjointKernel::Analytic);
  REQUIRE(grad.design.size() == sys.design.nodes.size());
  REQUIRE(grad.globals.size() == 1);
  CHECK(grad.globals[0].first == "inlet_dp");

  // spot-check four design nodes and the global against central differences
  const long fixed = 4000;
  for (std::size_t ord : {std::size_t(0), grad.design.size() / 3,
                          2 * grad.design.size() / 3, grad.design.size() - 1}) {
    FdComponent comp;
    comp.design_ordinal = long(ord);
    const double fd =
        fd_gradient<double>(sys, obj, comp, 1e-5, 1e-13, 100000, fixed);
    CHECK(grad.design[ord] ==
          doctest::Approx(fd).epsilon(1e-6).scale(std::max(1e-3, std::abs(fd))));
  }
  FdComponent g;
  g.is_global = true;
  g.global = "inlet_dp";
  const double fdg = fd_gradient<double>(sys, obj, g, 1e-6, 1e-13, 100000, fixed);
  CHECK(grad.globals[0].second ==
        doctest::Approx(fdg).epsilon(1e-5).scale(std::max(1e-3, std::abs(fdg))));
}

TEST_CASE("tangent and adjoint sensitivities are dual to each other") {
  auto& sc = small_case();
  System& sys = sc.bc.sys;
  const ObjectiveSpec& obj = sc.bc.objective;

  StateField<double> v(sys.shape, sys.m);
  AdjointSolveOptions<double> aopt;
  aopt.tol = 1e-13;
  aopt.record_interval = 1L << 30;
  REQUIRE(solve_adjoint(sys, obj, sc.f, v, aopt).converged);
  GradientVector grad = param_gradient(sys, v, sc.f, AdjointKernel::Analytic);

  auto gen = oracles::rng(35);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    Direction dir;
    dir.dw.resize(sys.design.nodes.size());
    for (double& x : dir.dw) x = dist(gen);
    dir.d_inlet_dp = dist(gen);

    const TangentResult<double> tg = tangent_solve(sys, obj, sc.f, dir, 1e-13, 400000);
    REQUIRE(tg.solve.converged);

    double dot = grad.globals[0].second * dir.d_inlet_dp;
    for (std::size_t i = 0; i < dir.dw.size(); ++i) dot += grad.design[i] * dir.dw[i];
    CHECK(tg.dF == doctest::Approx(dot).epsilon(1e-10).scale(std::max(1.0, std::abs(dot))));
  }
}

TEST_CASE("adjoint fixed_iters runs exactly the requested sweeps") {
  auto& sc = small_case();
  StateField<double> v(sc.bc.sys.shape, sc.bc.sys.m);
  AdjointSolveOptions<double> aopt;
  aopt.fixed_iters = 23;
  aopt.record_interval = 1L << 30;
  const SolveResult r = solve_adjoint(sc.bc.sys, sc.bc.objective, sc.f, v, aopt);
  CHECK(r.iterations == 23);
}

}  // TEST_SUITE
