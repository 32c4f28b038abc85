#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "lbopt/optimizer.hpp"
#include "oracles.hpp"

using namespace lbopt;

namespace {

// Separable convex MMA subproblem for one coordinate, minimization convention.
double subproblem_phi(double xi, double L, double U, double p, double q) {
  return p / (U - xi) + q / (xi - L);
}

// Grid argmin of the subproblem over [alpha, beta] (endpoints included).
double brute_force_min(double L, double U, double p, double q, double alpha, double beta,
                       long steps) {
  double best_x = alpha, best_v = subproblem_phi(alpha, L, U, p, q);
  for (long i = 1; i <= steps; ++i) {
    const double xi = alpha + (beta - alpha) * double(i) / double(steps);
    const double v = subproblem_phi(xi, L, U, p, q);
    if (v < best_v) {
      best_v = v;
      best_x = xi;
    }
  }
  return best_x;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("design ascent step clamps without touching the warning counter") {
  auto bc = oracles::built(oracles::small_channel_cfg());
  DesignField& d = bc.sys.design;
  d.fill_design(0.9);

  const long warnings_before = design_clamp_warnings();
  std::vector<double> grad(d.design_count(), 10.0);
  grad[0] = -100.0;
  descent_update(d, grad, 0.1);
  CHECK(design_clamp_warnings() == warnings_before);  // projection, not misuse

  CHECK(d.w[d.nodes[0]] == 0.0);
  for (long i = 1; i < d.design_count(); ++i) CHECK(d.w[d.nodes[i]] == 1.0);

  std::vector<double> short_grad(3, 0.0);
  CHECK_THROWS_AS(descent_update(d, short_grad, 0.1), ConfigError);
}

TEST_CASE("zero step size leaves the design bit-identical") {
  auto bc = oracles::built(oracles::small_channel_cfg());
  DesignField& d = bc.sys.design;
  d.fill_design(0.37);
  const std::vector<double> before = d.w;
  std::vector<double> grad(d.design_count(), 123.456);
  descent_update(d, grad, 0.0);
  CHECK(std::memcmp(before.data(), d.w.data(), sizeof(double) * d.w.size()) == 0);
}

TEST_CASE("zeta schedule picks the stage with the largest start not past it") {
  const std::vector<ZetaStage> stages{{0, 0.5}, {100, 0.1}, {1000, 0.02}};
  CHECK(zeta_at(stages, 0) == 0.5);
  CHECK(zeta_at(stages, 99) == 0.5);
  CHECK(zeta_at(stages, 100) == 0.1);
  CHECK(zeta_at(stages, 999) == 0.1);
  CHECK(zeta_at(stages, 1000) == 0.02);
  CHECK(zeta_at(stages, 1000000) == 0.02);
  // before any stage applies the step is zero
  CHECK(zeta_at({{50, 0.3}}, 10) == 0.0);
}

TEST_CASE("mma single-variable updates hit the expected bounds") {
  MmaOptions opt;
  opt.asy_init = 0.5;
  opt.move_limit = 0.05;

  // positive gradient with a tight move limit: the move limit binds
  {
    MmaState st;
    const std::vector<double> xn = mma_update({0.5}, {2.0}, st, opt);
    CHECK(xn[0] == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(st.low[0] == doctest::Approx(0.0));
    CHECK(st.upp[0] == doctest::Approx(1.0));
    CHECK(st.iter == 1);
  }
  // negative gradient mirrors it
  {
    MmaState st;
    const std::vector<double> xn = mma_update({0.5}, {-2.0}, st, opt);
    CHECK(xn[0] == doctest::Approx(0.45).epsilon(1e-12));
  }
  // zero gradient: stay put exactly
  {
    MmaState st;
    const std::vector<double> xn = mma_update({0.5}, {0.0}, st, opt);
    CHECK(xn[0] == 0.5);
  }
  // generous move limit: the asymptote margin (10% of the gap) binds instead
  {
    MmaOptions wide = opt;
    wide.move_limit = 1.0;
    wide.asy_init = 0.2;
    MmaState st;
    const std::vector<double> xn = mma_update({0.5}, {1.0}, st, wide);
    // beta = min(1, U - 0.1 (U - x), x + move) with U = 0.7
    CHECK(xn[0] == doctest::Approx(0.68).epsilon(1e-12));
  }
}

TEST_CASE("mma update is invariant to the gradient scale") {
  MmaOptions opt;
  opt.asy_init = 0.35;
  opt.move_limit = 0.12;
  const std::vector<double> x{0.2, 0.45, 0.8, 0.5, 0.99};
  const std::vector<double> g{0.3, -1.7, 0.02, -0.4, 1.1};
  std::vector<double> g_scaled(g);
  for (double& v : g_scaled) v *= 250.0;

  MmaState st1, st2;
  const std::vector<double> a = mma_update(x, g, st1, opt);
  const std::vector<double> b = mma_update(x, g_scaled, st2, opt);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
}

TEST_CASE("mma matches a brute-force minimization of its subproblem") {
  MmaOptions opt;
  opt.asy_init = 0.4;
  opt.move_limit = 0.15;
  const std::vector<double> x{0.1, 0.35, 0.5, 0.72, 0.94};
  const std::vector<double> g{1.4, -0.6, 0.0, 0.05, -2.0};

  MmaState st;
  const std::vector<double> xn = mma_update(x, g, st, opt);

  for (std::size_t i = 0; i < x.size(); ++i) {
    const double L = std::clamp(x[i] - opt.asy_init, x[i] - 10.0, x[i] - 0.01);
    const double U = std::clamp(x[i] + opt.asy_init, x[i] + 0.01, x[i] + 10.0);
    const double alpha = std::max({0.0, L + 0.1 * (x[i] - L), x[i] - opt.move_limit});
    const double beta = std::min({1.0, U - 0.1 * (U - x[i]), x[i] + opt.move_limit});
    const double gm = -g[i];
    const double p = (U - x[i]) * (U - x[i]) *
                     (1.001 * std::max(gm, 0.0) + 0.001 * std::max(-gm, 0.0));
    const double q = (x[i] - L) * (x[i] - L) *
                     (0.001 * std::max(gm, 0.0) + 1.001 * std::max(-gm, 0.0));
    if (p == 0.0 && q == 0.0) {
      CHECK(xn[i] == x[i]);
      continue;
    }
    const long steps = 400000;
    const double ref = brute_force_min(L, U, p, q, alpha, beta, steps);
    CHECK(std::abs(xn[i] - ref) <= 2.0 * (beta - alpha) / double(steps) + 1e-12);
  }
}

TEST_CASE("asymptotes widen under steady progress and shrink on reversals") {
  MmaOptions opt;
  opt.asy_init = 0.5;
  opt.move_limit = 10.0;
  opt.asy_expand = 1.2;
  opt.asy_contract = 0.7;
  MmaState st;

  (void)mma_update({0.5}, {1.0}, st, opt);  // low 0.0, upp 1.0
  (void)mma_update({0.6}, {1.0}, st, opt);  // still startup: low 0.1, upp 1.1
  CHECK(st.low[0] == doctest::Approx(0.1));
  CHECK(st.upp[0] == doctest::Approx(1.1));

  (void)mma_update({0.7}, {1.0}, st, opt);  // same direction twice: expand
  CHECK(st.low[0] == doctest::Approx(0.7 - 1.2 * 0.5));
  CHECK(st.upp[0] == doctest::Approx(0.7 + 1.2 * 0.5));

  (void)mma_update({0.65}, {1.0}, st, opt);  // reversal: contract
  CHECK(st.low[0] == doctest::Approx(0.65 - 0.7 * (0.7 - 0.1)));
  CHECK(st.upp[0] == doctest::Approx(0.65 + 0.7 * (1.3 - 0.7)));
}

TEST_CASE("one-shot run with zero step size is plain time stepping") {
  auto bc = oracles::built(oracles::small_channel_cfg());
  System& sys = bc.sys;
  const long iters = 15;

  StateField<double> f_opt(sys.shape, sys.m), v(sys.shape, sys.m);
  initialize_state(sys, f_opt);
  const std::vector<double> w_before = sys.design.w;

  OneShotOptions opt;
  opt.iterations = iters;
  opt.zeta = {{0, 0.0}};
  const OneShotResult res = one_shot_run(sys, bc.objective, f_opt, v, opt);
  CHECK(res.iterations == iters);
  CHECK(res.primal_steps == iters);
  CHECK(res.adjoint_steps == iters);
  CHECK(std::memcmp(w_before.data(), sys.design.w.data(),
                    sizeof(double) * w_before.size()) == 0);

  StateField<double> f_ref(sys.shape, sys.m);
  initialize_state(sys, f_ref);
  for (long i = 0; i < iters; ++i) primal_step(sys, f_ref);

  const auto a = oracles::dump_state(f_opt);
  const auto b = oracles::dump_state(f_ref);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  CHECK(res.final_objective == doctest::Approx(evaluate_raw(bc.objective, sys, f_ref)));
}

TEST_CASE("one-shot records rows at the requested cadence") {
  auto bc = oracles::built(oracles::small_channel_cfg());
  System& sys = bc.sys;
  StateField<double> f(sys.shape, sys.m), v(sys.shape, sys.m);
  initialize_state(sys, f);

  OneShotOptions opt;
  opt.iterations = 10;
  opt.zeta = {{0, 1e-4}};
  opt.record_interval = 4;
  opt.penalty.w0 = 0.01;
  opt.penalty.cap = 1.0;
  RunRecord rec;
  (void)one_shot_run(sys, bc.objective, f, v, opt, &rec);

  REQUIRE(rec.rows.size() == 3);  // iterations 4, 8, 10
  CHECK(rec.rows[0].iteration == 4);
  CHECK(rec.rows[1].iteration == 8);
  CHECK(rec.rows[2].iteration == 10);
  CHECK(rec.iterations == 10);
  for (const RunRow& row : rec.rows) {
    CHECK(std::isfinite(row.objective));
    CHECK(std::isfinite(row.penalty));
    CHECK(row.composite ==
          doctest::Approx(row.objective - row.penalty_weight * row.penalty).epsilon(1e-12));
  }
  // design stays inside the box
  for (long n : sys.design.nodes) {
    CHECK(sys.design.w[n] >= 0.0);
    CHECK(sys.design.w[n] <= 1.0);
  }
}

TEST_CASE("mma run books primal and adjoint work per outer iteration") {
  auto bc = oracles::built(oracles::small_channel_cfg());
  System& sys = bc.sys;
  sys.design.fill_design(1.0);
  StateField<double> f(sys.shape, sys.m), v(sys.shape, sys.m);
  initialize_state(sys, f);

  MmaOptions opt;
  opt.outer_iterations = 2;
  opt.move_limit = 0.1;
  opt.primal_tol = 1e-8;
  opt.adjoint_tol = 1e-8;
  opt.adjoint_match_count = true;
  RunRecord rec;
  const MmaRunResult res = mma_run(sys, bc.objective, f, v, opt, &rec);

  CHECK(res.outer_iterations == 2);
  CHECK(res.all_converged);
  CHECK(res.primal_steps > 0);
  CHECK(res.adjoint_steps > 0);
  // matched counting can never exceed the primal total
  CHECK(res.adjoint_steps <= res.primal_steps);
  CHECK(std::isfinite(res.final_objective));
  // record has the baseline row plus one per outer
  REQUIRE(rec.rows.size() == 3);
  CHECK(rec.rows[0].iteration == 0);
  CHECK(rec.rows[2].iteration == 2);
  CHECK(rec.final_objective == doctest::Approx(res.final_objective));
}

TEST_CASE("threshold sweep reports the objective per cut and keeps ties low") {
  auto bc = oracles::built(oracles::small_channel_cfg());
  System& sys = bc.sys;
  sys.design.fill_design(0.5);

  const ThresholdResult res =
      threshold_sweep<double>(sys, bc.objective, {0.2, 0.5, 0.8}, 1e-8, 20000);
  REQUIRE(res.points.size() == 3);
  CHECK(res.any_converged);
  // w = 0.5 thresholded at 0.2 and 0.5 both give the all-fluid design
  CHECK(res.points[0].converged);
  CHECK(res.points[1].converged);
  CHECK(res.points[0].objective == doctest::Approx(res.points[1].objective).epsilon(1e-12));
  // ties keep the smallest eta
  if (res.points[2].objective <= res.points[0].objective || !res.points[2].converged)
    CHECK(res.best_eta == 0.2);
  // the sweep never mutates the input design
  for (long n : sys.design.nodes) CHECK(sys.design.w[n] == 0.5);
}

}  // TEST_SUITE
