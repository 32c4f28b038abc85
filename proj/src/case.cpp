#include "lbopt/case.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace lbopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string snapshot_name(const char* stem, long n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06ld.csv", stem, n);
  return buf;
}

}  // namespace

Case::Case(const CaseConfig& cfg)
    : cfg_(cfg), built_(build_case(cfg_)), eng_(Engine<double>(built_.sys)) {
  if (cfg_.precision == 32) eng_.emplace<Engine<float>>(built_.sys);
}

void Case::rebuild() {
  built_ = build_case(cfg_);
  if (cfg_.precision == 32)
    eng_.emplace<Engine<float>>(built_.sys);
  else
    eng_.emplace<Engine<double>>(built_.sys);
  status_ = Status{};
}

void Case::set(const std::string& dotted_key, const std::string& value) {
  cfg_.set(dotted_key, value);  // syntax and unknown-key errors stay immediate
  dirty_ = true;
}

void Case::ensure_built() {
  if (!dirty_) return;
  cfg_.validate();
  rebuild();
  dirty_ = false;
}

void Case::save_config(const std::string& path) {
  ensure_built();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << cfg_.serialize();
  if (!out) throw IoError("write failed: " + path);
}

std::string Case::out_path(const std::string& name) const {
  std::error_code ec;
  std::filesystem::create_directories(cfg_.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cfg_.out_dir);
  return cfg_.out_dir + "/" + name;
}

AdjointKernel Case::kernel() const {
  return cfg_.adjoint_kernel == "dual" ? AdjointKernel::DualSweep : AdjointKernel::Analytic;
}

// --- simulate ---

template <class R>
OpSummary Case::simulate_impl(Engine<R>& e) {
  initialize_state(built_.sys, e.f);
  RunRecord rec;
  SolveOptions<R> opt;
  opt.tol = cfg_.primal_tol;
  opt.max_iter = cfg_.max_inner;
  opt.record_interval = cfg_.record_interval;
  opt.monitor = [this](const StateField<R>& f) {
    return evaluate_raw(built_.objective, built_.sys, f);
  };

  SolveResult sr;
  if (cfg_.workers > 1)
    sr = partitioned_fixed_point(built_.sys, built_.objective, e.f, cfg_.workers, opt, &rec);
  else
    sr = solve_fixed_point(built_.sys, e.f, opt, &rec);
  e.has_primal = true;

  if (cfg_.write_csv) {
    write_fields_csv(built_.sys, e.f, out_path("fields.csv"));
    write_state_csv(built_.sys, e.f, out_path("state.csv"));
    write_record_csv(rec.rows, out_path("record.csv"));
  }
  if (cfg_.write_vtk)
    write_fields_vtk(make_field_table(built_.sys, e.f), out_path("fields.vtk"));

  OpSummary s;
  s.converged = sr.converged;
  s.iterations = sr.iterations;
  s.residual = sr.residual;
  s.objective = evaluate_raw(built_.objective, built_.sys, e.f);
  s.seconds = rec.wall_seconds;
  status_.objective = s.objective;
  status_.iterations = s.iterations;
  status_.converged = s.converged;
  status_.residual = s.residual;
  return s;
}

OpSummary Case::simulate() {
  ensure_built();
  return std::visit([this](auto& e) { return simulate_impl(e); }, eng_);
}

// --- adjoint ---

template <class R>
OpSummary Case::adjoint_impl(Engine<R>& e) {
  if (!e.has_primal)
    throw StateError("adjoint needs a primal state: run simulate or load one first");

  RunRecord rec;
  AdjointSolveOptions<R> opt;
  opt.tol = cfg_.adjoint_tol;
  opt.max_iter = cfg_.max_inner;
  opt.record_interval = cfg_.record_interval;
  opt.kernel = kernel();
  opt.use_cache = cfg_.adjoint_cache == "on";
  const SolveResult ar = solve_adjoint(built_.sys, built_.objective, e.f, e.v, opt, &rec);

  const GradientVector g = param_gradient(built_.sys, e.v, e.f, opt.kernel);
  if (cfg_.write_csv) {
    write_gradient_csv(g, built_.sys.design, out_path("gradient.csv"));
    write_record_csv(rec.rows, out_path("adjoint_record.csv"));
  }

  OpSummary s;
  s.converged = ar.converged;
  s.iterations = ar.iterations;
  s.residual = ar.residual;
  s.objective = evaluate_raw(built_.objective, built_.sys, e.f);
  s.seconds = rec.wall_seconds;
  status_.objective = s.objective;
  status_.iterations = s.iterations;
  status_.converged = s.converged;
  status_.residual = s.residual;
  return s;
}

OpSummary Case::run_adjoint() {
  ensure_built();
  return std::visit([this](auto& e) { return adjoint_impl(e); }, eng_);
}

// --- optimize ---

template <class R>
OpSummary Case::optimize_impl(Engine<R>& e) {
  const auto t0 = Clock::now();
  initialize_state(built_.sys, e.f);
  e.v.fill(R(0));
  RunRecord rec;
  OpSummary s;

  auto snapshot = [&](long n) {
    if (!cfg_.write_csv) return;
    write_design_csv(built_.sys.design, out_path(snapshot_name("design", n)));
    write_fields_csv(built_.sys, e.f, out_path(snapshot_name("fields", n)));
  };

  if (cfg_.method == "oneshot") {
    OneShotOptions opt = build_one_shot_options(cfg_);
    opt.snapshot_interval = std::max<long>(opt.iterations / 5, 1);
    opt.on_snapshot = snapshot;
    const OneShotResult r = one_shot_run(built_.sys, built_.objective, e.f, e.v, opt, &rec);
    s.iterations = r.iterations;
  } else if (cfg_.method == "mma") {
    MmaOptions opt = build_mma_options(cfg_);
    opt.snapshot_interval = std::max<long>(opt.outer_iterations / 5, 1);
    opt.on_snapshot = snapshot;
    const MmaRunResult r = mma_run(built_.sys, built_.objective, e.f, e.v, opt, &rec);
    s.iterations = r.primal_steps;
    s.converged = r.all_converged;
  } else {
    throw ConfigError("optimize needs [optimizer] method = oneshot or mma");
  }

  // Converged objective of the final design (one-shot leaves the state mid-flight).
  SolveOptions<R> popt;
  popt.tol = cfg_.primal_tol;
  popt.max_iter = cfg_.max_inner;
  popt.record_interval = 1L << 30;
  const SolveResult fr = solve_fixed_point(built_.sys, e.f, popt);
  e.has_primal = true;

  if (cfg_.write_csv) {
    write_design_csv(built_.sys.design, out_path("design.csv"));
    write_fields_csv(built_.sys, e.f, out_path("fields.csv"));
    write_state_csv(built_.sys, e.f, out_path("state.csv"));
    write_convergence_csv(rec.rows, out_path("convergence.csv"));
    write_record_csv(rec.rows, out_path("optimize_record.csv"));
  }
  if (cfg_.write_vtk)
    write_fields_vtk(make_field_table(built_.sys, e.f), out_path("fields.vtk"));

  if (cfg_.method == "oneshot") s.converged = fr.converged;
  s.residual = fr.residual;
  s.objective = evaluate_raw(built_.objective, built_.sys, e.f);
  s.seconds = seconds_since(t0);
  status_.objective = s.objective;
  status_.iterations = s.iterations;
  status_.converged = s.converged;
  status_.residual = s.residual;
  return s;
}

OpSummary Case::optimize() {
  ensure_built();
  return std::visit([this](auto& e) { return optimize_impl(e); }, eng_);
}

// --- gradient verification ---

template <class R>
GradCheckResult Case::grad_check_impl(Engine<R>& e) {
  const auto t0 = Clock::now();
  initialize_state(built_.sys, e.f);
  SolveOptions<R> popt;
  popt.tol = cfg_.primal_tol;
  popt.max_iter = cfg_.max_inner;
  popt.record_interval = 1L << 30;
  const SolveResult pr = solve_fixed_point(built_.sys, e.f, popt);
  if (!pr.converged)
    throw NumericError("gradient check: primal did not reach tol " +
                       std::to_string(cfg_.primal_tol));
  e.has_primal = true;

  AdjointSolveOptions<R> aopt;
  aopt.tol = cfg_.adjoint_tol;
  aopt.max_iter = cfg_.max_inner;
  aopt.record_interval = 1L << 30;
  aopt.kernel = kernel();
  aopt.use_cache = cfg_.adjoint_cache == "on";
  const SolveResult ar = solve_adjoint(built_.sys, built_.objective, e.f, e.v, aopt);
  if (!ar.converged)
    throw NumericError("gradient check: adjoint did not reach tol " +
                       std::to_string(cfg_.adjoint_tol));

  const GradientVector g = param_gradient(built_.sys, e.v, e.f, aopt.kernel);
  const DesignField& d = built_.sys.design;
  if (d.nodes.empty()) throw ConfigError("gradient check needs a design region");

  // Check the strongest design components: where the gradient is far above the
  // finite-difference noise floor, disagreement means a real adjoint bug.
  std::vector<std::size_t> ord(g.design.size());
  std::iota(ord.begin(), ord.end(), std::size_t{0});
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    const double ga = std::abs(g.design[a]), gb = std::abs(g.design[b]);
    return ga != gb ? ga > gb : a < b;
  });
  const std::size_t n_pick = std::min<std::size_t>(g.design.size(), 12);

  double g_scale = 0.0;
  for (std::size_t k = 0; k < n_pick; ++k) g_scale = std::max(g_scale, std::abs(g.design[ord[k]]));
  for (const auto& [name, val] : g.globals) g_scale = std::max(g_scale, std::abs(val));

  const double steps[] = {1e-5, 1e-6, 1e-7};
  auto rel_err = [&](double adj, double fd) {
    const double denom =
        std::max({std::abs(adj), std::abs(fd), 1e-6 * g_scale, 1e-300});
    return std::abs(fd - adj) / denom;
  };

  GradCheckResult res;
  res.primal_iterations = pr.iterations;

  auto check_component = [&](const FdComponent& comp, double adj, GradCheckRow row) {
    row.adjoint = adj;
    row.rel_err = std::numeric_limits<double>::infinity();
    for (double h : steps) {
      const double fd = fd_gradient<R>(built_.sys, built_.objective, comp, h,
                                       cfg_.primal_tol, cfg_.max_inner, pr.iterations);
      const double err = rel_err(adj, fd);
      if (err < row.rel_err) {
        row.rel_err = err;
        row.fd = fd;
        row.best_step = h;
      }
    }
    res.max_rel_err = std::max(res.max_rel_err, row.rel_err);
    res.rows.push_back(std::move(row));
  };

  const LatticeShape& sh = built_.sys.shape;
  for (std::size_t k = 0; k < n_pick; ++k) {
    const std::size_t o = ord[k];
    const long idx = d.nodes[o];
    FdComponent comp;
    comp.design_ordinal = long(o);
    GradCheckRow row;
    row.x = int(idx % sh.nx);
    row.y = int((idx / sh.nx) % sh.ny);
    row.z = int(idx / (long(sh.nx) * sh.ny));
    check_component(comp, g.design[o], row);
  }
  for (const auto& [name, val] : g.globals) {
    FdComponent comp;
    comp.is_global = true;
    comp.global = name;
    GradCheckRow row;
    row.is_global = true;
    row.name = name;
    check_component(comp, val, row);
  }

  res.seconds = seconds_since(t0);
  if (cfg_.write_csv) write_gradcheck_csv(res, out_path("gradcheck.csv"));
  status_.max_rel_err = res.max_rel_err;
  status_.iterations = pr.iterations;
  status_.converged = true;
  status_.residual = pr.residual;
  status_.objective = evaluate_raw(built_.objective, built_.sys, e.f);
  return res;
}

GradCheckResult Case::grad_check() {
  ensure_built();
  return std::visit([this](auto& e) { return grad_check_impl(e); }, eng_);
}

// --- threshold sweep ---

template <class R>
ThresholdResult Case::threshold_impl() {
  std::vector<double> etas(cfg_.threshold_points);
  for (int i = 0; i < cfg_.threshold_points; ++i)
    etas[i] = double(i) / (cfg_.threshold_points - 1);
  ThresholdResult r = threshold_sweep<R>(built_.sys, built_.objective, etas,
                                         cfg_.primal_tol, cfg_.max_inner);
  if (cfg_.write_csv) write_threshold_csv(r, out_path("threshold.csv"));
  status_.objective = r.best_objective;
  status_.converged = r.any_converged;
  return r;
}

ThresholdResult Case::threshold() {
  ensure_built();
  return cfg_.precision == 32 ? threshold_impl<float>() : threshold_impl<double>();
}

// --- partition / scaling / cost ---

PartitionCheckResult Case::run_partition_check(long steps) {
  ensure_built();
  PartitionCheckResult r;
  if (cfg_.precision == 32)
    r = partition_check<float>(built_.sys, built_.objective, cfg_.workers, steps);
  else
    r = partition_check<double>(built_.sys, built_.objective, cfg_.workers, steps);
  if (cfg_.write_csv) {
    std::ofstream out(out_path("partition.csv"));
    if (!out) throw IoError("cannot open for writing: " + out_path("partition.csv"));
    out << "steps,max_primal_diff,max_adjoint_diff\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", r.steps, r.max_primal_diff,
                  r.max_adjoint_diff);
    out << buf;
  }
  status_.residual = std::max(r.max_primal_diff, r.max_adjoint_diff);
  status_.iterations = r.steps;
  return r;
}

std::vector<ScalingRow> Case::run_scaling(long steps) {
  ensure_built();
  std::vector<int> counts;
  for (int w = 1; w <= cfg_.workers; w *= 2) counts.push_back(w);
  if (counts.empty() || counts.back() != cfg_.workers) counts.push_back(cfg_.workers);
  std::vector<ScalingRow> rows;
  if (cfg_.precision == 32)
    rows = scaling_report<float>(built_.sys, built_.objective, counts, steps);
  else
    rows = scaling_report<double>(built_.sys, built_.objective, counts, steps);
  if (cfg_.write_csv) write_scaling_csv(rows, out_path("scaling.csv"));
  return rows;
}

template <class R>
double Case::cost_ratio_impl(Engine<R>& e, long steps) {
  if (steps < 1) throw ConfigError("cost ratio needs at least one step");
  initialize_state(built_.sys, e.f);
  // Short warmup keeps first-touch page faults out of both measurements.
  for (int i = 0; i < 5; ++i) primal_step(built_.sys, e.f);
  const auto tp0 = Clock::now();
  for (long i = 0; i < steps; ++i) primal_step(built_.sys, e.f);
  const double tp = seconds_since(tp0);

  e.v.fill(R(0));
  const AdjointKernel k = kernel();
  for (int i = 0; i < 5; ++i) adjoint_step(built_.sys, built_.objective, e.f, e.v, k);
  const auto ta0 = Clock::now();
  for (long i = 0; i < steps; ++i) adjoint_step(built_.sys, built_.objective, e.f, e.v, k);
  const double ta = seconds_since(ta0);

  if (!(tp > 0)) throw NumericError("primal timing too short to resolve");
  const double ratio = ta / tp;
  status_.cost_ratio = ratio;
  return ratio;
}

double Case::measure_cost_ratio(long steps) {
  ensure_built();
  return std::visit([&](auto& e) { return cost_ratio_impl(e, steps); }, eng_);
}

// --- design helpers ---

void Case::generate_fins(int count, int width) {
  ensure_built();
  if (count < 1 || width < 1) throw ConfigError("fins: count and width must be positive");
  DesignField& d = built_.sys.design;
  if (d.nodes.empty()) throw ConfigError("fins: case has no design region");

  const LatticeShape& s = d.shape;
  for (long idx : d.nodes) d.w[idx] = 1.0;
  const int x0 = cfg_.design_x0, x1 = cfg_.design_x1;
  const int span = x1 - x0 + 1;
  if (span < count * width)
    throw ConfigError("fins: design span too short for the requested comb");
  const int len = std::max(1, 2 * (s.ny - 2) / 3);  // fin reach into the channel

  for (int i = 0; i < count; ++i) {
    const double cx = x0 + (i + 0.5) * double(span) / count;
    const int fx0 = int(cx) - width / 2;
    const int fx1 = fx0 + width - 1;
    const bool from_bottom = i % 2 == 0;
    for (long idx : d.nodes) {
      const int x = int(idx % s.nx);
      if (x < fx0 || x > fx1) continue;
      const int y = int((idx / s.nx) % s.ny);
      const bool hit = from_bottom ? y <= len : y >= s.ny - 1 - len;
      if (hit) d.w[idx] = 0.0;
    }
  }
  std::visit([](auto& e) { e.has_primal = false; }, eng_);
}

void Case::apply_threshold_now(double eta) {
  ensure_built();
  apply_threshold(built_.sys.design, eta);
  std::visit([](auto& e) { e.has_primal = false; }, eng_);
}

void Case::load_state_file(const std::string& path) {
  ensure_built();
  std::visit(
      [&](auto& e) {
        read_state_csv(built_.sys, e.f, path);
        e.has_primal = true;
      },
      eng_);
}

void Case::load_design_file(const std::string& path) {
  ensure_built();
  read_design_csv(built_.sys.design, path);
  std::visit([](auto& e) { e.has_primal = false; }, eng_);
}

void Case::write_field_outputs(const std::string& csv_path, const std::string& vtk_path) {
  ensure_built();
  std::visit(
      [&](const auto& e) {
        const FieldTable t = make_field_table(built_.sys, e.f);
        if (!csv_path.empty()) write_fields_csv(t, csv_path);
        if (!vtk_path.empty()) write_fields_vtk(t, vtk_path);
      },
      eng_);
}

}  // namespace lbopt
