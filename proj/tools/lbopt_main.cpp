// Command-line front end. Talks to the engine exclusively through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lbopt/lbopt.h"

namespace {

// Exit categories: 0 ok, 2 usage, 3 config, 4 numeric, 5 io.
int exit_code(int rc) {
  switch (rc) {
    case LBOPT_OK: return 0;
    case LBOPT_E_CONFIG: return 3;
    case LBOPT_E_NUMERIC: return 4;
    case LBOPT_E_IO: return 5;
    default: return 2;  // bad argument / operation out of order
  }
}

struct CommonOpts {
  std::string config;
  std::string out_dir;
  std::vector<std::string> sets;
  std::string design_path;
  std::string state_path;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("-c,--config", o.config, "case config file")->required();
  sub->add_option("-o,--out", o.out_dir, "output directory (overrides [output] dir)");
  sub->add_option("--set", o.sets, "override, e.g. --set model.nu=0.01")->take_all();
  sub->add_option("--design", o.design_path, "design CSV to load before running");
}

struct Handle {
  lbopt_case* c = nullptr;
  ~Handle() { lbopt_close(c); }
};

// Opens the case and applies overrides/loads; returns an exit code, 0 on success.
int open_case(const CommonOpts& o, Handle& h) {
  int rc = lbopt_open(o.config.c_str(), &h.c);
  if (rc != LBOPT_OK) {
    std::fprintf(stderr, "error: %s\n", lbopt_last_open_error());
    return exit_code(rc);
  }
  auto run = [&](int code) {
    if (code != LBOPT_OK) std::fprintf(stderr, "error: %s\n", lbopt_error_message(h.c));
    return code;
  };
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    rc = run(lbopt_set(h.c, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    if (rc != LBOPT_OK) return exit_code(rc);
  }
  if (!o.out_dir.empty()) {
    rc = run(lbopt_set(h.c, "output.dir", o.out_dir.c_str()));
    if (rc != LBOPT_OK) return exit_code(rc);
  }
  if (!o.design_path.empty()) {
    rc = run(lbopt_load_design_csv(h.c, o.design_path.c_str()));
    if (rc != LBOPT_OK) return exit_code(rc);
  }
  if (!o.state_path.empty()) {
    rc = run(lbopt_load_state_csv(h.c, o.state_path.c_str()));
    if (rc != LBOPT_OK) return exit_code(rc);
  }
  return 0;
}

void print_summary(const lbopt_case* c) {
  int conv = 0;
  long iters = 0;
  double res = 0, obj = 0;
  lbopt_converged(c, &conv);
  lbopt_iterations(c, &iters);
  lbopt_residual(c, &res);
  lbopt_objective_value(c, &obj);
  std::printf("converged  = %s\n", conv ? "yes" : "no");
  std::printf("iterations = %ld\n", iters);
  std::printf("residual   = %.6g\n", res);
  std::printf("objective  = %.12g\n", obj);
}

int fail(const lbopt_case* c, int rc) {
  std::fprintf(stderr, "error: %s\n", lbopt_error_message(c));
  return exit_code(rc);
}

std::string out_file(const lbopt_case* c, const char* name) {
  char dir[4096];
  if (lbopt_out_dir(c, dir, sizeof dir) != LBOPT_OK) return name;
  return std::string(dir) + "/" + name;
}

int cmd_simulate(const CommonOpts& o) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  if (int rc = lbopt_simulate(h.c)) return fail(h.c, rc);
  print_summary(h.c);
  return 0;
}

int cmd_adjoint(const CommonOpts& o) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  if (o.state_path.empty()) {
    // No snapshot given: produce one.
    if (int rc = lbopt_simulate(h.c)) return fail(h.c, rc);
  }
  if (int rc = lbopt_solve_adjoint(h.c)) return fail(h.c, rc);
  print_summary(h.c);
  std::printf("gradient   = %s\n", out_file(h.c, "gradient.csv").c_str());
  return 0;
}

int cmd_grad_check(const CommonOpts& o) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  double max_rel = 0;
  if (int rc = lbopt_grad_check(h.c, &max_rel)) return fail(h.c, rc);
  std::ifstream table(out_file(h.c, "gradcheck.csv"));
  for (std::string line; std::getline(table, line);) std::printf("%s\n", line.c_str());
  std::printf("max_rel_err = %.6g\n", max_rel);
  return 0;
}

int cmd_optimize(const CommonOpts& o) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  if (int rc = lbopt_optimize(h.c)) return fail(h.c, rc);
  print_summary(h.c);
  std::printf("design     = %s\n", out_file(h.c, "design.csv").c_str());
  return 0;
}

int cmd_threshold(const CommonOpts& o) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  double eta = 0, obj = 0;
  if (int rc = lbopt_threshold_sweep(h.c, &eta, &obj)) return fail(h.c, rc);
  std::printf("best_eta       = %.6g\n", eta);
  std::printf("best_objective = %.12g\n", obj);
  std::printf("curve          = %s\n", out_file(h.c, "threshold.csv").c_str());
  return 0;
}

int cmd_partition_test(const CommonOpts& o, long steps) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  double max_diff = 0;
  if (int rc = lbopt_partition_check(h.c, steps, &max_diff)) return fail(h.c, rc);
  std::printf("steps    = %ld\n", steps);
  std::printf("max_diff = %.6g\n", max_diff);
  return 0;
}

int cmd_scaling(const CommonOpts& o, long steps) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  if (int rc = lbopt_scaling_report(h.c, steps)) return fail(h.c, rc);
  std::ifstream table(out_file(h.c, "scaling.csv"));
  for (std::string line; std::getline(table, line);) std::printf("%s\n", line.c_str());
  return 0;
}

int cmd_fins(const CommonOpts& o, int count, int width) {
  Handle h;
  if (int ec = open_case(o, h)) return ec;
  if (int rc = lbopt_generate_fins(h.c, count, width)) return fail(h.c, rc);
  if (int rc = lbopt_simulate(h.c)) return fail(h.c, rc);
  print_summary(h.c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice Boltzmann flow/heat solver with adjoint-driven topology optimization"};
  app.require_subcommand(1);
  int ret = 0;

  CommonOpts sim_o;
  CLI::App* sim = app.add_subcommand("simulate", "run the primal solver to its fixed point");
  add_common(sim, sim_o);
  sim->callback([&] { ret = cmd_simulate(sim_o); });

  CommonOpts adj_o;
  CLI::App* adj = app.add_subcommand("adjoint", "solve the adjoint and dump the gradient");
  add_common(adj, adj_o);
  adj->add_option("--state", adj_o.state_path, "converged primal state CSV (else simulate first)");
  adj->callback([&] { ret = cmd_adjoint(adj_o); });

  CommonOpts gc_o;
  CLI::App* gc = app.add_subcommand("grad-check", "adjoint gradient vs finite differences");
  add_common(gc, gc_o);
  gc->callback([&] { ret = cmd_grad_check(gc_o); });

  CommonOpts opt_o;
  CLI::App* opt = app.add_subcommand("optimize", "run the configured design loop");
  add_common(opt, opt_o);
  opt->callback([&] { ret = cmd_optimize(opt_o); });

  CommonOpts th_o;
  CLI::App* th = app.add_subcommand("threshold", "sweep binarization cutoffs");
  add_common(th, th_o);
  th->callback([&] { ret = cmd_threshold(th_o); });

  CommonOpts pt_o;
  long pt_steps = 200;
  CLI::App* pt = app.add_subcommand("partition-test", "compare partitioned vs monolithic stepping");
  add_common(pt, pt_o);
  pt->add_option("--steps", pt_steps, "iterations to compare");
  pt->callback([&] { ret = cmd_partition_test(pt_o, pt_steps); });

  CommonOpts sc_o;
  long sc_steps = 100;
  CLI::App* sc = app.add_subcommand("scaling", "steps-per-second for 1..workers");
  add_common(sc, sc_o);
  sc->add_option("--steps", sc_steps, "iterations per measurement");
  sc->callback([&] { ret = cmd_scaling(sc_o, sc_steps); });

  CommonOpts fin_o;
  int fin_count = 4, fin_width = 2;
  CLI::App* fin = app.add_subcommand("fins", "replace the design with a fin comb and simulate");
  add_common(fin, fin_o);
  fin->add_option("count", fin_count, "number of fins")->required();
  fin->add_option("width", fin_width, "fin width in nodes")->required();
  fin->callback([&] { ret = cmd_fins(fin_o, fin_count, fin_width); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return ret;
}
