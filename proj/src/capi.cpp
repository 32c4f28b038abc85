#include "lbopt/lbopt.h"

#include <cstring>
#include <string>

#include "lbopt/case.hpp"

struct lbopt_case {
  lbopt::Case impl;
  std::string error;

  explicit lbopt_case(const lbopt::CaseConfig& cfg) : impl(cfg) {}
};

namespace {

thread_local std::string g_open_error;

template <class F>
int open_guarded(lbopt_case** out, F&& make) {
  if (!out) return LBOPT_E_ARG;
  *out = nullptr;
  g_open_error.clear();
  try {
    *out = new lbopt_case(make());
    return LBOPT_OK;
  } catch (const lbopt::ConfigError& e) {
    g_open_error = e.what();
    return LBOPT_E_CONFIG;
  } catch (const lbopt::IoError& e) {
    g_open_error = e.what();
    return LBOPT_E_IO;
  } catch (const std::exception& e) {
    g_open_error = e.what();
    return LBOPT_E_NUMERIC;
  }
}

template <class F>
int guarded(lbopt_case* c, F&& fn) {
  if (!c) return LBOPT_E_ARG;
  try {
    fn();
    c->error.clear();
    return LBOPT_OK;
  } catch (const lbopt::ConfigError& e) {
    c->error = e.what();
    return LBOPT_E_CONFIG;
  } catch (const lbopt::IoError& e) {
    c->error = e.what();
    return LBOPT_E_IO;
  } catch (const lbopt::StateError& e) {
    c->error = e.what();
    return LBOPT_E_STATE;
  } catch (const std::exception& e) {  // NumericError, ProtocolError, the rest
    c->error = e.what();
    return LBOPT_E_NUMERIC;
  }
}

}  // namespace

extern "C" {

const char* lbopt_version(void) { return "0.1.0"; }

int lbopt_open(const char* config_path, lbopt_case** out) {
  if (!config_path) return LBOPT_E_ARG;
  return open_guarded(out, [&] { return lbopt::CaseConfig::parse_file(config_path); });
}

int lbopt_open_text(const char* config_text, lbopt_case** out) {
  if (!config_text) return LBOPT_E_ARG;
  return open_guarded(out, [&] {
    return lbopt::CaseConfig::parse_text(config_text, "<text>");
  });
}

void lbopt_close(lbopt_case* c) { delete c; }

const char* lbopt_last_open_error(void) { return g_open_error.c_str(); }

const char* lbopt_error_message(const lbopt_case* c) {
  return c ? c->error.c_str() : "null handle";
}

int lbopt_set(lbopt_case* c, const char* dotted_key, const char* value) {
  if (!dotted_key || !value) return LBOPT_E_ARG;
  return guarded(c, [&] { c->impl.set(dotted_key, value); });
}

int lbopt_save_config(lbopt_case* c, const char* path) {
  if (!path) return LBOPT_E_ARG;
  return guarded(c, [&] { c->impl.save_config(path); });
}

int lbopt_simulate(lbopt_case* c) {
  return guarded(c, [&] { c->impl.simulate(); });
}

int lbopt_solve_adjoint(lbopt_case* c) {
  return guarded(c, [&] { c->impl.run_adjoint(); });
}

int lbopt_optimize(lbopt_case* c) {
  return guarded(c, [&] { c->impl.optimize(); });
}

int lbopt_grad_check(lbopt_case* c, double* max_rel_err) {
  return guarded(c, [&] {
    const lbopt::GradCheckResult r = c->impl.grad_check();
    if (max_rel_err) *max_rel_err = r.max_rel_err;
  });
}

int lbopt_threshold_sweep(lbopt_case* c, double* best_eta, double* best_objective) {
  return guarded(c, [&] {
    const lbopt::ThresholdResult r = c->impl.threshold();
    if (best_eta) *best_eta = r.best_eta;
    if (best_objective) *best_objective = r.best_objective;
  });
}

int lbopt_partition_check(lbopt_case* c, long steps, double* max_diff) {
  return guarded(c, [&] {
    const lbopt::PartitionCheckResult r = c->impl.run_partition_check(steps);
    if (max_diff) *max_diff = std::max(r.max_primal_diff, r.max_adjoint_diff);
  });
}

int lbopt_scaling_report(lbopt_case* c, long steps) {
  return guarded(c, [&] { c->impl.run_scaling(steps); });
}

int lbopt_cost_ratio(lbopt_case* c, long steps, double* ratio) {
  return guarded(c, [&] {
    const double r = c->impl.measure_cost_ratio(steps);
    if (ratio) *ratio = r;
  });
}

int lbopt_generate_fins(lbopt_case* c, int count, int width) {
  return guarded(c, [&] { c->impl.generate_fins(count, width); });
}

int lbopt_apply_threshold(lbopt_case* c, double eta) {
  return guarded(c, [&] { c->impl.apply_threshold_now(eta); });
}

int lbopt_load_state_csv(lbopt_case* c, const char* path) {
  if (!path) return LBOPT_E_ARG;
  return guarded(c, [&] { c->impl.load_state_file(path); });
}

int lbopt_load_design_csv(lbopt_case* c, const char* path) {
  if (!path) return LBOPT_E_ARG;
  return guarded(c, [&] { c->impl.load_design_file(path); });
}

int lbopt_write_fields(lbopt_case* c, const char* csv_path, const char* vtk_path) {
  return guarded(c, [&] {
    c->impl.write_field_outputs(csv_path ? csv_path : "", vtk_path ? vtk_path : "");
  });
}

int lbopt_shape(const lbopt_case* c, int* nx, int* ny, int* nz) {
  if (!c || !nx || !ny || !nz) return LBOPT_E_ARG;
  const lbopt::LatticeShape& s = c->impl.system().shape;
  *nx = s.nx;
  *ny = s.ny;
  *nz = s.nz;
  return LBOPT_OK;
}

int lbopt_objective_value(const lbopt_case* c, double* value) {
  if (!c || !value) return LBOPT_E_ARG;
  *value = c->impl.objective_value();
  return LBOPT_OK;
}

int lbopt_iterations(const lbopt_case* c, long* iterations) {
  if (!c || !iterations) return LBOPT_E_ARG;
  *iterations = c->impl.iterations();
  return LBOPT_OK;
}

int lbopt_converged(const lbopt_case* c, int* flag) {
  if (!c || !flag) return LBOPT_E_ARG;
  *flag = c->impl.converged() ? 1 : 0;
  return LBOPT_OK;
}

int lbopt_residual(const lbopt_case* c, double* value) {
  if (!c || !value) return LBOPT_E_ARG;
  *value = c->impl.residual();
  return LBOPT_OK;
}

int lbopt_out_dir(const lbopt_case* c, char* buf, int cap) {
  if (!c || !buf || cap < 1) return LBOPT_E_ARG;
  const std::string& d = c->impl.config().out_dir;
  if (int(d.size()) + 1 > cap) return LBOPT_E_ARG;
  std::memcpy(buf, d.c_str(), d.size() + 1);
  return LBOPT_OK;
}

}  // extern "C"
