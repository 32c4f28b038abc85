/* C interface to the flow/heat topology-optimization engine.
 *
 * Every function returns a status code; LBOPT_OK means success. Failures
 * store a message on the handle (lbopt_error_message). Constructor failures
 * store it in thread-local storage instead (lbopt_last_open_error).
 * Handles are not thread-safe; use one per thread.
 */
#ifndef LBOPT_H
#define LBOPT_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct lbopt_case lbopt_case; /* opaque */

enum {
  LBOPT_OK = 0,
  LBOPT_E_ARG = 1,     /* null handle or bad argument */
  LBOPT_E_CONFIG = 2,  /* config syntax or invariant violation */
  LBOPT_E_NUMERIC = 3, /* divergence, non-finite state, lock-step fault */
  LBOPT_E_IO = 4,      /* file system failure */
  LBOPT_E_STATE = 5    /* operation out of order */
};

const char* lbopt_version(void);

/* --- lifecycle --- */
int lbopt_open(const char* config_path, lbopt_case** out);
int lbopt_open_text(const char* config_text, lbopt_case** out);
void lbopt_close(lbopt_case* c);
const char* lbopt_last_open_error(void);
const char* lbopt_error_message(const lbopt_case* c);

/* --- configuration --- */
int lbopt_set(lbopt_case* c, const char* dotted_key, const char* value);
int lbopt_save_config(lbopt_case* c, const char* path);

/* --- operations (outputs land in the configured [output] dir) --- */
int lbopt_simulate(lbopt_case* c);
int lbopt_solve_adjoint(lbopt_case* c);
int lbopt_optimize(lbopt_case* c);
int lbopt_grad_check(lbopt_case* c, double* max_rel_err);
int lbopt_threshold_sweep(lbopt_case* c, double* best_eta, double* best_objective);
int lbopt_partition_check(lbopt_case* c, long steps, double* max_diff);
int lbopt_scaling_report(lbopt_case* c, long steps);
int lbopt_cost_ratio(lbopt_case* c, long steps, double* ratio);
int lbopt_generate_fins(lbopt_case* c, int count, int width);
int lbopt_apply_threshold(lbopt_case* c, double eta);
int lbopt_load_state_csv(lbopt_case* c, const char* path);
int lbopt_load_design_csv(lbopt_case* c, const char* path);
/* Pass NULL (or "") to skip either output. */
int lbopt_write_fields(lbopt_case* c, const char* csv_path, const char* vtk_path);

/* --- queries about the last completed operation --- */
int lbopt_shape(const lbopt_case* c, int* nx, int* ny, int* nz);
int lbopt_objective_value(const lbopt_case* c, double* value);
int lbopt_iterations(const lbopt_case* c, long* iterations);
int lbopt_converged(const lbopt_case* c, int* flag);
int lbopt_residual(const lbopt_case* c, double* value);
int lbopt_out_dir(const lbopt_case* c, char* buf, int cap);

#ifdef __cplusplus
}
#endif

#endif /* LBOPT_H */
