#pragma once

#include <string>
#include <variant>
#include <vector>

#include "lbopt/config.hpp"
#include "lbopt/io.hpp"
#include "lbopt/optimizer.hpp"
#include "lbopt/partition.hpp"

namespace lbopt {

// Summary returned by the long-running operations.
struct OpSummary {
  bool converged = false;
  long iterations = 0;
  double residual = 0.0;
  double objective = 0.0;
  double seconds = 0.0;
};

// One configured case: parsed config, built system, and the state fields at
// the configured precision. All file output lands in [output] dir and honors
// the write_csv / write_vtk switches.
class Case {
 public:
  explicit Case(const CaseConfig& cfg);

  const CaseConfig& config() const { return cfg_; }
  // Stages a section.key override; the combined config is validated and the
  // system rebuilt on the next operation, so interdependent keys can be set
  // in any order.
  void set(const std::string& dotted_key, const std::string& value);
  void save_config(const std::string& path);

  // Primal fixed point (partitioned when workers > 1) + field dumps.
  OpSummary simulate();
  // Adjoint fixed point against the stored primal state + gradient dump.
  // Requires simulate(), optimize() or load_state_file() first.
  OpSummary run_adjoint();
  // One-shot or MMA design loop per [optimizer] method, then a converged
  // final solve; dumps design, fields and the convergence trace.
  OpSummary optimize();
  // Adjoint gradient vs central finite differences on sampled components.
  GradCheckResult grad_check();
  // Threshold sweep over an even eta grid; dumps the curve.
  ThresholdResult threshold();
  // Monolithic vs partitioned per-step equivalence at [optimizer] workers.
  PartitionCheckResult run_partition_check(long steps);
  // Steps-per-second for 1,2,...,workers.
  std::vector<ScalingRow> run_scaling(long steps);
  // Adjoint/primal per-step wall-clock cost ratio.
  double measure_cost_ratio(long steps);

  // Replaces the design with `count` alternating wall-mounted fins of the
  // given width (comparison baseline geometry).
  void generate_fins(int count, int width);
  void apply_threshold_now(double eta);
  void load_state_file(const std::string& path);
  void load_design_file(const std::string& path);
  void write_field_outputs(const std::string& csv_path, const std::string& vtk_path);

  const System& system() const { return built_.sys; }
  const ObjectiveSpec& objective_spec() const { return built_.objective; }

  // Last-operation queries (NaN / zero before the first operation).
  double objective_value() const { return status_.objective; }
  long iterations() const { return status_.iterations; }
  bool converged() const { return status_.converged; }
  double residual() const { return status_.residual; }
  double cost_ratio() const { return status_.cost_ratio; }
  double max_rel_err() const { return status_.max_rel_err; }

 private:
  template <class R>
  struct Engine {
    StateField<R> f, v;
    bool has_primal = false;

    explicit Engine(const System& sys)
        : f(sys.shape, sys.m), v(sys.shape, sys.m) {}
  };

  struct Status {
    double objective = std::numeric_limits<double>::quiet_NaN();
    long iterations = 0;
    bool converged = false;
    double residual = std::numeric_limits<double>::quiet_NaN();
    double cost_ratio = std::numeric_limits<double>::quiet_NaN();
    double max_rel_err = std::numeric_limits<double>::quiet_NaN();
  };

  void rebuild();
  void ensure_built();
  std::string out_path(const std::string& name) const;
  AdjointKernel kernel() const;

  template <class R> OpSummary simulate_impl(Engine<R>& e);
  template <class R> OpSummary adjoint_impl(Engine<R>& e);
  template <class R> OpSummary optimize_impl(Engine<R>& e);
  template <class R> GradCheckResult grad_check_impl(Engine<R>& e);
  template <class R> ThresholdResult threshold_impl();
  template <class R> double cost_ratio_impl(Engine<R>& e, long steps);

  CaseConfig cfg_;
  BuiltCase built_;
  std::variant<Engine<double>, Engine<float>> eng_;
  Status status_;
  bool dirty_ = false;
};

}  // namespace lbopt
