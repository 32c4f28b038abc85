#pragma once

#include <string>

#include "lbopt/adjoint.hpp"
#include "lbopt/collision.hpp"
#include "lbopt/objective.hpp"
#include "lbopt/optimizer.hpp"

namespace lbopt {

// Flat key = value case description, grouped into [lattice] [model] [tags]
// [objective] [optimizer] [output]. Unknown sections or keys are errors with
// file/line diagnostics; serialize() emits every key in canonical order and
// round-trips exactly.
struct CaseConfig {
  // [lattice]
  int nx = 0, ny = 0, nz = 1;

  // [model]
  double nu = 0.02;
  double beta_fluid = 0.003, beta_solid = 0.003;
  double inlet_dp = 0.0;
  double u_clamp = 0.05;
  std::string collision = "fmrt";  // fmrt | bgk
  int precision = 64;              // 64 | 32
  double omega_nonhydro = 1.0;
  double switch_theta = 3.0;
  std::string switch_form = "solid_power";  // solid_power | fluid_power

  // [tags]
  std::string geometry = "channel";  // channel | periodic
  int design_x0 = -1, design_x1 = -1;
  int heater_x0 = -1, heater_x1 = -1;
  std::string inlet_profile = "uniform";  // uniform | split
  double inlet_T = 0.0;

  // [objective]
  std::string objective = "mixing";  // mixing | heatflux | synthetic
  int plane_offset = 1;              // support plane x = nx - 1 - plane_offset
  double penalty_w0 = 0.0;
  double penalty_growth = 10.0;
  long penalty_interval = 1000;
  long penalty_start = 0;
  double penalty_cap = 0.0;

  // [optimizer]
  std::string method = "none";  // none | oneshot | mma
  long iterations = 10000;      // one-shot design updates
  long outer_iterations = 30;   // MMA outer loop
  double zeta = 10.0;
  std::string zeta_stages = "";  // "start:value,start:value,..." overrides zeta
  double initial_w = 1.0;
  double init_noise = 0.0;
  unsigned long seed = 0;
  double primal_tol = 1e-9;
  double adjoint_tol = 1e-9;
  long max_inner = 200000;
  std::string adjoint_stop = "match";      // match | tol
  std::string adjoint_kernel = "analytic"; // analytic | dual
  std::string adjoint_cache = "off";       // off | on
  double move_limit = 0.2;
  int threshold_points = 21;
  long record_interval = 100;
  int workers = 1;

  // [output]
  std::string out_dir = "out";
  bool write_vtk = true;
  bool write_csv = true;

  static CaseConfig parse_file(const std::string& path);
  static CaseConfig parse_text(const std::string& text,
                               const std::string& origin = "<config>");

  // Applies one "section.key" assignment (used by --set overrides).
  void set(const std::string& dotted_key, const std::string& value);

  std::string serialize() const;
  void validate() const;

  bool operator==(const CaseConfig&) const = default;
};

// Assembled runtime pieces.
struct BuiltCase {
  System sys;
  ObjectiveSpec objective;
};

TagMap build_tags(const CaseConfig& cfg);
BuiltCase build_case(const CaseConfig& cfg);

std::vector<ZetaStage> parse_zeta_stages(const CaseConfig& cfg);
PenaltySchedule build_penalty(const CaseConfig& cfg);
OneShotOptions build_one_shot_options(const CaseConfig& cfg);
MmaOptions build_mma_options(const CaseConfig& cfg);

}  // namespace lbopt
