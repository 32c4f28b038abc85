#pragma once

#include <string>
#include <vector>

#include "lbopt/adjoint.hpp"
#include "lbopt/collision.hpp"
#include "lbopt/optimizer.hpp"
#include "lbopt/partition.hpp"

namespace lbopt {

// All writers use 17-significant-digit decimal formatting so that every double
// survives a dump -> load -> dump cycle byte-identically. NaN cells are left
// empty and read back as NaN. Open failures raise IoError naming the path.

// One row of the macroscopic field table (x,y,z,rho,ux,uy,uz,T,w).
struct FieldRow {
  int x = 0, y = 0, z = 0;
  double rho = 0, ux = 0, uy = 0, uz = 0, T = 0, w = 0;
};

struct FieldTable {
  LatticeShape shape;
  std::vector<FieldRow> rows;  // flat-index order
};

// Macroscopic quantities of one node computed from the coupled state.
template <class R>
FieldRow node_fields(const System& sys, const StateField<R>& f, long idx);

template <class R>
FieldTable make_field_table(const System& sys, const StateField<R>& f);

void write_fields_csv(const FieldTable& t, const std::string& path);
FieldTable read_fields_csv(const std::string& path);

template <class R>
void write_fields_csv(const System& sys, const StateField<R>& f, const std::string& path);

// VTK legacy structured-points file with rho, velocity, T and w arrays.
void write_fields_vtk(const FieldTable& t, const std::string& path);

// Raw coupled state, one row per node: x,y,z,f_1..f_M (current buffer).
template <class R>
void write_state_csv(const System& sys, const StateField<R>& f, const std::string& path);

// Loads into the current buffer; shape and plane count must match.
template <class R>
void read_state_csv(const System& sys, StateField<R>& f, const std::string& path);

// Design field: x,y,z,w for every node. Loading applies only masked nodes.
void write_design_csv(const DesignField& d, const std::string& path);
void read_design_csv(DesignField& d, const std::string& path);

// Gradient: x,y,z,dF_dw,name per design node, then one row per named global
// parameter with coordinates -1.
void write_gradient_csv(const GradientVector& g, const DesignField& d, const std::string& path);

// Objective trace: iter,objective,penalty,weight,composite.
void write_convergence_csv(const std::vector<RunRow>& rows, const std::string& path);

// Full per-iteration record: iter,residual,objective,penalty,weight,composite,grad_norm.
void write_record_csv(const std::vector<RunRow>& rows, const std::string& path);

// Threshold curve: eta,objective (objective empty when that solve diverged).
void write_threshold_csv(const ThresholdResult& r, const std::string& path);

// Scaling table: workers,primal_steps_per_sec,adjoint_steps_per_sec,ratio.
void write_scaling_csv(const std::vector<ScalingRow>& rows, const std::string& path);

// Gradient verification table: name,x,y,z,adjoint,fd,rel_err,step.
void write_gradcheck_csv(const GradCheckResult& r, const std::string& path);

}  // namespace lbopt
