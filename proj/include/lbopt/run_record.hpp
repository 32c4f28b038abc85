#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace lbopt {

// One monitoring row of an iterative run. Fields that do not apply to a given
// run stay NaN and serialize as empty CSV cells.
struct RunRow {
  long iteration = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
  double penalty = std::numeric_limits<double>::quiet_NaN();
  double penalty_weight = std::numeric_limits<double>::quiet_NaN();
  double composite = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
};

// Trace + summary of a primal/adjoint/optimization run.
struct RunRecord {
  std::vector<RunRow> rows;
  bool converged = false;
  long iterations = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

}  // namespace lbopt
