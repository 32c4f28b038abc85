#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "lbopt/dual.hpp"
#include "lbopt/lattice.hpp"

namespace lbopt {

// Design variable field: one value per node, active only inside the mask.
// Values outside [0,1] are clamped on assignment (a global warning counter is
// bumped so tests can observe it). w = 1 is fluid, w = 0 is solid.
struct DesignField {
  LatticeShape shape;
  std::vector<double> w;        // per node, full grid
  std::vector<std::uint8_t> mask;
  std::vector<long> nodes;      // flat indices of masked nodes, ascending

  DesignField() = default;
  DesignField(LatticeShape s, std::vector<std::uint8_t> m);

  long design_count() const { return static_cast<long>(nodes.size()); }
  void set(long node, double value);          // clamps to [0,1]
  void fill_design(double value);             // masked nodes only
};

// Number of clamped assignments since process start (observable in tests).
long design_clamp_warnings();

// Brinkman-style switch G(w) applied multiplicatively to the node velocity.
struct SwitchingSpec {
  enum class Form : std::uint8_t {
    SolidPower,  // G = 1 - (1-w)^theta
    FluidPower,  // G = w^theta
  };
  Form form = Form::SolidPower;
  double theta = 3.0;
};

template <class T>
T switching_eval(const SwitchingSpec& s, T w) {
  if (s.form == SwitchingSpec::Form::SolidPower) return T(1.0) - pow(T(1.0) - w, s.theta);
  return pow(w, s.theta);
}

double switching_derivative(const SwitchingSpec& s, double w);

// Linear blend of fluid/solid thermal diffusivity.
template <class T>
T diffusivity(T w, double beta_fluid, double beta_solid) {
  return w * T(beta_fluid) + (T(1.0) - w) * T(beta_solid);
}

// Intermediate-density penalty P = sum_masked w (1 - w) and its gradient
// dP/dw = 1 - 2w (deterministic pairwise sum).
struct PenaltyValue {
  double value = 0.0;
  std::vector<double> grad;  // per design node, order = DesignField::nodes
};
PenaltyValue penalty(const DesignField& d);

// Hard threshold at eta inside the mask: w >= eta -> 1 else 0.
DesignField apply_threshold(const DesignField& d, double eta);

}  // namespace lbopt
