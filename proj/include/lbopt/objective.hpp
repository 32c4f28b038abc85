#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lbopt/collision.hpp"

namespace lbopt {

enum class ObjectiveKind : std::uint8_t {
  Mixing,    // sum over support of u_n (1 - T^2): rewards mixed-through flow
  HeatFlux,  // sum over support of u_n T: convective heat leaving the domain
  Synthetic, // 1/2 sum_j fin_j^2 over support, exercised by tests only
};

// Separable objective F = sum_x F^x over a support set (normally one lattice
// plane across the outflow). Maximisation convention throughout.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::Mixing;
  std::vector<long> support;            // flat node indices, ascending
  std::vector<std::uint8_t> on_support; // full-grid membership flag
  int flux_axis = 0;
  int flux_sign = 1;
  double penalty_weight = 0.0;          // current composite weight

  void set_support(const LatticeShape& shape, std::vector<long> nodes);
};

// F^x from one node's populations (flow + thermal slots).
template <class T>
T node_term(const ObjectiveSpec& spec, const System& sys, std::span<const T> fin);

// dF^x/d(fin_k) for all coupled slots of one node.
template <class T>
void node_partial(const ObjectiveSpec& spec, const System& sys, std::span<const T> fin,
                  std::span<T> out);

// Raw Eq.-3 objective over the support (pairwise-tree sum, current buffer).
template <class R>
double evaluate_raw(const ObjectiveSpec& spec, const System& sys, const StateField<R>& f);

// Composite objective: raw value minus penalty_weight * sum w(1-w).
template <class R>
double evaluate(const ObjectiveSpec& spec, const System& sys, const StateField<R>& f,
                const DesignField& design);

// Exponentially growing intermediate-density penalty weight.
struct PenaltySchedule {
  double w0 = 0.0;      // weight at activation (0 disables the penalty)
  double growth = 10.0; // multiplier applied every `interval` iterations
  long interval = 1000;
  long start = 0;       // first iteration the penalty is active
  double cap = 0.0;     // upper bound on the weight (0 = w0 disabled case keeps 0)

  void validate() const;
  double weight_at(long iteration) const;
};

}  // namespace lbopt
