#include "lbopt/topology.hpp"

#include "lbopt/errors.hpp"
#include "lbopt/reduce.hpp"

namespace lbopt {

namespace {
std::atomic<long> g_clamp_warnings{0};
}

long design_clamp_warnings() { return g_clamp_warnings.load(); }

DesignField::DesignField(LatticeShape s, std::vector<std::uint8_t> m)
    : shape(s), w(s.nodes(), 1.0), mask(std::move(m)) {
  if (static_cast<long>(mask.size()) != s.nodes())
    throw ConfigError("design mask size does not match lattice shape");
  for (long i = 0; i < s.nodes(); ++i)
    if (mask[i]) nodes.push_back(i);
}

void DesignField::set(long node, double value) {
  if (value < 0.0 || value > 1.0) {
    g_clamp_warnings.fetch_add(1, std::memory_order_relaxed);
    value = value < 0.0 ? 0.0 : 1.0;
  }
  w[node] = value;
}

void DesignField::fill_design(double value) {
  for (long i : nodes) set(i, value);
}

double switching_derivative(const SwitchingSpec& s, double w) {
  if (s.form == SwitchingSpec::Form::SolidPower)
    return s.theta * std::pow(1.0 - w, s.theta - 1.0);
  return s.theta * std::pow(w, s.theta - 1.0);
}

PenaltyValue penalty(const DesignField& d) {
  PenaltyValue out;
  out.grad.resize(d.nodes.size());
  for (std::size_t i = 0; i < d.nodes.size(); ++i)
    out.grad[i] = 1.0 - 2.0 * d.w[d.nodes[i]];
  out.value = pairwise_sum_fn(0, d.nodes.size(), [&](std::size_t i) {
    const double wi = d.w[d.nodes[i]];
    return wi * (1.0 - wi);
  });
  return out;
}

DesignField apply_threshold(const DesignField& d, double eta) {
  DesignField out = d;
  for (long i : out.nodes) out.w[i] = d.w[i] >= eta ? 1.0 : 0.0;
  return out;
}

}  // namespace lbopt
