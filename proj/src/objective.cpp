#include "lbopt/objective.hpp"

#include <array>
#include <cmath>

#include "lbopt/reduce.hpp"

namespace lbopt {

void ObjectiveSpec::set_support(const LatticeShape& shape, std::vector<long> nodes) {
  support = std::move(nodes);
  on_support.assign(shape.nodes(), 0);
  for (long i : support) {
    if (i < 0 || i >= shape.nodes()) throw ConfigError("objective support node out of range");
    on_support[i] = 1;
  }
}

template <class T>
T node_term(const ObjectiveSpec& spec, const System& sys, std::span<const T> fin) {
  if (spec.kind == ObjectiveKind::Synthetic) {
    T s(0);
    for (int p = 0; p < sys.m; ++p) s += fin[p] * fin[p];
    return T(0.5) * s;
  }
  T rho, u[3];
  flow_moments(*sys.flow, fin.first(sys.mf), rho, u);
  const T temp = thermal_moment(fin.subspan(sys.mf));
  const T un = T(double(spec.flux_sign)) * u[spec.flux_axis];
  if (spec.kind == ObjectiveKind::Mixing) return un * (T(1.0) - temp * temp);
  return un * temp;  // HeatFlux
}

template <class T>
void node_partial(const ObjectiveSpec& spec, const System& sys, std::span<const T> fin,
                  std::span<T> out) {
  if (spec.kind == ObjectiveKind::Synthetic) {
    for (int p = 0; p < sys.m; ++p) out[p] = fin[p];
    return;
  }
  T rho, u[3];
  flow_moments(*sys.flow, fin.first(sys.mf), rho, u);
  const T temp = thermal_moment(fin.subspan(sys.mf));
  const int a = spec.flux_axis;
  const T sgn = T(double(spec.flux_sign));
  const T un = sgn * u[a];

  // d u_a / d f_k = (e_ka - u_a) / rho; temperature slots sum directly into T.
  T du_coeff;
  if (spec.kind == ObjectiveKind::Mixing)
    du_coeff = (T(1.0) - temp * temp) * sgn;
  else
    du_coeff = temp * sgn;

  for (int k = 0; k < sys.mf; ++k) {
    const Vec3i& e = sys.flow->velocities[k];
    const double ea = a == 0 ? e.x : (a == 1 ? e.y : e.z);
    out[k] = du_coeff * (T(ea) - u[a]) / rho;
  }
  const T dT_coeff = spec.kind == ObjectiveKind::Mixing ? T(-2.0) * temp * un : un;
  for (int k = 0; k < sys.mt; ++k) out[sys.mf + k] = dT_coeff;
}

template <class R>
double evaluate_raw(const ObjectiveSpec& spec, const System& sys, const StateField<R>& f) {
  std::array<R, kMaxM> fin;
  return pairwise_sum_fn(0, spec.support.size(), [&](std::size_t i) {
    const long idx = spec.support[i];
    for (int p = 0; p < sys.m; ++p) fin[p] = f.plane(p)[idx];
    return double(node_term<R>(spec, sys, {fin.data(), size_t(sys.m)}));
  });
}

template <class R>
double evaluate(const ObjectiveSpec& spec, const System& sys, const StateField<R>& f,
                const DesignField& design) {
  double v = evaluate_raw(spec, sys, f);
  if (spec.penalty_weight != 0.0) v -= spec.penalty_weight * penalty(design).value;
  return v;
}

void PenaltySchedule::validate() const {
  if (w0 < 0) throw ConfigError("penalty weight must be non-negative");
  if (w0 > 0 && !(growth > 1.0))
    throw ConfigError("penalty growth factor must exceed 1");
  if (interval < 1) throw ConfigError("penalty interval must be at least 1");
  if (start < 0) throw ConfigError("penalty start must be non-negative");
  if (cap < 0) throw ConfigError("penalty cap must be non-negative");
}

double PenaltySchedule::weight_at(long iteration) const {
  if (w0 <= 0.0 || iteration < start) return 0.0;
  const double expo = double(iteration - start) / double(interval);
  double w = w0 * std::pow(growth, expo);
  if (cap > 0.0 && w > cap) w = cap;
  return w;
}

#define LBOPT_INSTANTIATE_OBJ(T)                                                          \
  template T node_term<T>(const ObjectiveSpec&, const System&, std::span<const T>);       \
  template void node_partial<T>(const ObjectiveSpec&, const System&, std::span<const T>, \
                                std::span<T>);

LBOPT_INSTANTIATE_OBJ(float)
LBOPT_INSTANTIATE_OBJ(double)
LBOPT_INSTANTIATE_OBJ(Dual<float>)
LBOPT_INSTANTIATE_OBJ(Dual<double>)
#undef LBOPT_INSTANTIATE_OBJ

template double evaluate_raw<float>(const ObjectiveSpec&, const System&,
                                    const StateField<float>&);
template double evaluate_raw<double>(const ObjectiveSpec&, const System&,
                                     const StateField<double>&);
template double evaluate<float>(const ObjectiveSpec&, const System&, const StateField<float>&,
                                const DesignField&);
template double evaluate<double>(const ObjectiveSpec&, const System&,
                                 const StateField<double>&, const DesignField&);

}  // namespace lbopt
