#pragma once

#include <cmath>

namespace lbopt {

// Forward-mode dual number: carries a value and one directional derivative.
//
// The collision kernels are templated on the scalar type, so instantiating
// them with Dual<R> gives exact columns of the node Jacobian (seed one input)
// or exact parameter sensitivities (seed the design value / inlet density).
// Branches compare the value part, i.e. differentiation follows the branch
// the primal takes.
template <class R>
struct Dual {
  R v{};  // value
  R d{};  // derivative

  constexpr Dual() = default;
  constexpr Dual(R value) : v(value) {}
  constexpr Dual(R value, R deriv) : v(value), d(deriv) {}

  constexpr Dual operator-() const { return {-v, -d}; }

  friend constexpr Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
  friend constexpr Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
  friend constexpr Dual operator*(Dual a, Dual b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
  }
  friend constexpr Dual operator/(Dual a, Dual b) {
    const R q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
  }

  Dual& operator+=(Dual o) { return *this = *this + o; }
  Dual& operator-=(Dual o) { return *this = *this - o; }
  Dual& operator*=(Dual o) { return *this = *this * o; }
  Dual& operator/=(Dual o) { return *this = *this / o; }

  friend constexpr bool operator<(Dual a, Dual b) { return a.v < b.v; }
  friend constexpr bool operator>(Dual a, Dual b) { return a.v > b.v; }
  friend constexpr bool operator<=(Dual a, Dual b) { return a.v <= b.v; }
  friend constexpr bool operator>=(Dual a, Dual b) { return a.v >= b.v; }
};

template <class R>
Dual<R> abs(Dual<R> x) {
  return x.v < R(0) ? -x : x;
}

template <class R>
Dual<R> pow(Dual<R> x, double p) {
  const R pv = static_cast<R>(std::pow(static_cast<double>(x.v), p));
  const R dv = static_cast<R>(p * std::pow(static_cast<double>(x.v), p - 1.0));
  return {pv, dv * x.d};
}

template <class R>
bool isfinite(Dual<R> x) {
  return std::isfinite(static_cast<double>(x.v));
}

// Scalar-type helpers so kernels can be written uniformly.
template <class R>
constexpr R value_of(R x) {
  return x;
}
template <class R>
constexpr R value_of(Dual<R> x) {
  return x.v;
}

using std::abs;
using std::isfinite;
using std::pow;

}  // namespace lbopt
