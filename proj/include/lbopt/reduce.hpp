#pragma once

#include <cstddef>
#include <span>

namespace lbopt {

// Deterministic pairwise-tree reductions.
//
// Every sum the solver reports (densities, objectives, dot products, gradients)
// goes through these so the floating-point result depends only on the operand
// order, never on chunking or thread count. Accumulation is in double even for
// float fields.

namespace detail {
inline constexpr std::size_t kLeaf = 16;
}

template <class R>
double pairwise_sum(std::span<const R> x) {
  if (x.size() <= detail::kLeaf) {
    double s = 0.0;
    for (const R& v : x) s += static_cast<double>(v);
    return s;
  }
  const std::size_t h = x.size() / 2;
  return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

template <class R>
double pairwise_dot(std::span<const R> a, std::span<const R> b) {
  if (a.size() <= detail::kLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
  }
  const std::size_t h = a.size() / 2;
  return pairwise_dot(a.first(h), b.first(h)) + pairwise_dot(a.subspan(h), b.subspan(h));
}

// Pairwise sum over values produced by an index -> double functor.
template <class F>
double pairwise_sum_fn(std::size_t lo, std::size_t hi, const F& f) {
  if (hi - lo <= detail::kLeaf) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum_fn(lo, mid, f) + pairwise_sum_fn(mid, hi, f);
}

}  // namespace lbopt
