#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lbopt/matrix.hpp"

namespace lbopt {

struct Vec3i {
  int x = 0, y = 0, z = 0;
  friend bool operator==(const Vec3i&, const Vec3i&) = default;
};

struct LatticeShape {
  int nx = 1, ny = 1, nz = 1;
  long nodes() const { return static_cast<long>(nx) * ny * nz; }
  bool is2d() const { return nz == 1; }
  friend bool operator==(const LatticeShape&, const LatticeShape&) = default;
};

inline long flat_index(const LatticeShape& s, int x, int y, int z) {
  return x + static_cast<long>(s.nx) * (y + static_cast<long>(s.ny) * z);
}

enum class VelocitySet : std::uint8_t { D2Q9, D2Q5, D3Q19, D3Q7 };

// Discrete velocity set plus the bits every kernel needs: opposites for
// bounce-back, quadrature weights, and (for the MRT sets) the moment basis.
struct LatticeDescriptor {
  VelocitySet name = VelocitySet::D2Q9;
  std::vector<Vec3i> velocities;
  std::vector<int> opposite;
  std::vector<double> weights;
  std::optional<Matrix> moment_matrix;  // rows = moments; invertible when present

  int size() const { return static_cast<int>(velocities.size()); }

  // Throws ConfigError if the invariants do not hold: opposite is an
  // involution with e[opp] = -e, weights are positive (zero allowed for the
  // rest slot) and sum to 1, first moment vanishes, second moment is
  // isotropic, and the moment matrix (when present) is invertible.
  void validate() const;

  static const LatticeDescriptor& d2q9();
  static const LatticeDescriptor& d2q5();
  static const LatticeDescriptor& d3q19();
  static const LatticeDescriptor& d3q7();
};

// Double-buffered SoA population field: one contiguous plane per density,
// nodes ordered x-fastest (flat index x + nx*(y + ny*z)).
template <class R>
class StateField {
 public:
  StateField() = default;
  StateField(LatticeShape shape, int m)
      : shape_(shape), m_(m) {
    buf_[0].assign(static_cast<std::size_t>(m) * shape.nodes(), R(0));
    buf_[1].assign(static_cast<std::size_t>(m) * shape.nodes(), R(0));
  }

  const LatticeShape& shape() const { return shape_; }
  int m() const { return m_; }
  long nodes() const { return shape_.nodes(); }
  int buffer_id() const { return cur_; }

  std::span<R> plane(int j) {
    return {buf_[cur_].data() + static_cast<std::size_t>(j) * nodes(),
            static_cast<std::size_t>(nodes())};
  }
  std::span<const R> plane(int j) const {
    return {buf_[cur_].data() + static_cast<std::size_t>(j) * nodes(),
            static_cast<std::size_t>(nodes())};
  }
  // Back buffer, written by collide+scatter before flip().
  std::span<R> scratch_plane(int j) {
    return {buf_[1 - cur_].data() + static_cast<std::size_t>(j) * nodes(),
            static_cast<std::size_t>(nodes())};
  }
  std::span<const R> scratch_plane(int j) const {
    return {buf_[1 - cur_].data() + static_cast<std::size_t>(j) * nodes(),
            static_cast<std::size_t>(nodes())};
  }

  std::span<R> raw(int buffer) { return {buf_[buffer].data(), buf_[buffer].size()}; }
  std::span<const R> raw(int buffer) const { return {buf_[buffer].data(), buf_[buffer].size()}; }

  void flip() { cur_ = 1 - cur_; }
  void fill(R v) { std::fill(buf_[cur_].begin(), buf_[cur_].end(), v); }

 private:
  LatticeShape shape_;
  int m_ = 0;
  int cur_ = 0;
  std::vector<R> buf_[2];
};

// Periodic streaming: out_j(x + e_j) = in_j(x) on every axis. Writes the back
// buffer and flips. Throws ConfigError when field.m() != d.size().
template <class R>
void stream(StateField<R>& f, const LatticeDescriptor& d);

// Exact inverse of stream (out_j(x - e_j) = in_j(x)); reverse_stream(stream(f))
// restores f bitwise.
template <class R>
void reverse_stream(StateField<R>& f, const LatticeDescriptor& d);

// Pairwise-tree sum of all densities in the current buffer.
template <class R>
double total_density_sum(const StateField<R>& f);

// Pairwise-tree inner product of two fields (current buffers).
template <class R>
double field_dot(const StateField<R>& a, const StateField<R>& b);

}  // namespace lbopt
