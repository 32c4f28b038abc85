#include "lbopt/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "lbopt/errors.hpp"
#include "lbopt/reduce.hpp"

namespace lbopt {

namespace {

int norm2(const Vec3i& e) { return e.x * e.x + e.y * e.y + e.z * e.z; }

std::vector<int> find_opposites(const std::vector<Vec3i>& v) {
  std::vector<int> opp(v.size(), -1);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const Vec3i neg{-v[j].x, -v[j].y, -v[j].z};
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k] == neg) {
        opp[j] = static_cast<int>(k);
        break;
      }
  }
  return opp;
}

// Moment basis rows as polynomials in the velocity components. Evaluating a
// row generator on every e_j gives one row of the moment matrix, so the same
// construction works for any velocity ordering.
Matrix build_moment_matrix_d2q9(const std::vector<Vec3i>& v) {
  Matrix m(9);
  for (int j = 0; j < 9; ++j) {
    const double ex = v[j].x, ey = v[j].y;
    const double n2 = ex * ex + ey * ey;
    const double rows[9] = {
        1.0,
        3.0 * n2 - 4.0,                       // energy
        4.0 - 10.5 * n2 + 4.5 * n2 * n2,      // energy squared
        ex,                                   // momentum x
        (3.0 * n2 - 5.0) * ex,                // heat flux x
        ey,                                   // momentum y
        (3.0 * n2 - 5.0) * ey,                // heat flux y
        ex * ex - ey * ey,                    // diagonal stress
        ex * ey,                              // off-diagonal stress
    };
    for (int i = 0; i < 9; ++i) m.at(i, j) = rows[i];
  }
  return m;
}

Matrix build_moment_matrix_d3q19(const std::vector<Vec3i>& v) {
  Matrix m(19);
  for (int j = 0; j < 19; ++j) {
    const double ex = v[j].x, ey = v[j].y, ez = v[j].z;
    const double n2 = ex * ex + ey * ey + ez * ez;
    const double rows[19] = {
        1.0,
        19.0 * n2 - 30.0,                         // energy
        (21.0 * n2 * n2 - 53.0 * n2 + 24.0) / 2,  // energy squared
        ex,
        (5.0 * n2 - 9.0) * ex,                    // heat flux x
        ey,
        (5.0 * n2 - 9.0) * ey,
        ez,
        (5.0 * n2 - 9.0) * ez,
        3.0 * ex * ex - n2,                       // diagonal stress
        (3.0 * n2 - 5.0) * (3.0 * ex * ex - n2),  // its quartic partner
        ey * ey - ez * ez,
        (3.0 * n2 - 5.0) * (ey * ey - ez * ez),
        ex * ey,
        ey * ez,
        ex * ez,
        ex * (ey * ey - ez * ez),                 // third-order antisymmetric
        ey * (ez * ez - ex * ex),
        ez * (ex * ex - ey * ey),
    };
    for (int i = 0; i < 19; ++i) m.at(i, j) = rows[i];
  }
  return m;
}

LatticeDescriptor make_d2q9() {
  LatticeDescriptor d;
  d.name = VelocitySet::D2Q9;
  d.velocities = {{0, 0, 0},  {1, 0, 0},  {-1, 0, 0}, {0, 1, 0},  {0, -1, 0},
                  {1, 1, 0},  {-1, 1, 0}, {1, -1, 0}, {-1, -1, 0}};
  d.opposite = find_opposites(d.velocities);
  d.weights = {4.0 / 9,  1.0 / 9,  1.0 / 9,  1.0 / 9,  1.0 / 9,
               1.0 / 36, 1.0 / 36, 1.0 / 36, 1.0 / 36};
  d.moment_matrix = build_moment_matrix_d2q9(d.velocities);
  d.validate();
  return d;
}

LatticeDescriptor make_d2q5() {
  LatticeDescriptor d;
  d.name = VelocitySet::D2Q5;
  d.velocities = {{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  d.opposite = find_opposites(d.velocities);
  d.weights = {1.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
  d.validate();
  return d;
}

LatticeDescriptor make_d3q19() {
  LatticeDescriptor d;
  d.name = VelocitySet::D3Q19;
  d.velocities = {{0, 0, 0},
                  {1, 0, 0},  {-1, 0, 0},  {0, 1, 0},  {0, -1, 0},  {0, 0, 1},  {0, 0, -1},
                  {1, 1, 0},  {-1, 1, 0},  {1, -1, 0}, {-1, -1, 0},
                  {1, 0, 1},  {-1, 0, 1},  {1, 0, -1}, {-1, 0, -1},
                  {0, 1, 1},  {0, -1, 1},  {0, 1, -1}, {0, -1, -1}};
  d.opposite = find_opposites(d.velocities);
  d.weights.assign(19, 1.0 / 36);
  d.weights[0] = 1.0 / 3;
  for (int j = 1; j <= 6; ++j) d.weights[j] = 1.0 / 18;
  d.moment_matrix = build_moment_matrix_d3q19(d.velocities);
  d.validate();
  return d;
}

// Advection-diffusion lattice for the temperature field. The rest weight is
// zero so that the lattice speed of sound matches the flow lattice (1/3) and
// the relaxation relation 1/omega = 0.5 + 3*beta holds with the linear
// equilibrium; all required moment identities still hold.
LatticeDescriptor make_d3q7() {
  LatticeDescriptor d;
  d.name = VelocitySet::D3Q7;
  d.velocities = {{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                  {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  d.opposite = find_opposites(d.velocities);
  d.weights = {0.0, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
  d.validate();
  return d;
}

}  // namespace

void LatticeDescriptor::validate() const {
  const int m = size();
  if (m <= 0) throw ConfigError("lattice descriptor is empty");
  if (static_cast<int>(opposite.size()) != m || static_cast<int>(weights.size()) != m)
    throw ConfigError("lattice descriptor arrays disagree in length");

  for (int j = 0; j < m; ++j) {
    const int o = opposite[j];
    if (o < 0 || o >= m || opposite[o] != j)
      throw ConfigError("opposite map is not an involution");
    const Vec3i neg{-velocities[j].x, -velocities[j].y, -velocities[j].z};
    if (!(velocities[o] == neg)) throw ConfigError("opposite slot is not -e");
    if (weights[j] < 0.0 || (weights[j] == 0.0 && norm2(velocities[j]) != 0))
      throw ConfigError("weights must be positive (zero allowed for the rest slot only)");
  }

  double wsum = 0.0, m1[3] = {0, 0, 0};
  double m2[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (int j = 0; j < m; ++j) {
    const double e[3] = {double(velocities[j].x), double(velocities[j].y),
                         double(velocities[j].z)};
    wsum += weights[j];
    for (int a = 0; a < 3; ++a) {
      m1[a] += weights[j] * e[a];
      for (int b = 0; b < 3; ++b) m2[a][b] += weights[j] * e[a] * e[b];
    }
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw ConfigError("lattice weights do not sum to 1");
  const bool flat[3] = {false, false, name == VelocitySet::D2Q9 || name == VelocitySet::D2Q5};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(m1[a]) > 1e-12) throw ConfigError("first weight moment is not zero");
    const double want = flat[a] ? 0.0 : 1.0 / 3.0;
    if (std::abs(m2[a][a] - want) > 1e-12)
      throw ConfigError("second weight moment is not isotropic");
    for (int b = 0; b < 3; ++b)
      if (a != b && std::abs(m2[a][b]) > 1e-12)
        throw ConfigError("second weight moment has off-diagonal terms");
  }

  if (moment_matrix) {
    if (moment_matrix->n != m) throw ConfigError("moment matrix size mismatch");
    inverse(*moment_matrix);  // throws if singular
  }
}

const LatticeDescriptor& LatticeDescriptor::d2q9() {
  static const LatticeDescriptor d = make_d2q9();
  return d;
}
const LatticeDescriptor& LatticeDescriptor::d2q5() {
  static const LatticeDescriptor d = make_d2q5();
  return d;
}
const LatticeDescriptor& LatticeDescriptor::d3q19() {
  static const LatticeDescriptor d = make_d3q19();
  return d;
}
const LatticeDescriptor& LatticeDescriptor::d3q7() {
  static const LatticeDescriptor d = make_d3q7();
  return d;
}

namespace {

// Shift one plane by e with periodic wrap on every axis. Row-contiguous in x,
// so the x-shift is a rotation of each row.
template <class R>
void shift_plane(std::span<const R> src, std::span<R> dst, const LatticeShape& s,
                 const Vec3i& e) {
  const int nx = s.nx, ny = s.ny, nz = s.nz;
  for (int z = 0; z < nz; ++z) {
    const int zt = (z + e.z + nz) % nz;
    for (int y = 0; y < ny; ++y) {
      const int yt = (y + e.y + ny) % ny;
      const R* in = src.data() + flat_index(s, 0, y, z);
      R* out = dst.data() + flat_index(s, 0, yt, zt);
      if (e.x == 0) {
        std::copy(in, in + nx, out);
      } else if (e.x == 1) {
        out[0] = in[nx - 1];
        std::copy(in, in + nx - 1, out + 1);
      } else {  // e.x == -1
        out[nx - 1] = in[0];
        std::copy(in + 1, in + nx, out);
      }
    }
  }
}

}  // namespace

template <class R>
void stream(StateField<R>& f, const LatticeDescriptor& d) {
  if (f.m() != d.size()) throw ConfigError("state field plane count does not match lattice");
  for (int j = 0; j < d.size(); ++j)
    shift_plane<R>(f.plane(j), f.scratch_plane(j), f.shape(), d.velocities[j]);
  f.flip();
}

template <class R>
void reverse_stream(StateField<R>& f, const LatticeDescriptor& d) {
  if (f.m() != d.size()) throw ConfigError("state field plane count does not match lattice");
  for (int j = 0; j < d.size(); ++j) {
    const Vec3i e = d.velocities[j];
    shift_plane<R>(f.plane(j), f.scratch_plane(j), f.shape(), {-e.x, -e.y, -e.z});
  }
  f.flip();
}

template <class R>
double total_density_sum(const StateField<R>& f) {
  return pairwise_sum(f.raw(f.buffer_id()));
}

template <class R>
double field_dot(const StateField<R>& a, const StateField<R>& b) {
  if (a.m() != b.m() || !(a.shape() == b.shape()))
    throw ConfigError("field dot product requires identical layouts");
  return pairwise_dot(a.raw(a.buffer_id()), b.raw(b.buffer_id()));
}

template void stream<float>(StateField<float>&, const LatticeDescriptor&);
template void stream<double>(StateField<double>&, const LatticeDescriptor&);
template void reverse_stream<float>(StateField<float>&, const LatticeDescriptor&);
template void reverse_stream<double>(StateField<double>&, const LatticeDescriptor&);
template double total_density_sum<float>(const StateField<float>&);
template double total_density_sum<double>(const StateField<double>&);
template double field_dot<float>(const StateField<float>&, const StateField<float>&);
template double field_dot<double>(const StateField<double>&, const StateField<double>&);

}  // namespace lbopt
