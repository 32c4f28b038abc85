#include "lbopt/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lbopt {

namespace {

std::string g17(double v) {
  if (std::isnan(v)) return "";  // empty cell
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_cell(const std::string& s, const std::string& path, long line) {
  if (s.empty()) return std::nan("");
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ":" + std::to_string(line) + ": bad numeric cell '" + s + "'");
  }
}

long parse_int_cell(const std::string& s, const std::string& path, long line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ":" + std::to_string(line) + ": bad integer cell '" + s + "'");
  }
}

std::vector<std::string> split_row(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

}  // namespace

template <class R>
FieldRow node_fields(const System& sys, const StateField<R>& f, long idx) {
  const long n = f.nodes();
  std::array<R, kMaxFlow> fn{};
  std::array<R, kMaxTherm> gn{};
  for (int j = 0; j < sys.mf; ++j) fn[j] = f.plane(j)[idx];
  for (int j = 0; j < sys.mt; ++j) gn[j] = f.plane(sys.mf + j)[idx];
  (void)n;

  R rho{}, u[3] = {};
  flow_moments<R>(*sys.flow, {fn.data(), std::size_t(sys.mf)}, rho, u);
  const R T = thermal_moment<R>({gn.data(), std::size_t(sys.mt)});

  FieldRow row;
  const LatticeShape& s = sys.shape;
  row.x = int(idx % s.nx);
  row.y = int((idx / s.nx) % s.ny);
  row.z = int(idx / (long(s.nx) * s.ny));
  row.rho = double(rho);
  row.ux = double(u[0]);
  row.uy = double(u[1]);
  row.uz = double(u[2]);
  row.T = double(T);
  row.w = sys.design.w[idx];
  return row;
}

template <class R>
FieldTable make_field_table(const System& sys, const StateField<R>& f) {
  FieldTable t;
  t.shape = sys.shape;
  t.rows.reserve(std::size_t(f.nodes()));
  for (long i = 0; i < f.nodes(); ++i) t.rows.push_back(node_fields(sys, f, i));
  return t;
}

void write_fields_csv(const FieldTable& t, const std::string& path) {
  auto out = open_out(path);
  out << "x,y,z,rho,ux,uy,uz,T,w\n";
  for (const FieldRow& r : t.rows)
    out << r.x << ',' << r.y << ',' << r.z << ',' << g17(r.rho) << ',' << g17(r.ux)
        << ',' << g17(r.uy) << ',' << g17(r.uz) << ',' << g17(r.T) << ',' << g17(r.w)
        << '\n';
  if (!out) throw IoError("write failed: " + path);
}

FieldTable read_fields_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  long ln = 1;
  if (!std::getline(in, line) || split_row(line)[0] != "x")
    throw IoError(path + ": missing field CSV header");
  FieldTable t;
  int maxx = 0, maxy = 0, maxz = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto c = split_row(line);
    if (c.size() != 9) throw IoError(path + ":" + std::to_string(ln) + ": expected 9 cells");
    FieldRow r;
    r.x = int(parse_int_cell(c[0], path, ln));
    r.y = int(parse_int_cell(c[1], path, ln));
    r.z = int(parse_int_cell(c[2], path, ln));
    r.rho = parse_cell(c[3], path, ln);
    r.ux = parse_cell(c[4], path, ln);
    r.uy = parse_cell(c[5], path, ln);
    r.uz = parse_cell(c[6], path, ln);
    r.T = parse_cell(c[7], path, ln);
    r.w = parse_cell(c[8], path, ln);
    maxx = std::max(maxx, r.x);
    maxy = std::max(maxy, r.y);
    maxz = std::max(maxz, r.z);
    t.rows.push_back(r);
  }
  t.shape = {maxx + 1, maxy + 1, maxz + 1};
  if (t.shape.nodes() != long(t.rows.size()))
    throw IoError(path + ": row count does not fill the bounding lattice");
  return t;
}

template <class R>
void write_fields_csv(const System& sys, const StateField<R>& f, const std::string& path) {
  write_fields_csv(make_field_table(sys, f), path);
}

void write_fields_vtk(const FieldTable& t, const std::string& path) {
  auto out = open_out(path);
  const LatticeShape& s = t.shape;
  out << "# vtk DataFile Version 3.0\n";
  out << "macroscopic fields\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << s.nx << ' ' << s.ny << ' ' << s.nz << '\n';
  out << "ORIGIN 0 0 0\n";
  out << "SPACING 1 1 1\n";
  out << "POINT_DATA " << s.nodes() << '\n';

  auto scalars = [&](const char* name, auto get) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (const FieldRow& r : t.rows) out << g17(get(r)) << '\n';
  };
  scalars("rho", [](const FieldRow& r) { return r.rho; });
  out << "VECTORS velocity double\n";
  for (const FieldRow& r : t.rows)
    out << g17(r.ux) << ' ' << g17(r.uy) << ' ' << g17(r.uz) << '\n';
  scalars("T", [](const FieldRow& r) { return r.T; });
  scalars("w", [](const FieldRow& r) { return r.w; });
  if (!out) throw IoError("write failed: " + path);
}

template <class R>
void write_state_csv(const System& sys, const StateField<R>& f, const std::string& path) {
  auto out = open_out(path);
  out << "x,y,z";
  for (int j = 1; j <= sys.m; ++j) out << ",f_" << j;
  out << '\n';
  const LatticeShape& s = sys.shape;
  for (long i = 0; i < f.nodes(); ++i) {
    out << int(i % s.nx) << ',' << int((i / s.nx) % s.ny) << ','
        << int(i / (long(s.nx) * s.ny));
    for (int j = 0; j < sys.m; ++j) out << ',' << g17(double(f.plane(j)[i]));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

template <class R>
void read_state_csv(const System& sys, StateField<R>& f, const std::string& path) {
  auto in = open_in(path);
  std::string line;
  long ln = 1;
  if (!std::getline(in, line)) throw IoError(path + ": empty state file");
  const auto hdr = split_row(line);
  if (int(hdr.size()) != 3 + sys.m)
    throw IoError(path + ": state file has " + std::to_string(int(hdr.size()) - 3) +
                  " planes, case needs " + std::to_string(sys.m));
  long filled = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto c = split_row(line);
    if (int(c.size()) != 3 + sys.m)
      throw IoError(path + ":" + std::to_string(ln) + ": wrong cell count");
    const int x = int(parse_int_cell(c[0], path, ln));
    const int y = int(parse_int_cell(c[1], path, ln));
    const int z = int(parse_int_cell(c[2], path, ln));
    if (x < 0 || x >= sys.shape.nx || y < 0 || y >= sys.shape.ny || z < 0 ||
        z >= sys.shape.nz)
      throw IoError(path + ":" + std::to_string(ln) + ": node outside the lattice");
    const long idx = flat_index(sys.shape, x, y, z);
    for (int j = 0; j < sys.m; ++j)
      f.plane(j)[idx] = R(parse_cell(c[3 + j], path, ln));
    ++filled;
  }
  if (filled != f.nodes())
    throw IoError(path + ": covers " + std::to_string(filled) + " of " +
                  std::to_string(f.nodes()) + " nodes");
}

void write_design_csv(const DesignField& d, const std::string& path) {
  auto out = open_out(path);
  out << "x,y,z,w\n";
  const LatticeShape& s = d.shape;
  for (long i = 0; i < s.nodes(); ++i)
    out << int(i % s.nx) << ',' << int((i / s.nx) % s.ny) << ','
        << int(i / (long(s.nx) * s.ny)) << ',' << g17(d.w[i]) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void read_design_csv(DesignField& d, const std::string& path) {
  auto in = open_in(path);
  std::string line;
  long ln = 1;
  if (!std::getline(in, line) || split_row(line)[0] != "x")
    throw IoError(path + ": missing design CSV header");
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto c = split_row(line);
    if (c.size() != 4) throw IoError(path + ":" + std::to_string(ln) + ": expected 4 cells");
    const int x = int(parse_int_cell(c[0], path, ln));
    const int y = int(parse_int_cell(c[1], path, ln));
    const int z = int(parse_int_cell(c[2], path, ln));
    if (x < 0 || x >= d.shape.nx || y < 0 || y >= d.shape.ny || z < 0 || z >= d.shape.nz)
      throw IoError(path + ":" + std::to_string(ln) + ": node outside the lattice");
    const long idx = flat_index(d.shape, x, y, z);
    if (d.mask[idx]) d.set(idx, parse_cell(c[3], path, ln));
  }
}

void write_gradient_csv(const GradientVector& g, const DesignField& d, const std::string& path) {
  auto out = open_out(path);
  out << "x,y,z,dF_dw,name\n";
  const LatticeShape& s = d.shape;
  for (std::size_t k = 0; k < g.design.size(); ++k) {
    const long i = d.nodes[k];
    out << int(i % s.nx) << ',' << int((i / s.nx) % s.ny) << ','
        << int(i / (long(s.nx) * s.ny)) << ',' << g17(g.design[k]) << ",\n";
  }
  for (const auto& [name, val] : g.globals)
    out << "-1,-1,-1," << g17(val) << ',' << name << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_convergence_csv(const std::vector<RunRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "iter,objective,penalty,weight,composite\n";
  for (const RunRow& r : rows)
    out << r.iteration << ',' << g17(r.objective) << ',' << g17(r.penalty) << ','
        << g17(r.penalty_weight) << ',' << g17(r.composite) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_record_csv(const std::vector<RunRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "iter,residual,objective,penalty,weight,composite,grad_norm\n";
  for (const RunRow& r : rows)
    out << r.iteration << ',' << g17(r.residual) << ',' << g17(r.objective) << ','
        << g17(r.penalty) << ',' << g17(r.penalty_weight) << ',' << g17(r.composite)
        << ',' << g17(r.grad_norm) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_threshold_csv(const ThresholdResult& r, const std::string& path) {
  auto out = open_out(path);
  out << "eta,objective\n";
  for (const ThresholdPoint& p : r.points)
    out << g17(p.eta) << ',' << (p.converged ? g17(p.objective) : "") << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_scaling_csv(const std::vector<ScalingRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "workers,primal_steps_per_sec,adjoint_steps_per_sec,ratio\n";
  for (const ScalingRow& r : rows) {
    const double ratio =
        r.adjoint_steps_per_s > 0 ? r.primal_steps_per_s / r.adjoint_steps_per_s
                                  : std::nan("");
    out << r.workers << ',' << g17(r.primal_steps_per_s) << ','
        << g17(r.adjoint_steps_per_s) << ',' << g17(ratio) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_gradcheck_csv(const GradCheckResult& r, const std::string& path) {
  auto out = open_out(path);
  out << "name,x,y,z,adjoint,fd,rel_err,step\n";
  for (const GradCheckRow& row : r.rows)
    out << (row.is_global ? row.name : "w") << ',' << row.x << ',' << row.y << ','
        << row.z << ',' << g17(row.adjoint) << ',' << g17(row.fd) << ','
        << g17(row.rel_err) << ',' << g17(row.best_step) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

template FieldRow node_fields<float>(const System&, const StateField<float>&, long);
template FieldRow node_fields<double>(const System&, const StateField<double>&, long);
template FieldTable make_field_table<float>(const System&, const StateField<float>&);
template FieldTable make_field_table<double>(const System&, const StateField<double>&);
template void write_fields_csv<float>(const System&, const StateField<float>&, const std::string&);
template void write_fields_csv<double>(const System&, const StateField<double>&, const std::string&);
template void write_state_csv<float>(const System&, const StateField<float>&, const std::string&);
template void write_state_csv<double>(const System&, const StateField<double>&, const std::string&);
template void read_state_csv<float>(const System&, StateField<float>&, const std::string&);
template void read_state_csv<double>(const System&, StateField<double>&, const std::string&);

}  // namespace lbopt
