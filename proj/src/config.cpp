#include "lbopt/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace lbopt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

long to_long(const std::string& v, const std::string& origin, int line,
             const std::string& key) {
  long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    fail(origin, line, "value of '" + key + "' is not an integer: '" + v + "'");
  return out;
}

double to_double(const std::string& v, const std::string& origin, int line,
                 const std::string& key) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    fail(origin, line, "value of '" + key + "' is not a number: '" + v + "'");
  return out;
}

bool to_bool(const std::string& v, const std::string& origin, int line,
             const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(origin, line, "value of '" + key + "' is not a boolean: '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip
  return std::string(buf, r.ptr);
}

// Applies one key in one section; throws on unknown keys.
void apply_key(CaseConfig& c, const std::string& sec, const std::string& key,
               const std::string& val, const std::string& origin, int line) {
  auto L = [&] { return to_long(val, origin, line, key); };
  auto D = [&] { return to_double(val, origin, line, key); };
  auto B = [&] { return to_bool(val, origin, line, key); };

  if (sec == "lattice") {
    if (key == "nx") c.nx = int(L());
    else if (key == "ny") c.ny = int(L());
    else if (key == "nz") c.nz = int(L());
    else fail(origin, line, "unknown key '" + key + "' in section [lattice]");
  } else if (sec == "model") {
    if (key == "nu") c.nu = D();
    else if (key == "beta_fluid") c.beta_fluid = D();
    else if (key == "beta_solid") c.beta_solid = D();
    else if (key == "inlet_dp") c.inlet_dp = D();
    else if (key == "u_clamp") c.u_clamp = D();
    else if (key == "collision") c.collision = val;
    else if (key == "precision") c.precision = int(L());
    else if (key == "omega_nonhydro") c.omega_nonhydro = D();
    else if (key == "switch_theta") c.switch_theta = D();
    else if (key == "switch_form") c.switch_form = val;
    else fail(origin, line, "unknown key '" + key + "' in section [model]");
  } else if (sec == "tags") {
    if (key == "geometry") c.geometry = val;
    else if (key == "design_x0") c.design_x0 = int(L());
    else if (key == "design_x1") c.design_x1 = int(L());
    else if (key == "heater_x0") c.heater_x0 = int(L());
    else if (key == "heater_x1") c.heater_x1 = int(L());
    else if (key == "inlet_profile") c.inlet_profile = val;
    else if (key == "inlet_T") c.inlet_T = D();
    else fail(origin, line, "unknown key '" + key + "' in section [tags]");
  } else if (sec == "objective") {
    if (key == "kind") c.objective = val;
    else if (key == "plane_offset") c.plane_offset = int(L());
    else if (key == "penalty_w0") c.penalty_w0 = D();
    else if (key == "penalty_growth") c.penalty_growth = D();
    else if (key == "penalty_interval") c.penalty_interval = L();
    else if (key == "penalty_start") c.penalty_start = L();
    else if (key == "penalty_cap") c.penalty_cap = D();
    else fail(origin, line, "unknown key '" + key + "' in section [objective]");
  } else if (sec == "optimizer") {
    if (key == "method") c.method = val;
    else if (key == "iterations") c.iterations = L();
    else if (key == "outer_iterations") c.outer_iterations = L();
    else if (key == "zeta") c.zeta = D();
    else if (key == "zeta_stages") c.zeta_stages = val;
    else if (key == "initial_w") c.initial_w = D();
    else if (key == "init_noise") c.init_noise = D();
    else if (key == "seed") c.seed = static_cast<unsigned long>(L());
    else if (key == "primal_tol") c.primal_tol = D();
    else if (key == "adjoint_tol") c.adjoint_tol = D();
    else if (key == "max_inner") c.max_inner = L();
    else if (key == "adjoint_stop") c.adjoint_stop = val;
    else if (key == "adjoint_kernel") c.adjoint_kernel = val;
    else if (key == "adjoint_cache") c.adjoint_cache = val;
    else if (key == "move_limit") c.move_limit = D();
    else if (key == "threshold_points") c.threshold_points = int(L());
    else if (key == "record_interval") c.record_interval = L();
    else if (key == "workers") c.workers = int(L());
    else fail(origin, line, "unknown key '" + key + "' in section [optimizer]");
  } else if (sec == "output") {
    if (key == "dir") c.out_dir = val;
    else if (key == "write_vtk") c.write_vtk = B();
    else if (key == "write_csv") c.write_csv = B();
    else fail(origin, line, "unknown key '" + key + "' in section [output]");
  } else {
    fail(origin, line, "unknown section [" + sec + "]");
  }
}

}  // namespace

CaseConfig CaseConfig::parse_text(const std::string& text, const std::string& origin) {
  CaseConfig c;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(origin, line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(origin, line, "expected key = value, got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty()) fail(origin, line, "empty key");
    if (section.empty()) fail(origin, line, "key '" + key + "' appears before any section");
    apply_key(c, section, key, val, origin, line);
  }
  return c;
}

CaseConfig CaseConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

void CaseConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos)
    throw ConfigError("override key must look like section.key: '" + dotted_key + "'");
  apply_key(*this, dotted_key.substr(0, dot), dotted_key.substr(dot + 1), value,
            "<override>", 0);
}

std::string CaseConfig::serialize() const {
  std::ostringstream o;
  o << "[lattice]\n";
  o << "nx = " << nx << "\n";
  o << "ny = " << ny << "\n";
  o << "nz = " << nz << "\n";
  o << "\n[model]\n";
  o << "nu = " << fmt_double(nu) << "\n";
  o << "beta_fluid = " << fmt_double(beta_fluid) << "\n";
  o << "beta_solid = " << fmt_double(beta_solid) << "\n";
  o << "inlet_dp = " << fmt_double(inlet_dp) << "\n";
  o << "u_clamp = " << fmt_double(u_clamp) << "\n";
  o << "collision = " << collision << "\n";
  o << "precision = " << precision << "\n";
  o << "omega_nonhydro = " << fmt_double(omega_nonhydro) << "\n";
  o << "switch_theta = " << fmt_double(switch_theta) << "\n";
  o << "switch_form = " << switch_form << "\n";
  o << "\n[tags]\n";
  o << "geometry = " << geometry << "\n";
  o << "design_x0 = " << design_x0 << "\n";
  o << "design_x1 = " << design_x1 << "\n";
  o << "heater_x0 = " << heater_x0 << "\n";
  o << "heater_x1 = " << heater_x1 << "\n";
  o << "inlet_profile = " << inlet_profile << "\n";
  o << "inlet_T = " << fmt_double(inlet_T) << "\n";
  o << "\n[objective]\n";
  o << "kind = " << objective << "\n";
  o << "plane_offset = " << plane_offset << "\n";
  o << "penalty_w0 = " << fmt_double(penalty_w0) << "\n";
  o << "penalty_growth = " << fmt_double(penalty_growth) << "\n";
  o << "penalty_interval = " << penalty_interval << "\n";
  o << "penalty_start = " << penalty_start << "\n";
  o << "penalty_cap = " << fmt_double(penalty_cap) << "\n";
  o << "\n[optimizer]\n";
  o << "method = " << method << "\n";
  o << "iterations = " << iterations << "\n";
  o << "outer_iterations = " << outer_iterations << "\n";
  o << "zeta = " << fmt_double(zeta) << "\n";
  o << "zeta_stages = " << zeta_stages << "\n";
  o << "initial_w = " << fmt_double(initial_w) << "\n";
  o << "init_noise = " << fmt_double(init_noise) << "\n";
  o << "seed = " << seed << "\n";
  o << "primal_tol = " << fmt_double(primal_tol) << "\n";
  o << "adjoint_tol = " << fmt_double(adjoint_tol) << "\n";
  o << "max_inner = " << max_inner << "\n";
  o << "adjoint_stop = " << adjoint_stop << "\n";
  o << "adjoint_kernel = " << adjoint_kernel << "\n";
  o << "adjoint_cache = " << adjoint_cache << "\n";
  o << "move_limit = " << fmt_double(move_limit) << "\n";
  o << "threshold_points = " << threshold_points << "\n";
  o << "record_interval = " << record_interval << "\n";
  o << "workers = " << workers << "\n";
  o << "\n[output]\n";
  o << "dir = " << out_dir << "\n";
  o << "write_vtk = " << (write_vtk ? "true" : "false") << "\n";
  o << "write_csv = " << (write_csv ? "true" : "false") << "\n";
  return o.str();
}

namespace {

bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
  for (const char* o : opts)
    if (v == o) return true;
  return false;
}

}  // namespace

void CaseConfig::validate() const {
  auto bad = [](const std::string& msg) { throw ConfigError(msg); };

  if (nx < 1 || ny < 1 || nz < 1) bad("lattice extents must be positive");
  if (!one_of(geometry, {"channel", "periodic"})) bad("geometry must be channel or periodic");
  if (geometry == "channel" && (nx < 3 || ny < 3))
    bad("channel geometry needs nx >= 3 and ny >= 3");
  if (geometry == "channel" && nz != 1 && nz < 3)
    bad("3D channel geometry needs nz >= 3");

  if (!(nu > 0)) bad("nu must be positive");
  if (beta_fluid < 0 || beta_solid < 0) bad("diffusivities must be non-negative");
  if (!(u_clamp > 0)) bad("u_clamp must be positive");
  if (!one_of(collision, {"fmrt", "bgk"})) bad("collision must be fmrt or bgk");
  if (precision != 32 && precision != 64) bad("precision must be 32 or 64");
  if (!(switch_theta > 0)) bad("switch_theta must be positive");
  if (!one_of(switch_form, {"solid_power", "fluid_power"}))
    bad("switch_form must be solid_power or fluid_power");

  auto span_ok = [&](int a, int b, int hi) { return a >= 0 && a <= b && b < hi; };
  if (!(design_x0 == -1 && design_x1 == -1) && !span_ok(design_x0, design_x1, nx))
    bad("design span must satisfy 0 <= design_x0 <= design_x1 < nx (or both -1)");
  if (!(heater_x0 == -1 && heater_x1 == -1)) {
    if (!span_ok(heater_x0, heater_x1, nx))
      bad("heater span must satisfy 0 <= heater_x0 <= heater_x1 < nx (or both -1)");
    if (objective != "heatflux") bad("a heater is only meaningful for the heatflux objective");
    if (geometry != "channel") bad("a heater needs channel geometry");
    if (nz > 1 && heater_x1 - heater_x0 + 1 > nz)
      bad("heater plate is wider than the z extent");
  }
  if (!one_of(inlet_profile, {"uniform", "split"}))
    bad("inlet_profile must be uniform or split");
  if (!std::isfinite(inlet_T)) bad("inlet_T must be finite");

  if (!one_of(objective, {"mixing", "heatflux", "synthetic"}))
    bad("objective kind must be mixing, heatflux or synthetic");
  if (plane_offset < 0 || plane_offset > nx - 1)
    bad("plane_offset must lie inside the lattice");
  build_penalty(*this).validate();

  if (!one_of(method, {"none", "oneshot", "mma"})) bad("method must be none, oneshot or mma");
  if (iterations < 0) bad("iterations must be non-negative");
  if (outer_iterations < 0) bad("outer_iterations must be non-negative");
  if (zeta < 0) bad("zeta must be non-negative");
  parse_zeta_stages(*this);  // throws on malformed stage lists
  if (initial_w < 0 || initial_w > 1) bad("initial_w must lie in [0,1]");
  if (init_noise < 0) bad("init_noise must be non-negative");
  if (!(primal_tol > 0) || !(adjoint_tol > 0)) bad("tolerances must be positive");
  if (max_inner < 1) bad("max_inner must be at least 1");
  if (!one_of(adjoint_stop, {"match", "tol"})) bad("adjoint_stop must be match or tol");
  if (!one_of(adjoint_kernel, {"analytic", "dual"}))
    bad("adjoint_kernel must be analytic or dual");
  if (!one_of(adjoint_cache, {"off", "on"})) bad("adjoint_cache must be off or on");
  if (adjoint_cache == "on" && method == "oneshot")
    bad("adjoint_cache cannot be combined with the interleaved one-shot method");
  if (!(move_limit > 0) || move_limit > 1) bad("move_limit must lie in (0,1]");
  if (threshold_points < 2) bad("threshold_points must be at least 2");
  if (record_interval < 1) bad("record_interval must be at least 1");
  if (workers < 1) bad("workers must be at least 1");
}

TagMap build_tags(const CaseConfig& cfg) {
  const LatticeShape s{cfg.nx, cfg.ny, cfg.nz};
  TagMap tags(s);
  if (cfg.geometry == "periodic") return tags;

  const bool is3d = cfg.nz > 1;
  for (int z = 0; z < cfg.nz; ++z)
    for (int y = 0; y < cfg.ny; ++y)
      for (int x = 0; x < cfg.nx; ++x) {
        const long i = flat_index(s, x, y, z);
        const bool wall =
            y == 0 || y == cfg.ny - 1 || (is3d && (z == 0 || z == cfg.nz - 1));
        if (wall) {
          tags.tag[i] = NodeTag::Wall;
        } else if (x == 0) {
          tags.tag[i] = NodeTag::PressureInlet;
          tags.bc_axis[i] = 0;
          tags.bc_sign[i] = 1;
          tags.bc_T[i] = cfg.inlet_profile == "split"
                             ? (y < cfg.ny / 2 ? -1.0 : 1.0)
                             : cfg.inlet_T;
        } else if (x == cfg.nx - 1) {
          tags.tag[i] = NodeTag::PressureOutlet;
          tags.bc_axis[i] = 0;
          tags.bc_sign[i] = -1;
        }
      }

  if (cfg.heater_x0 >= 0) {
    // Plate on the bottom wall; in 3D a square of the same width centred in z.
    const int width = cfg.heater_x1 - cfg.heater_x0 + 1;
    const int z0 = is3d ? (cfg.nz - width) / 2 : 0;
    const int z1 = is3d ? z0 + width - 1 : 0;
    for (int z = z0; z <= z1; ++z)
      for (int x = cfg.heater_x0; x <= cfg.heater_x1; ++x) {
        const long i = flat_index(s, x, 0, z);
        tags.tag[i] = NodeTag::Heater;
        tags.bc_T[i] = 1.0;
      }
  }
  return tags;
}

namespace {

DesignField build_design(const CaseConfig& cfg, const TagMap& tags) {
  const LatticeShape s{cfg.nx, cfg.ny, cfg.nz};
  std::vector<std::uint8_t> mask(s.nodes(), 0);
  if (cfg.design_x0 >= 0) {
    for (int z = 0; z < cfg.nz; ++z)
      for (int y = 0; y < cfg.ny; ++y)
        for (int x = cfg.design_x0; x <= cfg.design_x1; ++x) {
          const long i = flat_index(s, x, y, z);
          if (tags.tag[i] == NodeTag::Interior) mask[i] = 1;
        }
  }
  DesignField d(s, std::move(mask));

  // Deterministic platform-independent init noise.
  std::mt19937_64 rng(cfg.seed);
  for (long i : d.nodes) {
    double w = cfg.initial_w;
    if (cfg.init_noise > 0) {
      const double u = double(rng() >> 11) * 0x1p-53;  // [0,1)
      w += cfg.init_noise * (2.0 * u - 1.0);
    }
    d.w[i] = std::clamp(w, 0.0, 1.0);
  }
  return d;
}

ObjectiveSpec build_objective(const CaseConfig& cfg, const TagMap& tags) {
  const LatticeShape s{cfg.nx, cfg.ny, cfg.nz};
  ObjectiveSpec spec;
  spec.kind = cfg.objective == "mixing"
                  ? ObjectiveKind::Mixing
                  : (cfg.objective == "heatflux" ? ObjectiveKind::HeatFlux
                                                 : ObjectiveKind::Synthetic);
  spec.flux_axis = 0;
  spec.flux_sign = 1;

  const int xp = cfg.nx - 1 - cfg.plane_offset;
  std::vector<long> nodes;
  for (int z = 0; z < cfg.nz; ++z)
    for (int y = 0; y < cfg.ny; ++y) {
      const long i = flat_index(s, xp, y, z);
      if (tags.tag[i] == NodeTag::Interior) nodes.push_back(i);
    }
  if (nodes.empty())
    throw ConfigError("objective support plane x = " + std::to_string(xp) +
                      " has no interior nodes");
  spec.set_support(s, std::move(nodes));
  return spec;
}

}  // namespace

BuiltCase build_case(const CaseConfig& cfg) {
  cfg.validate();
  BuiltCase bc;
  System& sys = bc.sys;
  sys.shape = {cfg.nx, cfg.ny, cfg.nz};
  if (cfg.nz == 1) {
    sys.flow = &LatticeDescriptor::d2q9();
    sys.thermal = &LatticeDescriptor::d2q9();
  } else {
    sys.flow = &LatticeDescriptor::d3q19();
    sys.thermal = &LatticeDescriptor::d3q7();
  }
  sys.model.nu = cfg.nu;
  sys.model.beta_fluid = cfg.beta_fluid;
  sys.model.beta_solid = cfg.beta_solid;
  sys.model.inlet_dp = cfg.inlet_dp;
  sys.model.u_clamp = cfg.u_clamp;
  sys.model.collision = cfg.collision == "bgk" ? CollisionKind::BGK : CollisionKind::FMRT;
  sys.model.omega_nonhydro = cfg.omega_nonhydro;
  sys.model.switching.theta = cfg.switch_theta;
  sys.model.switching.form = cfg.switch_form == "fluid_power"
                                 ? SwitchingSpec::Form::FluidPower
                                 : SwitchingSpec::Form::SolidPower;
  sys.tags = build_tags(cfg);
  sys.design = build_design(cfg, sys.tags);
  sys.finalize();
  bc.objective = build_objective(cfg, sys.tags);
  return bc;
}

std::vector<ZetaStage> parse_zeta_stages(const CaseConfig& cfg) {
  std::vector<ZetaStage> stages;
  if (cfg.zeta_stages.empty()) {
    stages.push_back({0, cfg.zeta});
    return stages;
  }
  std::istringstream in(cfg.zeta_stages);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("zeta_stages entries must look like start:value, got '" + item + "'");
    ZetaStage st;
    st.start = to_long(trim(item.substr(0, colon)), "<zeta_stages>", 0, "zeta_stages");
    st.value = to_double(trim(item.substr(colon + 1)), "<zeta_stages>", 0, "zeta_stages");
    if (st.value < 0) throw ConfigError("zeta stage values must be non-negative");
    if (!stages.empty() && st.start <= stages.back().start)
      throw ConfigError("zeta stage starts must increase");
    stages.push_back(st);
  }
  if (stages.empty() || stages.front().start != 0)
    throw ConfigError("zeta_stages must begin with a stage at iteration 0");
  return stages;
}

PenaltySchedule build_penalty(const CaseConfig& cfg) {
  PenaltySchedule p;
  p.w0 = cfg.penalty_w0;
  p.growth = cfg.penalty_growth;
  p.interval = cfg.penalty_interval;
  p.start = cfg.penalty_start;
  p.cap = cfg.penalty_cap;
  return p;
}

OneShotOptions build_one_shot_options(const CaseConfig& cfg) {
  OneShotOptions o;
  o.iterations = cfg.iterations;
  o.zeta = parse_zeta_stages(cfg);
  o.penalty = build_penalty(cfg);
  o.kernel = cfg.adjoint_kernel == "dual" ? AdjointKernel::DualSweep : AdjointKernel::Analytic;
  o.record_interval = cfg.record_interval;
  return o;
}

MmaOptions build_mma_options(const CaseConfig& cfg) {
  MmaOptions o;
  o.outer_iterations = cfg.outer_iterations;
  o.move_limit = cfg.move_limit;
  o.primal_tol = cfg.primal_tol;
  o.adjoint_tol = cfg.adjoint_tol;
  o.max_inner = cfg.max_inner;
  o.adjoint_match_count = cfg.adjoint_stop == "match";
  o.kernel = cfg.adjoint_kernel == "dual" ? AdjointKernel::DualSweep : AdjointKernel::Analytic;
  o.penalty = build_penalty(cfg);
  o.record_interval = 1;
  return o;
}

}  // namespace lbopt
