#pragma once

/// \file
/// File formats: YAML problem files, CSV fields, JSON certificates.
///
/// Field CSV:
///   nx,ny,h
///   <nx>,<ny>,<h>
///   i,j,value          (or i,j,x,y for vector fields)
///   one row per cell of the extent, row-major
/// Numbers are written in shortest round-trip form, so write/read is exact.

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "plg/certify.hpp"
#include "plg/field.hpp"
#include "plg/grid.hpp"
#include "plg/norm.hpp"
#include "plg/problem.hpp"
#include "plg/solver.hpp"

namespace plg {

// Numbers ------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError(where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

inline long parse_long(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.back() == '\r')) s.front() == ' ' ? s.remove_prefix(1) : s.remove_suffix(1);
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError(where + ": cannot parse integer '" + std::string(s) + "'");
  return v;
}

// Problem files --------------------------------------------------------------------

struct ProblemFile {
  ProblemSpec spec;
  SolverParams solver;
  Tolerances tolerances;
  std::string drift_preset = "zero";
  std::string bc_preset;
};

namespace detail {

class YamlReader {
 public:
  explicit YamlReader(std::string source) : source_(std::move(source)) {}

  std::string where(const YAML::Node& n) const {
    const auto m = n.Mark();
    return source_ + ":" + std::to_string(m.line + 1);
  }

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const { throw InputError(where(n) + ": " + msg); }

  void allow_keys(const YAML::Node& map, const std::string& section, std::initializer_list<const char*> keys) const {
    if (!map.IsMap()) fail(map, "section '" + section + "' must be a mapping");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in section '" + section + "'");
    }
  }

  YAML::Node require(const YAML::Node& map, const char* key, const std::string& section) const {
    const YAML::Node n = map[key];
    if (!n) fail(map, "section '" + section + "' is missing '" + key + "'");
    return n;
  }

  double number(const YAML::Node& n) const {
    if (!n.IsScalar()) fail(n, "expected a number");
    return parse_double(n.Scalar(), where(n));
  }
  long integer(const YAML::Node& n) const {
    if (!n.IsScalar()) fail(n, "expected an integer");
    return parse_long(n.Scalar(), where(n));
  }
  std::string text(const YAML::Node& n) const {
    if (!n.IsScalar()) fail(n, "expected a string");
    return n.Scalar();
  }

  /// Constant or per-cell rows (top row first).
  ScalarField scalar_field(const YAML::Node& n, int nx, int ny) const {
    if (n.IsScalar()) return ScalarField(nx, ny, number(n));
    if (!n.IsSequence() || static_cast<int>(n.size()) != ny) fail(n, "expected a number or " + std::to_string(ny) + " rows");
    ScalarField f(nx, ny);
    for (int r = 0; r < ny; ++r) {
      const YAML::Node row = n[r];
      if (!row.IsSequence() || static_cast<int>(row.size()) != nx) fail(row, "row must hold " + std::to_string(nx) + " values");
      for (int i = 0; i < nx; ++i) f(i, ny - 1 - r) = number(row[i]);
    }
    return f;
  }

  Vec2 vec2(const YAML::Node& n) const {
    if (!n.IsSequence() || n.size() != 2) fail(n, "expected a pair [x, y]");
    return {number(n[0]), number(n[1])};
  }

  VectorField vector_field(const YAML::Node& n, int nx, int ny) const {
    if (!n.IsSequence()) fail(n, "expected a pair or rows of pairs");
    if (n.size() == 2 && n[0].IsScalar()) return VectorField(nx, ny, vec2(n));
    if (static_cast<int>(n.size()) != ny) fail(n, "expected " + std::to_string(ny) + " rows");
    VectorField f(nx, ny);
    for (int r = 0; r < ny; ++r) {
      const YAML::Node row = n[r];
      if (!row.IsSequence() || static_cast<int>(row.size()) != nx) fail(row, "row must hold " + std::to_string(nx) + " pairs");
      for (int i = 0; i < nx; ++i) f(i, ny - 1 - r) = vec2(row[i]);
    }
    return f;
  }

  Sym2 sym2(const YAML::Node& n) const {
    if (!n.IsSequence() || n.size() != 2 || !n[0].IsSequence() || !n[1].IsSequence() || n[0].size() != 2 || n[1].size() != 2)
      fail(n, "sigma0 must be a 2x2 matrix [[a, b], [b, c]]");
    const double xy = number(n[0][1]);
    if (std::abs(xy - number(n[1][0])) > 1e-12 * (1.0 + std::abs(xy))) fail(n, "sigma0 must be symmetric");
    return {number(n[0][0]), xy, number(n[1][1])};
  }

 private:
  std::string source_;
};

}  // namespace detail

/// Dirichlet data presets evaluated at boundary-face midpoints:
/// zero, ramp (f = x), step (0 for x < width/2, 1 otherwise).
inline FaceData dirichlet_preset(const GridDomain& dom, const std::string& name) {
  FaceData f(dom.face_count(), 0.0);
  const double width = dom.nx() * dom.h();
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const Vec2 p = dom.face_midpoint(faces[k]);
    if (name == "zero")
      f[k] = 0.0;
    else if (name == "ramp")
      f[k] = p.x;
    else if (name == "step")
      f[k] = p.x < 0.5 * width ? 0.0 : 1.0;
    else
      throw InputError("unknown Dirichlet preset '" + name + "' (expected zero, ramp or step)");
  }
  return f;
}

inline ProblemFile parse_problem(const std::string& text, const std::string& source = "<problem>") {
  const detail::YamlReader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InputError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw InputError(source + ":1: problem file must be a mapping");
  rd.allow_keys(root, "top level", {"grid", "norm", "drift", "source", "bc", "solver", "tolerances"});

  // grid
  const YAML::Node g = rd.require(root, "grid", "top level");
  rd.allow_keys(g, "grid", {"nx", "ny", "h", "mask"});
  const long nx = rd.integer(rd.require(g, "nx", "grid"));
  const long ny = rd.integer(rd.require(g, "ny", "grid"));
  if (nx <= 0 || ny <= 0 || nx > 4096 || ny > 4096) rd.fail(g, "nx and ny must lie in [1, 4096]");
  const double h = rd.number(rd.require(g, "h", "grid"));
  Field<std::uint8_t> mask(static_cast<int>(nx), static_cast<int>(ny), 1);
  if (const YAML::Node m = g["mask"]) {
    if (!m.IsSequence() || static_cast<long>(m.size()) != ny) rd.fail(m, "mask must list " + std::to_string(ny) + " rows");
    for (long r = 0; r < ny; ++r) {
      const std::string row = rd.text(m[r]);
      if (static_cast<long>(row.size()) != nx) rd.fail(m[r], "mask row must hold " + std::to_string(nx) + " characters");
      for (long i = 0; i < nx; ++i) {
        if (row[i] != '0' && row[i] != '1') rd.fail(m[r], "mask rows use only 0 and 1");
        mask(static_cast<int>(i), static_cast<int>(ny - 1 - r)) = row[i] == '1';
      }
    }
  }
  GridDomain dom = [&] {
    try {
      return GridDomain(static_cast<int>(nx), static_cast<int>(ny), h, mask);
    } catch (const ConfigError& e) {
      rd.fail(g, e.what());
    }
  }();
  const int X = dom.nx(), Y = dom.ny();

  // norm
  NormSpec norm;
  {
    const YAML::Node n = rd.require(root, "norm", "top level");
    rd.allow_keys(n, "norm", {"kind", "a", "sigma0"});
    const std::string kind = rd.text(rd.require(n, "kind", "norm"));
    ScalarField a = n["a"] ? rd.scalar_field(n["a"], X, Y) : ScalarField(X, Y, 1.0);
    try {
      if (kind == "euclidean")
        norm = NormSpec::weighted_euclidean(std::move(a));
      else if (kind == "l1")
        norm = NormSpec::weighted_l1(std::move(a));
      else if (kind == "linf")
        norm = NormSpec::weighted_linf(std::move(a));
      else if (kind == "riemannian") {
        const Sym2 s = n["sigma0"] ? rd.sym2(n["sigma0"]) : Sym2{};
        norm = NormSpec::anisotropic(std::move(a), Field<Sym2>(X, Y, s));
      } else
        rd.fail(n["kind"], "unknown norm kind '" + kind + "' (expected euclidean, riemannian, l1 or linf)");
    } catch (const ConfigError& e) {
      rd.fail(n, e.what());
    }
    if (n["sigma0"] && kind != "riemannian") rd.fail(n["sigma0"], "sigma0 is only used by the riemannian kind");
  }

  ProblemFile pf{make_problem(dom, norm), SolverParams{}, Tolerances{}, "zero", ""};
  ProblemSpec& spec = pf.spec;

  // drift
  if (const YAML::Node d = root["drift"]) {
    rd.allow_keys(d, "drift", {"preset", "rows"});
    if (d["preset"] && d["rows"]) rd.fail(d, "drift takes either preset or rows");
    if (const YAML::Node p = d["preset"]) {
      pf.drift_preset = rd.text(p);
      if (pf.drift_preset == "heisenberg")
        spec.drift = heisenberg_drift(dom);
      else if (pf.drift_preset != "zero")
        rd.fail(p, "unknown drift preset '" + pf.drift_preset + "' (expected zero or heisenberg)");
    } else if (const YAML::Node r = d["rows"]) {
      pf.drift_preset = "explicit";
      spec.drift = rd.vector_field(r, X, Y);
    }
  }

  // source
  if (const YAML::Node s = root["source"]) spec.source = rd.scalar_field(s, X, Y);

  // boundary condition
  if (const YAML::Node b = root["bc"]) {
    rd.allow_keys(b, "bc", {"kind", "preset", "f"});
    const std::string kind = rd.text(rd.require(b, "kind", "bc"));
    if (kind == "neumann") {
      if (b["preset"] || b["f"]) rd.fail(b, "Neumann conditions take no data");
    } else if (kind == "dirichlet") {
      if (static_cast<bool>(b["preset"]) == static_cast<bool>(b["f"])) rd.fail(b, "Dirichlet conditions need exactly one of preset or f");
      FaceData f;
      if (const YAML::Node p = b["preset"]) {
        pf.bc_preset = rd.text(p);
        try {
          f = dirichlet_preset(dom, pf.bc_preset);
        } catch (const InputError& e) {
          rd.fail(p, e.what());
        }
      } else {
        const YAML::Node fn = b["f"];
        if (!fn.IsSequence() || fn.size() != dom.face_count())
          rd.fail(fn, "f must list " + std::to_string(dom.face_count()) + " boundary values");
        for (const auto& v : fn) f.push_back(rd.number(v));
      }
      spec.bc = BoundaryCondition::dirichlet(f);
      spec.f_extension = nearest_boundary_extension(dom, spec.bc.f);
    } else {
      rd.fail(b["kind"], "unknown boundary kind '" + kind + "' (expected neumann or dirichlet)");
    }
  }

  // solver
  if (const YAML::Node s = root["solver"]) {
    rd.allow_keys(s, "solver", {"tau", "sigma", "theta", "tol_gap", "max_iter", "gap_check_stride"});
    auto& p = pf.solver;
    if (s["tau"]) p.tau = rd.number(s["tau"]);
    if (s["sigma"]) p.sigma = rd.number(s["sigma"]);
    if (s["theta"]) p.theta = rd.number(s["theta"]);
    if (s["tol_gap"]) p.tol_gap = rd.number(s["tol_gap"]);
    if (s["max_iter"]) p.max_iter = rd.integer(s["max_iter"]);
    if (s["gap_check_stride"]) p.gap_check_stride = rd.integer(s["gap_check_stride"]);
    try {
      (void)p.resolved(dom);
    } catch (const ConfigError& e) {
      rd.fail(s, e.what());
    }
  }

  if (const YAML::Node t = root["tolerances"]) {
    rd.allow_keys(t, "tolerances", {"gap", "feasibility", "divergence", "trace", "structure", "boundary", "eps_active_rel", "gap_aware"});
    auto& tl = pf.tolerances;
    if (t["gap"]) tl.gap = rd.number(t["gap"]);
    if (t["feasibility"]) tl.feasibility = rd.number(t["feasibility"]);
    if (t["divergence"]) tl.divergence = rd.number(t["divergence"]);
    if (t["trace"]) tl.trace = rd.number(t["trace"]);
    if (t["structure"]) tl.structure = rd.number(t["structure"]);
    if (t["boundary"]) tl.boundary = rd.number(t["boundary"]);
    if (t["eps_active_rel"]) tl.eps_active_rel = rd.number(t["eps_active_rel"]);
    if (t["gap_aware"]) {
      const std::string v = rd.text(t["gap_aware"]);
      if (v != "true" && v != "false") rd.fail(t["gap_aware"], "gap_aware must be true or false");
      tl.gap_aware = v == "true";
    }
  }

  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw InputError(source + ": " + e.what());
  }
  return pf;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write to '" + path + "' failed");
}

inline ProblemFile load_problem(const std::string& path) { return parse_problem(read_text(path), path); }

// Field CSV ------------------------------------------------------------------------------

inline std::string field_header(int nx, int ny, double h) {
  return "nx,ny,h\n" + std::to_string(nx) + "," + std::to_string(ny) + "," + format_double(h) + "\n";
}

inline std::string scalar_csv(const ScalarField& u, double h) {
  std::string s = field_header(u.nx(), u.ny(), h) + "i,j,value\n";
  for (int j = 0; j < u.ny(); ++j)
    for (int i = 0; i < u.nx(); ++i) s += std::to_string(i) + "," + std::to_string(j) + "," + format_double(u(i, j)) + "\n";
  return s;
}

inline std::string vector_csv(const VectorField& b, double h) {
  std::string s = field_header(b.nx(), b.ny(), h) + "i,j,x,y\n";
  for (int j = 0; j < b.ny(); ++j)
    for (int i = 0; i < b.nx(); ++i)
      s += std::to_string(i) + "," + std::to_string(j) + "," + format_double(b(i, j).x) + "," + format_double(b(i, j).y) + "\n";
  return s;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = line.find(sep, start);
    out.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t p = text.find('\n', start);
    if (p == std::string_view::npos) p = text.size();
    std::string_view l = text.substr(start, p - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    out.push_back(l);
    start = p + 1;
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

struct CsvField {
  int nx = 0, ny = 0;
  double h = 0.0;
  std::vector<std::vector<double>> values;  // per cell, row-major
};

inline CsvField read_csv_field(std::string_view text, const std::string& source, int columns, const char* header) {
  const auto ls = lines(text);
  auto at = [&](std::size_t k) { return source + ":" + std::to_string(k + 1); };
  if (ls.size() < 3 || ls[0] != "nx,ny,h") throw InputError(at(0) + ": expected header 'nx,ny,h'");
  const auto dims = split(ls[1]);
  if (dims.size() != 3) throw InputError(at(1) + ": expected nx,ny,h");
  CsvField f;
  f.nx = static_cast<int>(parse_long(dims[0], at(1)));
  f.ny = static_cast<int>(parse_long(dims[1], at(1)));
  f.h = parse_double(dims[2], at(1));
  if (f.nx <= 0 || f.ny <= 0) throw InputError(at(1) + ": extent must be positive");
  if (ls[2] != header) throw InputError(at(2) + ": expected header '" + std::string(header) + "'");
  const std::size_t n = static_cast<std::size_t>(f.nx) * static_cast<std::size_t>(f.ny);
  if (ls.size() != 3 + n)
    throw InputError(source + ": expected " + std::to_string(n) + " data rows, found " + std::to_string(ls.size() - 3));
  f.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto parts = split(ls[3 + k]);
    if (static_cast<int>(parts.size()) != 2 + columns) throw InputError(at(3 + k) + ": wrong number of columns");
    const long i = parse_long(parts[0], at(3 + k)), j = parse_long(parts[1], at(3 + k));
    if (i != static_cast<long>(k % f.nx) || j != static_cast<long>(k / f.nx))
      throw InputError(at(3 + k) + ": rows must be in row-major order");
    for (int c = 0; c < columns; ++c) f.values[k].push_back(parse_double(parts[2 + c], at(3 + k)));
  }
  return f;
}

}  // namespace detail

struct LoadedScalar {
  ScalarField field;
  double h = 0.0;
};
struct LoadedVector {
  VectorField field;
  double h = 0.0;
};

inline LoadedScalar parse_scalar_csv(std::string_view text, const std::string& source = "<csv>") {
  auto f = detail::read_csv_field(text, source, 1, "i,j,value");
  ScalarField u(f.nx, f.ny);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = f.values[k][0];
  return {std::move(u), f.h};
}

inline LoadedVector parse_vector_csv(std::string_view text, const std::string& source = "<csv>") {
  auto f = detail::read_csv_field(text, source, 2, "i,j,x,y");
  VectorField b(f.nx, f.ny);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = {f.values[k][0], f.values[k][1]};
  return {std::move(b), f.h};
}

inline std::string faces_csv(const GridDomain& dom, std::span<const double> t) {
  static constexpr const char* names[] = {"+x", "+y", "-x", "-y"};
  std::string s = "face,i,j,dir,value\n";
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size() && k < t.size(); ++k)
    s += std::to_string(k) + "," + std::to_string(faces[k].cell.i) + "," + std::to_string(faces[k].cell.j) + "," +
         names[static_cast<int>(faces[k].dir)] + "," + format_double(t[k]) + "\n";
  return s;
}

inline FaceData parse_faces_csv(std::string_view text, const GridDomain& dom, const std::string& source = "<csv>") {
  const auto ls = detail::lines(text);
  if (ls.empty() || ls[0] != "face,i,j,dir,value") throw InputError(source + ":1: expected header 'face,i,j,dir,value'");
  if (ls.size() - 1 != dom.face_count())
    throw InputError(source + ": expected " + std::to_string(dom.face_count()) + " faces, found " + std::to_string(ls.size() - 1));
  FaceData t(dom.face_count());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto parts = detail::split(ls[k + 1]);
    const std::string at = source + ":" + std::to_string(k + 2);
    if (parts.size() != 5) throw InputError(at + ": wrong number of columns");
    if (parse_long(parts[0], at) != static_cast<long>(k)) throw InputError(at + ": faces must be listed in order");
    t[k] = parse_double(parts[4], at);
  }
  return t;
}

inline std::string gap_history_csv(const std::vector<GapRecord>& hist) {
  std::string s = "iter,primal,dual,gap,best_primal,best_dual,rel_gap\n";
  for (const auto& g : hist)
    s += std::to_string(g.iter) + "," + format_double(g.primal) + "," + format_double(g.dual) + "," + format_double(g.gap) +
         "," + format_double(g.best_primal) + "," + format_double(g.best_dual) + "," + format_double(g.rel_gap) + "\n";
  return s;
}

// Certificate JSON -------------------------------------------------------------------------

inline nlohmann::ordered_json certificate_json(const Certificate& c) {
  nlohmann::ordered_json j;
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  };
  j["certified"] = c.certified;
  j["primal"] = num(c.primal);
  j["dual"] = num(c.dual);
  j["gap"] = num(c.gap);
  j["rel_gap"] = num(c.rel_gap);
  j["dual_feasibility_max"] = num(c.dual_feasibility_max);
  j["div_residual"] = num(c.div_residual);
  j["trace_residual"] = num(c.trace_residual);
  j["alignment_defect"] = num(c.alignment_defect);
  j["boundary_contact_defect"] = num(c.boundary_contact_defect);
  j["active_cell_count"] = c.active_cell_count;
  j["detached_face_count"] = c.detached_face_count;
  j["eps_active_cells"] = num(c.eps_active_cells);
  j["eps_active_faces"] = num(c.eps_active_faces);
  std::string failed;
  for (const auto& f : c.failures) failed += (failed.empty() ? "" : ",") + f;
  j["failed"] = failed;
  return j;
}

}  // namespace plg
