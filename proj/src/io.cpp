#include "kplate/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace kplate {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("invalid JSON: ") + e.what());
  }
}

/// Typed field access that names the field on failure.
template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::Parse, "missing field '" + where + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "field '" + where + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

Side side_from_string(const std::string& s, const std::string& where) {
  for (Side side : all_sides)
    if (s == to_string(side)) return side;
  throw Error(ErrorKind::Parse, "field '" + where + "': unknown side '" + s + "'");
}

KnotVector<double> knots_from_json(const json& j, int degree, const std::string& where) {
  std::vector<double> k;
  try {
    k = j.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "field '" + where + "': " + e.what());
  }
  try {
    return KnotVector<double>(k, degree);
  } catch (const Error& e) {
    throw Error(e.kind(), "field '" + where + "': " + e.what(), e.tag());
  }
}

Patch patch_from_json(const json& j, const std::string& where) {
  const int p = get<int>(j, "degree", where);
  const auto knots = get<json>(j, "knots", where);
  if (!knots.is_array() || knots.size() != 2) throw Error(ErrorKind::Parse, "field '" + where + "knots' needs two knot vectors");
  Patch patch;
  patch.space = TensorSpace<double>{SplineSpace<double>(knots_from_json(knots[0], p, where + "knots[0]")),
                                    SplineSpace<double>(knots_from_json(knots[1], p, where + "knots[1]"))};
  const auto g = get<json>(j, "geometry", where);
  const std::string gw = where + "geometry.";
  const int gp = get<int>(g, "degree", gw);
  const auto gk = get<json>(g, "knots", gw);
  if (!gk.is_array() || gk.size() != 2) throw Error(ErrorKind::Parse, "field '" + gw + "knots' needs two knot vectors");
  TensorSpace<double> gs{SplineSpace<double>(knots_from_json(gk[0], gp, gw + "knots[0]")),
                         SplineSpace<double>(knots_from_json(gk[1], gp, gw + "knots[1]"))};
  const auto cps = get<std::vector<std::vector<double>>>(g, "control_points", gw);
  if (static_cast<int>(cps.size()) != gs.dimension())
    throw Error(ErrorKind::Parse, "field '" + gw + "control_points': expected " + std::to_string(gs.dimension()) +
                                      " points, got " + std::to_string(cps.size()));
  GeometryMap<double>::Points P(cps.size(), 2);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i].size() != 2) throw Error(ErrorKind::Parse, "field '" + gw + "control_points': points need two coordinates");
    P(i, 0) = cps[i][0];
    P(i, 1) = cps[i][1];
  }
  patch.geometry = GeometryMap<double>(gs, P);
  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    if (!b.is_object()) throw Error(ErrorKind::Parse, "field '" + where + "boundary' must be an object");
    for (auto it = b.begin(); it != b.end(); ++it) {
      const Side s = side_from_string(it.key(), where + "boundary");
      try {
        patch.tags[static_cast<int>(s)] = boundary_tag_from_string(it.value().get<std::string>());
      } catch (const std::exception& e) {
        throw Error(ErrorKind::Parse, "field '" + where + "boundary." + it.key() + "': " + e.what());
      }
    }
  }
  patch.quad_points = get_or<int>(j, "quad_points", 0, where);
  patch.validate();
  return patch;
}

json knots_to_json(const KnotVector<double>& kv) { return kv.knots(); }

}  // namespace

ModelSpec parse_model(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object()) throw Error(ErrorKind::Parse, "model file must hold a JSON object");
  ModelSpec spec;
  if (j.contains("builtin")) {
    spec = builtin_model(get<std::string>(j, "builtin", ""), get_or<int>(j, "degree", 2, ""));
  } else {
    spec.name = get_or<std::string>(j, "name", "model", "");
    const auto m = get<json>(j, "material", "");
    spec.model.material = {get<double>(m, "E", "material."), get<double>(m, "t", "material."),
                           get_or<double>(m, "nu", 0.0, "material.")};
    const auto patches = get<json>(j, "patches", "");
    if (!patches.is_array() || patches.empty()) throw Error(ErrorKind::Parse, "field 'patches' must be a nonempty array");
    for (std::size_t k = 0; k < patches.size(); ++k)
      spec.model.patches.push_back(patch_from_json(patches[k], "patches[" + std::to_string(k) + "]."));
  }
  spec.model.material.validate();
  const int np = static_cast<int>(spec.model.patches.size());
  if (j.contains("interfaces")) {
    const auto& list = j.at("interfaces");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string w = "interfaces[" + std::to_string(i) + "].";
      InterfaceHint h{get<int>(list[i], "patch_a", w), side_from_string(get<std::string>(list[i], "side_a", w), w + "side_a"),
                      get<int>(list[i], "patch_b", w), side_from_string(get<std::string>(list[i], "side_b", w), w + "side_b")};
      if (h.patch_a < 0 || h.patch_a >= np || h.patch_b < 0 || h.patch_b >= np)
        throw Error(ErrorKind::Parse, "field '" + w + "': patch id out of range");
      spec.model.interfaces.push_back(h);
    }
  }
  if (j.contains("load")) {
    const auto& l = j.at("load");
    spec.load.manufactured = get_or<std::string>(l, "manufactured", "", "load.");
    spec.load.constant = get_or<double>(l, "constant", 0.0, "load.");
    if (!spec.load.manufactured.empty()) manufactured_case(spec.load.manufactured);  // validates the name
    if (l.contains("lines")) {
      spec.load.lines.clear();
      const auto& lines = l.at("lines");
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string w = "load.lines[" + std::to_string(i) + "].";
        LineLoad ll{get<int>(lines[i], "patch", w), side_from_string(get<std::string>(lines[i], "side", w), w + "side"),
                    get<double>(lines[i], "q", w)};
        if (ll.patch < 0 || ll.patch >= np) throw Error(ErrorKind::Parse, "field '" + w + "patch': id out of range");
        spec.load.lines.push_back(ll);
      }
    }
  }
  return spec;
}

ModelSpec load_model_file(const std::string& path) { return parse_model(read_file(path)); }

std::string serialize_model(const ModelSpec& spec) {
  json j;
  j["name"] = spec.name;
  const auto& mat = spec.model.material;
  j["material"] = {{"E", mat.E}, {"t", mat.t}, {"nu", mat.nu}};
  json patches = json::array();
  for (const auto& patch : spec.model.patches) {
    json p;
    p["degree"] = patch.degree();
    p["knots"] = {knots_to_json(patch.space[0].knot_vector()), knots_to_json(patch.space[1].knot_vector())};
    const auto& g = patch.geometry;
    json cps = json::array();
    for (int i = 0; i < g.control_points().rows(); ++i) cps.push_back({g.control_points()(i, 0), g.control_points()(i, 1)});
    p["geometry"] = {{"degree", g.space().degree()},
                     {"knots", {knots_to_json(g.space()[0].knot_vector()), knots_to_json(g.space()[1].knot_vector())}},
                     {"control_points", cps}};
    json b;
    for (Side s : all_sides) b[to_string(s)] = to_string(patch.tag(s));
    p["boundary"] = b;
    if (patch.quad_points > 0) p["quad_points"] = patch.quad_points;
    patches.push_back(p);
  }
  j["patches"] = patches;
  if (!spec.model.interfaces.empty()) {
    json list = json::array();
    for (const auto& h : spec.model.interfaces)
      list.push_back({{"patch_a", h.patch_a}, {"side_a", to_string(h.side_a)}, {"patch_b", h.patch_b},
                      {"side_b", to_string(h.side_b)}});
    j["interfaces"] = list;
  }
  json load;
  if (!spec.load.manufactured.empty()) load["manufactured"] = spec.load.manufactured;
  if (spec.load.constant != 0) load["constant"] = spec.load.constant;
  if (!spec.load.lines.empty()) {
    json lines = json::array();
    for (const auto& l : spec.load.lines) lines.push_back({{"patch", l.patch}, {"side", to_string(l.side)}, {"q", l.q}});
    load["lines"] = lines;
  }
  if (!load.empty()) j["load"] = load;
  return j.dump(2);
}

const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Direct: return "direct";
    case SolverKind::PcgJacobi: return "pcg-jacobi";
    case SolverKind::Gmres: return "gmres";
    case SolverKind::NestedScr: return "nested-scr";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& s) {
  for (auto k : {SolverKind::Direct, SolverKind::PcgJacobi, SolverKind::Gmres, SolverKind::NestedScr})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::Configuration, "unknown solver '" + s + "'");
}

void CaseConfig::validate() const {
  if (p < 2) throw Error(ErrorKind::Configuration, "degree must be at least 2");
  if (levels < 1) throw Error(ErrorKind::Configuration, "ladder depth must be at least 1");
  const int b = coupling.beta;
  if (b != 0 && (b < p - 1 || b > p + 1)) throw Error(ErrorKind::Configuration, "beta must be one of p-1, p, p+1");
  if (field_samples < 2) throw Error(ErrorKind::Configuration, "field sampling needs at least 2 points per direction");
  solver_config.validate();
}

CaseConfig parse_case_config(const std::string& text, CaseConfig c) {
  const json j = parse_json(text);
  if (!j.is_object()) throw Error(ErrorKind::Parse, "config file must hold a JSON object");
  c.p = get_or<int>(j, "p", c.p, "");
  c.levels = get_or<int>(j, "levels", c.levels, "");
  if (j.contains("method")) c.coupling.method = coupling_method_from_string(get<std::string>(j, "method", ""));
  c.coupling.beta = get_or<int>(j, "beta", c.coupling.beta, "");
  c.coupling.delta = get_or<double>(j, "delta", c.coupling.delta, "");
  c.coupling.vanilla_factor = get_or<double>(j, "vanilla_factor", c.coupling.vanilla_factor, "");
  c.coupling.cross_point_constraints = get_or<bool>(j, "cross_points", c.coupling.cross_point_constraints, "");
  if (j.contains("solver")) c.solver = solver_kind_from_string(get<std::string>(j, "solver", ""));
  auto& s = c.solver_config;
  s.eta_o = get_or<double>(j, "eta_o", s.eta_o, "");
  s.eta_t = get_or<double>(j, "eta_t", s.eta_t, "");
  s.eta_n = get_or<double>(j, "eta_n", s.eta_n, "");
  s.max_outer = get_or<int>(j, "max_outer", s.max_outer, "");
  s.max_intermediate = get_or<int>(j, "max_intermediate", s.max_intermediate, "");
  s.max_inner = get_or<int>(j, "max_inner", s.max_inner, "");
  s.gmres_restart = get_or<int>(j, "gmres_restart", s.gmres_restart, "");
  s.schur_gmres_budget = get_or<int>(j, "schur_gmres_budget", s.schur_gmres_budget, "");
  c.field_samples = get_or<int>(j, "field_samples", c.field_samples, "");
  c.out = get_or<std::string>(j, "out", c.out, "");
  return c;
}

CaseConfig load_case_config(const std::string& path, CaseConfig base) {
  return parse_case_config(read_file(path), std::move(base));
}

SolveReport solve_with(const GlobalSystem& sys, const MultiPatchModel& model, const CaseConfig& cfg) {
  SolveReport r;
  r.solver = to_string(cfg.solver);
  const auto& sc = cfg.solver_config;
  const auto fail = [](const SolveResult& s, const std::string& name) {
    if (!s.converged())
      throw Error(ErrorKind::Solver,
                  name + " did not converge (" + to_string(s.status) + ", " + std::to_string(s.iterations) + " iterations)",
                  "outer");
  };
  Vec uhat;
  switch (cfg.solver) {
    case SolverKind::Direct: uhat = solve_direct(sys.A, sys.f); break;
    case SolverKind::PcgJacobi: {
      auto s = solve_pcg_jacobi(sys.A, sys.f, sc.eta_o, sc.max_outer);
      fail(s, "diagonal PCG");
      r.iterations = s.iterations;
      uhat = std::move(s.x);
      break;
    }
    case SolverKind::Gmres: {
      auto s = solve_gmres_plain(sys.A, sys.f, sc.eta_o, sc.max_outer, sc.gmres_restart);
      fail(s, "GMRES");
      r.iterations = s.iterations;
      uhat = std::move(s.x);
      break;
    }
    case SolverKind::NestedScr: {
      const auto bs = make_block_system(sys, model);
      r.nested = solve_nested(bs, sys.f, sc);
      fail(r.nested.outer, "nested SCR-FGMRES");
      r.iterations = r.nested.outer.iterations;
      r.iteration_report = r.nested.report();
      uhat = r.nested.outer.x;
      break;
    }
  }
  if (r.iteration_report.empty()) r.iteration_report = std::to_string(r.iterations);
  r.u = sys.expand(uhat);
  r.uhat = std::move(uhat);
  return r;
}

// ------------------------------------------------------------ CSV

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

void write_convergence_csv(std::ostream& os, const std::string& case_id, const CaseConfig& cfg,
                           const std::vector<ConvergenceRow>& rows) {
  const int beta = cfg.coupling.beta > 0 ? cfg.coupling.beta : cfg.p + 1;
  os << "case,method,p,beta,level,elements,h,dofs,err_l2,err_h1,err_h2,rate_l2,rate_h1,rate_h2\n";
  for (const auto& r : rows)
    os << case_id << ',' << to_string(cfg.coupling.method) << ',' << cfg.p << ',' << beta << ',' << r.level << ','
       << r.elements << ',' << num(r.h) << ',' << r.dofs << ',' << num(r.err_l2) << ',' << num(r.err_h1) << ','
       << num(r.err_h2) << ',' << num(r.rate_l2) << ',' << num(r.rate_h1) << ',' << num(r.rate_h2) << '\n';
}

void write_stability_csv(std::ostream& os, const std::string& kind, const std::vector<StabilityCell>& cells) {
  if (kind == "infsup") {
    os << "p,h,c_defl,c_rot\n";
    for (const auto& c : cells) os << c.p << ',' << num(c.h) << ',' << num(c.c_defl) << ',' << num(c.c_rot) << '\n';
  } else if (kind == "coercivity") {
    os << "p,h,alpha0\n";
    for (const auto& c : cells) os << c.p << ',' << num(c.h) << ',' << num(c.alpha0) << '\n';
  } else {
    throw Error(ErrorKind::Configuration, "unknown stability kind '" + kind + "'");
  }
}

void write_precond_csv(std::ostream& os, const std::vector<PrecondRow>& rows) {
  os << "case,p,elements,method,outer,converged,avg_intermediate_1,avg_schur,avg_intermediate_2\n";
  for (const auto& r : rows)
    os << r.case_id << ',' << r.p << ',' << r.elements << ',' << r.method << ',' << r.outer << ','
       << (r.converged ? 1 : 0) << ',' << num(r.avg_first) << ',' << num(r.avg_schur) << ',' << num(r.avg_last) << '\n';
}

// ------------------------------------------------------------ fields

PatchField sample_patch_field(const Patch& patch, const PlateMaterial& mat, const Vec& coeffs, int m) {
  if (m < 2) throw Error(ErrorKind::Parameter, "field sampling needs at least 2 points per direction");
  PatchField f;
  f.m = m;
  const double D = mat.D();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const Vec2 eta(double(i) / (m - 1), double(j) / (m - 1));
      const auto fp = eval_field(patch, coeffs, eta);
      const double lap = fp.hess(0) + fp.hess(2);
      f.x.push_back(fp.x(0));
      f.y.push_back(fp.x(1));
      f.u.push_back(fp.u);
      f.m11.push_back(D * (mat.nu * lap + (1 - mat.nu) * fp.hess(0)));
      f.m12.push_back(D * (1 - mat.nu) * fp.hess(1));
      f.m22.push_back(D * (mat.nu * lap + (1 - mat.nu) * fp.hess(2)));
    }
  return f;
}

std::vector<PatchField> sample_field(const MultiPatchModel& model, const DofMap& dofs, const Vec& u, int m) {
  std::vector<PatchField> out;
  for (int k = 0; k < dofs.patches(); ++k)
    out.push_back(sample_patch_field(model.patches[k], model.material,
                                     u.segment(dofs.offset[k], model.patches[k].dimension()), m));
  return out;
}

void write_vtk(std::ostream& os, const PatchField& f, const std::string& title) {
  const std::size_t n = f.x.size();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_GRID\n";
  os << "DIMENSIONS " << f.m << ' ' << f.m << " 1\n";
  os << "POINTS " << n << " double\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) os << f.x[i] << ' ' << f.y[i] << " 0\n";
  os << "POINT_DATA " << n << '\n';
  const std::pair<const char*, const std::vector<double>*> blocks[] = {
      {"u", &f.u}, {"m11", &f.m11}, {"m12", &f.m12}, {"m22", &f.m22}};
  for (const auto& [name, v] : blocks) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : *v) os << x << '\n';
  }
}

PatchField read_vtk(std::istream& is) {
  const auto bad = [](const std::string& what) { return Error(ErrorKind::Parse, "vtk: " + what); };
  std::string line;
  for (int i = 0; i < 4; ++i)
    if (!std::getline(is, line)) throw bad("truncated header");
  if (line != "DATASET STRUCTURED_GRID") throw bad("expected a structured grid");
  PatchField f;
  std::string key, type;
  int m1 = 0, m2 = 0, m3 = 0;
  std::size_t n = 0;
  if (!(is >> key >> m1 >> m2 >> m3) || key != "DIMENSIONS" || m1 != m2 || m3 != 1) throw bad("bad DIMENSIONS");
  f.m = m1;
  if (!(is >> key >> n >> type) || key != "POINTS" || n != std::size_t(m1) * m2) throw bad("bad POINTS");
  f.x.resize(n);
  f.y.resize(n);
  double z = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!(is >> f.x[i] >> f.y[i] >> z)) throw bad("truncated point list");
  std::size_t nd = 0;
  if (!(is >> key >> nd) || key != "POINT_DATA" || nd != n) throw bad("bad POINT_DATA");
  std::string name, lut, def;
  int comps = 0;
  while (is >> key) {
    if (key != "SCALARS" || !(is >> name >> type >> comps >> lut >> def) || lut != "LOOKUP_TABLE")
      throw bad("bad SCALARS block");
    std::vector<double>* target = name == "u" ? &f.u : name == "m11" ? &f.m11 : name == "m12" ? &f.m12
                                : name == "m22"                      ? &f.m22
                                                                     : nullptr;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!(is >> v[i])) throw bad("truncated scalar block '" + name + "'");
    if (target) *target = std::move(v);
  }
  return f;
}

}  // namespace kplate
