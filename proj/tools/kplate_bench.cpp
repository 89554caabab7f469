// Command-line driver: run, convergence, stability, precond-bench, model.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "kplate/io.hpp"

namespace fs = std::filesystem;
using namespace kplate;

namespace {

struct Flags {
  std::string model, config, out;
  int p = 0, beta = -1, levels = 0, samples = 0, budget = 0;
  std::string method, solver;
  double eta_o = 0, eta_t = 0, eta_n = 0;
  bool no_cross_points = false;
};

void add_case_flags(CLI::App* cmd, Flags& f, bool need_model) {
  auto* m = cmd->add_option("--model", f.model, "model file (JSON)");
  if (need_model) m->required();
  cmd->add_option("--config", f.config, "case configuration file (JSON)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--p", f.p, "spline degree");
  cmd->add_option("--beta", f.beta, "penalty exponent (0: p+1)");
  cmd->add_option("--levels", f.levels, "mesh ladder depth");
  cmd->add_option("--method", f.method, "coupling method: projected, scaled, vanilla");
  cmd->add_option("--solver", f.solver, "direct, pcg-jacobi, gmres, nested-scr");
  cmd->add_option("--eta-o", f.eta_o, "outer tolerance");
  cmd->add_option("--eta-t", f.eta_t, "intermediate tolerance");
  cmd->add_option("--eta-n", f.eta_n, "inner tolerance");
  cmd->add_option("--schur-gmres-budget", f.budget, "GMRES iterations per column of the approximate Schur complement");
  cmd->add_option("--samples", f.samples, "field samples per patch direction");
  cmd->add_flag("--no-cross-points", f.no_cross_points, "disable the cross-point constraints");
}

CaseConfig make_config(const Flags& f) {
  CaseConfig c;
  if (!f.config.empty()) c = load_case_config(f.config, c);
  if (f.p > 0) c.p = f.p;
  if (f.beta >= 0) c.coupling.beta = f.beta;
  if (f.levels > 0) c.levels = f.levels;
  if (!f.method.empty()) c.coupling.method = coupling_method_from_string(f.method);
  if (!f.solver.empty()) c.solver = solver_kind_from_string(f.solver);
  if (f.eta_o > 0) c.solver_config.eta_o = f.eta_o;
  if (f.eta_t > 0) c.solver_config.eta_t = f.eta_t;
  if (f.eta_n > 0) c.solver_config.eta_n = f.eta_n;
  if (f.budget > 0) c.solver_config.schur_gmres_budget = f.budget;
  if (f.samples > 0) c.field_samples = f.samples;
  if (f.no_cross_points) c.coupling.cross_point_constraints = false;
  if (!f.out.empty()) c.out = f.out;
  c.validate();
  return c;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return os;
}

void write_fields(const fs::path& dir, const std::string& prefix, const MultiPatchModel& model, const DofMap& dofs,
                  const Vec& u, int samples) {
  const auto fields = sample_field(model, dofs, u, samples);
  for (std::size_t k = 0; k < fields.size(); ++k) {
    auto os = open_out(dir / (prefix + "patch" + std::to_string(k) + ".vtk"));
    write_vtk(os, fields[k], "kplate patch " + std::to_string(k));
  }
}

SystemSolver system_solver(const CaseConfig& cfg) {
  return [cfg](const GlobalSystem& sys, const MultiPatchModel& model) {
    return solve_with(sys, model, cfg).uhat;
  };
}

int run_case(const Flags& f) {
  const auto cfg = make_config(f);
  auto spec = load_model_file(f.model);
  spec.model = discretize(spec.model, cfg.p, cfg.levels - 1);
  const auto sys = assemble_system(spec.model, make_load(spec), cfg.coupling);
  const auto rep = solve_with(sys, spec.model, cfg);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_fields(dir, "field_", spec.model, sys.dofs, rep.u, cfg.field_samples);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double e[3] = {nan, nan, nan};
  if (!spec.load.manufactured.empty()) {
    const auto r = error_norms(spec.model, sys.dofs, rep.u, manufactured_case(spec.load.manufactured));
    e[0] = r.l2;
    e[1] = r.h1;
    e[2] = r.h2;
  }
  const int beta = cfg.coupling.beta > 0 ? cfg.coupling.beta : cfg.p + 1;
  std::ostringstream row;
  row << spec.name << ',' << cfg.p << ',' << beta << ',' << to_string(cfg.coupling.method) << ','
      << to_string(cfg.solver) << ',' << element_count(spec.model) << ',' << sys.A.rows() << ',' << rep.iterations
      << ",\"" << rep.iteration_report << "\"," << std::setprecision(10);
  for (int i = 0; i < 3; ++i) {
    if (!std::isnan(e[i])) row << e[i];
    row << (i < 2 ? "," : "\n");
  }
  auto os = open_out(dir / "summary.csv");
  os << "case,p,beta,method,solver,elements,dofs,iterations,report,err_l2,err_h1,err_h2\n" << row.str();
  std::cout << row.str();
  return 0;
}

int run_convergence(const Flags& f) {
  const auto cfg = make_config(f);
  const auto spec = load_model_file(f.model);
  std::string error;
  const auto rows = convergence_study(spec, cfg.p, cfg.levels, cfg.coupling, 0, system_solver(cfg), &error);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  {
    auto os = open_out(dir / ("convergence_" + std::string(to_string(cfg.coupling.method)) + ".csv"));
    write_convergence_csv(os, spec.name, cfg, rows);
  }
  write_convergence_csv(std::cout, spec.name, cfg, rows);
  for (const auto& r : rows) {
    const auto model = discretize(spec.model, cfg.p, r.level);
    write_fields(dir, "level" + std::to_string(r.level) + "_", model, make_dof_map(model.patches), r.solution,
                 cfg.field_samples);
  }
  if (!error.empty()) {
    std::cerr << "error [solver]: ladder aborted after " << rows.size() << " level(s): " << error << '\n';
    return 2;
  }
  return 0;
}

struct StabilityFlags {
  std::string kind, out = "out";
  int p_min = 2, p_max = 4, k_min = -1, k_max = -1;
  bool stability_knots = false, plain_knots = false;
};

int run_stability(const StabilityFlags& f) {
  if (f.kind != "infsup" && f.kind != "coercivity")
    throw Error(ErrorKind::Configuration, "stability kind must be infsup or coercivity");
  const bool infsup = f.kind == "infsup";
  const int k_min = f.k_min >= 0 ? f.k_min : (infsup ? 3 : 2);
  const int k_max = f.k_max >= 0 ? f.k_max : (infsup ? 6 : 5);
  // inf-sup defaults to Xi*, coercivity to the stability variant
  const bool variant = infsup ? f.stability_knots : !f.plain_knots;
  std::vector<StabilityCell> cells;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int p = f.p_min; p <= f.p_max; ++p)
    for (int k = k_min; k <= k_max; ++k) {
      StabilityCell c{p, std::ldexp(1.0, -k), nan, nan, nan};
      try {
        if (infsup) {
          const auto r = infsup_test(p, c.h, variant);
          c.c_defl = r.c_defl;
          c.c_rot = r.c_rot;
        } else {
          c.alpha0 = coercivity_test(p, c.h, variant);
        }
      } catch (const Error& e) {
        std::cerr << "warning [" << e.category() << "]: p=" << p << " h=1/" << (1 << k) << ": " << e.what() << '\n';
      }
      cells.push_back(c);
    }
  const fs::path dir(f.out);
  fs::create_directories(dir);
  auto os = open_out(dir / ("stability_" + f.kind + ".csv"));
  write_stability_csv(os, f.kind, cells);
  write_stability_csv(std::cout, f.kind, cells);
  return 0;
}

struct BenchFlags {
  Flags base;
  int first_level = 0;
  std::string methods = "pcg-jacobi,nested-scr";
  std::string eta_ladder;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int run_precond_bench(const BenchFlags& f) {
  const auto cfg = make_config(f.base);
  const auto spec = f.base.model.empty() ? builtin_model("four_patch_curved", cfg.p) : load_model_file(f.base.model);
  std::vector<PrecondRow> rows;
  for (int l = f.first_level; l < f.first_level + cfg.levels; ++l) {
    const auto model = discretize(spec.model, cfg.p, l);
    const auto sys = assemble_system(model, make_load(ModelSpec{spec.name, model, spec.load}), cfg.coupling);
    const int elements = element_count(model);
    for (const auto& m : split(f.methods)) {
      const auto kind = solver_kind_from_string(m);
      if (kind == SolverKind::NestedScr) {
        const auto bs = make_block_system(sys, model);
        std::vector<std::string> etas = split(f.eta_ladder);
        if (etas.empty()) etas.push_back("");
        for (const auto& e : etas) {
          SolverConfig sc = cfg.solver_config;
          std::string name = m;
          if (!e.empty()) {
            sc.eta_t = sc.eta_n = std::stod(e);
            name += "(eta=" + e + ")";
          }
          PrecondRow row{spec.name, cfg.p, elements, name};
          try {
            const auto r = solve_nested(bs, sys.f, sc);
            row.outer = r.outer.iterations;
            row.converged = r.outer.converged();
            row.avg_first = r.avg_first;
            row.avg_schur = r.avg_schur;
            row.avg_last = r.avg_last;
          } catch (const Error& err) {
            std::cerr << "warning [" << err.category() << "]: " << name << ": " << err.what() << '\n';
          }
          rows.push_back(row);
        }
      } else {
        const auto& sc = cfg.solver_config;
        const auto r = kind == SolverKind::PcgJacobi ? solve_pcg_jacobi(sys.A, sys.f, sc.eta_o, sc.max_outer)
                       : kind == SolverKind::Gmres   ? solve_gmres_plain(sys.A, sys.f, sc.eta_o, sc.max_outer, sc.gmres_restart)
                                                     : SolveResult{};
        if (kind == SolverKind::Direct) continue;
        PrecondRow row{spec.name, cfg.p, elements, m, r.iterations, r.converged()};
        rows.push_back(row);
      }
    }
  }
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  auto os = open_out(dir / "precond.csv");
  write_precond_csv(os, rows);
  write_precond_csv(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-patch Kirchhoff plate solver and benchmark driver"};
  app.require_subcommand(1);

  Flags run_flags, conv_flags;
  auto* run = app.add_subcommand("run", "assemble, couple, constrain and solve one case");
  add_case_flags(run, run_flags, true);
  auto* conv = app.add_subcommand("convergence", "manufactured-solution convergence ladder");
  add_case_flags(conv, conv_flags, true);

  StabilityFlags stab_flags;
  auto* stab = app.add_subcommand("stability", "numerical inf-sup or coercivity tables");
  stab->add_option("--kind", stab_flags.kind, "infsup or coercivity")->required();
  stab->add_option("--p-min", stab_flags.p_min, "smallest degree");
  stab->add_option("--p-max", stab_flags.p_max, "largest degree");
  stab->add_option("--k-min", stab_flags.k_min, "h = 2^-k, smallest k");
  stab->add_option("--k-max", stab_flags.k_max, "h = 2^-k, largest k");
  stab->add_flag("--stability-knots", stab_flags.stability_knots, "inf-sup: also drop the first and last interior knots");
  stab->add_flag("--plain-knots", stab_flags.plain_knots, "coercivity: use the reduced knot vector as in the solver");
  stab->add_option("--out", stab_flags.out, "output directory");

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("precond-bench", "iteration counts of the baselines and the nested solver");
  add_case_flags(bench, bench_flags.base, false);
  bench->add_option("--first-level", bench_flags.first_level, "first refinement level of the model");
  bench->add_option("--methods", bench_flags.methods, "comma separated: pcg-jacobi, gmres, nested-scr");
  bench->add_option("--eta-ladder", bench_flags.eta_ladder, "comma separated eta_t = eta_n values for nested-scr");

  std::string model_name, model_out;
  int model_p = 2;
  bool list = false;
  auto* model = app.add_subcommand("model", "write a built-in model as a model file");
  model->add_option("--name", model_name, "built-in model name");
  model->add_option("--p", model_p, "spline degree");
  model->add_option("--out", model_out, "output file (default: stdout)");
  model->add_flag("--list", list, "list built-in models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (*run) return run_case(run_flags);
    if (*conv) return run_convergence(conv_flags);
    if (*stab) return run_stability(stab_flags);
    if (*bench) return run_precond_bench(bench_flags);
    if (*model) {
      if (list) {
        for (const auto& n : builtin_model_names()) std::cout << n << '\n';
        return 0;
      }
      const auto text = serialize_model(builtin_model(model_name, model_p)) + "\n";
      if (model_out.empty()) {
        std::cout << text;
      } else {
        auto os = open_out(model_out);
        os << text;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.category() << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
