#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kplate/models.hpp"
#include "kplate/scr.hpp"
#include "kplate/stability.hpp"

namespace kplate {

// ------------------------------------------------------------ model files

/// JSON model file. Either {"builtin": name, "degree": p} or an explicit
/// description with "material", "patches", optional "interfaces" and "load".
/// Errors carry the offending field in the message.
ModelSpec parse_model(const std::string& text);
ModelSpec load_model_file(const std::string& path);
std::string serialize_model(const ModelSpec& spec);

enum class SolverKind { Direct, PcgJacobi, Gmres, NestedScr };
const char* to_string(SolverKind s);
SolverKind solver_kind_from_string(const std::string& s);

struct CaseConfig {
  int p = 2;
  int levels = 1;  ///< ladder depth; `run` uses levels - 1 refinements
  CouplingOptions coupling;
  SolverKind solver = SolverKind::Direct;
  SolverConfig solver_config;
  int field_samples = 11;
  std::string out = "out";

  void validate() const;
};

CaseConfig parse_case_config(const std::string& text, CaseConfig base = {});
CaseConfig load_case_config(const std::string& path, CaseConfig base = {});

// ------------------------------------------------------------ solves

struct SolveReport {
  Vec uhat;  ///< reduced solution
  Vec u;     ///< full coefficient vector
  std::string solver;
  int iterations = 0;
  std::string iteration_report;  ///< "N (a/b/c)" for the nested solver
  NestedResult nested;
};

/// Solve an assembled system with the configured solver. Throws Solver
/// errors tagged "outer" when an iterative method does not converge.
SolveReport solve_with(const GlobalSystem& sys, const MultiPatchModel& model, const CaseConfig& cfg);

// ------------------------------------------------------------ CSV

void write_convergence_csv(std::ostream& os, const std::string& case_id, const CaseConfig& cfg,
                           const std::vector<ConvergenceRow>& rows);

struct StabilityCell {
  int p = 0;
  double h = 0;
  double c_defl = 0, c_rot = 0, alpha0 = 0;
};
/// kind: "infsup" or "coercivity".
void write_stability_csv(std::ostream& os, const std::string& kind, const std::vector<StabilityCell>& cells);

struct PrecondRow {
  std::string case_id;
  int p = 0;
  int elements = 0;
  std::string method;
  int outer = 0;
  bool converged = false;
  double avg_first = 0, avg_schur = 0, avg_last = 0;
};
void write_precond_csv(std::ostream& os, const std::vector<PrecondRow>& rows);

// ------------------------------------------------------------ fields

/// Samples of one patch on an m x m parametric grid.
struct PatchField {
  int m = 0;
  std::vector<double> x, y, u, m11, m12, m22;  ///< i1 fastest
};

PatchField sample_patch_field(const Patch& patch, const PlateMaterial& mat, const Vec& coeffs, int m);
std::vector<PatchField> sample_field(const MultiPatchModel& model, const DofMap& dofs, const Vec& u, int m);

/// Legacy ASCII structured grid with scalars u, m11, m12, m22.
void write_vtk(std::ostream& os, const PatchField& f, const std::string& title = "kplate field");
PatchField read_vtk(std::istream& is);

}  // namespace kplate
