#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kplate/models.hpp"

namespace kplate {

/// Squared error contributions of one integration cell.
struct ElementError {
  int patch = 0;
  int e1 = 0, e2 = 0;  ///< cell indices per direction
  double l2_sq = 0;    ///< |u - u_h|^2
  double h1_sq = 0;    ///< |grad(u - u_h)|^2
  double h2_sq = 0;    ///< |hess(u - u_h)|^2
  double h2_norm_sq() const { return l2_sq + h1_sq + h2_sq; }
};

/// Broken norms: l2, full H1 and full H2 norms of the error.
struct ErrorReport {
  double l2 = 0, h1 = 0, h2 = 0;
  std::vector<ElementError> elements;
};

/// u is the full coefficient vector (all patches, dof map order).
ErrorReport error_norms(const MultiPatchModel& model, const DofMap& dofs, const Vec& u, const ManufacturedCase& exact,
                        int extra_points = 2);

/// Largest physical element diagonal over all patches.
double mesh_size(const MultiPatchModel& model);
int element_count(const MultiPatchModel& model);

struct ConvergenceRow {
  int level = 0;
  int elements = 0;
  double h = 0;
  int dofs = 0;
  double err_l2 = 0, err_h1 = 0, err_h2 = 0;
  double rate_l2 = std::numeric_limits<double>::quiet_NaN();
  double rate_h1 = std::numeric_limits<double>::quiet_NaN();
  double rate_h2 = std::numeric_limits<double>::quiet_NaN();
  ErrorReport report;
  Vec solution;  ///< full coefficient vector of this level
};

double observed_rate(double e_coarse, double e_fine, double h_coarse, double h_fine);

/// Returns the reduced solution of an assembled system of the given model.
using SystemSolver = std::function<Vec(const GlobalSystem&, const MultiPatchModel&)>;

/// Solve the manufactured case on levels first_level .. first_level+levels-1.
/// A failing solve stops the ladder; the rows computed so far are returned
/// and `error` receives the message.
std::vector<ConvergenceRow> convergence_study(const ModelSpec& spec, int p, int levels, const CouplingOptions& opt,
                                              int first_level = 0, const SystemSolver& solver = {},
                                              std::string* error = nullptr);

/// Solve one discretization; returns the full coefficient vector.
Vec solve_model(const GlobalSystem& sys, const MultiPatchModel& model, const SystemSolver& solver = {});

// ---------------------------------------------------------------- stability

struct InfSupResult {
  double c_defl = 0;
  double c_rot = 0;
};

/// sqrt(lambda_min(B N^-1 B^T, M_q)): N is the broken H2 Gram matrix on the
/// free dofs and M_q = h^3 M_red (deflection) or h M_red (rotation).
double infsup_constant(const Mat& B, const SpMat& N, const Mat& Mq);

/// Straight two-patch split of [0,2]x[0,1] with simply supported outer sides,
/// conforming meshes with 1/h elements per direction on unit patches.
/// stability_knots selects the reduced space without the first and last
/// interior knots.
InfSupResult infsup_test(int p, double h, bool stability_knots = false);

/// alpha_0 = min a(v,v)/||v||^2 over the kernel of the stacked jump moments.
double coercivity_constant(const SpMat& A, const SpMat& N, const Mat& B, double kernel_tol = 1e-10);

/// Four unit patches around a cross-point, simply supported outer sides,
/// cross-point constraints applied.
double coercivity_test(int p, double h, bool stability_knots = true);

}  // namespace kplate
