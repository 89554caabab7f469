#pragma once

#include <string>
#include <vector>

#include <Eigen/LU>

#include "kplate/krylov.hpp"
#include "kplate/system.hpp"

namespace kplate {

/// Tolerances and budgets of the nested solver: eta_o for the outer FGMRES,
/// eta_t for the intermediate A_ii and Schur solves, eta_n for the A_ii solves
/// inside the Schur operator.
struct SolverConfig {
  double eta_o = 1e-10;
  double eta_t = 1e-6;
  double eta_n = 1e-6;
  int max_outer = 1000;
  int max_intermediate = 200;
  int max_inner = 200;
  int outer_restart = 0;  ///< <= 0 means unrestarted
  int gmres_restart = 50;
  int schur_gmres_budget = 6;

  void validate() const;
};

/// Fast-diagonalization data of one patch: the factors act on the bounding
/// rectangle of the patch's internal dofs.
struct PatchFd {
  std::vector<int> rows;  ///< positions in the internal block
  std::vector<int> slot;  ///< index inside the rectangle, per row
  FdFactors factors;
  double separation_error = 0;  ///< max relative error of the separated coefficient
};

/// Diagonally scaled system split into internal (i) and interface (g) dofs.
/// All blocks refer to the scaled matrix S A S with S = diag(A)^-1/2.
struct BlockSystem {
  int n = 0;
  std::vector<int> internal, interface;  ///< reduced dof ids, ascending
  Vec scale;                             ///< diag(A)^-1/2
  SpMat A;                               ///< scaled matrix, original ordering
  SpMat Aii, Big, Cgg;                   ///< Big: internal x interface
  std::vector<PatchFd> fd;               ///< empty: Jacobi on A_ii

  int n_internal() const { return static_cast<int>(internal.size()); }
  int n_interface() const { return static_cast<int>(interface.size()); }
  /// [x_i; x_g] from original ordering and back.
  Vec permute(const Vec& x) const;
  Vec unpermute(const Vec& y) const;
  /// Approximate inverse of the scaled A_ii: D^1/2 FD D^1/2 per patch.
  Vec apply_fd(const Vec& r_i) const;
};

/// Interface dofs are the rows of A_coupling with a nonzero entry.
BlockSystem partition(const SpMat& A, const SpMat& A_coupling);

/// Geometry-weighted FD factors for every patch that owns internal dofs.
void attach_fd(BlockSystem& bs, const MultiPatchModel& model, const Reduction& reduction);

BlockSystem make_block_system(const GlobalSystem& sys, const MultiPatchModel& model);

/// c(eta) = D ||J^-1||_2^4 |det J|.
double fd_coefficient(const GeometryMap<double>& geometry, double D, const Vec2& eta);

/// GMRES on the scaled A_ii with the FD preconditioner.
SolveResult solve_internal(const BlockSystem& bs, const Vec& r_i, double tol, int max_iter, int restart = 50);

/// C x - B^T A_ii^-1 B x with the A_ii solve at eta_n. Throws Solver/"inner"
/// when that solve fails.
Vec schur_apply(const BlockSystem& bs, const Vec& x_g, const SolverConfig& cfg, int* inner_iterations = nullptr);

/// Dense Schur complement with exact A_ii solves (oracle and small problems).
Mat explicit_schur(const BlockSystem& bs);

/// S~ = C - B^T A~_ii^-1 B with each column from m FD-preconditioned GMRES
/// iterations, LU factorized.
struct ApproxSchur {
  Mat S;
  Eigen::PartialPivLU<Mat> lu;
  Vec solve(const Vec& r) const { return S.rows() == 0 ? Vec() : Vec(lu.solve(r)); }
};

ApproxSchur build_approx_schur(const BlockSystem& bs, int m);

/// Iteration totals per layer over preconditioner applications.
struct LayerCounts {
  long first = 0, schur = 0, last = 0, inner = 0;
  int applications = 0;
};

/// One application of the SCR preconditioner to a scaled residual in original
/// ordering. Intermediate failures throw Solver/"intermediate".
Vec scr_preconditioner_apply(const BlockSystem& bs, const ApproxSchur& approx, const Vec& r, const SolverConfig& cfg,
                             LayerCounts* counts = nullptr);

struct NestedResult {
  SolveResult outer;  ///< x is the unscaled solution
  LayerCounts counts;
  double avg_first = 0, avg_schur = 0, avg_last = 0;

  /// "N (a/b/c)" with one decimal.
  std::string report() const;
};

/// FGMRES on the scaled system preconditioned by the SCR. b is the unscaled
/// right-hand side.
NestedResult solve_nested(const BlockSystem& bs, const Vec& b, const SolverConfig& cfg);

/// Baselines on the unscaled system.
SolveResult solve_pcg_jacobi(const SpMat& A, const Vec& b, double tol, int max_iter);
SolveResult solve_gmres_plain(const SpMat& A, const Vec& b, double tol, int max_iter, int restart = 50);

}  // namespace kplate
