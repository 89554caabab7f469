#pragma once

#include <vector>

#include "kplate/coupling.hpp"

namespace kplate {

struct LineLoad {
  int patch = 0;
  Side side = Side::West;
  double q = 0;  ///< force per unit length
};

struct LoadSpec {
  ScalarField body;            ///< distributed load g
  std::vector<LineLoad> lines;
  BoundaryData boundary;       ///< clamped boundary data (empty: homogeneous)
};

/// Elimination of clamped dofs and cross-point slaves: u = T * uhat + lift.
struct Reduction {
  SpMat T;
  Vec lift;
  struct Dof {
    int patch = 0;
    int local = 0;
  };
  std::vector<Dof> owner;  ///< per reduced dof: representative patch dof

  int size() const { return static_cast<int>(T.cols()); }
  Vec expand(const Vec& uhat) const { return T * uhat + lift; }
};

Reduction make_reduction(const MultiPatchModel& model, const DofMap& dofs,
                         const std::vector<CrossPointConstraint>& cross_points, const BoundaryData& boundary = {});

struct GlobalSystem {
  DofMap dofs;
  std::vector<InterfaceDescriptor> interfaces;
  std::vector<CouplingBlock> couplings;
  std::vector<CrossPointConstraint> cross_points;
  SpMat stiffness;  ///< full, block diagonal over patches
  SpMat coupling;   ///< full, sum of interface blocks
  Vec load;         ///< full
  Reduction reduction;
  SpMat A;           ///< reduced system matrix
  Vec f;             ///< reduced right-hand side
  SpMat A_coupling;  ///< reduced coupling part

  Vec expand(const Vec& uhat) const { return reduction.expand(uhat); }
  Vec patch_coefficients(const Vec& u, int patch) const {
    return u.segment(dofs.offset[patch], dofs.offset[patch + 1] - dofs.offset[patch]);
  }
};

SpMat scatter_blocks(int n, const std::vector<CouplingBlock>& blocks);
SpMat block_diagonal(const std::vector<SpMat>& blocks);

GlobalSystem assemble_system(const MultiPatchModel& model, const LoadSpec& load, const CouplingOptions& opt);

/// Sparse direct solve with symmetric diagonal scaling and one refinement step.
Vec solve_direct(const SpMat& A, const Vec& b);

}  // namespace kplate
