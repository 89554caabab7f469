#include "kplate/system.hpp"

#include <algorithm>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace kplate {

SpMat scatter_blocks(int n, const std::vector<CouplingBlock>& blocks) {
  std::vector<Triplet> t;
  for (const auto& b : blocks)
    for (int i = 0; i < b.matrix.rows(); ++i)
      for (int j = 0; j < b.matrix.cols(); ++j)
        if (b.matrix(i, j) != 0) t.emplace_back(b.dofs[i], b.dofs[j], b.matrix(i, j));
  return sparse_from_triplets(n, n, t);
}

SpMat block_diagonal(const std::vector<SpMat>& blocks) {
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.rows());
  std::vector<Triplet> t;
  int off = 0;
  for (const auto& b : blocks) {
    for (int i = 0; i < b.outerSize(); ++i)
      for (SpMat::InnerIterator it(b, i); it; ++it) t.emplace_back(off + it.row(), off + it.col(), it.value());
    off += static_cast<int>(b.rows());
  }
  return sparse_from_triplets(n, n, t);
}

Reduction make_reduction(const MultiPatchModel& model, const DofMap& dofs,
                         const std::vector<CrossPointConstraint>& cross_points, const BoundaryData& boundary) {
  const int n = dofs.total();
  std::vector<char> clamped(n, 0);
  Vec value = Vec::Zero(n);
  for (int k = 0; k < dofs.patches(); ++k) {
    const auto c = clamped_dof_set(model.patches[k], boundary);
    for (std::size_t i = 0; i < c.index.size(); ++i) {
      const int g = dofs.global(k, c.index[i]);
      clamped[g] = 1;
      value(g) = c.value(i);
    }
  }
  std::vector<int> master_of(n, -1);
  for (const auto& cp : cross_points) {
    std::vector<int> group{cp.master};
    group.insert(group.end(), cp.slaves.begin(), cp.slaves.end());
    int fixed = -1;
    for (int g : group)
      if (clamped[g]) {
        fixed = g;
        break;
      }
    for (int g : group) {
      if (fixed >= 0) {
        clamped[g] = 1;
        value(g) = value(fixed);
      } else if (g != cp.master) {
        master_of[g] = cp.master;
      }
    }
  }
  Reduction r;
  std::vector<int> column(n, -1);
  for (int g = 0; g < n; ++g) {
    if (clamped[g] || master_of[g] >= 0) continue;
    column[g] = static_cast<int>(r.owner.size());
    const int k = dofs.patch_of(g);
    r.owner.push_back({k, g - dofs.offset[k]});
  }
  // The free part of the lift only shifts the unknown, so the discrete
  // solution does not depend on it. Filling it with the projected data keeps
  // the lift nearly continuous across interfaces; a lift that jumps there
  // turns into penalty-sized load terms that cancel in the solution and cost
  // digits.
  const bool any_clamped = std::find(clamped.begin(), clamped.end(), 1) != clamped.end();
  if (boundary && any_clamped) {
    for (int k = 0; k < dofs.patches(); ++k) {
      const Vec proj = l2_projection(model.patches[k], boundary.u);
      for (int i = 0; i < proj.size(); ++i)
        if (!clamped[dofs.global(k, i)]) value(dofs.global(k, i)) = proj(i);
    }
    for (const auto& cp : cross_points) {
      if (clamped[cp.master]) continue;
      double mean = value(cp.master);
      for (int g : cp.slaves) mean += value(g);
      mean /= double(cp.slaves.size() + 1);
      value(cp.master) = mean;
      for (int g : cp.slaves) value(g) = mean;
    }
  }
  std::vector<Triplet> t;
  r.lift = value;
  for (int g = 0; g < n; ++g)
    if (!clamped[g]) t.emplace_back(g, master_of[g] >= 0 ? column[master_of[g]] : column[g], 1.0);
  r.T = sparse_from_triplets(n, static_cast<int>(r.owner.size()), t);
  return r;
}

GlobalSystem assemble_system(const MultiPatchModel& model, const LoadSpec& load, const CouplingOptions& opt) {
  model.material.validate();
  for (const auto& p : model.patches) p.validate();
  GlobalSystem s;
  s.dofs = make_dof_map(model.patches);
  const int n = s.dofs.total();

  std::vector<SpMat> blocks;
  s.load = Vec::Zero(n);
  for (int k = 0; k < s.dofs.patches(); ++k) {
    const auto& patch = model.patches[k];
    blocks.push_back(assemble_patch_stiffness(patch, model.material));
    s.load.segment(s.dofs.offset[k], patch.dimension()) += assemble_load(patch, load.body);
  }
  for (const auto& ll : load.lines) {
    if (ll.patch < 0 || ll.patch >= s.dofs.patches()) throw Error(ErrorKind::Parse, "line load references an invalid patch id");
    s.load.segment(s.dofs.offset[ll.patch], model.patches[ll.patch].dimension()) +=
        assemble_line_load(model.patches[ll.patch], ll.side, ll.q);
  }
  s.stiffness = block_diagonal(blocks);

  s.interfaces = detect_interfaces(model);
  for (const auto& iface : s.interfaces)
    s.couplings.push_back(assemble_coupling_terms(iface, model.patches, s.dofs, model.material, opt));
  s.coupling = scatter_blocks(n, s.couplings);
  if (opt.cross_point_constraints) s.cross_points = cross_point_constraints(model, s.interfaces, s.dofs);

  s.reduction = make_reduction(model, s.dofs, s.cross_points, load.boundary);
  const SpMat& T = s.reduction.T;
  const SpMat Tt = T.transpose();
  const SpMat full = s.stiffness + s.coupling;
  s.A = Tt * full * T;
  s.A_coupling = Tt * s.coupling * T;
  s.f = Tt * (s.load - full * s.reduction.lift);
  return s;
}

Vec solve_direct(const SpMat& A, const Vec& b) {
  const int n = static_cast<int>(A.rows());
  if (n == 0) return Vec();
  Vec d = A.diagonal();
  for (int i = 0; i < n; ++i) {
    if (!(d(i) > 0)) throw Error(ErrorKind::Scaling, "solve_direct: nonpositive diagonal entry");
    d(i) = 1.0 / std::sqrt(d(i));
  }
  const Eigen::SparseMatrix<double> As = d.asDiagonal() * Eigen::SparseMatrix<double>(A) * d.asDiagonal();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(As);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Solver, "solve_direct: factorization failed", "direct");
  const Vec bs = d.asDiagonal() * b;
  Vec y = ldlt.solve(bs);
  y += ldlt.solve(bs - As * y);
  return d.asDiagonal() * y;
}

}  // namespace kplate
