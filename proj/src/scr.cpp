#include "kplate/scr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/SparseCholesky>

namespace kplate {

void SolverConfig::validate() const {
  for (double eta : {eta_o, eta_t, eta_n})
    if (!(eta > 0 && eta < 1)) throw Error(ErrorKind::Configuration, "solver tolerances must lie in (0, 1)");
  if (max_outer < 1 || max_intermediate < 1 || max_inner < 1)
    throw Error(ErrorKind::Configuration, "solver iteration budgets must be positive");
  if (schur_gmres_budget < 1) throw Error(ErrorKind::Configuration, "Schur GMRES budget must be at least 1");
}

Vec BlockSystem::permute(const Vec& x) const {
  Vec y(n);
  for (int i = 0; i < n_internal(); ++i) y(i) = x(internal[i]);
  for (int j = 0; j < n_interface(); ++j) y(n_internal() + j) = x(interface[j]);
  return y;
}

Vec BlockSystem::unpermute(const Vec& y) const {
  Vec x(n);
  for (int i = 0; i < n_internal(); ++i) x(internal[i]) = y(i);
  for (int j = 0; j < n_interface(); ++j) x(interface[j]) = y(n_internal() + j);
  return x;
}

Vec BlockSystem::apply_fd(const Vec& r_i) const {
  if (fd.empty()) return r_i.cwiseQuotient(Aii.diagonal());
  Vec z = Vec::Zero(r_i.size());
  for (const auto& f : fd) {
    Vec rect = Vec::Zero(f.factors.size());
    for (std::size_t a = 0; a < f.rows.size(); ++a) {
      const int row = f.rows[a];
      rect(f.slot[a]) = r_i(row) / scale(internal[row]);
    }
    const Vec s = fd_apply(f.factors, rect);
    for (std::size_t a = 0; a < f.rows.size(); ++a) {
      const int row = f.rows[a];
      z(row) = s(f.slot[a]) / scale(internal[row]);
    }
  }
  return z;
}

BlockSystem partition(const SpMat& A, const SpMat& A_coupling) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || A_coupling.rows() != n || A_coupling.cols() != n)
    throw Error(ErrorKind::Dimension, "partition: matrix sizes differ");
  BlockSystem bs;
  bs.n = n;
  bs.scale.resize(n);
  const Vec d = A.diagonal();
  for (int i = 0; i < n; ++i) {
    if (!(d(i) > 0)) throw Error(ErrorKind::Scaling, "partition: nonpositive diagonal entry in row " + std::to_string(i));
    bs.scale(i) = 1.0 / std::sqrt(d(i));
  }
  std::vector<char> on_interface(n, 0);
  for (int i = 0; i < n; ++i)
    for (SpMat::InnerIterator it(A_coupling, i); it; ++it)
      if (it.value() != 0) on_interface[i] = 1;
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) {
    auto& list = on_interface[i] ? bs.interface : bs.internal;
    pos[i] = static_cast<int>(list.size());
    list.push_back(i);
  }
  bs.A = bs.scale.asDiagonal() * A * bs.scale.asDiagonal();
  std::vector<Triplet> ti, tb, tc;
  for (int i = 0; i < n; ++i)
    for (SpMat::InnerIterator it(bs.A, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (!on_interface[i] && !on_interface[j]) ti.emplace_back(pos[i], pos[j], it.value());
      else if (!on_interface[i]) tb.emplace_back(pos[i], pos[j], it.value());
      else if (on_interface[j]) tc.emplace_back(pos[i], pos[j], it.value());
    }
  const int ni = bs.n_internal(), ng = bs.n_interface();
  bs.Aii = sparse_from_triplets(ni, ni, ti);
  bs.Big = sparse_from_triplets(ni, ng, tb);
  bs.Cgg = sparse_from_triplets(ng, ng, tc);
  return bs;
}

double fd_coefficient(const GeometryMap<double>& geometry, double D, const Vec2& eta) {
  const auto g = geometry.eval(eta);
  const Mat2& J = g.jacobian;
  // smallest singular value of a 2x2 matrix in closed form
  const double f = J.squaredNorm(), det = std::abs(g.det);
  const double smin_sq = 0.5 * (f - std::sqrt(std::max(0.0, f * f - 4 * det * det)));
  const double inv_norm_sq = 1.0 / smin_sq;
  return D * inv_norm_sq * inv_norm_sq * det;
}

namespace {

std::vector<double> quadrature_points(const SplineSpace<double>& space, int npts) {
  const auto rule = gauss_legendre<double>(npts);
  std::vector<double> pts, x, w;
  for (const auto& el : space.elements()) {
    rule.map_to(el[0], el[1], x, w);
    pts.insert(pts.end(), x.begin(), x.end());
  }
  return pts;
}

/// Weight lookup at the quadrature points used by univariate_matrices.
std::function<double(double)> point_weight(std::vector<double> pts, Vec w) {
  return [pts = std::move(pts), w = std::move(w)](double x) {
    const auto it = std::lower_bound(pts.begin(), pts.end(), x - 1e-14);
    if (it == pts.end() || std::abs(*it - x) > 1e-14)
      throw Error(ErrorKind::Coefficient, "fd weight requested away from the sampled quadrature points");
    return w(it - pts.begin());
  };
}

}  // namespace

void attach_fd(BlockSystem& bs, const MultiPatchModel& model, const Reduction& reduction) {
  if (static_cast<int>(reduction.owner.size()) != bs.n)
    throw Error(ErrorKind::Dimension, "attach_fd: reduction does not match the block system");
  const int np = static_cast<int>(model.patches.size());
  std::vector<std::vector<int>> rows(np);
  for (int r = 0; r < bs.n_internal(); ++r) rows[reduction.owner[bs.internal[r]].patch].push_back(r);
  const double D = model.material.D();
  bs.fd.clear();
  for (int k = 0; k < np; ++k) {
    if (rows[k].empty()) continue;
    const auto& patch = model.patches[k];
    const int n1 = patch.space[0].dimension();
    int lo[2] = {n1, 1 << 30}, hi[2] = {-1, -1};
    for (int r : rows[k]) {
      const int local = reduction.owner[bs.internal[r]].local;
      const int idx[2] = {local % n1, local / n1};
      for (int d = 0; d < 2; ++d) {
        lo[d] = std::min(lo[d], idx[d]);
        hi[d] = std::max(hi[d], idx[d]);
      }
    }
    const int npts = patch.points_per_cell();
    const auto p1 = quadrature_points(patch.space[0], npts), p2 = quadrature_points(patch.space[1], npts);
    Mat c(p1.size(), p2.size());
    for (std::size_t b = 0; b < p2.size(); ++b)
      for (std::size_t a = 0; a < p1.size(); ++a) c(a, b) = fd_coefficient(patch.geometry, D, Vec2(p1[a], p2[b]));
    const auto sep = separate_coefficient(c);
    const auto u1 = univariate_matrices(patch.space[0], npts, point_weight(p1, sep.w1));
    const auto u2 = univariate_matrices(patch.space[1], npts, point_weight(p2, sep.w2));
    const int m1 = hi[0] - lo[0] + 1, m2 = hi[1] - lo[1] + 1;
    PatchFd f;
    f.factors = fd_factors(u1.K.block(lo[0], lo[0], m1, m1), u1.M.block(lo[0], lo[0], m1, m1),
                           u2.K.block(lo[1], lo[1], m2, m2), u2.M.block(lo[1], lo[1], m2, m2));
    f.separation_error = sep.max_relative_error;
    for (int r : rows[k]) {
      const int local = reduction.owner[bs.internal[r]].local;
      f.rows.push_back(r);
      f.slot.push_back((local % n1 - lo[0]) + m1 * (local / n1 - lo[1]));
    }
    bs.fd.push_back(std::move(f));
  }
}

BlockSystem make_block_system(const GlobalSystem& sys, const MultiPatchModel& model) {
  auto bs = partition(sys.A, sys.A_coupling);
  attach_fd(bs, model, sys.reduction);
  return bs;
}

SolveResult solve_internal(const BlockSystem& bs, const Vec& r_i, double tol, int max_iter, int restart) {
  const auto op = [&bs](const Vec& x) -> Vec { return bs.Aii * x; };
  const auto prec = [&bs](const Vec& r) { return bs.apply_fd(r); };
  return gmres(op, r_i, prec, KrylovOptions{tol, max_iter, restart});
}

Vec schur_apply(const BlockSystem& bs, const Vec& x_g, const SolverConfig& cfg, int* inner_iterations) {
  if (x_g.size() != bs.n_interface()) throw Error(ErrorKind::Dimension, "schur_apply: vector size mismatch");
  Vec y = bs.Cgg * x_g;
  if (bs.n_internal() == 0) return y;
  const Vec b = bs.Big * x_g;
  const auto res = solve_internal(bs, b, cfg.eta_n, cfg.max_inner, cfg.gmres_restart);
  if (inner_iterations) *inner_iterations += res.iterations;
  if (!res.converged())
    throw Error(ErrorKind::Solver, std::string("inner A_ii solve did not converge (") + to_string(res.status) + ")",
                "inner");
  y -= bs.Big.transpose() * res.x;
  return y;
}

Mat explicit_schur(const BlockSystem& bs) {
  Mat S = Mat(bs.Cgg);
  if (bs.n_internal() == 0 || bs.n_interface() == 0) return S;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt{Eigen::SparseMatrix<double>(bs.Aii)};
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Decomposition, "explicit_schur: A_ii factorization failed");
  const Mat X = ldlt.solve(Mat(bs.Big));
  S -= Mat(bs.Big.transpose()) * X;
  return S;
}

ApproxSchur build_approx_schur(const BlockSystem& bs, int m) {
  if (m < 1) throw Error(ErrorKind::Configuration, "build_approx_schur: budget must be at least 1");
  ApproxSchur a;
  const int ng = bs.n_interface();
  a.S = Mat(bs.Cgg);
  if (ng == 0) return a;
  if (bs.n_internal() > 0) {
    const SpMat Bt = bs.Big.transpose();
    const Eigen::SparseMatrix<double> Bc(bs.Big);
    for (int j = 0; j < ng; ++j) {
      const Vec b = Bc.col(j);
      if (b.squaredNorm() == 0) continue;
      // tol 0: exactly m iterations unless the Krylov space closes earlier
      const auto res = solve_internal(bs, b, 0.0, m, m);
      a.S.col(j) -= Bt * res.x;
    }
  }
  a.lu.compute(a.S);
  return a;
}

Vec scr_preconditioner_apply(const BlockSystem& bs, const ApproxSchur& approx, const Vec& r, const SolverConfig& cfg,
                             LayerCounts* counts) {
  const int ni = bs.n_internal(), ng = bs.n_interface();
  const Vec y = bs.permute(r);
  Vec r_i = y.head(ni), r_g = y.tail(ng);
  const auto check = [](const SolveResult& s, const char* what) {
    if (!s.converged())
      throw Error(ErrorKind::Solver, std::string(what) + " did not converge (" + to_string(s.status) + ")",
                  "intermediate");
  };
  LayerCounts local;
  if (ni > 0 && ng > 0) {
    const auto first = solve_internal(bs, r_i, cfg.eta_t, cfg.max_intermediate, cfg.gmres_restart);
    check(first, "intermediate A_ii solve");
    local.first = first.iterations;
    r_g -= bs.Big.transpose() * first.x;
  }
  Vec x_g = Vec::Zero(ng);
  if (ng > 0) {
    int inner = 0;
    const auto op = [&](const Vec& x) { return schur_apply(bs, x, cfg, &inner); };
    const auto prec = [&approx](const Vec& v) { return approx.solve(v); };
    const auto schur = gmres(op, r_g, prec, KrylovOptions{cfg.eta_t, cfg.max_intermediate, cfg.gmres_restart, true});
    check(schur, "Schur complement solve");
    local.schur = schur.iterations;
    local.inner = inner;
    x_g = schur.x;
    r_i -= bs.Big * x_g;
  }
  Vec x_i = Vec::Zero(ni);
  if (ni > 0) {
    const auto last = solve_internal(bs, r_i, cfg.eta_t, cfg.max_intermediate, cfg.gmres_restart);
    check(last, "final A_ii solve");
    local.last = last.iterations;
    x_i = last.x;
  }
  if (counts) {
    counts->first += local.first;
    counts->schur += local.schur;
    counts->last += local.last;
    counts->inner += local.inner;
    ++counts->applications;
  }
  Vec out(bs.n);
  out << x_i, x_g;
  return bs.unpermute(out);
}

std::string NestedResult::report() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d (%.1f/%.1f/%.1f)", outer.iterations, avg_first, avg_schur, avg_last);
  return buf;
}

NestedResult solve_nested(const BlockSystem& bs, const Vec& b, const SolverConfig& cfg) {
  cfg.validate();
  if (b.size() != bs.n) throw Error(ErrorKind::Dimension, "solve_nested: right-hand side size mismatch");
  const auto approx = build_approx_schur(bs, cfg.schur_gmres_budget);
  NestedResult res;
  const Vec bs_rhs = bs.scale.cwiseProduct(b);
  const auto op = [&bs](const Vec& x) -> Vec { return bs.A * x; };
  const auto prec = [&](const Vec& r) { return scr_preconditioner_apply(bs, approx, r, cfg, &res.counts); };
  res.outer = fgmres(op, bs_rhs, prec, KrylovOptions{cfg.eta_o, cfg.max_outer, cfg.outer_restart});
  res.outer.x = bs.scale.cwiseProduct(res.outer.x);
  const int n = std::max(1, res.counts.applications);
  res.avg_first = double(res.counts.first) / n;
  res.avg_schur = double(res.counts.schur) / n;
  res.avg_last = double(res.counts.last) / n;
  return res;
}

SolveResult solve_pcg_jacobi(const SpMat& A, const Vec& b, double tol, int max_iter) {
  const JacobiPreconditioner M(A.diagonal());
  return pcg(as_operator(A), b, M, KrylovOptions{tol, max_iter, 0});
}

SolveResult solve_gmres_plain(const SpMat& A, const Vec& b, double tol, int max_iter, int restart) {
  return gmres(as_operator(A), b, IdentityPreconditioner{}, KrylovOptions{tol, max_iter, restart});
}

}  // namespace kplate
