#include "kplate/stability.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

#include "kplate/krylov.hpp"

namespace kplate {

ErrorReport error_norms(const MultiPatchModel& model, const DofMap& dofs, const Vec& u, const ManufacturedCase& exact,
                        int extra_points) {
  if (u.size() != dofs.total()) throw Error(ErrorKind::Dimension, "error_norms: coefficient size mismatch");
  ErrorReport r;
  double l2 = 0, h1 = 0, h2 = 0;
  for (int k = 0; k < dofs.patches(); ++k) {
    const auto& patch = model.patches[k];
    const Vec c = u.segment(dofs.offset[k], patch.dimension());
    const auto c1 = cell_breaks(patch, 0), c2 = cell_breaks(patch, 1);
    const int npts = patch.degree() + 1 + extra_points;
    const auto rule = gauss_legendre<double>(npts);
    std::vector<double> x1, w1, x2, w2;
    for (std::size_t e2 = 0; e2 + 1 < c2.size(); ++e2) {
      rule.map_to(c2[e2], c2[e2 + 1], x2, w2);
      for (std::size_t e1 = 0; e1 + 1 < c1.size(); ++e1) {
        rule.map_to(c1[e1], c1[e1 + 1], x1, w1);
        ElementError ee;
        ee.patch = k;
        ee.e1 = static_cast<int>(e1);
        ee.e2 = static_cast<int>(e2);
        for (int q2 = 0; q2 < npts; ++q2)
          for (int q1 = 0; q1 < npts; ++q1) {
            const auto pb = eval_point_basis(patch, Vec2(x1[q1], x2[q2]));
            double uh = 0;
            Vec2 gh = Vec2::Zero();
            Eigen::Vector3d hh = Eigen::Vector3d::Zero();
            for (std::size_t a = 0; a < pb.index.size(); ++a) {
              const double ca = c(pb.index[a]);
              uh += ca * pb.value(a);
              gh += ca * pb.grad.row(a).transpose();
              hh += ca * pb.hess.row(a).transpose();
            }
            const double X = pb.x(0), Y = pb.x(1);
            const double w = w1[q1] * w2[q2] * std::abs(pb.det);
            const double e0 = exact.u(X, Y) - uh;
            const Vec2 eg = exact.grad(X, Y) - gh;
            const Eigen::Vector3d eh = exact.hess(X, Y) - hh;
            ee.l2_sq += w * e0 * e0;
            ee.h1_sq += w * eg.squaredNorm();
            ee.h2_sq += w * (eh(0) * eh(0) + 2 * eh(1) * eh(1) + eh(2) * eh(2));
          }
        l2 += ee.l2_sq;
        h1 += ee.h1_sq;
        h2 += ee.h2_sq;
        r.elements.push_back(ee);
      }
    }
  }
  r.l2 = std::sqrt(l2);
  r.h1 = std::sqrt(l2 + h1);
  r.h2 = std::sqrt(l2 + h1 + h2);
  return r;
}

double mesh_size(const MultiPatchModel& model) {
  double h = 0;
  for (const auto& patch : model.patches) {
    const auto b1 = patch.space[0].knot_vector().breakpoints();
    const auto b2 = patch.space[1].knot_vector().breakpoints();
    for (std::size_t j = 0; j + 1 < b2.size(); ++j)
      for (std::size_t i = 0; i + 1 < b1.size(); ++i) {
        const Vec2 a = patch.geometry(Vec2(b1[i], b2[j])), b = patch.geometry(Vec2(b1[i + 1], b2[j + 1]));
        const Vec2 c = patch.geometry(Vec2(b1[i + 1], b2[j])), d = patch.geometry(Vec2(b1[i], b2[j + 1]));
        h = std::max({h, (a - b).norm(), (c - d).norm()});
      }
  }
  return h;
}

int element_count(const MultiPatchModel& model) {
  int n = 0;
  for (const auto& p : model.patches) n += p.space[0].knot_vector().element_count() * p.space[1].knot_vector().element_count();
  return n;
}

double observed_rate(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

Vec solve_model(const GlobalSystem& sys, const MultiPatchModel& model, const SystemSolver& solver) {
  const Vec uhat = solver ? solver(sys, model) : solve_direct(sys.A, sys.f);
  return sys.expand(uhat);
}

std::vector<ConvergenceRow> convergence_study(const ModelSpec& spec, int p, int levels, const CouplingOptions& opt,
                                              int first_level, const SystemSolver& solver, std::string* error) {
  if (spec.load.manufactured.empty())
    throw Error(ErrorKind::Configuration, "convergence study requires a manufactured case in the model");
  const auto exact = manufactured_case(spec.load.manufactured);
  std::vector<ConvergenceRow> rows;
  for (int l = first_level; l < first_level + levels; ++l) {
    ModelSpec s = spec;
    s.model = discretize(spec.model, p, l);
    ConvergenceRow row;
    row.level = l;
    row.elements = element_count(s.model);
    row.h = mesh_size(s.model);
    try {
      const auto sys = assemble_system(s.model, make_load(s), opt);
      row.dofs = static_cast<int>(sys.A.rows());
      const Vec u = solve_model(sys, s.model, solver);
      row.report = error_norms(s.model, sys.dofs, u, exact);
      row.solution = u;
    } catch (const Error& e) {
      if (error) *error = e.what();
      break;
    }
    row.err_l2 = row.report.l2;
    row.err_h1 = row.report.h1;
    row.err_h2 = row.report.h2;
    if (!rows.empty()) {
      const auto& prev = rows.back();
      row.rate_l2 = observed_rate(prev.err_l2, row.err_l2, prev.h, row.h);
      row.rate_h1 = observed_rate(prev.err_h1, row.err_h1, prev.h, row.h);
      row.rate_h2 = observed_rate(prev.err_h2, row.err_h2, prev.h, row.h);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------- stability

namespace {

/// Stability model with n uniform elements per direction on every patch.
MultiPatchModel stability_model(const std::string& name, int p, double h) {
  const int n = static_cast<int>(std::lround(1.0 / h));
  if (n < 1 || std::abs(n * h - 1.0) > 1e-12) throw Error(ErrorKind::Parameter, "stability test: 1/h must be an integer");
  auto model = builtin_model(name, p).model;
  std::vector<double> breaks(n + 1);
  for (int i = 0; i <= n; ++i) breaks[i] = double(i) / n;
  for (auto& patch : model.patches) patch = make_patch(patch.geometry, p, breaks, breaks, patch.tags);
  return model;
}

/// Jump moment matrices and norm matrices on the free dofs of a stability model.
struct StabilityProblem {
  SpMat A, N;
  std::vector<Mat> B_defl, B_rot;  ///< per interface, rows: reduced basis functions
  std::vector<Mat> M_red;
  std::vector<double> h;
};

StabilityProblem stability_problem(const MultiPatchModel& model, bool stability_knots, bool cross_points) {
  StabilityProblem sp;
  const auto dofs = make_dof_map(model.patches);
  const auto interfaces = detect_interfaces(model);
  std::vector<CrossPointConstraint> cps;
  if (cross_points) cps = cross_point_constraints(model, interfaces, dofs);
  const auto red = make_reduction(model, dofs, cps);
  std::vector<SpMat> stiff, gram;
  for (const auto& patch : model.patches) {
    stiff.push_back(assemble_patch_stiffness(patch, model.material));
    gram.push_back(assemble_patch_h2_gram(patch));
  }
  const SpMat Tt = red.T.transpose();
  sp.A = Tt * block_diagonal(stiff) * red.T;
  sp.N = Tt * block_diagonal(gram) * red.T;
  for (const auto& iface : interfaces) {
    const auto mesh = build_intersection_mesh(iface, model.patches);
    const auto samples = sample_jumps(iface, model.patches, dofs, mesh);
    const auto knots = stability_knots ? reduce_knot_vector_stability(iface.slave_knots) : iface.reduced;
    const auto proj = build_projection(samples, knots);
    // scatter the local columns to global dofs, then restrict to the free ones
    std::vector<Triplet> t;
    for (std::size_t j = 0; j < proj.dofs.size(); ++j) t.emplace_back(static_cast<int>(j), proj.dofs[j], 1.0);
    const SpMat P = sparse_from_triplets(static_cast<int>(proj.dofs.size()), dofs.total(), t);
    const SpMat PT = P * red.T;
    sp.B_defl.push_back(proj.jump_defl() * PT);
    sp.B_rot.push_back(proj.jump_rot() * PT);
    sp.M_red.push_back(proj.M_red);
    sp.h.push_back(iface.h);
  }
  return sp;
}

}  // namespace

double infsup_constant(const Mat& B, const SpMat& N, const Mat& Mq) {
  if (B.cols() != N.rows() || B.rows() != Mq.rows())
    throw Error(ErrorKind::Dimension, "infsup_constant: inconsistent matrix sizes");
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt{Eigen::SparseMatrix<double>(N)};
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Decomposition, "infsup_constant: norm matrix is singular");
  const Mat X = ldlt.solve(Mat(B.transpose()));
  Mat S = B * X;
  S = (S + S.transpose()) / 2;
  const auto eig = generalized_eig(S, Mq);
  return std::sqrt(std::max(0.0, eig.values(0)));
}

InfSupResult infsup_test(int p, double h, bool stability_knots) {
  const auto sp = stability_problem(stability_model("stability_two_patch", p, h), stability_knots, false);
  if (sp.B_defl.size() != 1) throw Error(ErrorKind::Configuration, "inf-sup test expects exactly one interface");
  const double hl = sp.h[0];
  InfSupResult r;
  r.c_defl = infsup_constant(sp.B_defl[0], sp.N, hl * hl * hl * sp.M_red[0]);
  r.c_rot = infsup_constant(sp.B_rot[0], sp.N, hl * sp.M_red[0]);
  return r;
}

double coercivity_constant(const SpMat& A, const SpMat& N, const Mat& B, double kernel_tol) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || N.rows() != n || N.cols() != n || B.cols() != n)
    throw Error(ErrorKind::Dimension, "coercivity_constant: inconsistent matrix sizes");
  // Only columns touched by B need a kernel basis; the rest is the identity.
  std::vector<int> gamma;
  std::vector<int> pos(n, -1);
  for (int j = 0; j < n; ++j)
    if (B.rows() > 0 && B.col(j).cwiseAbs().maxCoeff() > 0) {
      pos[j] = static_cast<int>(gamma.size());
      gamma.push_back(j);
    }
  const int ng = static_cast<int>(gamma.size());
  Mat Zg(ng, 0);
  if (ng > 0) {
    Mat Bg(B.rows(), ng);
    for (int j = 0; j < ng; ++j) Bg.col(j) = B.col(gamma[j]);
    const Mat Bt = Bg.transpose();
    Eigen::ColPivHouseholderQR<Mat> qr(Bt);
    const auto R = qr.matrixR();
    const double r0 = std::abs(R(0, 0));
    int rank = 0;
    for (int i = 0; i < std::min(Bt.rows(), Bt.cols()); ++i)
      if (std::abs(R(i, i)) > kernel_tol * r0) ++rank;
    const Mat Q = qr.householderQ();
    Zg = Q.rightCols(ng - rank);
  }
  const int k = (n - ng) + static_cast<int>(Zg.cols());
  if (k == 0) throw Error(ErrorKind::Configuration, "coercivity_constant: the constraint kernel is empty");
  std::vector<Triplet> t;
  int col = 0;
  for (int j = 0; j < n; ++j)
    if (pos[j] < 0) t.emplace_back(j, col++, 1.0);
  for (int c = 0; c < Zg.cols(); ++c, ++col)
    for (int i = 0; i < ng; ++i)
      if (Zg(i, c) != 0) t.emplace_back(gamma[i], col, Zg(i, c));
  const SpMat Z = sparse_from_triplets(n, k, t);
  const SpMat Zt = Z.transpose();
  const SpMat Ak = Zt * A * Z;
  const SpMat Nk = Zt * N * Z;

  constexpr int dense_limit = 1500;
  if (k <= dense_limit) return generalized_eig(Mat(Ak), Mat(Nk)).values(0);

  // Subspace iteration with Rayleigh-Ritz on Ak^-1 Nk.
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt{Eigen::SparseMatrix<double>(Ak)};
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Decomposition, "coercivity_constant: singular form on the kernel");
  const int s = std::min(8, k);
  Mat X(k, s);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < k; ++i) X(i, j) = std::sin(1.0 + i * (j + 1) * 0.7071) + (j == 0 ? 1.0 : 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 1000; ++it) {
    const Mat Y = ldlt.solve(Mat(Nk * X));
    Mat Ka = Y.transpose() * (Ak * Y), Ma = Y.transpose() * (Nk * Y);
    Ka = (Ka + Ka.transpose()) / 2;
    Ma = (Ma + Ma.transpose()) / 2;
    const auto eig = generalized_eig(Ka, Ma);
    X = Y * eig.vectors;
    const double lam = eig.values(0);
    if (std::abs(lam - prev) <= 1e-13 * std::abs(lam)) return lam;
    prev = lam;
  }
  throw Error(ErrorKind::Solver, "coercivity_constant: subspace iteration did not converge");
}

double coercivity_test(int p, double h, bool stability_knots) {
  const auto sp = stability_problem(stability_model("stability_four_patch", p, h), stability_knots, true);
  int rows = 0;
  for (std::size_t i = 0; i < sp.B_defl.size(); ++i) rows += static_cast<int>(sp.B_defl[i].rows() + sp.B_rot[i].rows());
  Mat B(rows, sp.A.cols());
  int r = 0;
  for (std::size_t i = 0; i < sp.B_defl.size(); ++i) {
    B.middleRows(r, sp.B_defl[i].rows()) = sp.B_defl[i];
    r += static_cast<int>(sp.B_defl[i].rows());
    B.middleRows(r, sp.B_rot[i].rows()) = sp.B_rot[i];
    r += static_cast<int>(sp.B_rot[i].rows());
  }
  return coercivity_constant(sp.A, sp.N, B);
}

}  // namespace kplate
