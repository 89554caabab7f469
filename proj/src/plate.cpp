#include "kplate/plate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>

namespace kplate {

double flexural_rigidity(double E, double t, double nu) {
  if (!(E > 0) || !(t > 0)) throw Error(ErrorKind::Parameter, "flexural_rigidity: E and t must be positive");
  if (!(nu >= 0 && nu < 0.5)) throw Error(ErrorKind::Parameter, "flexural_rigidity: nu must lie in [0, 0.5)");
  return E * t * t * t / (12.0 * (1.0 - nu * nu));
}

double PlateMaterial::D() const { return flexural_rigidity(E, t, nu); }
void PlateMaterial::validate() const { (void)D(); }

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Free: return "free";
    case BoundaryTag::Clamped: return "clamped";
    case BoundaryTag::Supported: return "supported";
    case BoundaryTag::Interface: return "interface";
  }
  return "?";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
  if (s == "free") return BoundaryTag::Free;
  if (s == "clamped") return BoundaryTag::Clamped;
  if (s == "supported") return BoundaryTag::Supported;
  if (s == "interface") return BoundaryTag::Interface;
  throw Error(ErrorKind::Parse, "unknown boundary tag '" + s + "'");
}

void Patch::validate() const {
  if (space[0].degree() != space[1].degree())
    throw Error(ErrorKind::UnsupportedDegree, "patch: degree must be equal in both directions");
  if (degree() < 2) throw Error(ErrorKind::UnsupportedDegree, "patch: degree must be at least 2");
  if (quad_points != 0 && quad_points < degree() + 1)
    throw Error(ErrorKind::Parameter, "patch: at least p+1 quadrature points per direction required");
  for (int d = 0; d < 2; ++d) {
    const double tol = 1e-12;
    if (std::abs(space[d].front() - geometry.space()[d].front()) > tol ||
        std::abs(space[d].back() - geometry.space()[d].back()) > tol)
      throw Error(ErrorKind::Knots, "patch: geometry and solution spaces cover different parametric intervals");
  }
}

std::vector<double> cell_breaks(const Patch& patch, int dir) {
  auto a = patch.space[dir].knot_vector().breakpoints();
  const auto b = patch.geometry.space()[dir].knot_vector().breakpoints();
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  const double tol = 1e-13 * (a.back() - a.front());
  a.erase(std::unique(a.begin(), a.end(), [tol](double x, double y) { return std::abs(x - y) <= tol; }), a.end());
  return a;
}

PointBasis eval_point_basis(const Patch& patch, const Vec2& eta) {
  const auto g = patch.geometry.eval(eta);
  const auto b1 = patch.space[0].eval(eta(0), 2);
  const auto b2 = patch.space[1].eval(eta(1), 2);
  const Mat2 Jinv = g.jacobian.inverse();
  const int n = b1.count() * b2.count();

  PointBasis pb;
  pb.index.resize(n);
  pb.value.resize(n);
  pb.grad.resize(n, 2);
  pb.hess.resize(n, 3);
  pb.x = g.x;
  pb.jacobian = g.jacobian;
  pb.det = g.det;
  int k = 0;
  for (int j2 = 0; j2 < b2.count(); ++j2) {
    for (int j1 = 0; j1 < b1.count(); ++j1, ++k) {
      pb.index[k] = patch.space.index(b1.first + j1, b2.first + j2);
      pb.value(k) = b1.ders(0, j1) * b2.ders(0, j2);
      const Vec2 gp(b1.ders(1, j1) * b2.ders(0, j2), b1.ders(0, j1) * b2.ders(1, j2));
      Mat2 hp;
      hp(0, 0) = b1.ders(2, j1) * b2.ders(0, j2);
      hp(0, 1) = hp(1, 0) = b1.ders(1, j1) * b2.ders(1, j2);
      hp(1, 1) = b1.ders(0, j1) * b2.ders(2, j2);
      const Vec2 gx = Jinv.transpose() * gp;
      const Mat2 hx = Jinv.transpose() * (hp - gx(0) * g.hessian[0] - gx(1) * g.hessian[1]) * Jinv;
      pb.grad.row(k) = gx.transpose();
      pb.hess(k, 0) = hx(0, 0);
      pb.hess(k, 1) = hx(0, 1);
      pb.hess(k, 2) = hx(1, 1);
    }
  }
  return pb;
}

namespace {

/// Calls visit(pb, weight) at every Gauss point of the patch, where weight
/// already includes |det J|. `first` is called once per cell before its points.
template <typename CellStart, typename Visit>
void for_each_quadrature_point(const Patch& patch, int npts, CellStart&& first, Visit&& visit) {
  const auto c1 = cell_breaks(patch, 0);
  const auto c2 = cell_breaks(patch, 1);
  const auto rule = gauss_legendre<double>(npts);
  std::vector<double> x1, w1, x2, w2;
  for (std::size_t e2 = 0; e2 + 1 < c2.size(); ++e2) {
    rule.map_to(c2[e2], c2[e2 + 1], x2, w2);
    for (std::size_t e1 = 0; e1 + 1 < c1.size(); ++e1) {
      rule.map_to(c1[e1], c1[e1 + 1], x1, w1);
      first(static_cast<int>(e1), static_cast<int>(e2));
      for (int q2 = 0; q2 < npts; ++q2)
        for (int q1 = 0; q1 < npts; ++q1) {
          const auto pb = eval_point_basis(patch, Vec2(x1[q1], x2[q2]));
          visit(pb, w1[q1] * w2[q2] * std::abs(pb.det));
        }
    }
  }
}

/// Element-wise assembly of a symmetric form whose integrand is H W H^T with
/// H the per-point feature matrix produced by `features`.
template <typename Features>
SpMat assemble_form(const Patch& patch, Features&& features) {
  std::vector<Triplet> trip;
  const int nloc = (patch.degree() + 1) * (patch.degree() + 1);
  Mat local = Mat::Zero(nloc, nloc);
  std::vector<int> idx;
  auto flush = [&] {
    if (idx.empty()) return;
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b) trip.emplace_back(idx[a], idx[b], local(a, b));
    local.setZero();
    idx.clear();
  };
  for_each_quadrature_point(
      patch, patch.points_per_cell(), [&](int, int) { flush(); },
      [&](const PointBasis& pb, double w) {
        if (idx.empty()) idx = pb.index;
        Mat F;
        Mat Q;
        features(pb, F, Q);
        local.noalias() += F * (w * Q) * F.transpose();
      });
  flush();
  const int n = patch.dimension();
  return sparse_from_triplets(n, n, trip);
}

}  // namespace

SpMat assemble_patch_stiffness(const Patch& patch, const PlateMaterial& mat) {
  const double D = mat.D();
  const double nu = mat.nu;
  Mat Q(3, 3);
  Q << 1, 0, nu, 0, 2 * (1 - nu), 0, nu, 0, 1;
  Q *= D;
  return assemble_form(patch, [&](const PointBasis& pb, Mat& F, Mat& W) {
    F = pb.hess;
    W = Q;
  });
}

SpMat assemble_patch_h2_gram(const Patch& patch) {
  Mat Q = Mat::Identity(6, 6);
  Q(4, 4) = 2;
  return assemble_form(patch, [&](const PointBasis& pb, Mat& F, Mat& W) {
    F.resize(pb.value.size(), 6);
    F.col(0) = pb.value;
    F.middleCols(1, 2) = pb.grad;
    F.middleCols(3, 3) = pb.hess;
    W = Q;
  });
}

SpMat assemble_patch_mass(const Patch& patch) {
  const Mat Q = Mat::Identity(1, 1);
  return assemble_form(patch, [&](const PointBasis& pb, Mat& F, Mat& W) {
    F = pb.value;
    W = Q;
  });
}

Vec assemble_load(const Patch& patch, const ScalarField& g) {
  Vec f = Vec::Zero(patch.dimension());
  if (!g) return f;
  for_each_quadrature_point(
      patch, patch.points_per_cell(), [](int, int) {},
      [&](const PointBasis& pb, double w) {
        const double gv = g(pb.x(0), pb.x(1)) * w;
        for (std::size_t a = 0; a < pb.index.size(); ++a) f(pb.index[a]) += gv * pb.value(a);
      });
  return f;
}

Vec assemble_line_load(const Patch& patch, Side side, double q) {
  Vec f = Vec::Zero(patch.dimension());
  const int d = tangent_direction(side);
  const auto cells = cell_breaks(patch, d);
  const auto rule = gauss_legendre<double>(patch.points_per_cell());
  std::vector<double> x, w;
  for (std::size_t e = 0; e + 1 < cells.size(); ++e) {
    rule.map_to(cells[e], cells[e + 1], x, w);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const Vec2 eta = patch.geometry.side_param(side, x[k]);
      const auto pb = eval_point_basis(patch, eta);
      const double ds = pb.jacobian.col(d).norm();
      for (std::size_t a = 0; a < pb.index.size(); ++a) f(pb.index[a]) += q * w[k] * ds * pb.value(a);
    }
  }
  return f;
}

UnivariateMatrices univariate_matrices(const SplineSpace<double>& space, int points_per_cell,
                                       const std::function<double(double)>& weight) {
  const int n = space.dimension();
  UnivariateMatrices m{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
  const auto rule = gauss_legendre<double>(points_per_cell);
  std::vector<double> x, w;
  for (const auto& el : space.elements()) {
    rule.map_to(el[0], el[1], x, w);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto b = space.eval(x[k], 2);
      const double wk = w[k] * (weight ? weight(x[k]) : 1.0);
      const int f = b.first, c = b.count();
      m.M.block(f, f, c, c).noalias() += wk * b.ders.row(0).transpose() * b.ders.row(0);
      m.G.block(f, f, c, c).noalias() += wk * b.ders.row(1).transpose() * b.ders.row(1);
      m.K.block(f, f, c, c).noalias() += wk * b.ders.row(2).transpose() * b.ders.row(2);
    }
  }
  return m;
}

ManufacturedCase manufactured_case(const std::string& name) {
  using std::cos;
  using std::sin;
  constexpr double pi = std::numbers::pi;
  ManufacturedCase c;
  c.name = name;
  if (name == "sin_cos") {
    c.u = [](double x, double) { return 0.5 * sin(2 * pi * x); };
    c.grad = [](double x, double) { return Vec2(pi * cos(2 * pi * x), 0.0); };
    c.hess = [](double x, double) { return Eigen::Vector3d(-2 * pi * pi * sin(2 * pi * x), 0, 0); };
    c.bilaplacian = [](double x, double) { return 8 * std::pow(pi, 4) * sin(2 * pi * x); };
  } else if (name == "sin2_sin2") {
    struct S {
      static double d0(double x) { return std::pow(sin(pi * x), 2); }
      static double d1(double x) { return pi * sin(2 * pi * x); }
      static double d2(double x) { return 2 * pi * pi * cos(2 * pi * x); }
      static double d4(double x) { return -8 * std::pow(pi, 4) * cos(2 * pi * x); }
    };
    c.u = [](double x, double y) { return S::d0(x) * S::d0(y); };
    c.grad = [](double x, double y) { return Vec2(S::d1(x) * S::d0(y), S::d0(x) * S::d1(y)); };
    c.hess = [](double x, double y) {
      return Eigen::Vector3d(S::d2(x) * S::d0(y), S::d1(x) * S::d1(y), S::d0(x) * S::d2(y));
    };
    c.bilaplacian = [](double x, double y) {
      return S::d4(x) * S::d0(y) + 2 * S::d2(x) * S::d2(y) + S::d0(x) * S::d4(y);
    };
  } else if (name == "quadratic") {
    c.u = [](double x, double) { return 0.5 * x * x; };
    c.grad = [](double x, double) { return Vec2(x, 0.0); };
    c.hess = [](double, double) { return Eigen::Vector3d(1, 0, 0); };
    c.bilaplacian = [](double, double) { return 0.0; };
  } else if (name == "cubic") {
    c.u = [](double x, double y) { return x * x * x + x * y * y; };
    c.grad = [](double x, double y) { return Vec2(3 * x * x + y * y, 2 * x * y); };
    c.hess = [](double x, double y) { return Eigen::Vector3d(6 * x, 2 * y, 2 * x); };
    c.bilaplacian = [](double, double) { return 0.0; };
  } else if (name == "zero") {
    c.u = [](double, double) { return 0.0; };
    c.grad = [](double, double) { return Vec2::Zero().eval(); };
    c.hess = [](double, double) { return Eigen::Vector3d::Zero().eval(); };
    c.bilaplacian = [](double, double) { return 0.0; };
  } else {
    throw Error(ErrorKind::Parameter, "unknown manufactured case '" + name + "'");
  }
  return c;
}

Vec l2_projection(const Patch& patch, const ScalarField& f) {
  const SpMat M = assemble_patch_mass(patch);
  const Vec b = assemble_load(patch, f);
  const Eigen::SparseMatrix<double> Mc(M);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Mc);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Decomposition, "l2_projection: mass matrix factorization failed");
  return ldlt.solve(b);
}

Vec2 BoundaryData::gradient(double x, double y) const {
  if (grad) return grad(x, y);
  const double e = 1e-6 * std::max(1.0, std::max(std::abs(x), std::abs(y)));
  return Vec2((u(x + e, y) - u(x - e, y)) / (2 * e), (u(x, y + e) - u(x, y - e)) / (2 * e));
}

namespace {

/// Distance (in index layers) of dof (i1, i2) from a side.
int layer_of(Side s, int i1, int i2, int n1, int n2) {
  switch (s) {
    case Side::West: return i1;
    case Side::East: return n1 - 1 - i1;
    case Side::South: return i2;
    case Side::North: return n2 - 1 - i2;
  }
  return -1;
}

/// Least-squares fit over the dofs `unknown` of sum_s int_s (L u_h - target)^2,
/// where L is the trace (order 0) or the parametric normal derivative (order 1)
/// and `fixed` holds already known coefficients.
void fit_layer(const Patch& patch, const std::vector<Side>& sides, int order, const std::vector<int>& unknown,
               const BoundaryData& data, Vec& coeffs) {
  if (unknown.empty()) return;
  std::vector<int> pos(patch.dimension(), -1);
  for (std::size_t k = 0; k < unknown.size(); ++k) pos[unknown[k]] = static_cast<int>(k);
  const int m = static_cast<int>(unknown.size());
  Mat G = Mat::Zero(m, m);
  Vec r = Vec::Zero(m);
  const auto rule = gauss_legendre<double>(patch.degree() + 2);
  std::vector<double> x, w;
  for (Side s : sides) {
    const int td = tangent_direction(s), nd = normal_direction(s);
    const auto cells = cell_breaks(patch, td);
    for (std::size_t e = 0; e + 1 < cells.size(); ++e) {
      rule.map_to(cells[e], cells[e + 1], x, w);
      for (std::size_t q = 0; q < x.size(); ++q) {
        const Vec2 eta = patch.geometry.side_param(s, x[q]);
        const auto b1 = patch.space[0].eval(eta(0), 1);
        const auto b2 = patch.space[1].eval(eta(1), 1);
        const auto g = patch.geometry.eval(eta);
        double target = order == 0 ? data.u(g.x(0), g.x(1)) : data.gradient(g.x(0), g.x(1)).dot(g.jacobian.col(nd));
        std::vector<std::pair<int, double>> row;
        for (int j2 = 0; j2 < b2.count(); ++j2)
          for (int j1 = 0; j1 < b1.count(); ++j1) {
            const double v = order == 0 ? b1.ders(0, j1) * b2.ders(0, j2)
                                        : (nd == 0 ? b1.ders(1, j1) * b2.ders(0, j2) : b1.ders(0, j1) * b2.ders(1, j2));
            if (v == 0) continue;
            const int idx = patch.space.index(b1.first + j1, b2.first + j2);
            if (pos[idx] >= 0)
              row.emplace_back(pos[idx], v);
            else
              target -= v * coeffs(idx);
          }
        for (const auto& [a, va] : row) {
          r(a) += w[q] * va * target;
          for (const auto& [b, vb] : row) G(a, b) += w[q] * va * vb;
        }
      }
    }
  }
  const Vec c = G.ldlt().solve(r);
  for (int k = 0; k < m; ++k) coeffs(unknown[k]) = c(k);
}

}  // namespace

ClampedDofs clamped_dof_set(const Patch& patch, const BoundaryData& data) {
  const int n1 = patch.space.size(0), n2 = patch.space.size(1);
  std::vector<int> layer(patch.dimension(), 2);
  std::vector<Side> trace_sides, normal_sides;
  for (Side s : all_sides) {
    const BoundaryTag tag = patch.tag(s);
    if (tag != BoundaryTag::Clamped && tag != BoundaryTag::Supported) continue;
    const int depth = tag == BoundaryTag::Clamped ? 2 : 1;
    trace_sides.push_back(s);
    if (depth == 2) normal_sides.push_back(s);
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < n1; ++i1) {
        const int idx = patch.space.index(i1, i2);
        const int l = layer_of(s, i1, i2, n1, n2);
        if (l < depth) layer[idx] = std::min(layer[idx], l);
      }
  }
  ClampedDofs c;
  std::vector<int> first, second;
  for (int i = 0; i < patch.dimension(); ++i) {
    if (layer[i] < 2) c.index.push_back(i);
    if (layer[i] == 0) first.push_back(i);
    if (layer[i] == 1) second.push_back(i);
  }
  c.value = Vec::Zero(static_cast<int>(c.index.size()));
  if (data && !c.index.empty()) {
    Vec coeffs = Vec::Zero(patch.dimension());
    fit_layer(patch, trace_sides, 0, first, data, coeffs);
    fit_layer(patch, normal_sides, 1, second, data, coeffs);
    for (std::size_t k = 0; k < c.index.size(); ++k) c.value(k) = coeffs(c.index[k]);
  }
  return c;
}

FieldPoint eval_field(const Patch& patch, const Vec& coeffs, const Vec2& eta) {
  if (coeffs.size() != patch.dimension()) throw Error(ErrorKind::Dimension, "eval_field: coefficient size mismatch");
  const auto pb = eval_point_basis(patch, eta);
  FieldPoint fp;
  fp.x = pb.x;
  for (std::size_t a = 0; a < pb.index.size(); ++a) {
    const double c = coeffs(pb.index[a]);
    fp.u += c * pb.value(a);
    fp.grad += c * pb.grad.row(a).transpose();
    fp.hess += c * pb.hess.row(a).transpose();
  }
  return fp;
}

Mat2 bending_stress_param(const Vec& coeffs, const Patch& patch, const PlateMaterial& mat, const Vec2& eta) {
  const auto fp = eval_field(patch, coeffs, eta);
  const double D = mat.D();
  const double lap = fp.hess(0) + fp.hess(2);
  Mat2 m;
  m(0, 0) = D * (mat.nu * lap + (1 - mat.nu) * fp.hess(0));
  m(1, 1) = D * (mat.nu * lap + (1 - mat.nu) * fp.hess(2));
  m(0, 1) = m(1, 0) = D * (1 - mat.nu) * fp.hess(1);
  return m;
}

Mat2 bending_stress(const Vec& coeffs, const Patch& patch, const PlateMaterial& mat, const Vec2& x) {
  const Vec2 eta = patch.geometry.invert(x);
  return bending_stress_param(coeffs, patch, mat, eta);
}

}  // namespace kplate
