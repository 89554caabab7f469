#include <cmath>
#include <numeric>

#include "doctest.h"
#include "kplate/models.hpp"
#include "kplate/stability.hpp"

using namespace kplate;

namespace {

Patch unit_patch(int p, int elements, double a = 1, std::array<BoundaryTag, 4> tags = {}) {
  std::vector<double> b(elements + 1);
  for (int i = 0; i <= elements; ++i) b[i] = double(i) / elements;
  return make_patch(rectangle_geometry(0, a, 0, a), p, b, b, tags);
}

// dof index i1 + n1 i2: the i2 factor is the outer Kronecker factor
Mat kron(const Mat& outer, const Mat& inner) {
  Mat K(outer.rows() * inner.rows(), outer.cols() * inner.cols());
  for (int i = 0; i < outer.rows(); ++i)
    for (int j = 0; j < outer.cols(); ++j) K.block(i * inner.rows(), j * inner.cols(), inner.rows(), inner.cols()) = outer(i, j) * inner;
  return K;
}

}  // namespace

TEST_CASE("flexural rigidity") {
  CHECK(flexural_rigidity(12, 1, 0) == doctest::Approx(1));
  CHECK(flexural_rigidity(1e6, 0.01, 0.3) == doctest::Approx(1e6 * 1e-6 / (12 * 0.91)));
  PlateMaterial bad{1, 1, 0.5};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("stiffness on the unit square is a Kronecker sum") {
  const PlateMaterial mat{12, 1, 0};  // D = 1
  for (int p : {2, 3}) {
    const Patch patch = unit_patch(p, 3);
    const auto u = univariate_matrices(patch.space[0], p + 1);
    const Mat oracle = kron(u.M, u.K) + 2 * kron(u.G, u.G) + kron(u.K, u.M);
    const Mat K = Mat(assemble_patch_stiffness(patch, mat));
    CHECK((K - oracle).norm() <= 1e-12 * oracle.norm());
  }
}

TEST_CASE("stiffness symmetry and affine kernel on a curved patch") {
  const auto spec = builtin_model("four_patch_curved", 3);
  for (const auto& patch : spec.model.patches) {
    const Mat K = Mat(assemble_patch_stiffness(patch, spec.model.material));
    CHECK((K - K.transpose()).norm() <= 1e-13 * K.norm());
    for (const ScalarField& f : {ScalarField([](double, double) { return 1.0; }), ScalarField([](double x, double) { return x; }),
                                ScalarField([](double x, double y) { return 2 * x - y; })}) {
      const Vec a = l2_projection(patch, f);
      CHECK((K * a).norm() <= 1e-9 * K.norm() * a.norm());
    }
    // positive semidefinite
    Eigen::SelfAdjointEigenSolver<Mat> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * es.eigenvalues().maxCoeff());
  }
}

TEST_CASE("stiffness scales with the inverse square of the domain size") {
  const PlateMaterial mat{1e6, 0.01, 0.2};
  const Mat K1 = Mat(assemble_patch_stiffness(unit_patch(2, 4), mat));
  const Mat K2 = Mat(assemble_patch_stiffness(unit_patch(2, 4, 2.0), mat));
  CHECK((K2 - K1 / 4).norm() <= 1e-12 * K1.norm());
}

TEST_CASE("load vectors") {
  const Patch patch = unit_patch(3, 4, 2.0);
  const Vec f = assemble_load(patch, [](double, double) { return 1.0; });
  CHECK(f.sum() == doctest::Approx(4.0));
  const Vec q = assemble_line_load(patch, Side::North, 3.0);
  CHECK(q.sum() == doctest::Approx(6.0));
  // only the north row carries the line load
  for (int i = 0; i < q.size(); ++i)
    if (patch.space.multi_index(i)[1] != patch.space.size(1) - 1) CHECK(q(i) == 0.0);
}

TEST_CASE("clamped and supported dof sets") {
  using T = BoundaryTag;
  const Patch clamped = unit_patch(2, 4, 1, {T::Clamped, T::Clamped, T::Clamped, T::Clamped});
  CHECK(clamped_dof_set(clamped).index.size() == 32);  // 6x6 minus the inner 2x2
  const Patch supported = unit_patch(2, 4, 1, {T::Supported, T::Supported, T::Supported, T::Supported});
  CHECK(clamped_dof_set(supported).index.size() == 20);
  const Patch mixed = unit_patch(2, 4, 1, {T::Clamped, T::Free, T::Free, T::Free});
  CHECK(clamped_dof_set(mixed).index.size() == 12);

  // inhomogeneous data: a cubic is reproduced exactly by the two-stage fit
  const Patch c3 = unit_patch(3, 2, 1, {T::Clamped, T::Clamped, T::Clamped, T::Clamped});
  const auto mc = manufactured_case("cubic");
  BoundaryData data{mc.u, mc.grad};
  const auto cd = clamped_dof_set(c3, data);
  const Vec exact = l2_projection(c3, mc.u);
  for (std::size_t k = 0; k < cd.index.size(); ++k) CHECK(cd.value(k) == doctest::Approx(exact(cd.index[k])).epsilon(1e-10));
}

TEST_CASE("manufactured loads match finite differences of the exact solution") {
  for (const char* name : {"sin_cos", "sin2_sin2", "cubic"}) {
    const auto mc = manufactured_case(name);
    const double h = 1e-4, x = 0.31, y = 0.57;
    const Vec2 g = mc.grad(x, y);
    CHECK(g(0) == doctest::Approx((mc.u(x + h, y) - mc.u(x - h, y)) / (2 * h)).epsilon(1e-6));
    CHECK(g(1) == doctest::Approx((mc.u(x, y + h) - mc.u(x, y - h)) / (2 * h)).epsilon(1e-6));
    const double lap = mc.hess(x, y)(0) + mc.hess(x, y)(2);
    auto laplace = [&](double a, double b) { return mc.hess(a, b)(0) + mc.hess(a, b)(2); };
    const double bil = (laplace(x + h, y) + laplace(x - h, y) + laplace(x, y + h) + laplace(x, y - h) - 4 * lap) / (h * h);
    CHECK(mc.bilaplacian(x, y) == doctest::Approx(bil).epsilon(1e-4).scale(1));
  }
}

TEST_CASE("single patch convergence rates") {
  // L2 duality gains only min(p-1, 2) over the H2 rate of a fourth-order
  // problem: quadratics converge like (2, 2, 1), cubics like (4, 3, 2)
  const double expected[2][3] = {{2, 2, 1}, {4, 3, 2}};
  for (int p : {2, 3}) {
    const auto rows = convergence_study(builtin_model("single_patch", p), p, 4, {});
    REQUIRE(rows.size() == 4);
    const auto& e = expected[p - 2];
    CHECK(rows.back().rate_l2 == doctest::Approx(e[0]).epsilon(0.1));
    CHECK(rows.back().rate_h1 == doctest::Approx(e[1]).epsilon(0.1));
    CHECK(rows.back().rate_h2 == doctest::Approx(e[2]).epsilon(0.1));
  }
}

TEST_CASE("discrete energy decreases under refinement") {
  // for nested spaces the Galerkin solution maximizes f.u = a(u,u)
  const auto spec = builtin_model("single_patch", 3);
  LoadSpec load;
  load.body = [](double, double) { return 1.0; };
  double prev = 0;
  for (int l = 0; l < 3; ++l) {
    const auto sys = assemble_system(discretize(spec.model, 3, l), load, {});
    const Vec u = solve_direct(sys.A, sys.f);
    const double work = sys.f.dot(u);
    CHECK(work >= prev * (1 - 1e-12));
    prev = work;
  }
}

TEST_CASE("bending moments of a quadratic field") {
  // u = x^2 / 2 gives m11 = D, m22 = nu D, m12 = 0
  const PlateMaterial mat{1e6, 0.01, 0.3};
  const Patch patch = unit_patch(2, 2);
  const Vec a = l2_projection(patch, [](double x, double) { return x * x / 2; });
  const Mat2 m = bending_stress_param(a, patch, mat, Vec2(0.3, 0.6));
  CHECK(m(0, 0) == doctest::Approx(mat.D()));
  CHECK(m(1, 1) == doctest::Approx(0.3 * mat.D()));
  CHECK(std::abs(m(0, 1)) < 1e-9 * mat.D());
}
