#include <cmath>

#include "doctest.h"
#include "kplate/models.hpp"
#include "kplate/stability.hpp"

using namespace kplate;

TEST_CASE("observed rate") {
  CHECK(observed_rate(1.0, 0.125, 0.2, 0.1) == doctest::Approx(3));
  CHECK(observed_rate(1.0, 0.25, 1.0, 0.5) == doctest::Approx(2));
}

TEST_CASE("error norms vanish on a reproduced field") {
  auto spec = builtin_model("two_patch", 3);
  const auto dofs = make_dof_map(spec.model.patches);
  for (const char* name : {"quadratic", "cubic", "zero"}) {
    const auto mc = manufactured_case(name);
    Vec u(dofs.total());
    for (int k = 0; k < dofs.patches(); ++k)
      u.segment(dofs.offset[k], dofs.offset[k + 1] - dofs.offset[k]) = l2_projection(spec.model.patches[k], mc.u);
    const auto e = error_norms(spec.model, dofs, u, mc);
    CHECK(e.l2 < 1e-11);
    CHECK(e.h2 < 1e-9);
  }
}

TEST_CASE("error norms of a known difference") {
  // u_h = 0 against u = x^2 / 2 on the unit square: |u|_0^2 = 1/20,
  // |grad u|^2 = 1/3, |hess u|^2 = 1
  auto spec = builtin_model("single_patch", 2);
  const auto dofs = make_dof_map(spec.model.patches);
  const auto e = error_norms(spec.model, dofs, Vec::Zero(dofs.total()), manufactured_case("quadratic"));
  CHECK(e.l2 == doctest::Approx(std::sqrt(1.0 / 20)));
  CHECK(e.h1 == doctest::Approx(std::sqrt(1.0 / 20 + 1.0 / 3)));
  CHECK(e.h2 == doctest::Approx(std::sqrt(1.0 / 20 + 1.0 / 3 + 1.0)));

  double l2 = 0, h2 = 0;
  for (const auto& el : e.elements) {
    l2 += el.l2_sq;
    h2 += el.h2_norm_sq();
  }
  CHECK(std::sqrt(l2) == doctest::Approx(e.l2));
  CHECK(std::sqrt(h2) == doctest::Approx(e.h2));
}

TEST_CASE("mesh size and element count") {
  auto spec = builtin_model("single_patch", 2);
  const int n = element_count(spec.model);
  const auto fine = discretize(spec.model, 2, 1);
  CHECK(element_count(fine) == 4 * n);
  CHECK(mesh_size(fine) == doctest::Approx(mesh_size(spec.model) / 2));
}

TEST_CASE("coercivity constant without constraints is one") {
  // a = N and no jump rows: the Rayleigh quotient is identically one
  const Mat X = Mat::Random(8, 8);
  const SpMat N = SpMat((X * X.transpose() + Mat::Identity(8, 8)).sparseView());
  CHECK(coercivity_constant(N, N, Mat(0, 8)) == doctest::Approx(1.0));
  // a = 2N restricted to the kernel of one row
  Mat B = Mat::Zero(1, 8);
  B(0, 3) = 1;
  CHECK(coercivity_constant(SpMat(2 * N), N, B) == doctest::Approx(2.0));
}

TEST_CASE("inf-sup constant of a zero coupling is zero") {
  const SpMat N = SpMat(Mat::Identity(5, 5).sparseView());
  CHECK(infsup_constant(Mat::Zero(2, 5), N, Mat::Identity(2, 2)) == doctest::Approx(0.0));
  // B = [I 0]: the constant is one for M_q = I
  Mat B = Mat::Zero(2, 5);
  B(0, 0) = B(1, 1) = 1;
  CHECK(infsup_constant(B, N, Mat::Identity(2, 2)) == doctest::Approx(1.0));
}

TEST_CASE("coercivity of the four-patch stability model") {
  const double exact = std::pow(M_PI, 4) / 4 / (1 + M_PI * M_PI / 2 + std::pow(M_PI, 4) / 4);
  CHECK(coercivity_test(3, 0.25) == doctest::Approx(exact).epsilon(1e-3));
}

TEST_CASE("inf-sup constants decrease with the degree") {
  const auto c2 = infsup_test(2, 1.0 / 16), c3 = infsup_test(3, 1.0 / 16), c4 = infsup_test(4, 1.0 / 16);
  CHECK(c2.c_defl > c3.c_defl);
  CHECK(c3.c_defl > c4.c_defl);
  CHECK(c2.c_rot > c3.c_rot);
  CHECK(c3.c_rot > c4.c_rot);
  CHECK(c4.c_defl > 0);
}
