#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "kplate/spline/basis.hpp"

namespace kplate {

/// Patch sides; the parametric square is [0,1]^2 (or the knot ranges).
enum class Side { West = 0, East = 1, South = 2, North = 3 };

inline constexpr std::array<Side, 4> all_sides{Side::West, Side::East, Side::South, Side::North};

inline const char* to_string(Side s) {
  switch (s) {
    case Side::West: return "west";
    case Side::East: return "east";
    case Side::South: return "south";
    case Side::North: return "north";
  }
  return "?";
}

/// Parametric direction normal to the side (0 for west/east).
inline int normal_direction(Side s) { return (s == Side::West || s == Side::East) ? 0 : 1; }
/// Parametric direction running along the side.
inline int tangent_direction(Side s) { return 1 - normal_direction(s); }
inline bool is_upper_side(Side s) { return s == Side::East || s == Side::North; }

template <typename Scalar = double>
struct GeometryPoint {
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
  using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
  Vec2 x;
  Mat2 jacobian;               // jacobian(i, a) = dx_i / d eta_a
  std::array<Mat2, 2> hessian; // hessian[i](a, b) = d^2 x_i / d eta_a d eta_b
  Scalar det = 0;
};

/// Polynomial B-spline map F(eta) = sum_i B_i(eta) P_i of the parametric square into R^2.
template <typename Scalar = double>
class GeometryMap {
 public:
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
  using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
  using Points = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

  GeometryMap() = default;
  GeometryMap(TensorSpace<Scalar> space, Points control_points, Scalar det_tolerance = Scalar(1e-12))
      : space_(std::move(space)), cps_(std::move(control_points)), det_tol_(det_tolerance) {
    if (cps_.rows() != space_.dimension())
      throw Error(ErrorKind::Dimension, "geometry: control point count does not match the space dimension");
  }

  const TensorSpace<Scalar>& space() const { return space_; }
  const Points& control_points() const { return cps_; }
  Scalar det_tolerance() const { return det_tol_; }

  Vec2 lower() const { return {space_[0].front(), space_[1].front()}; }
  Vec2 upper() const { return {space_[0].back(), space_[1].back()}; }

  /// Point, Jacobian and second derivatives without the degeneracy check.
  GeometryPoint<Scalar> eval_unchecked(const Vec2& eta) const {
    const auto b1 = space_[0].eval(eta(0), 2);
    const auto b2 = space_[1].eval(eta(1), 2);
    GeometryPoint<Scalar> g;
    g.x.setZero();
    g.jacobian.setZero();
    g.hessian[0].setZero();
    g.hessian[1].setZero();
    for (int j2 = 0; j2 < b2.count(); ++j2) {
      for (int j1 = 0; j1 < b1.count(); ++j1) {
        const Eigen::Matrix<Scalar, 1, 2> P = cps_.row(space_.index(b1.first + j1, b2.first + j2));
        const Scalar n00 = b1.ders(0, j1) * b2.ders(0, j2);
        const Scalar n10 = b1.ders(1, j1) * b2.ders(0, j2);
        const Scalar n01 = b1.ders(0, j1) * b2.ders(1, j2);
        const Scalar n20 = b1.ders(2, j1) * b2.ders(0, j2);
        const Scalar n11 = b1.ders(1, j1) * b2.ders(1, j2);
        const Scalar n02 = b1.ders(0, j1) * b2.ders(2, j2);
        for (int i = 0; i < 2; ++i) {
          g.x(i) += n00 * P(i);
          g.jacobian(i, 0) += n10 * P(i);
          g.jacobian(i, 1) += n01 * P(i);
          g.hessian[i](0, 0) += n20 * P(i);
          g.hessian[i](0, 1) += n11 * P(i);
          g.hessian[i](1, 1) += n02 * P(i);
        }
      }
    }
    for (int i = 0; i < 2; ++i) g.hessian[i](1, 0) = g.hessian[i](0, 1);
    g.det = g.jacobian.determinant();
    return g;
  }

  GeometryPoint<Scalar> eval(const Vec2& eta) const {
    auto g = eval_unchecked(eta);
    if (!(std::abs(g.det) >= det_tol_))
      throw Error(ErrorKind::Geometry, "geometry: singular Jacobian at eta = (" + std::to_string(double(eta(0))) + ", " +
                                           std::to_string(double(eta(1))) + ")");
    return g;
  }

  Vec2 operator()(const Vec2& eta) const { return eval_unchecked(eta).x; }

  /// Parametric point on a side for the edge coordinate t.
  Vec2 side_param(Side s, Scalar t) const {
    const Vec2 lo = lower(), hi = upper();
    switch (s) {
      case Side::West: return {lo(0), t};
      case Side::East: return {hi(0), t};
      case Side::South: return {t, lo(1)};
      case Side::North: return {t, hi(1)};
    }
    return {};
  }

  /// Edge parameter range of a side.
  std::array<Scalar, 2> side_range(Side s) const {
    const int d = tangent_direction(s);
    return {space_[d].front(), space_[d].back()};
  }

  /// Newton inversion of F; throws when x is not (numerically) in the patch image.
  Vec2 invert(const Vec2& x, Scalar tol = Scalar(1e-12), Vec2 guess = Vec2::Constant(Scalar(-1))) const {
    const Vec2 lo = lower(), hi = upper();
    Vec2 eta = (guess(0) < lo(0)) ? Vec2((lo + hi) / 2) : guess;
    const Scalar scale = std::max<Scalar>(1, x.norm());
    for (int it = 0; it < 100; ++it) {
      const auto g = eval_unchecked(eta);
      const Vec2 r = g.x - x;
      if (r.norm() <= tol * scale) return eta;
      if (std::abs(g.det) < det_tol_) break;
      Vec2 step = g.jacobian.partialPivLu().solve(r);
      eta -= step;
      eta = eta.cwiseMax(lo).cwiseMin(hi);
    }
    const Vec2 r = eval_unchecked(eta).x - x;
    if (r.norm() <= Scalar(1e3) * tol * scale) return eta;
    throw Error(ErrorKind::Geometry, "geometry: point inversion failed (point outside the patch?)");
  }

 private:
  TensorSpace<Scalar> space_;
  Points cps_;
  Scalar det_tol_ = Scalar(1e-12);
};

template <typename Scalar>
GeometryPoint<Scalar> geometry_eval(const GeometryMap<Scalar>& map, const Eigen::Matrix<Scalar, 2, 1>& eta) {
  return map.eval(eta);
}

}  // namespace kplate
