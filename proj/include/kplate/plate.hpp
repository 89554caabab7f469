#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kplate/error.hpp"
#include "kplate/quadrature.hpp"
#include "kplate/spline/basis.hpp"
#include "kplate/spline/geometry.hpp"
#include "kplate/spline/knot_vector.hpp"
#include "kplate/types.hpp"

namespace kplate {

struct PlateMaterial {
  double E = 1.0;
  double t = 1.0;
  double nu = 0.0;

  double D() const;
  void validate() const;
};

double flexural_rigidity(double E, double t, double nu);

/// Supported sides fix the deflection only (one layer of control variables).
enum class BoundaryTag { Free, Clamped, Supported, Interface };

const char* to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& s);

/// One tensor-product patch: geometry map, solution space and side tags.
/// The geometry may use a coarser space than the solution; both share the
/// parametric square.
struct Patch {
  GeometryMap<double> geometry;
  TensorSpace<double> space;
  std::array<BoundaryTag, 4> tags{BoundaryTag::Free, BoundaryTag::Free, BoundaryTag::Free, BoundaryTag::Free};
  int quad_points = 0;  ///< Gauss points per direction and cell; 0 means p+1.

  int degree() const { return space.degree(); }
  int dimension() const { return space.dimension(); }
  int points_per_cell() const { return quad_points > 0 ? quad_points : degree() + 1; }
  BoundaryTag tag(Side s) const { return tags[static_cast<int>(s)]; }
  void validate() const;
};

/// Integration cells in one direction: union of solution and geometry breakpoints.
std::vector<double> cell_breaks(const Patch& patch, int dir);

/// Basis functions supported at a point with physical derivatives.
/// hess columns are (xx, xy, yy).
struct PointBasis {
  std::vector<int> index;
  Vec value;
  Eigen::Matrix<double, Eigen::Dynamic, 2> grad;
  Eigen::Matrix<double, Eigen::Dynamic, 3> hess;
  Vec2 x;
  Mat2 jacobian;
  double det = 0;
};

PointBasis eval_point_basis(const Patch& patch, const Vec2& eta);

/// Univariate mass, first-derivative and second-derivative Gram matrices of a
/// spline space with an optional positive weight evaluated at Gauss points.
struct UnivariateMatrices {
  Mat M, G, K;
};
UnivariateMatrices univariate_matrices(const SplineSpace<double>& space, int points_per_cell,
                                       const std::function<double(double)>& weight = {});

/// Bending stiffness over patch dofs.
SpMat assemble_patch_stiffness(const Patch& patch, const PlateMaterial& mat);

/// Mass + gradient Gram + Hessian Gram (full broken H^2 inner product).
SpMat assemble_patch_h2_gram(const Patch& patch);
SpMat assemble_patch_mass(const Patch& patch);

using ScalarField = std::function<double(double, double)>;

Vec assemble_load(const Patch& patch, const ScalarField& g);
/// Edge load q (force per length) integrated along a side.
Vec assemble_line_load(const Patch& patch, Side side, double q);

/// Exact deflection with derivatives up to order four (for the load).
struct ManufacturedCase {
  std::string name;
  std::function<double(double, double)> u;
  std::function<Vec2(double, double)> grad;
  std::function<Eigen::Vector3d(double, double)> hess;  ///< (xx, xy, yy)
  std::function<double(double, double)> bilaplacian;

  ScalarField load(double D) const {
    auto b = bilaplacian;
    return [b, D](double x, double y) { return D * b(x, y); };
  }
};

/// Built-in cases: "sin_cos" (sin(pi x) cos(pi x)), "sin2_sin2"
/// (sin^2(pi x) sin^2(pi y)), "quadratic" (x^2/2), "cubic" (x^3 + x y^2), "zero".
ManufacturedCase manufactured_case(const std::string& name);

/// Clamped boundary data: deflection and its gradient (the gradient is
/// approximated by central differences when absent).
struct BoundaryData {
  ScalarField u;
  std::function<Vec2(double, double)> grad;

  explicit operator bool() const { return static_cast<bool>(u); }
  Vec2 gradient(double x, double y) const;
};

/// Constrained dofs of a patch with prescribed values.
struct ClampedDofs {
  std::vector<int> index;  ///< sorted local dof indices
  Vec value;
};

/// Two layers of control variables per clamped side and one per supported
/// side. The first layer is the least-squares fit of the trace of `data` on
/// those sides, the second the fit of the parametric normal derivative on the
/// clamped sides with the first layer fixed.
/// Homogeneous (all zero) when `data` is empty.
ClampedDofs clamped_dof_set(const Patch& patch, const BoundaryData& data = {});

/// Coefficients of the L2 projection of f onto the patch space.
Vec l2_projection(const Patch& patch, const ScalarField& f);

/// Values and physical derivatives of a discrete field at a parametric point.
struct FieldPoint {
  double u = 0;
  Vec2 grad = Vec2::Zero();
  Eigen::Vector3d hess = Eigen::Vector3d::Zero();
  Vec2 x = Vec2::Zero();
};
FieldPoint eval_field(const Patch& patch, const Vec& coeffs, const Vec2& eta);

/// m_ij = D (nu delta_ij u_kk + (1 - nu) u_ij) at parametric point eta.
Mat2 bending_stress_param(const Vec& coeffs, const Patch& patch, const PlateMaterial& mat, const Vec2& eta);
/// Same at a physical point; inverts the geometry map.
Mat2 bending_stress(const Vec& coeffs, const Patch& patch, const PlateMaterial& mat, const Vec2& x);

}  // namespace kplate
