#pragma once

#include <optional>
#include <vector>

#include "kplate/plate.hpp"

namespace kplate {

/// A pair of sides the user declares as coupled; geometry is still checked.
struct InterfaceHint {
  int patch_a = 0;
  Side side_a = Side::West;
  int patch_b = 0;
  Side side_b = Side::West;
};

struct MultiPatchModel {
  std::vector<Patch> patches;
  PlateMaterial material;
  std::vector<InterfaceHint> interfaces;  ///< optional; empty means automatic detection
};

/// Global numbering: patch k owns [offset[k], offset[k+1]).
struct DofMap {
  std::vector<int> offset;

  int total() const { return offset.empty() ? 0 : offset.back(); }
  int global(int patch, int local) const { return offset[patch] + local; }
  int patch_of(int g) const;
  int patches() const { return static_cast<int>(offset.size()) - 1; }
};

DofMap make_dof_map(const std::vector<Patch>& patches);

/// Sub-interval [t0, t1] of the edge parameter of one patch side.
struct InterfaceSide {
  int patch = 0;
  Side side = Side::West;
  double t0 = 0, t1 = 1;
};

struct InterfaceDescriptor {
  InterfaceSide master, slave;
  bool reversed = false;          ///< master parameter decreases along the slave parameter
  KnotVector<double> slave_knots; ///< slave solution knots restricted to the shared part
  KnotVector<double> reduced;     ///< reduce_knot_vector(slave_knots)
  double measure = 0;             ///< physical length
  double h = 0;                   ///< largest physical slave span on the interface
};

/// Shared edges between patches; sides tagged clamped are skipped.
std::vector<InterfaceDescriptor> detect_interfaces(const MultiPatchModel& model, double rel_tol = 1e-8);

/// Physical edge curve of a patch side.
struct EdgeCurve {
  const Patch* patch = nullptr;
  Side side = Side::West;

  Vec2 point(double t) const;
  Vec2 tangent(double t) const;
  double lo() const;
  double hi() const;
  /// Closest parameter to x; Newton from the best of a sampled start.
  double closest(const Vec2& x, std::optional<double> guess = std::nullopt, double tol = 1e-10) const;
  /// Outward unit normal at edge parameter t.
  Vec2 outward_normal(double t) const;
};

struct InterfacePoint {
  double tau = 0;     ///< common (slave) parameter
  double weight = 0;  ///< Gauss weight times arc length element
  Vec2 x;
  Vec2 eta_master, eta_slave;
  Vec2 n_master, n_slave;
};

/// Cells of the common parametrization, each inside one master and one slave span.
struct IntersectionMesh {
  std::vector<double> breaks;
  std::vector<InterfacePoint> points;
};

IntersectionMesh build_intersection_mesh(const InterfaceDescriptor& iface, const std::vector<Patch>& patches,
                                         int points_per_cell = 0);

/// Jumps sampled at the interface quadrature points, over a local list of global dofs.
struct JumpSamples {
  std::vector<int> dofs;
  Vec weight;          ///< per point
  Vec tau;
  Mat val_m, val_s;    ///< trace values (rows: points)
  Mat dn_m, dn_s;      ///< outward normal derivatives (rows: points)

  /// [[u]] = u_master - u_slave
  Mat defl() const { return val_m - val_s; }
  /// [[grad u]]_n = grad u_m . n_m + grad u_s . n_s
  Mat rot() const { return dn_m + dn_s; }
};

JumpSamples sample_jumps(const InterfaceDescriptor& iface, const std::vector<Patch>& patches, const DofMap& dofs,
                         const IntersectionMesh& mesh);

/// L2 projection onto the reduced space of one interface.
struct ProjectionOperator {
  KnotVector<double> knots;
  Mat M_red;
  std::vector<int> dofs;
  Mat G_master_val, G_slave_val;  ///< moments of the traces
  Mat G_master_dn, G_slave_dn;    ///< moments of the outward normal derivatives

  Mat jump_defl() const { return G_master_val - G_slave_val; }
  Mat jump_rot() const { return G_master_dn + G_slave_dn; }
  /// Reduced-space coefficients of the projection of given moments.
  Vec solve(const Vec& moments) const;
};

ProjectionOperator build_projection(const JumpSamples& samples, const KnotVector<double>& reduced_knots);

/// Reduced-space basis values at the samples (rows: points).
Mat reduced_basis_at(const KnotVector<double>& reduced_knots, const Vec& tau);

struct PenaltyParameters {
  double alpha_defl = 0;
  double alpha_rot = 0;
  int beta = 0;
};

PenaltyParameters penalty_parameters(const PlateMaterial& mat, const InterfaceDescriptor& iface, int beta);
PenaltyParameters penalty_parameters(const PlateMaterial& mat, double measure, double h, int beta);
/// delta E t / (h (1 - nu^2)) and delta E t^3 / (12 h (1 - nu^2)).
PenaltyParameters scaled_penalty_parameters(const PlateMaterial& mat, double h, double delta);

enum class CouplingMethod { Projected, Scaled, Vanilla };
const char* to_string(CouplingMethod m);
CouplingMethod coupling_method_from_string(const std::string& s);

struct CouplingOptions {
  CouplingMethod method = CouplingMethod::Projected;
  int beta = 0;                 ///< 0 selects p+1
  double delta = 1e3;           ///< scaled method factor
  double vanilla_factor = 1e4;  ///< vanilla alpha = factor * E
  bool cross_point_constraints = true;
  int interface_points = 0;     ///< Gauss points per intersection cell; 0 means p+1
};

struct CouplingBlock {
  std::vector<int> dofs;
  Mat matrix;
  PenaltyParameters params;
};

CouplingBlock assemble_coupling_terms(const InterfaceDescriptor& iface, const std::vector<Patch>& patches,
                                      const DofMap& dofs, const PlateMaterial& mat, const CouplingOptions& opt);

struct CrossPointConstraint {
  Vec2 x;
  int master = 0;
  std::vector<int> slaves;
};

std::vector<CrossPointConstraint> cross_point_constraints(const MultiPatchModel& model,
                                                          const std::vector<InterfaceDescriptor>& interfaces,
                                                          const DofMap& dofs, double rel_tol = 1e-8);

/// Rectangular matrix with one unit entry per row; slaves point at their master column.
SpMat constraint_matrix(int ndof, const std::vector<CrossPointConstraint>& constraints);

struct ConstrainedSystem {
  SpMat A;
  Vec f;
  SpMat C;
  Vec recover(const Vec& uhat) const { return C * uhat; }
};

ConstrainedSystem apply_constraints(const SpMat& A, const Vec& f, const std::vector<CrossPointConstraint>& constraints);

/// Diagonal of the bounding box of all control points.
double model_diameter(const MultiPatchModel& model);

}  // namespace kplate
