#pragma once

#include <string>
#include <vector>

#include "kplate/system.hpp"

namespace kplate {

/// Load description as stored in model files.
struct LoadDescription {
  std::string manufactured;  ///< manufactured case name; empty for none
  double constant = 0;       ///< uniform body load added to the manufactured one
  std::vector<LineLoad> lines;
};

struct ModelSpec {
  std::string name;
  MultiPatchModel model;
  LoadDescription load;
};

/// Body load and boundary data for a model.
LoadSpec make_load(const ModelSpec& spec);

/// Axis-aligned rectangle as a degree-1 single-element map.
GeometryMap<double> rectangle_geometry(double x0, double x1, double y0, double y1);

/// Biquadratic single-element map from the eight boundary control points
/// (row-major P[i1 + 3 i2], center ignored); the center is the bilinearly
/// blended Coons point.
GeometryMap<double> coons_quadratic_geometry(std::array<Vec2, 9> P);

Patch make_patch(GeometryMap<double> geometry, int p, const std::vector<double>& breaks_u,
                 const std::vector<double>& breaks_v, std::array<BoundaryTag, 4> tags);

/// Rebuild every solution space with degree p and `levels` uniform bisections.
MultiPatchModel discretize(const MultiPatchModel& model, int p, int levels);

/// Built-in geometries at their initial discretization with degree p:
/// single_patch, two_patch, four_patch_curved, nine_patch, three_patch,
/// stability_two_patch, stability_four_patch.
ModelSpec builtin_model(const std::string& name, int p = 2);
std::vector<std::string> builtin_model_names();

/// Interior knot shift used on checkerboard patches to make interfaces non-matching.
inline constexpr double knot_shift = 1.4142135623730951 / 100.0;

}  // namespace kplate
