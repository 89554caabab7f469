#include "kplate/models.hpp"

namespace kplate {

LoadSpec make_load(const ModelSpec& spec) {
  LoadSpec l;
  const double D = spec.model.material.D();
  const double c = spec.load.constant;
  if (!spec.load.manufactured.empty()) {
    const auto mc = manufactured_case(spec.load.manufactured);
    const auto g = mc.load(D);
    l.body = [g, c](double x, double y) { return g(x, y) + c; };
    l.boundary = {mc.u, mc.grad};
  } else if (c != 0) {
    l.body = [c](double, double) { return c; };
  }
  l.lines = spec.load.lines;
  return l;
}

GeometryMap<double> rectangle_geometry(double x0, double x1, double y0, double y1) {
  const auto kv = KnotVector<double>::uniform(1, 1);
  TensorSpace<double> space{SplineSpace<double>(kv), SplineSpace<double>(kv)};
  GeometryMap<double>::Points P(4, 2);
  P << x0, y0, x1, y0, x0, y1, x1, y1;
  return GeometryMap<double>(space, P);
}

GeometryMap<double> coons_quadratic_geometry(std::array<Vec2, 9> P) {
  P[4] = (P[3] + P[5]) / 2 + (P[1] + P[7]) / 2 - (P[0] + P[2] + P[6] + P[8]) / 4;
  const auto kv = KnotVector<double>::uniform(2, 1);
  TensorSpace<double> space{SplineSpace<double>(kv), SplineSpace<double>(kv)};
  GeometryMap<double>::Points cp(9, 2);
  for (int i = 0; i < 9; ++i) cp.row(i) = P[i].transpose();
  return GeometryMap<double>(space, cp);
}

Patch make_patch(GeometryMap<double> geometry, int p, const std::vector<double>& breaks_u,
                 const std::vector<double>& breaks_v, std::array<BoundaryTag, 4> tags) {
  Patch patch;
  patch.geometry = std::move(geometry);
  patch.space = TensorSpace<double>{SplineSpace<double>(KnotVector<double>::from_breakpoints(p, breaks_u)),
                                    SplineSpace<double>(KnotVector<double>::from_breakpoints(p, breaks_v))};
  patch.tags = tags;
  patch.validate();
  return patch;
}

MultiPatchModel discretize(const MultiPatchModel& model, int p, int levels) {
  MultiPatchModel out = model;
  for (auto& patch : out.patches) {
    std::array<SplineSpace<double>, 2> s;
    for (int d = 0; d < 2; ++d) {
      const auto kv = KnotVector<double>::from_breakpoints(p, patch.space[d].knot_vector().breakpoints());
      s[d] = SplineSpace<double>(refine_uniform(kv, levels));
    }
    patch.space = TensorSpace<double>{s[0], s[1]};
    patch.validate();
  }
  return out;
}

namespace {

constexpr auto C = BoundaryTag::Clamped;
constexpr auto I = BoundaryTag::Interface;

/// Tags for cell (i, j) of an nx-by-ny grid of patches: outer sides clamped.
std::array<BoundaryTag, 4> grid_tags(int i, int j, int nx, int ny) {
  return {i == 0 ? C : I, i == nx - 1 ? C : I, j == 0 ? C : I, j == ny - 1 ? C : I};
}

/// Outer sides simply supported instead of clamped.
std::array<BoundaryTag, 4> support(std::array<BoundaryTag, 4> tags) {
  for (auto& t : tags)
    if (t == C) t = BoundaryTag::Supported;
  return tags;
}

std::vector<double> base_breaks(int elements, bool shifted) {
  std::vector<double> b(elements + 1);
  for (int i = 0; i <= elements; ++i) b[i] = double(i) / elements;
  if (shifted)
    for (int i = 1; i < elements; ++i) b[i] += knot_shift;
  return b;
}

ModelSpec grid_model(const std::string& name, int n, int p, double E, double t, bool shift) {
  ModelSpec s;
  s.name = name;
  s.model.material = {E, t, 0.0};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const bool sh = shift && ((i + j) % 2 == 1);
      s.model.patches.push_back(make_patch(rectangle_geometry(i, i + 1, j, j + 1), p, base_breaks(2, sh),
                                           base_breaks(2, sh), grid_tags(i, j, n, n)));
    }
  return s;
}

}  // namespace

ModelSpec builtin_model(const std::string& name, int p) {
  if (name == "single_patch") {
    ModelSpec s;
    s.name = name;
    s.model.material = {1e6, 0.01, 0.0};
    s.model.patches.push_back(make_patch(rectangle_geometry(0, 1, 0, 1), p, base_breaks(2, false),
                                         base_breaks(2, false), {C, C, C, C}));
    s.load.manufactured = "sin2_sin2";
    return s;
  }
  if (name == "two_patch") {
    ModelSpec s;
    s.name = name;
    s.model.material = {1e6, 0.01, 0.0};
    s.model.patches.push_back(make_patch(rectangle_geometry(0, 1, 0, 1), p, base_breaks(2, false),
                                         base_breaks(2, false), {C, I, C, C}));
    s.model.patches.push_back(make_patch(rectangle_geometry(1, 2, 0, 1), p, base_breaks(2, false),
                                         base_breaks(2, false), {I, C, C, C}));
    s.load.manufactured = "sin2_sin2";
    return s;
  }
  if (name == "four_patch_curved") {
    ModelSpec s;
    s.name = name;
    s.model.material = {1e6, 0.01, 0.0};
    // interior arcs: quadratic Bezier middle control points
    const Vec2 mb(1.1, 0.5), mt(0.9, 1.5), ml(0.5, 0.9), mr(1.5, 1.1);
    const Vec2 c(1, 1);
    std::array<std::array<Vec2, 9>, 4> P;
    P[0] = {Vec2(0, 0), Vec2(0.5, 0), Vec2(1, 0), Vec2(0, 0.5), Vec2(), mb, Vec2(0, 1), ml, c};
    P[1] = {Vec2(1, 0), Vec2(1.5, 0), Vec2(2, 0), mb, Vec2(), Vec2(2, 0.5), c, mr, Vec2(2, 1)};
    P[2] = {Vec2(0, 1), ml, c, Vec2(0, 1.5), Vec2(), mt, Vec2(0, 2), Vec2(0.5, 2), Vec2(1, 2)};
    P[3] = {c, mr, Vec2(2, 1), mt, Vec2(), Vec2(2, 1.5), Vec2(1, 2), Vec2(1.5, 2), Vec2(2, 2)};
    for (int k = 0; k < 4; ++k) {
      const int i = k % 2, j = k / 2;
      const bool sh = (i + j) % 2 == 1;
      s.model.patches.push_back(make_patch(coons_quadratic_geometry(P[k]), p, base_breaks(4, sh), base_breaks(4, sh),
                                           grid_tags(i, j, 2, 2)));
    }
    s.load.manufactured = "sin_cos";
    return s;
  }
  if (name == "nine_patch") {
    auto s = grid_model(name, 3, p, 1e6, 0.01, true);
    s.load.manufactured = "sin_cos";
    return s;
  }
  if (name == "three_patch") {
    ModelSpec s;
    s.name = name;
    s.model.material = {1e6, 0.01, 0.0};
    s.model.patches.push_back(make_patch(rectangle_geometry(0, 1, 0, 2), p, base_breaks(2, false),
                                         base_breaks(3, false), {C, I, C, C}));
    s.model.patches.push_back(make_patch(rectangle_geometry(1, 2, 0, 1), p, base_breaks(2, false),
                                         base_breaks(2, false), {I, C, C, I}));
    s.model.patches.push_back(make_patch(rectangle_geometry(1, 2, 1, 2), p, base_breaks(2, true),
                                         base_breaks(2, true), {I, C, I, C}));
    s.load.manufactured = "sin_cos";
    return s;
  }
  if (name == "stability_two_patch") {
    ModelSpec s;
    s.name = name;
    s.model.material = {12.0, 1.0, 0.0};  // D = 1
    s.model.patches.push_back(make_patch(rectangle_geometry(0, 1, 0, 1), p, base_breaks(1, false),
                                         base_breaks(1, false), support({C, I, C, C})));
    s.model.patches.push_back(make_patch(rectangle_geometry(1, 2, 0, 1), p, base_breaks(1, false),
                                         base_breaks(1, false), support({I, C, C, C})));
    return s;
  }
  if (name == "stability_four_patch") {
    ModelSpec s;
    s.name = name;
    s.model.material = {12.0, 1.0, 0.0};
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i)
        s.model.patches.push_back(make_patch(rectangle_geometry(i, i + 1, j, j + 1), p, base_breaks(1, false),
                                             base_breaks(1, false), support(grid_tags(i, j, 2, 2))));
    return s;
  }
  throw Error(ErrorKind::Configuration, "unknown built-in model '" + name + "'");
}

std::vector<std::string> builtin_model_names() {
  return {"single_patch", "two_patch", "four_patch_curved", "nine_patch", "three_patch", "stability_two_patch",
          "stability_four_patch"};
}

}  // namespace kplate
