#include "kplate/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace kplate {

int DofMap::patch_of(int g) const {
  auto it = std::upper_bound(offset.begin(), offset.end(), g);
  return static_cast<int>(it - offset.begin()) - 1;
}

DofMap make_dof_map(const std::vector<Patch>& patches) {
  DofMap m;
  m.offset.push_back(0);
  for (const auto& p : patches) m.offset.push_back(m.offset.back() + p.dimension());
  return m;
}

double model_diameter(const MultiPatchModel& model) {
  Vec2 lo = Vec2::Constant(1e300), hi = Vec2::Constant(-1e300);
  for (const auto& p : model.patches) {
    const auto& P = p.geometry.control_points();
    for (int i = 0; i < P.rows(); ++i) {
      lo = lo.cwiseMin(P.row(i).transpose());
      hi = hi.cwiseMax(P.row(i).transpose());
    }
  }
  return (hi - lo).norm();
}

const char* to_string(CouplingMethod m) {
  switch (m) {
    case CouplingMethod::Projected: return "projected";
    case CouplingMethod::Scaled: return "scaled";
    case CouplingMethod::Vanilla: return "vanilla";
  }
  return "?";
}

CouplingMethod coupling_method_from_string(const std::string& s) {
  if (s == "projected" || s == "proj") return CouplingMethod::Projected;
  if (s == "scaled") return CouplingMethod::Scaled;
  if (s == "vanilla") return CouplingMethod::Vanilla;
  throw Error(ErrorKind::Configuration, "unknown coupling method '" + s + "'");
}

// ---------------------------------------------------------------- edge curves

double EdgeCurve::lo() const { return patch->geometry.side_range(side)[0]; }
double EdgeCurve::hi() const { return patch->geometry.side_range(side)[1]; }

Vec2 EdgeCurve::point(double t) const { return patch->geometry(patch->geometry.side_param(side, t)); }

Vec2 EdgeCurve::tangent(double t) const {
  const auto g = patch->geometry.eval_unchecked(patch->geometry.side_param(side, t));
  return g.jacobian.col(tangent_direction(side));
}

Vec2 EdgeCurve::outward_normal(double t) const {
  const auto g = patch->geometry.eval_unchecked(patch->geometry.side_param(side, t));
  const Vec2 T = g.jacobian.col(tangent_direction(side));
  Vec2 n(T(1), -T(0));
  n.normalize();
  const Vec2 inward_to_outward = g.jacobian.col(normal_direction(side)) * (is_upper_side(side) ? 1.0 : -1.0);
  if (n.dot(inward_to_outward) < 0) n = -n;
  return n;
}

double EdgeCurve::closest(const Vec2& x, std::optional<double> guess, double tol) const {
  const double a = lo(), b = hi();
  double t;
  if (guess) {
    t = std::clamp(*guess, a, b);
  } else {
    constexpr int samples = 32;
    double best = 1e300;
    t = a;
    for (int i = 0; i <= samples; ++i) {
      const double s = a + (b - a) * i / samples;
      const double d = (point(s) - x).squaredNorm();
      if (d < best) {
        best = d;
        t = s;
      }
    }
  }
  const int d = tangent_direction(side);
  for (int it = 0; it < 60; ++it) {
    const auto g = patch->geometry.eval_unchecked(patch->geometry.side_param(side, t));
    const Vec2 r = g.x - x;
    const Vec2 c1 = g.jacobian.col(d);
    const Vec2 c2(g.hessian[0](d, d), g.hessian[1](d, d));
    const double f = r.dot(c1);
    const double df = c1.dot(c1) + r.dot(c2);
    if (df <= 0) break;
    const double tn = std::clamp(t - f / df, a, b);
    const double step = std::abs(tn - t);
    t = tn;
    if (step <= tol * (b - a)) break;
  }
  return t;
}

// ------------------------------------------------------------ detection

namespace {

bool is_outer(BoundaryTag t) { return t == BoundaryTag::Clamped || t == BoundaryTag::Supported; }

int cells_in(const KnotVector<double>& kv, double a, double b) {
  int n = 1;
  const double tol = 1e-12 * (kv.back() - kv.front());
  for (double k : kv.breakpoints())
    if (k > a + tol && k < b - tol) ++n;
  return n;
}

void dedupe(std::vector<double>& v, double tol) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [tol](double x, double y) { return std::abs(x - y) <= tol; }), v.end());
}

std::string pair_name(int k, Side s, int l, Side t) {
  return "patch " + std::to_string(k) + " (" + to_string(s) + ") and patch " + std::to_string(l) + " (" +
         to_string(t) + ")";
}

/// Arc length of an edge over [a, b] split at the given breakpoints.
double arc_length(const EdgeCurve& c, double a, double b) {
  const auto rule = gauss_legendre<double>(12);
  std::vector<double> x, w;
  rule.map_to(a, b, x, w);
  double L = 0;
  for (std::size_t q = 0; q < x.size(); ++q) L += w[q] * c.tangent(x[q]).norm();
  return L;
}

struct Overlap {
  double s0, s1, t0, t1;
};

std::optional<Overlap> find_overlap(const EdgeCurve& cs, const EdgeCurve& ct, double tol, const std::string& name) {
  std::vector<double> on_s, on_t;
  for (double e : {cs.lo(), cs.hi()}) {
    const Vec2 x = cs.point(e);
    const double t = ct.closest(x);
    if ((ct.point(t) - x).norm() <= tol) {
      on_s.push_back(e);
      on_t.push_back(t);
    }
  }
  for (double e : {ct.lo(), ct.hi()}) {
    const Vec2 x = ct.point(e);
    const double s = cs.closest(x);
    if ((cs.point(s) - x).norm() <= tol) {
      on_s.push_back(s);
      on_t.push_back(e);
    }
  }
  const double ptol = 1e-9;
  dedupe(on_s, ptol * (cs.hi() - cs.lo()));
  dedupe(on_t, ptol * (ct.hi() - ct.lo()));
  if (on_s.size() < 2 || on_t.size() < 2) return std::nullopt;
  Overlap o{on_s.front(), on_s.back(), on_t.front(), on_t.back()};
  // the interior of the shared part must coincide as well
  constexpr int checks = 9;
  for (int i = 1; i < checks; ++i) {
    const double s = o.s0 + (o.s1 - o.s0) * i / checks;
    const Vec2 x = cs.point(s);
    const double t = ct.closest(x);
    if ((ct.point(t) - x).norm() > tol)
      throw Error(ErrorKind::GeometryMismatch, "interface gap or overlap beyond tolerance between " + name);
  }
  return o;
}

}  // namespace

std::vector<InterfaceDescriptor> detect_interfaces(const MultiPatchModel& model, double rel_tol) {
  const auto& P = model.patches;
  const double tol = rel_tol * model_diameter(model);
  struct Candidate {
    int k;
    Side s;
    int l;
    Side t;
  };
  std::vector<Candidate> cands;
  if (!model.interfaces.empty()) {
    for (const auto& h : model.interfaces) {
      if (h.patch_a < 0 || h.patch_b < 0 || h.patch_a >= static_cast<int>(P.size()) ||
          h.patch_b >= static_cast<int>(P.size()) || h.patch_a == h.patch_b)
        throw Error(ErrorKind::Parse, "interface list references an invalid patch id");
      if (h.patch_a < h.patch_b)
        cands.push_back({h.patch_a, h.side_a, h.patch_b, h.side_b});
      else
        cands.push_back({h.patch_b, h.side_b, h.patch_a, h.side_a});
    }
  } else {
    for (int k = 0; k < static_cast<int>(P.size()); ++k)
      for (int l = k + 1; l < static_cast<int>(P.size()); ++l)
        for (Side s : all_sides)
          for (Side t : all_sides)
            if (!is_outer(P[k].tag(s)) && !is_outer(P[l].tag(t))) cands.push_back({k, s, l, t});
  }

  std::vector<InterfaceDescriptor> out;
  for (const auto& c : cands) {
    const EdgeCurve cs{&P[c.k], c.s}, ct{&P[c.l], c.t};
    const std::string name = pair_name(c.k, c.s, c.l, c.t);
    const auto ov = find_overlap(cs, ct, tol, name);
    if (!ov) {
      if (!model.interfaces.empty())
        throw Error(ErrorKind::GeometryMismatch, "declared interface does not match geometrically: " + name);
      continue;
    }
    const auto& kv_s = P[c.k].space[tangent_direction(c.s)].knot_vector();
    const auto& kv_t = P[c.l].space[tangent_direction(c.t)].knot_vector();
    const int ns = cells_in(kv_s, ov->s0, ov->s1);
    const int nt = cells_in(kv_t, ov->t0, ov->t1);

    InterfaceDescriptor d;
    const bool k_is_slave = ns >= nt;  // tie: lower patch id is the slave
    InterfaceSide side_k{c.k, c.s, ov->s0, ov->s1};
    InterfaceSide side_l{c.l, c.t, ov->t0, ov->t1};
    d.slave = k_is_slave ? side_k : side_l;
    d.master = k_is_slave ? side_l : side_k;
    const EdgeCurve slave{&P[d.slave.patch], d.slave.side}, master{&P[d.master.patch], d.master.side};
    const double m0 = master.closest(slave.point(d.slave.t0));
    const double m1 = master.closest(slave.point(d.slave.t1));
    d.reversed = m1 < m0;
    const auto& kv = P[d.slave.patch].space[tangent_direction(d.slave.side)].knot_vector();
    d.slave_knots = restrict_knot_vector(kv, d.slave.t0, d.slave.t1, 1e-12 * (kv.back() - kv.front()));
    d.reduced = reduce_knot_vector(d.slave_knots);
    const auto br = d.slave_knots.breakpoints();
    d.measure = 0;
    d.h = 0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      const double L = arc_length(slave, br[i], br[i + 1]);
      d.measure += L;
      d.h = std::max(d.h, L);
    }
    if (!(d.measure > 0)) throw Error(ErrorKind::DegenerateInterface, "zero-length interface between " + name);
    out.push_back(std::move(d));
  }
  return out;
}

// ------------------------------------------------------------ intersection mesh

IntersectionMesh build_intersection_mesh(const InterfaceDescriptor& iface, const std::vector<Patch>& patches,
                                         int points_per_cell) {
  const EdgeCurve slave{&patches[iface.slave.patch], iface.slave.side};
  const EdgeCurve master{&patches[iface.master.patch], iface.master.side};
  const int p = patches[iface.slave.patch].degree();
  const int npts = points_per_cell > 0 ? points_per_cell : p + 1;
  const double len = iface.slave.t1 - iface.slave.t0;

  IntersectionMesh mesh;
  mesh.breaks = iface.slave_knots.breakpoints();
  const auto& mkv = patches[iface.master.patch].space[tangent_direction(iface.master.side)].knot_vector();
  const double mtol = 1e-12 * (mkv.back() - mkv.front());
  for (double sigma : mkv.breakpoints()) {
    if (sigma <= iface.master.t0 + mtol || sigma >= iface.master.t1 - mtol) continue;
    mesh.breaks.push_back(slave.closest(master.point(sigma)));
  }
  dedupe(mesh.breaks, 1e-10 * len);

  // master parameter follows the slave one approximately linearly; used as Newton start
  const double ms = iface.reversed ? iface.master.t1 : iface.master.t0;
  const double me = iface.reversed ? iface.master.t0 : iface.master.t1;
  const auto rule = gauss_legendre<double>(npts);
  std::vector<double> x, w;
  for (std::size_t c = 0; c + 1 < mesh.breaks.size(); ++c) {
    rule.map_to(mesh.breaks[c], mesh.breaks[c + 1], x, w);
    for (int q = 0; q < npts; ++q) {
      InterfacePoint ip;
      ip.tau = x[q];
      ip.x = slave.point(x[q]);
      ip.weight = w[q] * slave.tangent(x[q]).norm();
      const double guess = ms + (me - ms) * (x[q] - iface.slave.t0) / len;
      const double sigma = master.closest(ip.x, guess, 1e-12);
      if ((master.point(sigma) - ip.x).norm() > 1e-8 * std::max(1.0, ip.x.norm()))
        throw Error(ErrorKind::GeometryMismatch, "interface point inversion failed on patch " +
                                                     std::to_string(iface.master.patch));
      ip.eta_slave = patches[iface.slave.patch].geometry.side_param(iface.slave.side, x[q]);
      ip.eta_master = patches[iface.master.patch].geometry.side_param(iface.master.side, sigma);
      ip.n_slave = slave.outward_normal(x[q]);
      ip.n_master = master.outward_normal(sigma);
      if (ip.n_slave.dot(ip.n_master) > -0.5)
        throw Error(ErrorKind::Orientation, "interface normals are not opposite between patch " +
                                                std::to_string(iface.master.patch) + " and patch " +
                                                std::to_string(iface.slave.patch));
      mesh.points.push_back(ip);
    }
  }
  return mesh;
}

JumpSamples sample_jumps(const InterfaceDescriptor& iface, const std::vector<Patch>& patches, const DofMap& dofs,
                         const IntersectionMesh& mesh) {
  const int nq = static_cast<int>(mesh.points.size());
  std::vector<PointBasis> bm(nq), bs(nq);
  std::map<int, int> col;
  for (int q = 0; q < nq; ++q) {
    bm[q] = eval_point_basis(patches[iface.master.patch], mesh.points[q].eta_master);
    bs[q] = eval_point_basis(patches[iface.slave.patch], mesh.points[q].eta_slave);
    for (int i : bm[q].index) col.emplace(dofs.global(iface.master.patch, i), 0);
    for (int i : bs[q].index) col.emplace(dofs.global(iface.slave.patch, i), 0);
  }
  JumpSamples js;
  for (auto& [g, c] : col) {
    c = static_cast<int>(js.dofs.size());
    js.dofs.push_back(g);
  }
  const int n = static_cast<int>(js.dofs.size());
  js.weight.resize(nq);
  js.tau.resize(nq);
  js.val_m = Mat::Zero(nq, n);
  js.val_s = Mat::Zero(nq, n);
  js.dn_m = Mat::Zero(nq, n);
  js.dn_s = Mat::Zero(nq, n);
  for (int q = 0; q < nq; ++q) {
    const auto& ip = mesh.points[q];
    js.weight(q) = ip.weight;
    js.tau(q) = ip.tau;
    for (std::size_t a = 0; a < bm[q].index.size(); ++a) {
      const int c = col[dofs.global(iface.master.patch, bm[q].index[a])];
      js.val_m(q, c) += bm[q].value(a);
      js.dn_m(q, c) += bm[q].grad.row(a).dot(ip.n_master);
    }
    for (std::size_t a = 0; a < bs[q].index.size(); ++a) {
      const int c = col[dofs.global(iface.slave.patch, bs[q].index[a])];
      js.val_s(q, c) += bs[q].value(a);
      js.dn_s(q, c) += bs[q].grad.row(a).dot(ip.n_slave);
    }
  }
  return js;
}

// ------------------------------------------------------------ projection

Mat reduced_basis_at(const KnotVector<double>& reduced_knots, const Vec& tau) {
  const SplineSpace<double> space(reduced_knots);
  Mat R = Mat::Zero(tau.size(), space.dimension());
  for (int q = 0; q < tau.size(); ++q) {
    const auto b = space.eval(tau(q), 0);
    for (int j = 0; j < b.count(); ++j) R(q, b.first + j) = b.ders(0, j);
  }
  return R;
}

ProjectionOperator build_projection(const JumpSamples& s, const KnotVector<double>& reduced_knots) {
  ProjectionOperator P;
  P.knots = reduced_knots;
  P.dofs = s.dofs;
  const Mat R = reduced_basis_at(reduced_knots, s.tau);
  const Mat RW = R.transpose() * s.weight.asDiagonal();
  P.M_red = RW * R;
  Eigen::LLT<Mat> llt(P.M_red);
  if (llt.info() != Eigen::Success || P.M_red.diagonal().minCoeff() <= 0)
    throw Error(ErrorKind::DegenerateInterface, "build_projection: singular reduced-space mass matrix");
  P.G_master_val = RW * s.val_m;
  P.G_slave_val = RW * s.val_s;
  P.G_master_dn = RW * s.dn_m;
  P.G_slave_dn = RW * s.dn_s;
  return P;
}

Vec ProjectionOperator::solve(const Vec& moments) const { return M_red.llt().solve(moments); }

// ------------------------------------------------------------ penalties

PenaltyParameters penalty_parameters(const PlateMaterial& mat, double measure, double h, int beta) {
  mat.validate();
  const double s = std::pow(measure, beta - 1) / (std::pow(h, beta) * (1 - mat.nu * mat.nu));
  return {s * mat.E * mat.t, s * mat.E * mat.t * mat.t * mat.t / 12.0, beta};
}

PenaltyParameters penalty_parameters(const PlateMaterial& mat, const InterfaceDescriptor& iface, int beta) {
  return penalty_parameters(mat, iface.measure, iface.h, beta);
}

PenaltyParameters scaled_penalty_parameters(const PlateMaterial& mat, double h, double delta) {
  mat.validate();
  const double s = delta / (h * (1 - mat.nu * mat.nu));
  return {s * mat.E * mat.t, s * mat.E * mat.t * mat.t * mat.t / 12.0, 0};
}

CouplingBlock assemble_coupling_terms(const InterfaceDescriptor& iface, const std::vector<Patch>& patches,
                                      const DofMap& dofs, const PlateMaterial& mat, const CouplingOptions& opt) {
  const auto mesh = build_intersection_mesh(iface, patches, opt.interface_points);
  const auto js = sample_jumps(iface, patches, dofs, mesh);
  CouplingBlock blk;
  blk.dofs = js.dofs;
  const int p = patches[iface.slave.patch].degree();
  switch (opt.method) {
    case CouplingMethod::Projected: {
      blk.params = penalty_parameters(mat, iface, opt.beta > 0 ? opt.beta : p + 1);
      const auto P = build_projection(js, iface.reduced);
      Eigen::LLT<Mat> llt(P.M_red);
      const Mat Xd = llt.matrixL().solve(P.jump_defl());
      const Mat Xr = llt.matrixL().solve(P.jump_rot());
      blk.matrix = blk.params.alpha_defl * Xd.transpose() * Xd + blk.params.alpha_rot * Xr.transpose() * Xr;
      break;
    }
    case CouplingMethod::Scaled:
    case CouplingMethod::Vanilla: {
      if (opt.method == CouplingMethod::Scaled) {
        blk.params = scaled_penalty_parameters(mat, iface.h, opt.delta);
      } else {
        blk.params.alpha_defl = blk.params.alpha_rot = opt.vanilla_factor * mat.E;
      }
      const Vec sw = js.weight.cwiseSqrt();
      const Mat Vd = sw.asDiagonal() * js.defl();
      const Mat Vr = sw.asDiagonal() * js.rot();
      blk.matrix = blk.params.alpha_defl * Vd.transpose() * Vd + blk.params.alpha_rot * Vr.transpose() * Vr;
      break;
    }
  }
  return blk;
}

// ------------------------------------------------------------ cross-points

std::vector<CrossPointConstraint> cross_point_constraints(const MultiPatchModel& model,
                                                          const std::vector<InterfaceDescriptor>& interfaces,
                                                          const DofMap& dofs, double rel_tol) {
  const double tol = rel_tol * model_diameter(model);
  struct Cluster {
    Vec2 x;
    std::vector<int> ifaces;
  };
  std::vector<Cluster> clusters;
  for (int i = 0; i < static_cast<int>(interfaces.size()); ++i) {
    const auto& d = interfaces[i];
    const EdgeCurve c{&model.patches[d.slave.patch], d.slave.side};
    for (double t : {d.slave.t0, d.slave.t1}) {
      const Vec2 x = c.point(t);
      auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& cl) { return (cl.x - x).norm() <= tol; });
      if (it == clusters.end()) {
        clusters.push_back({x, {i}});
      } else if (std::find(it->ifaces.begin(), it->ifaces.end(), i) == it->ifaces.end()) {
        it->ifaces.push_back(i);
      }
    }
  }
  std::vector<CrossPointConstraint> out;
  for (const auto& cl : clusters) {
    if (cl.ifaces.size() < 2) continue;
    std::vector<int> incident;
    for (int i : cl.ifaces)
      for (int k : {interfaces[i].master.patch, interfaces[i].slave.patch})
        if (std::find(incident.begin(), incident.end(), k) == incident.end()) incident.push_back(k);
    std::sort(incident.begin(), incident.end());
    std::vector<int> members;
    for (int k : incident) {
      const auto& patch = model.patches[k];
      const int n1 = patch.space.size(0), n2 = patch.space.size(1);
      const auto& P = patch.geometry.control_points();
      const int g1 = patch.geometry.space().size(0), g2 = patch.geometry.space().size(1);
      for (int c2 : {0, 1})
        for (int c1 : {0, 1}) {
          const Vec2 corner = P.row(patch.geometry.space().index(c1 * (g1 - 1), c2 * (g2 - 1))).transpose();
          if ((corner - cl.x).norm() <= tol)
            members.push_back(dofs.global(k, patch.space.index(c1 * (n1 - 1), c2 * (n2 - 1))));
        }
    }
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    CrossPointConstraint cp;
    cp.x = cl.x;
    cp.master = members.front();
    cp.slaves.assign(members.begin() + 1, members.end());
    out.push_back(std::move(cp));
  }
  return out;
}

SpMat constraint_matrix(int ndof, const std::vector<CrossPointConstraint>& constraints) {
  std::vector<int> master_of(ndof, -1);
  for (const auto& c : constraints) {
    if (c.master < 0 || c.master >= ndof) throw Error(ErrorKind::Dimension, "constraint dof out of range");
    for (int s : c.slaves) {
      if (s < 0 || s >= ndof) throw Error(ErrorKind::Dimension, "constraint dof out of range");
      master_of[s] = c.master;
    }
  }
  std::vector<int> column(ndof, -1);
  int ncol = 0;
  for (int i = 0; i < ndof; ++i)
    if (master_of[i] < 0) column[i] = ncol++;
  std::vector<Triplet> t;
  for (int i = 0; i < ndof; ++i) t.emplace_back(i, master_of[i] < 0 ? column[i] : column[master_of[i]], 1.0);
  return sparse_from_triplets(ndof, ncol, t);
}

ConstrainedSystem apply_constraints(const SpMat& A, const Vec& f, const std::vector<CrossPointConstraint>& constraints) {
  if (A.rows() != A.cols() || A.rows() != f.size()) throw Error(ErrorKind::Dimension, "apply_constraints: size mismatch");
  ConstrainedSystem s;
  s.C = constraint_matrix(static_cast<int>(A.rows()), constraints);
  const SpMat Ct = s.C.transpose();
  s.A = Ct * A * s.C;
  s.f = Ct * f;
  return s;
}

}  // namespace kplate
