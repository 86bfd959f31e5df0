#include "varlab/cone_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace varlab {

namespace {

int sign_of(double v, double tol) { return v < -tol ? -1 : (v > tol ? 1 : 0); }

ConvexPolyhedron as_polyhedron(const ConvexCone& k) {
  const int a = k.ambient_dim();
  return ConvexPolyhedron(a, k.ineq(), Vec::Zero(k.ineq().rows()), k.eq(), Vec::Zero(k.eq().rows()));
}

// T_K(w) for K the union of `cones`.
ConeUnion union_tangent(const std::vector<ConvexCone>& cones, const Vec& w, int ambient) {
  std::vector<ConvexCone> parts;
  for (const ConvexCone& k : cones) {
    if (!k.satisfies(w, 1e-9)) continue;
    parts.push_back(tangent_cone_convex(as_polyhedron(k), w, 1e-9));
  }
  if (parts.empty()) return ConeUnion::single(ConvexCone::zero(ambient));
  return simplified(ConeUnion(std::move(parts)));
}

Stratum make_stratum(const std::vector<ConvexCone>& cones, const Vec& w, int ambient) {
  Stratum s;
  s.direction = w;
  s.tangent = union_tangent(cones, w, ambient);
  s.regular_normal = polar(s.tangent);
  s.smooth = is_subspace(s.tangent);
  return s;
}

Mat smooth_graph_basis(const Mat& jac) {
  const Eigen::Index n = jac.cols();
  return vstack(Mat::Identity(n, n), jac);
}

const SmoothBranch& single_branch_through(const Smooth& s, const GraphPoint& p) {
  const auto idx = branches_through(s, p, kGraphTolSmooth);
  if (idx.empty()) throw DomainError("point is not on any smooth branch");
  if (idx.size() > 1)
    throw UnsupportedError("exact cones for several smooth branches through one point are not supported");
  return s.branches[idx.front()];
}

ConvexCone polar_of_union(const std::vector<ConvexCone>& parts, int ambient) {
  if (parts.empty()) return ConvexCone::whole(ambient);
  return polar(ConeUnion(parts));
}

std::vector<ConvexPolyhedron> poly_pieces(const SetValuedMap& f) {
  if (const auto* u = f.as<PolyUnion>()) return u->pieces;
  if (const auto* pl = f.as<PLSingle>()) return pl_graph_pieces(*pl, f.dims());
  return {};
}

}  // namespace

LocalModel local_model(const std::vector<ConvexPolyhedron>& pieces, const Vec& zbar) {
  LocalModel m;
  m.ambient = static_cast<int>(zbar.size());
  for (const ConvexPolyhedron& p : pieces)
    if (p.contains(zbar)) m.piece_cones.push_back(tangent_cone_convex(p, zbar));
  if (m.piece_cones.empty()) throw DomainError("local_model: point lies on no piece");
  m.cone = simplified(ConeUnion(m.piece_cones));

  const int k = m.ambient;
  Mat all_rows(0, k);
  for (const ConvexCone& c : m.piece_cones) all_rows = vstack(vstack(all_rows, c.ineq()), c.eq());

  std::vector<std::vector<int>> seen;
  for (std::size_t i = 0; i < m.piece_cones.size(); ++i) {
    const ConvexCone& own = m.piece_cones[i];
    Mat rows = own.ineq();
    std::vector<unsigned> allowed(static_cast<std::size_t>(own.ineq().rows()), kBelow | kOn);
    for (std::size_t j = 0; j < m.piece_cones.size(); ++j) {
      if (j == i) continue;
      const Mat other = vstack(m.piece_cones[j].ineq(), m.piece_cones[j].eq());
      rows = vstack(rows, other);
      allowed.insert(allowed.end(), static_cast<std::size_t>(other.rows()), kBelow | kOn | kAbove);
    }
    for (const SignedCell& sc : enumerate_cells(k, own.eq(), rows, allowed)) {
      const Vec& w = sc.cell.point;
      const double tol = 1e-9 * (1.0 + w.norm());
      std::vector<int> sig(static_cast<std::size_t>(all_rows.rows()));
      for (Eigen::Index r = 0; r < all_rows.rows(); ++r) sig[static_cast<std::size_t>(r)] = sign_of(all_rows.row(r).dot(w), tol);
      if (std::find(seen.begin(), seen.end(), sig) != seen.end()) continue;
      seen.push_back(sig);
      m.strata.push_back(make_stratum(m.piece_cones, w, k));
    }
  }
  return m;
}

ConeBundle bundle_from_local(const LocalModel& model) {
  ConeBundle b;
  b.tangent = model.cone;
  b.paratingent = difference_set(model.cone);
  b.regular_normal = polar(model.cone);
  std::vector<ConvexCone> normals;
  ConeUnion inner = model.cone;
  for (const Stratum& s : model.strata) {
    normals.push_back(s.regular_normal);
    inner = intersect(inner, s.tangent);
  }
  b.limiting_normal = simplified(ConeUnion(std::move(normals)));
  auto clarke = as_convex(inner);
  if (!clarke) throw std::logic_error("bundle_from_local: stratum intersection is not convex");
  b.clarke_tangent = *clarke;
  return b;
}

ConeBundle transform_bundle(const ConeBundle& b, const Mat& tangent_map, const Mat& normal_map) {
  ConeBundle out;
  out.tangent = linear_image(tangent_map, b.tangent);
  out.clarke_tangent = linear_image(tangent_map, b.clarke_tangent);
  out.paratingent = linear_image(tangent_map, b.paratingent);
  out.regular_normal = linear_image(normal_map, b.regular_normal);
  out.limiting_normal = linear_image(normal_map, b.limiting_normal);
  return out;
}

LocalModel transform_local(const LocalModel& m, const Mat& tangent_map, const Mat& normal_map) {
  LocalModel out;
  out.ambient = static_cast<int>(tangent_map.rows());
  out.cone = linear_image(tangent_map, m.cone);
  for (const ConvexCone& c : m.piece_cones) out.piece_cones.push_back(linear_image(tangent_map, c));
  for (const Stratum& s : m.strata) {
    Stratum t;
    t.direction = tangent_map * s.direction;
    t.tangent = linear_image(tangent_map, s.tangent);
    t.regular_normal = linear_image(normal_map, s.regular_normal);
    if (s.smooth) t.smooth = linear_image(tangent_map, *s.smooth);
    out.strata.push_back(std::move(t));
  }
  return out;
}

ChartLinearization sum_linearization(const SumGE& s, const Vec& x) {
  const Mat jg = s.g.jacobian(x);
  const Eigen::Index n = jg.cols(), m = jg.rows();
  Mat j = Mat::Identity(n + m, n + m);
  j.bottomLeftCorner(m, n) = jg;
  Mat jinv_t = Mat::Identity(n + m, n + m);
  // (J^{-1})^T = [[I, -Jg^T], [0, I]]
  jinv_t.topRightCorner(n, m) = -jg.transpose();
  return {j, jinv_t};
}

LocalModel local_model_at(const SetValuedMap& f, const GraphPoint& p) {
  if (!contains(f, p)) throw DomainError("local_model_at: point is not on the graph");
  const SplitDims dims = f.dims();
  if (f.as<PolyUnion>() || f.as<PLSingle>()) return local_model(poly_pieces(f), p.stacked());
  if (const auto* s = f.as<Smooth>()) {
    const SmoothBranch& b = single_branch_through(*s, p);
    const Subspace l = Subspace::span(smooth_graph_basis(b.jacobian(p.x)));
    LocalModel m;
    m.ambient = dims.total();
    const ConvexCone c = ConvexCone::from_subspace(l);
    m.cone = ConeUnion::single(c);
    m.piece_cones = {c};
    m.strata.push_back(make_stratum(m.piece_cones, Vec::Zero(dims.total()), dims.total()));
    return m;
  }
  if (const auto* c = f.as<Charted>()) {
    const Vec z = p.stacked();
    const Mat jac = c->chart.jacobian(z);
    const LocalModel inner = local_model_at(*c->inner, GraphPoint::split(c->chart.forward(z), c->inner->dims()));
    return transform_local(inner, jac.inverse(), jac.transpose());
  }
  if (const auto* s = f.as<SumGE>()) {
    const LocalModel inner = local_model_at(*s->inner, {p.x, p.y - s->g.value(p.x)});
    const ChartLinearization lin = sum_linearization(*s, p.x);
    return transform_local(inner, lin.tangent_map, lin.normal_map);
  }
  if (const auto* ps = f.as<ProxSubgrad>()) return local_model_at(*ps->localized, p);
  throw UnsupportedError("local_model_at: unsupported variant");
}

ConeBundle cones_at(const SetValuedMap& f, const GraphPoint& p) {
  if (const auto* c = f.as<Charted>()) {
    const Vec z = p.stacked();
    if (!contains(f, p)) throw DomainError("cones_at: point is not on the graph");
    const Mat jac = c->chart.jacobian(z);
    const ConeBundle inner = cones_at(*c->inner, GraphPoint::split(c->chart.forward(z), c->inner->dims()));
    return transform_bundle(inner, jac.inverse(), jac.transpose());
  }
  if (const auto* s = f.as<SumGE>()) {
    if (!contains(f, p)) throw DomainError("cones_at: point is not on the graph");
    const ConeBundle inner = cones_at(*s->inner, {p.x, p.y - s->g.value(p.x)});
    const ChartLinearization lin = sum_linearization(*s, p.x);
    return transform_bundle(inner, lin.tangent_map, lin.normal_map);
  }
  if (const auto* ps = f.as<ProxSubgrad>()) return cones_at(*ps->localized, p);
  return bundle_from_local(local_model_at(f, p));
}

ConvexCone regular_normal_at(const SetValuedMap& f, const GraphPoint& p) {
  const int k = f.dims().total();
  if (f.as<PolyUnion>() || f.as<PLSingle>()) {
    const Vec z = p.stacked();
    std::vector<ConvexCone> parts;
    for (const ConvexPolyhedron& q : poly_pieces(f))
      if (q.contains(z, 1e-9)) parts.push_back(tangent_cone_convex(q, z, 1e-9));
    if (parts.empty()) throw DomainError("regular_normal_at: point is not on the graph");
    return polar_of_union(parts, k);
  }
  if (const auto* s = f.as<Smooth>()) {
    std::vector<ConvexCone> parts;
    for (std::size_t i : branches_through(*s, p, kGraphTolSmooth))
      parts.push_back(ConvexCone::from_subspace(Subspace::span(smooth_graph_basis(s->branches[i].jacobian(p.x)))));
    if (parts.empty()) throw DomainError("regular_normal_at: point is not on the graph");
    return polar_of_union(parts, k);
  }
  if (const auto* c = f.as<Charted>()) {
    const Vec z = p.stacked();
    const Mat jac = c->chart.jacobian(z);
    return linear_image(jac.transpose(),
                        regular_normal_at(*c->inner, GraphPoint::split(c->chart.forward(z), c->inner->dims())));
  }
  if (const auto* s = f.as<SumGE>()) {
    const ChartLinearization lin = sum_linearization(*s, p.x);
    return linear_image(lin.normal_map, regular_normal_at(*s->inner, {p.x, p.y - s->g.value(p.x)}));
  }
  if (const auto* ps = f.as<ProxSubgrad>()) return regular_normal_at(*ps->localized, p);
  throw UnsupportedError("regular_normal_at: unsupported variant");
}

std::vector<Vec> cluster_directions(const std::vector<Vec>& dirs, double merge_deg) {
  const double cos_merge = std::cos(merge_deg * std::numbers::pi / 180.0);
  std::vector<Vec> reps;
  for (const Vec& d : dirs) {
    const double n = d.norm();
    if (n == 0.0) continue;
    const Vec u = d / n;
    const bool close = std::any_of(reps.begin(), reps.end(), [&](const Vec& r) { return r.dot(u) >= cos_merge; });
    if (!close) reps.push_back(u);
  }
  return reps;
}

double max_angular_gap_deg(const std::vector<Vec>& dirs) {
  std::vector<double> ang;
  for (const Vec& d : dirs)
    if (d.size() == 2 && d.norm() > 0.0) ang.push_back(std::atan2(d(1), d(0)));
  if (ang.empty()) return 360.0;
  std::sort(ang.begin(), ang.end());
  double gap = ang.front() + 2.0 * std::numbers::pi - ang.back();
  for (std::size_t i = 1; i < ang.size(); ++i) gap = std::max(gap, ang[i] - ang[i - 1]);
  return gap * 180.0 / std::numbers::pi;
}

std::vector<Vec> estimate_paratingent(const SetValuedMap& f, const GraphPoint& p, double r0, int levels,
                                      int samples_per_level, std::uint64_t seed) {
  std::vector<Vec> secants;
  for (int k = 0; k < levels; ++k) {
    const double r = r0 * std::ldexp(1.0, -k);
    const auto pts = sample_graph_near(f, p, r, samples_per_level, mix_seed(seed, static_cast<std::uint64_t>(k)));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (i == j) continue;
        const Vec d = pts[j].stacked() - pts[i].stacked();
        if (d.norm() > 1e-12 * r) secants.push_back(d / d.norm());
      }
  }
  return cluster_directions(secants, 1.0);
}

ClarkeEstimate estimate_clarke_tangent(const SetValuedMap& f, const GraphPoint& p, double r0, int levels,
                                       std::uint64_t seed) {
  ClarkeEstimate out;
  const Vec zbar = p.stacked();
  const int k = static_cast<int>(zbar.size());
  std::vector<Vec> candidates = estimate_paratingent(f, p, r0, levels, 24, seed);
  for (int i = 0; i < k; ++i) {
    candidates.push_back(Vec::Unit(k, i));
    candidates.push_back(-Vec::Unit(k, i));
  }
  candidates = cluster_directions(candidates, 1.0);

  std::vector<Vec> bases;
  for (int lvl = 0; lvl < levels; ++lvl) {
    const double r = r0 * std::ldexp(1.0, -lvl);
    for (const GraphPoint& q : sample_graph_near(f, p, r, 8, mix_seed(seed, 1000 + static_cast<std::uint64_t>(lvl))))
      bases.push_back(q.stacked());
  }
  bases.push_back(zbar);
  out.base_points = static_cast<int>(bases.size());

  auto approximable = [&](const Vec& d) {
    for (const Vec& z : bases) {
      const double scale = std::max((z - zbar).norm(), r0 * std::ldexp(1.0, -levels));
      const double t = 0.1 * scale;
      const Vec probe = z + t * d;
      const auto q = project_to_graph(f, probe);
      if (!q || (*q - probe).norm() > 0.1 * t) return false;
    }
    return true;
  };
  for (const Vec& d : candidates)
    if (approximable(d)) out.survivors.push_back(d);

  Mat rays(k, 0), lin(k, 0);
  std::vector<bool> paired(out.survivors.size(), false);
  const double cos_pair = std::cos(std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < out.survivors.size(); ++i) {
    if (paired[i]) continue;
    for (std::size_t j = i + 1; j < out.survivors.size(); ++j)
      if (!paired[j] && -out.survivors[i].dot(out.survivors[j]) >= cos_pair) {
        paired[i] = paired[j] = true;
        lin = hstack(lin, out.survivors[i]);
        break;
      }
    if (!paired[i]) rays = hstack(rays, out.survivors[i]);
  }
  out.cone = ConvexCone::from_generators(rays, lin);
  return out;
}

}  // namespace varlab
