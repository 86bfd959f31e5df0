#include "varlab/graph_models.hpp"

#include "varlab/expression.hpp"
#include "varlab/prox_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace varlab {

Vec GraphPoint::stacked() const {
  Vec z(x.size() + y.size());
  z << x, y;
  return z;
}

GraphPoint GraphPoint::split(const Vec& z, SplitDims dims) {
  if (z.size() != dims.total()) throw DimensionError("GraphPoint::split: dimension mismatch");
  return {z.head(dims.n), z.tail(dims.m)};
}

SmoothBranch smooth_from_expressions(const std::vector<std::string>& components, int n) {
  std::vector<Expression> exprs;
  for (const std::string& c : components) exprs.push_back(Expression::parse(c, n));
  SmoothBranch b;
  b.value = [exprs](const Vec& x) {
    Vec y(static_cast<Eigen::Index>(exprs.size()));
    for (std::size_t i = 0; i < exprs.size(); ++i) y(static_cast<Eigen::Index>(i)) = exprs[i].evaluate(x);
    return y;
  };
  b.jacobian = [exprs, n](const Vec& x) {
    Mat j(static_cast<Eigen::Index>(exprs.size()), n);
    for (std::size_t i = 0; i < exprs.size(); ++i) {
      Vec g;
      exprs[i].value_and_gradient(x, g);
      j.row(static_cast<Eigen::Index>(i)) = g.transpose();
    }
    return j;
  };
  std::ostringstream os;
  for (std::size_t i = 0; i < components.size(); ++i) os << (i ? ", " : "") << components[i];
  b.label = os.str();
  return b;
}

SmoothBranch affine_branch(const Mat& a, const Vec& b) {
  SmoothBranch s;
  s.value = [a, b](const Vec& x) -> Vec { return a * x + b; };
  s.jacobian = [a](const Vec&) -> Mat { return a; };
  s.label = "affine";
  return s;
}

Chart Chart::linear_map(const Mat& m, const Vec& offset, int d) {
  if (!nonsingular(m)) throw std::invalid_argument("Chart: linear part must be invertible");
  Chart c;
  c.d = d;
  const Mat minv = m.inverse();
  c.forward = [m, offset](const Vec& z) -> Vec { return m * z + offset; };
  c.inverse = [minv, offset](const Vec& w) -> Vec { return minv * (w - offset); };
  c.jacobian = [m](const Vec&) -> Mat { return m; };
  c.linear = m;
  return c;
}

std::string SetValuedMap::variant_name() const {
  static const char* names[] = {"poly_union", "pl_single", "smooth", "charted", "sum", "prox_subgrad"};
  return names[body_.index()];
}

MapPtr make_map(SplitDims dims, SetValuedMap::Body body) {
  return std::make_shared<const SetValuedMap>(dims, std::move(body));
}

double graph_tolerance(const SetValuedMap& f) {
  if (f.as<PolyUnion>() || f.as<PLSingle>()) return kGraphTolExact;
  if (const auto* c = f.as<Charted>()) return graph_tolerance(*c->inner);
  if (const auto* s = f.as<SumGE>()) return std::max(graph_tolerance(*s->inner), f.as<SumGE>() ? kGraphTolExact : 0.0);
  return kGraphTolSmooth;
}

bool contains(const SetValuedMap& f, const GraphPoint& p) { return contains(f, p, graph_tolerance(f)); }

bool contains(const SetValuedMap& f, const GraphPoint& p, double tol) {
  const SplitDims d = f.dims();
  if (p.x.size() != d.n || p.y.size() != d.m) throw DimensionError("contains: point dimension mismatch");
  const Vec z = p.stacked();
  const double scale = 1.0 + z.norm();
  if (const auto* u = f.as<PolyUnion>())
    return std::any_of(u->pieces.begin(), u->pieces.end(), [&](const ConvexPolyhedron& q) { return q.contains(z, tol); });
  if (const auto* pl = f.as<PLSingle>()) {
    for (const PLCell& c : pl->cells)
      if (c.cell.contains(p.x, tol) && (c.a * p.x + c.b - p.y).norm() <= tol * scale) return true;
    return false;
  }
  if (const auto* s = f.as<Smooth>()) {
    for (const SmoothBranch& b : s->branches)
      if ((b.value(p.x) - p.y).norm() <= tol * scale) return true;
    return false;
  }
  if (const auto* c = f.as<Charted>()) {
    if ((z - c->center).norm() >= c->radius) return false;
    return contains(*c->inner, GraphPoint::split(c->chart.forward(z), c->inner->dims()), tol);
  }
  if (const auto* s = f.as<SumGE>()) return contains(*s->inner, {p.x, p.y - s->g.value(p.x)}, tol);
  if (const auto* ps = f.as<ProxSubgrad>()) return contains(*ps->localized, p, tol);
  return false;
}

std::vector<ConvexPolyhedron> pl_graph_pieces(const PLSingle& f, SplitDims dims) {
  std::vector<ConvexPolyhedron> out;
  const int n = dims.n, m = dims.m;
  for (const PLCell& c : f.cells) {
    Mat ci = Mat::Zero(c.cell.ineq_lhs().rows(), n + m);
    ci.leftCols(n) = c.cell.ineq_lhs();
    Mat ce = Mat::Zero(c.cell.eq_lhs().rows() + m, n + m);
    Vec fe(c.cell.eq_lhs().rows() + m);
    ce.topLeftCorner(c.cell.eq_lhs().rows(), n) = c.cell.eq_lhs();
    fe.head(c.cell.eq_lhs().rows()) = c.cell.eq_rhs();
    // y - A x = b
    ce.bottomLeftCorner(m, n) = -c.a;
    ce.bottomRightCorner(m, m) = Mat::Identity(m, m);
    fe.tail(m) = c.b;
    out.emplace_back(n + m, ci, c.cell.ineq_rhs(), ce, fe);
  }
  return out;
}

bool is_single_valued(const SetValuedMap& f) {
  if (f.as<PLSingle>()) return true;
  if (const auto* s = f.as<Smooth>()) return s->branches.size() == 1;
  return false;
}

Vec evaluate_single(const SetValuedMap& f, const Vec& x) {
  if (const auto* pl = f.as<PLSingle>()) {
    for (const PLCell& c : pl->cells)
      if (c.cell.contains(x)) return c.a * x + c.b;
    throw DomainError("evaluate_single: point outside all cells");
  }
  if (const auto* s = f.as<Smooth>(); s && s->branches.size() == 1) return s->branches.front().value(x);
  throw UnsupportedError("evaluate_single: map is not single-valued");
}

std::vector<std::size_t> branches_through(const Smooth& s, const GraphPoint& p, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.branches.size(); ++i)
    if ((s.branches[i].value(p.x) - p.y).norm() <= tol * (1.0 + p.y.norm())) out.push_back(i);
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

Vec random_in_ball(std::mt19937_64& rng, int dim, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec g(dim);
  do {
    for (int i = 0; i < dim; ++i) g(i) = normal(rng);
  } while (g.norm() == 0.0);
  return g * (radius * std::pow(unif(rng), 1.0 / dim) / g.norm());
}

std::vector<Vec> sample_pieces(const std::vector<ConvexPolyhedron>& pieces, const Vec& center, double radius, int count,
                               std::mt19937_64& rng, SampleMode mode) {
  std::vector<PolyFace> strata;
  for (const ConvexPolyhedron& p : pieces)
    for (PolyFace& f : faces_meeting_ball(p, center, radius)) {
      if (mode == SampleMode::TopDimensional && !f.active.empty()) continue;
      strata.push_back(std::move(f));
    }
  std::vector<Vec> out;
  if (strata.empty()) return out;
  const int per = (count + static_cast<int>(strata.size()) - 1) / static_cast<int>(strata.size());
  for (const PolyFace& f : strata)
    for (Vec& z : sample_face_ball(f, center, radius, per, rng)) out.push_back(std::move(z));
  return out;
}

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

}  // namespace

std::vector<GraphPoint> sample_graph_near(const SetValuedMap& f, const GraphPoint& pbar, double radius, int count,
                                          std::uint64_t seed, SampleMode mode) {
  if (!contains(f, pbar)) throw DomainError("sample_graph_near: reference point is not on the graph");
  std::mt19937_64 rng(seed);
  const SplitDims dims = f.dims();
  const Vec zbar = pbar.stacked();
  std::vector<GraphPoint> out;
  auto keep = [&](const Vec& z) {
    if ((z - zbar).norm() < radius) out.push_back(GraphPoint::split(z, dims));
  };

  if (const auto* u = f.as<PolyUnion>()) {
    for (const Vec& z : sample_pieces(u->pieces, zbar, radius, count, rng, mode)) keep(z);
    return out;
  }
  if (f.as<PLSingle>() || f.as<Smooth>()) {
    std::vector<std::function<Vec(const Vec&)>> branches;
    if (const auto* s = f.as<Smooth>()) {
      for (std::size_t i : branches_through(*s, pbar, kGraphTolSmooth)) branches.push_back(s->branches[i].value);
    } else {
      branches.push_back([&f](const Vec& x) { return evaluate_single(f, x); });
    }
    const int max_attempts = 200 * count + 1000;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
      const Vec x = pbar.x + random_in_ball(rng, dims.n, radius);
      for (const auto& b : branches) {
        Vec y;
        try {
          y = b(x);
        } catch (const DomainError&) {
          continue;
        }
        Vec z(dims.total());
        z << x, y;
        keep(z);
      }
    }
    return out;
  }
  if (const auto* c = f.as<Charted>()) {
    const Vec w = c->chart.forward(zbar);
    const double r_in = radius * std::max(1.0, spectral_norm(c->chart.jacobian(zbar)));
    const GraphPoint wp = GraphPoint::split(w, c->inner->dims());
    for (const GraphPoint& q : sample_graph_near(*c->inner, wp, r_in, 3 * count, mix_seed(seed, 1), mode)) {
      const Vec z = c->chart.inverse(q.stacked());
      if ((z - c->center).norm() < c->radius) keep(z);
    }
    if (static_cast<int>(out.size()) > count && mode == SampleMode::TopDimensional) out.resize(static_cast<std::size_t>(count));
    return out;
  }
  if (const auto* s = f.as<SumGE>()) {
    const Mat jg = s->g.jacobian(pbar.x);
    const double r_in = radius * (1.0 + spectral_norm(jg));
    const GraphPoint gp{pbar.x, pbar.y - s->g.value(pbar.x)};
    for (const GraphPoint& q : sample_graph_near(*s->inner, gp, r_in, 3 * count, mix_seed(seed, 2), mode)) {
      Vec z(dims.total());
      z << q.x, q.y + s->g.value(q.x);
      keep(z);
    }
    return out;
  }
  if (const auto* ps = f.as<ProxSubgrad>()) {
    const ProxRegularFunction& phi = *ps->phi;
    const double lambda = ps->lambda;
    const Vec u0 = reference_u(phi, lambda);
    const Vec ubar = pbar.x + lambda * pbar.y;
    const double window = certified_u_window(phi, lambda) - (ubar - u0).norm();
    if (window <= 0.0) throw DomainError("sample_graph_near: reference outside the prox window");
    const double ru = std::min(window, radius);
    const int max_attempts = 50 * count + 500;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
      const Vec u = ubar + random_in_ball(rng, dims.n, ru);
      const Vec x = prox_map(phi, lambda, u);
      Vec z(dims.total());
      z << x, (u - x) / lambda;
      keep(z);
    }
    return out;
  }
  throw UnsupportedError("sample_graph_near: unsupported variant");
}

std::vector<Mat> pl_cell_jacobians(const SetValuedMap& f, const Vec& xbar) {
  const auto* pl = f.as<PLSingle>();
  if (!pl) throw UnsupportedError("pl_cell_jacobians: map is not piecewise linear single-valued");
  std::vector<Mat> out;
  for (const PLCell& c : pl->cells) {
    if (!c.cell.contains(xbar)) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Mat& a) { return (a - c.a).norm() < 1e-12; });
    if (!dup) out.push_back(c.a);
  }
  if (out.empty()) throw DomainError("pl_cell_jacobians: point outside all cells");
  return out;
}

std::optional<Vec> project_to_graph(const SetValuedMap& f, const Vec& z) {
  const SplitDims dims = f.dims();
  auto best_of = [&](const std::vector<ConvexPolyhedron>& pieces) -> std::optional<Vec> {
    std::optional<Vec> best;
    for (const ConvexPolyhedron& p : pieces)
      if (auto q = project_onto(p, z); q && (!best || (*q - z).norm() < (*best - z).norm())) best = q;
    return best;
  };
  if (const auto* u = f.as<PolyUnion>()) return best_of(u->pieces);
  if (const auto* pl = f.as<PLSingle>()) return best_of(pl_graph_pieces(*pl, dims));
  if (const auto* s = f.as<Smooth>()) {
    std::optional<Vec> best;
    const Vec zx = z.head(dims.n), zy = z.tail(dims.m);
    for (const SmoothBranch& b : s->branches) {
      Vec x = zx;
      for (int it = 0; it < 50; ++it) {
        const Mat j = b.jacobian(x);
        const Vec r1 = x - zx, r2 = b.value(x) - zy;
        const Mat h = Mat::Identity(dims.n, dims.n) + j.transpose() * j;
        const Vec step = h.ldlt().solve(r1 + j.transpose() * r2);
        x -= step;
        if (step.norm() < 1e-15 * (1.0 + x.norm())) break;
      }
      Vec q(dims.total());
      q << x, b.value(x);
      if (!best || (q - z).norm() < (*best - z).norm()) best = q;
    }
    return best;
  }
  if (const auto* c = f.as<Charted>()) {
    auto q = project_to_graph(*c->inner, c->chart.forward(z));
    if (!q) return std::nullopt;
    return c->chart.inverse(*q);
  }
  if (const auto* s = f.as<SumGE>()) {
    Vec w(dims.total());
    w << z.head(dims.n), z.tail(dims.m) - s->g.value(z.head(dims.n));
    auto q = project_to_graph(*s->inner, w);
    if (!q) return std::nullopt;
    Vec out(dims.total());
    out << q->head(dims.n), q->tail(dims.m) + s->g.value(q->head(dims.n));
    return out;
  }
  if (const auto* ps = f.as<ProxSubgrad>()) return project_to_graph(*ps->localized, z);
  return std::nullopt;
}

std::optional<std::string> pl_continuity_violation(const PLSingle& f, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < f.cells.size(); ++i)
    for (std::size_t j = i + 1; j < f.cells.size(); ++j) {
      const PLCell& a = f.cells[i];
      const PLCell& b = f.cells[j];
      const ConvexPolyhedron shared =
          a.cell.with_inequalities(b.cell.ineq_lhs(), b.cell.ineq_rhs()).with_equalities(b.cell.eq_lhs(), b.cell.eq_rhs());
      const auto anchor = project_onto(shared, Vec::Zero(n));
      if (!anchor) continue;
      std::vector<Vec> pts{*anchor};
      const double radius = 10.0 + anchor->norm();
      int best_dim = -1;
      const PolyFace* top = nullptr;
      const auto faces = faces_meeting_ball(shared, *anchor, radius);
      for (const PolyFace& pf : faces)
        if (pf.dim > best_dim) {
          best_dim = pf.dim;
          top = &pf;
        }
      if (top)
        for (Vec& z : sample_face_ball(*top, *anchor, radius, 15, rng)) pts.push_back(std::move(z));
      for (const Vec& x : pts) {
        const double gap = (a.a * x + a.b - (b.a * x + b.b)).norm();
        if (gap > 1e-9 * (1.0 + x.norm())) {
          std::ostringstream os;
          os << "cells " << i << " and " << j << " disagree on their shared face at x = " << format_vec(x)
             << " (gap " << gap << ")";
          return os.str();
        }
      }
    }
  return std::nullopt;
}

}  // namespace varlab
