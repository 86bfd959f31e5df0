#include "varlab/polyhedral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace varlab {

namespace {

constexpr double kTight = 1e-10;

Mat normalized_rows(const Mat& a, Vec* rhs = nullptr) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    if (a.row(i).norm() > 1e-14) keep.push_back(i);
  Mat out(static_cast<Eigen::Index>(keep.size()), a.cols());
  Vec r(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const double n = a.row(keep[j]).norm();
    out.row(static_cast<Eigen::Index>(j)) = a.row(keep[j]) / n;
    if (rhs) r(static_cast<Eigen::Index>(j)) = (*rhs)(keep[j]) / n;
  }
  if (rhs) *rhs = r;
  return out;
}

int rank_loose(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-9) ++r;
  return r;
}

struct VRep {
  Mat rays;
  Mat lin;
};

struct DdRay {
  Vec v;
  std::vector<int> tight;
};

std::vector<int> sorted_intersection(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Removes rays that are (numerically) conic combinations of the others.
std::vector<Vec> prune_rays(std::vector<Vec> rays, const Mat& lin) {
  std::vector<Vec> uniq;
  for (const Vec& r : rays) {
    bool dup = std::any_of(uniq.begin(), uniq.end(), [&](const Vec& u) { return (u - r).norm() < 1e-9; });
    if (!dup) uniq.push_back(r);
  }
  rays = uniq;
  for (std::size_t j = 0; j < rays.size();) {
    std::vector<Vec> others;
    for (std::size_t i = 0; i < rays.size(); ++i)
      if (i != j) others.push_back(rays[i]);
    const Eigen::Index k = rays[j].size();
    Mat g = hstack(hstack(from_columns(others, k), lin), -lin);
    if (g.cols() > 0 && nnls(g, rays[j]).residual <= 1e-9) {
      rays.erase(rays.begin() + static_cast<std::ptrdiff_t>(j));
    } else {
      ++j;
    }
  }
  return rays;
}

// Double description: extreme rays and lineality of { A w <= 0, E w = 0 }.
VRep double_description(const Mat& ineq, const Mat& eq, int k) {
  const Mat w = null_space(eq.rows() ? eq : Mat(0, k), k);
  const Eigen::Index r = w.cols();
  if (r == 0) return {Mat(k, 0), Mat(k, 0)};
  std::vector<Vec> rows;
  for (Eigen::Index i = 0; i < ineq.rows(); ++i) {
    Vec a = w.transpose() * ineq.row(i).transpose();
    if (a.norm() > 1e-12) rows.push_back(a / a.norm());
  }
  Mat lin = Mat::Identity(r, r);
  std::vector<DdRay> rays;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    const Vec& a = rows[static_cast<std::size_t>(i)];
    const Vec al = lin.transpose() * a;
    if (al.norm() > 1e-10) {
      Vec l = -(lin * al);
      l.normalize();
      const double adotl = a.dot(l);
      lin = reorthonormalize(lin * null_space(al.transpose(), lin.cols()), 0.5);
      for (DdRay& ray : rays) {
        ray.v -= (a.dot(ray.v) / adotl) * l;
        ray.v -= lin * (lin.transpose() * ray.v);
        ray.v.normalize();
        ray.tight.push_back(i);
      }
      DdRay nr;
      nr.v = l - lin * (lin.transpose() * l);
      nr.v.normalize();
      for (int j = 0; j < i; ++j) nr.tight.push_back(j);
      rays.push_back(std::move(nr));
      continue;
    }
    std::vector<std::size_t> pos, neg;
    std::vector<DdRay> next;
    for (std::size_t j = 0; j < rays.size(); ++j) {
      const double s = a.dot(rays[j].v);
      if (s > kTight) {
        pos.push_back(j);
      } else if (s < -kTight) {
        neg.push_back(j);
        next.push_back(rays[j]);
      } else {
        DdRay z = rays[j];
        z.tight.push_back(i);
        next.push_back(std::move(z));
      }
    }
    const int pointed = static_cast<int>(r - lin.cols());
    for (std::size_t p : pos)
      for (std::size_t q : neg) {
        std::vector<int> common = sorted_intersection(rays[p].tight, rays[q].tight);
        Mat tight_rows(static_cast<Eigen::Index>(common.size()), r);
        for (std::size_t c = 0; c < common.size(); ++c)
          tight_rows.row(static_cast<Eigen::Index>(c)) = rows[static_cast<std::size_t>(common[c])].transpose();
        if (rank_loose(tight_rows) != pointed - 2) continue;
        const double sp = a.dot(rays[p].v);
        const double sq = a.dot(rays[q].v);
        DdRay nr;
        nr.v = sp * rays[q].v - sq * rays[p].v;
        if (nr.v.norm() < 1e-14) continue;
        nr.v.normalize();
        nr.tight = common;
        nr.tight.push_back(i);
        next.push_back(std::move(nr));
      }
    rays = std::move(next);
  }
  std::vector<Vec> vs;
  for (const DdRay& ray : rays) vs.push_back(ray.v);
  vs = prune_rays(vs, lin);
  return {w * from_columns(vs, r), w * lin};
}

std::vector<std::vector<int>> combinations(int n, int s) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == s) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- polyhedra

ConvexPolyhedron::ConvexPolyhedron(int ambient, const Mat& c, const Vec& d, const Mat& e, const Vec& f)
    : ambient_(ambient) {
  if ((c.rows() && c.cols() != ambient) || (e.rows() && e.cols() != ambient) || c.rows() != d.size() ||
      e.rows() != f.size())
    throw DimensionError("ConvexPolyhedron: row length mismatch");
  d_ = d;
  f_ = f;
  c_ = normalized_rows(c.rows() ? c : Mat(0, ambient), &d_);
  e_ = normalized_rows(e.rows() ? e : Mat(0, ambient), &f_);
  if (c_.rows() == 0) c_ = Mat(0, ambient);
  if (e_.rows() == 0) e_ = Mat(0, ambient);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    if (c.row(i).norm() <= 1e-14 && d(i) < 0.0) throw std::invalid_argument("ConvexPolyhedron: row 0 <= negative");
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    if (e.row(i).norm() <= 1e-14 && f(i) != 0.0) throw std::invalid_argument("ConvexPolyhedron: row 0 = nonzero");
}

ConvexPolyhedron ConvexPolyhedron::whole(int ambient) {
  return ConvexPolyhedron(ambient, Mat(0, ambient), Vec(0), Mat(0, ambient), Vec(0));
}

double ConvexPolyhedron::violation(const Vec& z) const {
  double v = 0.0;
  if (c_.rows()) v = std::max(v, (c_ * z - d_).maxCoeff());
  if (e_.rows()) v = std::max(v, (e_ * z - f_).cwiseAbs().maxCoeff());
  return v;
}

bool ConvexPolyhedron::contains(const Vec& z, double tol) const {
  if (z.size() != ambient_) throw DimensionError("ConvexPolyhedron::contains: dimension mismatch");
  return violation(z) <= tol * (1.0 + z.norm());
}

std::vector<int> ConvexPolyhedron::active_rows(const Vec& z, double tol) const {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < c_.rows(); ++i)
    if (std::abs(c_.row(i).dot(z) - d_(i)) <= tol * (1.0 + z.norm())) out.push_back(static_cast<int>(i));
  return out;
}

ConvexPolyhedron ConvexPolyhedron::affine_image(const Mat& m, const Vec& t) const {
  // z' = M z + t  <=>  z = M^{-1}(z' - t)
  const Mat minv = m.inverse();
  const Mat c = c_ * minv;
  const Vec d = d_ + c * t;
  const Mat e = e_ * minv;
  const Vec f = f_ + e * t;
  return ConvexPolyhedron(ambient_, c, d, e, f);
}

ConvexPolyhedron ConvexPolyhedron::with_equalities(const Mat& e, const Vec& f) const {
  Vec f2(f_.size() + f.size());
  f2 << f_, f;
  return ConvexPolyhedron(ambient_, c_, d_, vstack(e_, e), f2);
}

ConvexPolyhedron ConvexPolyhedron::with_inequalities(const Mat& c, const Vec& d) const {
  Vec d2(d_.size() + d.size());
  d2 << d_, d;
  return ConvexPolyhedron(ambient_, vstack(c_, c), d2, e_, f_);
}

ConvexPolyhedron ConvexPolyhedron::face(const std::vector<int>& rows) const {
  Mat e(static_cast<Eigen::Index>(rows.size()), ambient_);
  Vec f(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    e.row(static_cast<Eigen::Index>(i)) = c_.row(rows[i]);
    f(static_cast<Eigen::Index>(i)) = d_(rows[i]);
  }
  return with_equalities(e, f);
}

std::optional<Vec> project_onto(const ConvexPolyhedron& p, const Vec& z) {
  const Mat& c = p.ineq_lhs();
  const Vec& d = p.ineq_rhs();
  const Mat& e = p.eq_lhs();
  const Vec& f = p.eq_rhs();
  const int k = p.ambient_dim();
  const int rank_e = numerical_rank(e);
  const int nrows = static_cast<int>(c.rows());
  const double scale = 1.0 + z.norm() + (d.size() ? d.cwiseAbs().maxCoeff() : 0.0) +
                       (f.size() ? f.cwiseAbs().maxCoeff() : 0.0);
  for (int s = 0; s <= std::min(nrows, k - rank_e); ++s) {
    for (const auto& subset : combinations(nrows, s)) {
      Mat m(e.rows() + s, k);
      Vec rhs(e.rows() + s);
      if (e.rows()) {
        m.topRows(e.rows()) = e;
        rhs.head(e.rows()) = f;
      }
      for (int i = 0; i < s; ++i) {
        m.row(e.rows() + i) = c.row(subset[static_cast<std::size_t>(i)]);
        rhs(e.rows() + i) = d(subset[static_cast<std::size_t>(i)]);
      }
      if (s > 0 && numerical_rank(m) != rank_e + s) continue;
      Vec x = z;
      Vec mu = Vec::Zero(m.rows());
      if (m.rows() > 0) {
        const Mat mmt = m * m.transpose();
        mu = mmt.completeOrthogonalDecomposition().solve(m * z - rhs);
        x = z - m.transpose() * mu;
        if ((m * x - rhs).cwiseAbs().maxCoeff() > 1e-9 * scale) {
          if (s == 0) return std::nullopt;
          continue;
        }
      }
      bool ok = true;
      for (int i = 0; i < s && ok; ++i)
        if (mu(e.rows() + i) < -1e-12 * scale) ok = false;
      if (ok && c.rows() && (c * x - d).maxCoeff() > 1e-9 * scale) ok = false;
      if (ok) return x;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- cones

ConvexCone make_cone(int k, Mat rays, Mat lin, Mat ineq, Mat eq) {
  ConvexCone c;
  c.ambient_ = k;
  c.rays_ = rays.cols() ? std::move(rays) : Mat(k, 0);
  c.lin_ = lin.cols() ? std::move(lin) : Mat(k, 0);
  c.ineq_ = ineq.rows() ? normalized_rows(ineq) : Mat(0, k);
  c.eq_ = eq.rows() ? normalized_rows(eq) : Mat(0, k);
  if (c.ineq_.rows() == 0) c.ineq_ = Mat(0, k);
  if (c.eq_.rows() == 0) c.eq_ = Mat(0, k);
  return c;
}

ConvexCone ConvexCone::zero(int ambient) {
  return make_cone(ambient, Mat(ambient, 0), Mat(ambient, 0), Mat(0, ambient), Mat::Identity(ambient, ambient));
}

ConvexCone ConvexCone::whole(int ambient) {
  return make_cone(ambient, Mat(ambient, 0), Mat::Identity(ambient, ambient), Mat(0, ambient), Mat(0, ambient));
}

ConvexCone ConvexCone::from_halfspaces(const Mat& ineq, const Mat& eq, int ambient) {
  const Mat a = ineq.rows() ? ineq : Mat(0, ambient);
  const Mat e = eq.rows() ? eq : Mat(0, ambient);
  if (a.cols() != ambient || e.cols() != ambient) throw DimensionError("from_halfspaces: width mismatch");
  VRep v = double_description(a, e, ambient);
  return make_cone(ambient, v.rays, v.lin, a, e);
}

ConvexCone ConvexCone::from_generators(const Mat& rays, const Mat& lineality) {
  const int k = static_cast<int>(std::max(rays.rows(), lineality.rows()));
  const Mat r = rays.cols() ? rays : Mat(k, 0);
  const Mat l = lineality.cols() ? lineality : Mat(k, 0);
  // Halfspaces of the cone are the generators of its polar.
  VRep pol = double_description(r.transpose(), l.transpose(), k);
  const Mat a = pol.rays.transpose();
  const Mat e = pol.lin.transpose();
  VRep v = double_description(a, e, k);
  return make_cone(k, v.rays, v.lin, a, e);
}

ConvexCone ConvexCone::from_subspace(const Subspace& l) {
  const int k = l.ambient_dim();
  return make_cone(k, Mat(k, 0), l.basis(), Mat(0, k), orthogonal_complement(l).basis().transpose());
}

int ConvexCone::dim() const { return numerical_rank(hstack(rays_, lin_)); }

Subspace ConvexCone::span() const {
  const Mat g = hstack(rays_, lin_);
  return g.cols() ? Subspace::span(g) : Subspace::zero(ambient_);
}

Mat ConvexCone::generator_matrix() const { return hstack(hstack(rays_, lin_), -lin_); }

double ConvexCone::distance_to(const Vec& v) const {
  if (v.size() != ambient_) throw DimensionError("ConvexCone: dimension mismatch");
  const Mat g = generator_matrix();
  if (g.cols() == 0) return v.norm();
  return nnls(g, v).residual;
}

bool ConvexCone::contains(const Vec& v, double tol) const { return distance_to(v) <= tol * (1.0 + v.norm()); }

bool ConvexCone::satisfies(const Vec& v, double tol) const {
  const double t = tol * (1.0 + v.norm());
  if (ineq_.rows() && (ineq_ * v).maxCoeff() > t) return false;
  if (eq_.rows() && (eq_ * v).cwiseAbs().maxCoeff() > t) return false;
  return true;
}

Vec ConvexCone::project(const Vec& v) const {
  const Mat g = generator_matrix();
  if (g.cols() == 0) return Vec::Zero(ambient_);
  return g * nnls(g, v).coef;
}

Vec ConvexCone::interior_point() const {
  Vec p = Vec::Zero(ambient_);
  for (Eigen::Index j = 0; j < rays_.cols(); ++j) p += rays_.col(j);
  return p;
}

ConvexCone ConvexCone::negated() const { return make_cone(ambient_, -rays_, lin_, -ineq_, eq_); }

ConvexCone linear_image(const Mat& m, const ConvexCone& c) {
  if (m.cols() != c.ambient_dim()) throw DimensionError("linear_image: dimension mismatch");
  return ConvexCone::from_generators(m * c.rays(), m * c.lineality());
}

ConvexCone intersect(const ConvexCone& a, const ConvexCone& b) {
  if (a.ambient_dim() != b.ambient_dim()) throw DimensionError("intersect: dimension mismatch");
  return ConvexCone::from_halfspaces(vstack(a.ineq(), b.ineq()), vstack(a.eq(), b.eq()), a.ambient_dim());
}

ConvexCone polar(const ConvexCone& c) {
  return ConvexCone::from_halfspaces(c.rays().transpose(), c.lineality().transpose(), c.ambient_dim());
}

ConvexCone minkowski_sum(const ConvexCone& a, const ConvexCone& b) {
  return ConvexCone::from_generators(hstack(a.rays(), b.rays()), hstack(a.lineality(), b.lineality()));
}

bool includes(const ConvexCone& outer, const ConvexCone& inner, double tol) {
  for (Eigen::Index j = 0; j < inner.rays().cols(); ++j)
    if (!outer.contains(inner.rays().col(j), tol)) return false;
  for (Eigen::Index j = 0; j < inner.lineality().cols(); ++j) {
    if (!outer.contains(inner.lineality().col(j), tol)) return false;
    if (!outer.contains(-inner.lineality().col(j), tol)) return false;
  }
  return true;
}

bool same_cone(const ConvexCone& a, const ConvexCone& b, double tol) {
  return includes(a, b, tol) && includes(b, a, tol);
}

// ---------------------------------------------------------------- unions

ConeUnion::ConeUnion(std::vector<ConvexCone> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("ConeUnion needs at least one piece");
  ambient_ = pieces_.front().ambient_dim();
  for (const ConvexCone& c : pieces_)
    if (c.ambient_dim() != ambient_) throw DimensionError("ConeUnion: pieces of different dimension");
}

bool member(const ConeUnion& c, const Vec& v, double tol) {
  return std::any_of(c.pieces().begin(), c.pieces().end(), [&](const ConvexCone& k) { return k.contains(v, tol); });
}

double distance_to(const ConeUnion& c, const Vec& v) {
  double best = v.norm();
  for (const ConvexCone& k : c.pieces()) best = std::min(best, k.distance_to(v));
  return best;
}

ConvexCone polar(const ConeUnion& c) {
  Mat a(0, c.ambient_dim()), e(0, c.ambient_dim());
  for (const ConvexCone& k : c.pieces()) {
    a = vstack(a, k.rays().transpose());
    e = vstack(e, k.lineality().transpose());
  }
  return ConvexCone::from_halfspaces(a, e, c.ambient_dim());
}

Subspace span(const ConeUnion& c) {
  Mat g(c.ambient_dim(), 0);
  for (const ConvexCone& k : c.pieces()) g = hstack(g, hstack(k.rays(), k.lineality()));
  return g.cols() ? Subspace::span(g) : Subspace::zero(c.ambient_dim());
}

int dim(const ConeUnion& c) { return span(c).dim(); }

bool covers(const ConeUnion& u, const ConvexCone& k) {
  const Subspace w = k.span();
  const int wd = w.dim();
  if (wd == 0) return true;
  const Mat& b = w.basis();
  const Mat bt = b.transpose();
  const ConvexCone kw = linear_image(bt, k);
  const ConvexCone wcone = ConvexCone::from_subspace(w);
  std::vector<ConvexCone> full;
  for (const ConvexCone& piece : u.pieces()) {
    const ConvexCone pw = linear_image(bt, intersect(piece, wcone));
    if (pw.dim() == wd) full.push_back(pw);
  }
  if (full.empty()) return false;
  auto start = realize_cell(wd, kw.ineq(), kw.eq());
  if (!start) return true;
  std::vector<OpenCell> cells{*start};
  std::vector<Vec> hyper;
  for (const ConvexCone& p : full)
    for (Eigen::Index i = 0; i < p.ineq().rows(); ++i) {
      Vec h = p.ineq().row(i).transpose();
      const bool dup = std::any_of(hyper.begin(), hyper.end(), [&](const Vec& g) {
        return (g - h).norm() < 1e-9 || (g + h).norm() < 1e-9;
      });
      if (!dup) hyper.push_back(h);
    }
  for (const Vec& h : hyper) cells = refine_cells(cells, h, kBelow | kAbove);
  for (const OpenCell& cell : cells) {
    const Vec& x = cell.point;
    const bool inside = std::any_of(full.begin(), full.end(), [&](const ConvexCone& p) {
      return p.ineq().rows() == 0 || (p.ineq() * x).maxCoeff() <= 1e-12 * (1.0 + x.norm());
    });
    if (!inside) return false;
  }
  return true;
}

std::optional<Subspace> is_subspace(const ConeUnion& c) {
  const Subspace v = span(c);
  if (covers(c, ConvexCone::from_subspace(v))) return v;
  return std::nullopt;
}

bool includes(const ConeUnion& outer, const ConeUnion& inner) {
  for (const ConvexCone& k : inner.pieces()) {
    const bool direct = std::any_of(outer.pieces().begin(), outer.pieces().end(),
                                    [&](const ConvexCone& o) { return includes(o, k); });
    if (!direct && !covers(outer, k)) return false;
  }
  return true;
}

bool same_set(const ConeUnion& a, const ConeUnion& b) { return includes(a, b) && includes(b, a); }

ConeUnion intersect(const ConeUnion& a, const ConeUnion& b) {
  std::vector<ConvexCone> out;
  for (const ConvexCone& p : a.pieces())
    for (const ConvexCone& q : b.pieces()) out.push_back(intersect(p, q));
  return simplified(ConeUnion(std::move(out)));
}

ConeUnion linear_image(const Mat& m, const ConeUnion& c) {
  std::vector<ConvexCone> out;
  for (const ConvexCone& k : c.pieces()) out.push_back(linear_image(m, k));
  return simplified(ConeUnion(std::move(out)));
}

ConeUnion negated(const ConeUnion& c) {
  std::vector<ConvexCone> out;
  for (const ConvexCone& k : c.pieces()) out.push_back(k.negated());
  return ConeUnion(std::move(out));
}

ConeUnion simplified(const ConeUnion& c) {
  const auto& p = c.pieces();
  std::vector<bool> drop(p.size(), false);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size() && !drop[i]; ++j) {
      if (i == j || drop[j]) continue;
      if (includes(p[j], p[i])) {
        // Equal pieces: keep the earlier one.
        if (includes(p[i], p[j]) && i < j) continue;
        drop[i] = true;
      }
    }
  std::vector<ConvexCone> out;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!drop[i]) out.push_back(p[i]);
  return ConeUnion(std::move(out));
}

ConeUnion difference_set(const ConeUnion& c) {
  std::vector<ConvexCone> out;
  for (const ConvexCone& p : c.pieces())
    for (const ConvexCone& q : c.pieces()) out.push_back(minkowski_sum(p, q.negated()));
  return simplified(ConeUnion(std::move(out)));
}

ConvexCone convex_hull(const ConeUnion& c) {
  Mat r(c.ambient_dim(), 0), l(c.ambient_dim(), 0);
  for (const ConvexCone& k : c.pieces()) {
    r = hstack(r, k.rays());
    l = hstack(l, k.lineality());
  }
  return ConvexCone::from_generators(r, l);
}

std::optional<ConvexCone> as_convex(const ConeUnion& c) {
  if (c.pieces().size() == 1) return c.pieces().front();
  ConvexCone hull = convex_hull(c);
  for (const ConvexCone& k : c.pieces())
    if (includes(k, hull)) return k;
  if (covers(c, hull)) return hull;
  return std::nullopt;
}

double angle_to(const ConeUnion& c, const Vec& d) {
  const double n = d.norm();
  if (n == 0.0) return 0.0;
  const Vec u = d / n;
  double best = std::numbers::pi / 2;
  for (const ConvexCone& k : c.pieces()) {
    const Vec p = k.project(u);
    const double pn = p.norm();
    if (pn <= 1e-14) continue;
    best = std::min(best, std::atan2((u - p).norm(), pn));
  }
  return best;
}

double max_generator_angle(const ConeUnion& a, const ConeUnion& b) {
  double worst = 0.0;
  for (const ConvexCone& k : a.pieces()) {
    const Mat g = k.generator_matrix();
    for (Eigen::Index j = 0; j < g.cols(); ++j) worst = std::max(worst, angle_to(b, g.col(j)));
  }
  return worst;
}

// ---------------------------------------------------------------- faces and cells

ConvexCone tangent_cone_convex(const ConvexPolyhedron& p, const Vec& zbar, double tol) {
  if (!p.contains(zbar, tol)) throw DomainError("tangent_cone_convex: point outside the polyhedron");
  const auto act = p.active_rows(zbar, tol);
  Mat a(static_cast<Eigen::Index>(act.size()), p.ambient_dim());
  for (std::size_t i = 0; i < act.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = p.ineq_lhs().row(act[i]);
  return ConvexCone::from_halfspaces(a, p.eq_lhs(), p.ambient_dim());
}

std::optional<OpenCell> realize_cell(int ambient, const Mat& strict, const Mat& eq) {
  const Mat s = strict.rows() ? strict : Mat(0, ambient);
  const Mat e = eq.rows() ? eq : Mat(0, ambient);
  ConvexCone closure = ConvexCone::from_halfspaces(s, e, ambient);
  const Vec p = closure.interior_point();
  if (s.rows() && (s * p).maxCoeff() >= -1e-10) return std::nullopt;
  return OpenCell{s, e, p, std::move(closure)};
}

std::vector<OpenCell> refine_cells(const std::vector<OpenCell>& cells, const Vec& h, unsigned allowed) {
  std::vector<OpenCell> out;
  const Mat row = h.transpose();
  for (const OpenCell& c : cells) {
    const int k = static_cast<int>(h.size());
    if (allowed & kBelow)
      if (auto r = realize_cell(k, vstack(c.strict, row), c.eq)) out.push_back(std::move(*r));
    if (allowed & kOn)
      if (auto r = realize_cell(k, c.strict, vstack(c.eq, row))) out.push_back(std::move(*r));
    if (allowed & kAbove)
      if (auto r = realize_cell(k, vstack(c.strict, -row), c.eq)) out.push_back(std::move(*r));
  }
  return out;
}

std::vector<SignedCell> enumerate_cells(int ambient, const Mat& base_eq, const Mat& rows,
                                        const std::vector<unsigned>& allowed) {
  std::vector<SignedCell> cells;
  auto start = realize_cell(ambient, Mat(0, ambient), base_eq);
  if (!start) return cells;
  cells.push_back({*start, {}});
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Mat row = rows.row(i);
    std::vector<SignedCell> next;
    for (const SignedCell& sc : cells) {
      const unsigned al = allowed[static_cast<std::size_t>(i)];
      const OpenCell& c = sc.cell;
      auto push = [&](std::optional<OpenCell> r, int sign) {
        if (!r) return;
        SignedCell child{std::move(*r), sc.signs};
        child.signs.push_back(sign);
        next.push_back(std::move(child));
      };
      if (al & kBelow) push(realize_cell(ambient, vstack(c.strict, row), c.eq), -1);
      if (al & kOn) push(realize_cell(ambient, c.strict, vstack(c.eq, row)), 0);
      if (al & kAbove) push(realize_cell(ambient, vstack(c.strict, -row), c.eq), 1);
    }
    cells = std::move(next);
  }
  return cells;
}

std::vector<FaceSample> piece_faces_through(const ConvexPolyhedron& p, const Vec& zbar, double radius) {
  if (!p.contains(zbar)) throw DomainError("piece_faces_through: point outside the polyhedron");
  const int k = p.ambient_dim();
  const auto act = p.active_rows(zbar);
  Mat a(static_cast<Eigen::Index>(act.size()), k);
  for (std::size_t i = 0; i < act.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = p.ineq_lhs().row(act[i]);
  const std::vector<unsigned> allowed(act.size(), kBelow | kOn);
  std::vector<FaceSample> out;
  for (const SignedCell& sc : enumerate_cells(k, p.eq_lhs(), a, allowed)) {
    const Vec& w = sc.cell.point;
    double step = 0.0;
    if (w.norm() > 0.0) {
      step = 0.5 * radius / w.norm();
      const Vec slack = p.ineq_rhs() - p.ineq_lhs() * zbar;
      const Vec rate = p.ineq_lhs() * w;
      for (Eigen::Index i = 0; i < rate.size(); ++i)
        if (rate(i) > 1e-14 && slack(i) > 1e-9) step = std::min(step, 0.5 * slack(i) / rate(i));
    }
    FaceSample f;
    f.point = zbar + step * w;
    std::vector<int> on;
    Mat face_rows(0, k);
    for (std::size_t i = 0; i < act.size(); ++i)
      if (sc.signs[i] == 0) {
        on.push_back(act[i]);
        face_rows = vstack(face_rows, a.row(static_cast<Eigen::Index>(i)));
      }
    f.active = on;
    f.tangent = ConvexCone::from_halfspaces(face_rows, p.eq_lhs(), k);
    f.dim = sc.cell.closure.dim();
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<PolyFace> faces_meeting_ball(const ConvexPolyhedron& p, const Vec& center, double radius) {
  const int nrows = static_cast<int>(p.ineq_lhs().rows());
  if (nrows > 12) throw UnsupportedError("faces_meeting_ball: too many inequality rows");
  const int k = p.ambient_dim();
  std::vector<PolyFace> out;
  for (int s = 0; s <= nrows; ++s)
    for (const auto& subset : combinations(nrows, s)) {
      const ConvexPolyhedron f = p.face(subset);
      auto q = project_onto(f, center);
      if (!q || (*q - center).norm() >= radius) continue;
      const ConvexCone t = tangent_cone_convex(f, *q);
      Vec dir = t.interior_point();
      Vec anchor = *q;
      if (dir.norm() > 0.0) {
        double step = 0.25 * (radius - (*q - center).norm()) / dir.norm();
        const Vec slack = p.ineq_rhs() - p.ineq_lhs() * (*q);
        const Vec rate = p.ineq_lhs() * dir;
        for (Eigen::Index i = 0; i < rate.size(); ++i)
          if (rate(i) > 1e-14 && slack(i) > 1e-12) step = std::min(step, 0.5 * slack(i) / rate(i));
        anchor = *q + step * dir;
      }
      if (p.active_rows(anchor) != subset) continue;
      PolyFace pf;
      pf.face = f;
      pf.active = subset;
      pf.directions = null_space(vstack(f.eq_lhs(), Mat(0, k)), k);
      pf.dim = static_cast<int>(pf.directions.cols());
      pf.anchor = anchor;
      out.push_back(std::move(pf));
    }
  return out;
}

std::vector<Vec> sample_face_ball(const PolyFace& f, const Vec& center, double radius, int count,
                                  std::mt19937_64& rng) {
  std::vector<Vec> out;
  if (count <= 0) return out;
  if (f.dim == 0) {
    out.assign(static_cast<std::size_t>(count), f.anchor);
    return out;
  }
  const Mat& b = f.directions;
  const Vec c0 = f.anchor + b * (b.transpose() * (center - f.anchor));
  const double off = (center - c0).norm();
  if (off >= radius) return out;
  const double rho = std::sqrt(radius * radius - off * off);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int max_attempts = 400 * count + 2000;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    Vec g(f.dim);
    for (int i = 0; i < f.dim; ++i) g(i) = normal(rng);
    const double gn = g.norm();
    if (gn == 0.0) continue;
    const double r = rho * std::pow(unif(rng), 1.0 / f.dim);
    const Vec z = c0 + b * (g * (r / gn));
    if (!f.face.contains(z, 1e-12)) continue;
    if ((z - center).norm() >= radius) continue;
    out.push_back(z);
  }
  return out;
}

}  // namespace varlab
