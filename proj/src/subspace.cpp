#include "varlab/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace varlab {

Subspace Subspace::zero(int ambient) { return Subspace(ambient, Mat(ambient, 0)); }

Subspace Subspace::whole(int ambient) { return Subspace(ambient, Mat::Identity(ambient, ambient)); }

Subspace Subspace::span(const Mat& columns) {
  return Subspace(static_cast<int>(columns.rows()), orthonormal_range(columns));
}

bool Subspace::contains(const Vec& v, double tol) const {
  if (v.size() != ambient_) throw DimensionError("Subspace::contains: dimension mismatch");
  const Vec r = v - basis_ * (basis_.transpose() * v);
  return r.norm() <= tol * (1.0 + v.norm());
}

Subspace from_range(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw DimensionError("from_range: A and B need equal column counts");
  Mat stacked(a.rows() + b.rows(), a.cols());
  stacked << a, b;
  return Subspace::span(stacked);
}

Mat projection(const Subspace& l) { return l.basis() * l.basis().transpose(); }

double distance(const Subspace& l1, const Subspace& l2) {
  if (l1.ambient_dim() != l2.ambient_dim()) throw DimensionError("distance: ambient mismatch");
  if (l1.ambient_dim() == 0) return 0.0;
  const Mat diff = projection(l1) - projection(l2);
  Eigen::SelfAdjointEigenSolver<Mat> es(diff, Eigen::EigenvaluesOnly);
  const double d = es.eigenvalues().cwiseAbs().maxCoeff();
  return std::clamp(d, 0.0, 1.0);
}

Subspace orthogonal_complement(const Subspace& l) {
  return Subspace::span(null_space(l.basis().transpose(), l.ambient_dim()));
}

Mat swap_matrix(SplitDims dims) {
  const int k = dims.total();
  Mat s = Mat::Zero(k, k);
  s.block(0, dims.n, dims.m, dims.m) = -Mat::Identity(dims.m, dims.m);
  s.block(dims.m, 0, dims.n, dims.n) = Mat::Identity(dims.n, dims.n);
  return s;
}

Subspace swap_apply(SplitDims dims, const Subspace& l) {
  if (l.ambient_dim() != dims.total()) throw DimensionError("swap_apply: dimension mismatch");
  return Subspace::span(swap_matrix(dims) * l.basis());
}

Subspace adjoint(SplitDims dims, const Subspace& l) {
  if (l.ambient_dim() != dims.total()) throw DimensionError("adjoint: dimension mismatch");
  return swap_apply(dims, orthogonal_complement(l));
}

bool is_equal(const Subspace& l1, const Subspace& l2, double tol) { return distance(l1, l2) <= tol; }

Subspace linear_image(const Mat& m, const Subspace& l) {
  if (m.cols() != l.ambient_dim()) throw DimensionError("linear_image: dimension mismatch");
  if (l.dim() == 0) return Subspace::zero(static_cast<int>(m.rows()));
  return Subspace::span(m * l.basis());
}

Subspace intersect(const Subspace& a, const Subspace& b) {
  // (A^perp + B^perp)^perp
  const Subspace ac = orthogonal_complement(a);
  const Subspace bc = orthogonal_complement(b);
  return orthogonal_complement(Subspace::span(hstack(ac.basis(), bc.basis())));
}

std::vector<Subspace> dedupe(const std::vector<Subspace>& family, double tol) {
  std::vector<Subspace> out;
  for (const Subspace& l : family) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Subspace& o) {
      return o.dim() == l.dim() && is_equal(o, l, tol);
    });
    if (!seen) out.push_back(l);
  }
  return out;
}

bool same_family(const std::vector<Subspace>& a, const std::vector<Subspace>& b, double tol) {
  const auto da = dedupe(a, tol);
  const auto db = dedupe(b, tol);
  if (da.size() != db.size()) return false;
  std::vector<bool> used(db.size(), false);
  for (const Subspace& l : da) {
    bool matched = false;
    for (std::size_t j = 0; j < db.size(); ++j) {
      if (used[j] || db[j].ambient_dim() != l.ambient_dim()) continue;
      if (is_equal(l, db[j], tol)) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace varlab
