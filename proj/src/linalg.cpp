#include "varlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace varlab {

double rank_cutoff(double sigma_max, Eigen::Index rows, Eigen::Index cols) {
  return 64.0 * std::numeric_limits<double>::epsilon() * sigma_max *
         static_cast<double>(std::max<Eigen::Index>({rows, cols, 1}));
}

int numerical_rank(const Mat& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rank_cutoff(s(0), a.rows(), a.cols());
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

Mat reorthonormalize(const Mat& q, double drop) {
  std::vector<Vec> kept;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    Vec v = q.col(j);
    const double n0 = v.norm();
    if (n0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& u : kept) v -= u.dot(v) * u;
    const double n1 = v.norm();
    if (n1 <= drop * std::max(1.0, n0)) continue;
    kept.push_back(v / n1);
  }
  return from_columns(kept, q.rows());
}

Mat orthonormal_range(const Mat& a) {
  if (a.cols() == 0 || a.rows() == 0) return Mat(a.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return Mat(a.rows(), 0);
  const double cut = rank_cutoff(s(0), a.rows(), a.cols());
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return reorthonormalize(svd.matrixU().leftCols(r), 0.5);
}

Mat null_space(const Mat& a, Eigen::Index cols) {
  if (a.rows() == 0) return Mat::Identity(cols, cols);
  if (a.cols() != cols) throw DimensionError("null_space: column mismatch");
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  Eigen::Index r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cut = rank_cutoff(s(0), a.rows(), a.cols());
    while (r < s.size() && s(r) > cut) ++r;
  }
  return reorthonormalize(svd.matrixV().rightCols(cols - r), 0.5);
}

Mat hstack(const Mat& a, const Mat& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  if (a.rows() != b.rows()) throw DimensionError("hstack: row mismatch");
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Mat vstack(const Mat& a, const Mat& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
  Mat out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Mat from_columns(const std::vector<Vec>& cols, Eigen::Index rows) {
  Mat out(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = cols[j];
  return out;
}

namespace {

Vec solve_passive(const Mat& g, const Vec& v, const std::vector<Eigen::Index>& passive) {
  Mat gp(g.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t i = 0; i < passive.size(); ++i) gp.col(static_cast<Eigen::Index>(i)) = g.col(passive[i]);
  return gp.completeOrthogonalDecomposition().solve(v);
}

}  // namespace

NnlsResult nnls(const Mat& g, const Vec& v) {
  const Eigen::Index n = g.cols();
  NnlsResult out;
  out.coef = Vec::Zero(n);
  if (n == 0) {
    out.residual = v.norm();
    return out;
  }
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff()) * std::max(1.0, v.norm());
  const double tol = 1e-13 * scale;
  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  Vec x = Vec::Zero(n);
  const int max_outer = 3 * static_cast<int>(n) + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    Vec w = g.transpose() * (v - g * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!in_passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    in_passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < max_outer; ++inner) {
      std::vector<Eigen::Index> passive;
      for (Eigen::Index j = 0; j < n; ++j)
        if (in_passive[static_cast<std::size_t>(j)]) passive.push_back(j);
      Vec sp = solve_passive(g, v, passive);
      Vec s = Vec::Zero(n);
      for (std::size_t i = 0; i < passive.size(); ++i) s(passive[i]) = sp(static_cast<Eigen::Index>(i));
      bool feasible = true;
      for (Eigen::Index j : passive)
        if (s(j) <= 0.0) feasible = false;
      if (feasible) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j : passive)
        if (s(j) <= 0.0) {
          const double denom = x(j) - s(j);
          if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
        }
      x += alpha * (s - x);
      for (Eigen::Index j : passive)
        if (x(j) <= 1e-15 * scale) {
          x(j) = 0.0;
          in_passive[static_cast<std::size_t>(j)] = false;
        }
    }
  }
  out.coef = x;
  out.residual = (g * x - v).norm();
  return out;
}

double sigma_min_ratio(const Mat& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  if (s(0) == 0.0) return 0.0;
  if (a.rows() != a.cols()) return 0.0;
  return s(s.size() - 1) / s(0);
}

bool nonsingular(const Mat& a) {
  if (a.rows() != a.cols()) return false;
  return sigma_min_ratio(a) > kNonsingularRatio;
}

bool nonsingular(const Mat& a, double scale) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  return s(s.size() - 1) > kNonsingularRatio * std::max(s(0), scale);
}

std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v(i);
  }
  os << ')';
  return os.str();
}

}  // namespace varlab
