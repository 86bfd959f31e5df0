#pragma once

#include "varlab/linalg.hpp"

#include <vector>

namespace varlab {

class Subspace {
 public:
  Subspace() = default;

  static Subspace zero(int ambient);
  static Subspace whole(int ambient);
  // Column space of `columns`, orthonormalized; dim is the numerical rank.
  static Subspace span(const Mat& columns);

  int ambient_dim() const { return ambient_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Mat& basis() const { return basis_; }
  bool contains(const Vec& v, double tol = kEqTol) const;

 private:
  Subspace(int ambient, Mat basis) : ambient_(ambient), basis_(std::move(basis)) {}
  int ambient_ = 0;
  Mat basis_;
};

struct SplitDims {
  int n = 0;
  int m = 0;
  int total() const { return n + m; }
  SplitDims swapped() const { return {m, n}; }
  bool operator==(const SplitDims&) const = default;
};

Subspace from_range(const Mat& a, const Mat& b);
Mat projection(const Subspace& l);
double distance(const Subspace& l1, const Subspace& l2);
Subspace orthogonal_complement(const Subspace& l);

// S_nm = [[0, -I_m], [I_n, 0]] acting on R^n x R^m, landing in R^m x R^n.
Mat swap_matrix(SplitDims dims);
Subspace swap_apply(SplitDims dims, const Subspace& l);
// L* = S_nm L^perp; lives in R^m x R^n.
Subspace adjoint(SplitDims dims, const Subspace& l);
bool is_equal(const Subspace& l1, const Subspace& l2, double tol = kEqTol);

Subspace linear_image(const Mat& m, const Subspace& l);
Subspace intersect(const Subspace& a, const Subspace& b);

// Order-insensitive comparison of finite families under d_Z with greedy matching.
std::vector<Subspace> dedupe(const std::vector<Subspace>& family, double tol = kEqTol);
bool same_family(const std::vector<Subspace>& a, const std::vector<Subspace>& b, double tol = kEqTol);

}  // namespace varlab
