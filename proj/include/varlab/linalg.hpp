#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace varlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Tolerances shared by every module.
inline constexpr double kEqTol = 1e-8;
inline constexpr double kOrthTol = 1e-12;
inline constexpr double kConeTol = 1e-9;
inline constexpr double kGraphTolExact = 1e-9;
inline constexpr double kGraphTolSmooth = 1e-7;
inline constexpr double kNonsingularRatio = 1e-8;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Singular values below 64*eps*sigma_max*max(rows, cols) count as zero.
double rank_cutoff(double sigma_max, Eigen::Index rows, Eigen::Index cols);
int numerical_rank(const Mat& a);

// Orthonormal basis of the column space (k x rank), re-orthogonalized twice.
Mat orthonormal_range(const Mat& a);

// Orthonormal basis of {x : a x = 0}; `cols` is the ambient dimension.
Mat null_space(const Mat& a, Eigen::Index cols);

// Two-pass modified Gram-Schmidt; drops columns that collapse below `drop`.
Mat reorthonormalize(const Mat& q, double drop = 1e-10);

Mat hstack(const Mat& a, const Mat& b);
Mat vstack(const Mat& a, const Mat& b);
Mat from_columns(const std::vector<Vec>& cols, Eigen::Index rows);

struct NnlsResult {
  Vec coef;
  double residual = 0.0;
};

// min ||g c - v|| subject to c >= 0 (Lawson-Hanson).
NnlsResult nnls(const Mat& g, const Vec& v);

// Smallest/largest singular value ratio test used for every nonsingularity verdict.
bool nonsingular(const Mat& a);
// Same test with sigma_max floored at `scale`, for blocks cut out of normalized bases.
bool nonsingular(const Mat& a, double scale);
double sigma_min_ratio(const Mat& a);

std::string format_vec(const Vec& v);

}  // namespace varlab
