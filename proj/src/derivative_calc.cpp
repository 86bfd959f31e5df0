#include "varlab/derivative_calc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace varlab {

namespace {

std::vector<Subspace> adjoints(SplitDims dims, const std::vector<Subspace>& family) {
  std::vector<Subspace> out;
  for (const Subspace& l : family) out.push_back(adjoint(dims, l));
  return out;
}

std::vector<Subspace> of_dim(const std::vector<Subspace>& family, int d) {
  std::vector<Subspace> out;
  for (const Subspace& l : family)
    if (l.dim() == d) out.push_back(l);
  return out;
}

void push_unique(std::vector<Mat>& out, const Mat& a) {
  const bool dup = std::any_of(out.begin(), out.end(), [&](const Mat& b) { return (a - b).norm() <= 1e-9 * (1.0 + a.norm()); });
  if (!dup) out.push_back(a);
}

}  // namespace

DerivativeBundle package_derivatives(SplitDims dims, const ConeBundle& cones, const std::vector<Subspace>& generalized_sc) {
  DerivativeBundle d;
  d.dims = dims;
  d.graphical = cones.tangent;
  d.strict = cones.paratingent;
  d.coderivative = linear_image(swap_matrix(dims), cones.limiting_normal);
  d.generalized_sc = dedupe(generalized_sc);
  d.sc = of_dim(d.generalized_sc, dims.n);
  d.generalized_sc_adjoint = adjoints(dims, d.generalized_sc);
  d.sc_adjoint = adjoints(dims, d.sc);
  return d;
}

DerivativeBundle derivative_bundle(const SetValuedMap& f, const GraphPoint& p) {
  const LocalModel model = local_model_at(f, p);
  std::vector<Subspace> family;
  for (const Stratum& s : model.strata)
    if (s.smooth) family.push_back(*s.smooth);
  return package_derivatives(f.dims(), cones_at(f, p), family);
}

std::vector<Mat> b_jacobian(const SetValuedMap& f, const Vec& xbar) {
  if (f.as<PLSingle>()) return pl_cell_jacobians(f, xbar);
  if (const auto* s = f.as<Smooth>(); s && s->branches.size() == 1) return {s->branches.front().jacobian(xbar)};
  throw UnsupportedError("b_jacobian: map is not single-valued");
}

std::vector<Mat> b_jacobian_sampled(const SetValuedMap& f, const Vec& xbar, double r0, int levels, std::uint64_t seed) {
  std::vector<Mat> out;
  if (const auto* s = f.as<Smooth>(); s && s->branches.size() == 1) {
    push_unique(out, s->branches.front().jacobian(xbar));
    return out;
  }
  const auto* pl = f.as<PLSingle>();
  if (!pl) throw UnsupportedError("b_jacobian_sampled: map is not single-valued");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = xbar.size();
  // Differentiability points: those strictly inside one cell. Only the last
  // levels are kept, so every recorded matrix is a limit along shrinking balls.
  for (int k = 0; k < levels; ++k) {
    const double r = r0 * std::ldexp(1.0, -k);
    for (int i = 0; i < 64; ++i) {
      Vec g(n);
      for (Eigen::Index j = 0; j < n; ++j) g(j) = normal(rng);
      const Vec x = xbar + g * (r / std::max(g.norm(), 1e-300));
      for (const PLCell& c : pl->cells) {
        const bool interior = c.cell.eq_lhs().rows() == 0 &&
                              (c.cell.ineq_lhs().rows() == 0 || (c.cell.ineq_lhs() * x - c.cell.ineq_rhs()).maxCoeff() < -1e-12);
        if (interior && k >= levels / 2) push_unique(out, c.a);
      }
    }
  }
  return out;
}

DerivativeBundle sum_transform(const SmoothBranch& g, const DerivativeBundle& bundle_g, const Vec& xbar) {
  const SplitDims dims = bundle_g.dims;
  const Mat jg = g.jacobian(xbar);
  if (jg.rows() != dims.m || jg.cols() != dims.n) throw DimensionError("sum_transform: Jacobian of g has wrong shape");
  Mat t = Mat::Identity(dims.total(), dims.total());
  t.bottomLeftCorner(dims.m, dims.n) = jg;
  // (y*, x*) -> (y*, x* + Jg^T y*)
  Mat c = Mat::Identity(dims.total(), dims.total());
  c.bottomLeftCorner(dims.n, dims.m) = jg.transpose();
  DerivativeBundle out;
  out.dims = dims;
  out.graphical = linear_image(t, bundle_g.graphical);
  out.strict = linear_image(t, bundle_g.strict);
  out.coderivative = linear_image(c, bundle_g.coderivative);
  for (const Subspace& l : bundle_g.generalized_sc) out.generalized_sc.push_back(linear_image(t, l));
  out.sc = of_dim(out.generalized_sc, dims.n);
  for (const Subspace& l : bundle_g.generalized_sc_adjoint) out.generalized_sc_adjoint.push_back(linear_image(c, l));
  out.sc_adjoint = adjoints(dims, out.sc);
  return out;
}

bool family_inside(const std::vector<Subspace>& family, const ConeUnion& cone) {
  return std::all_of(family.begin(), family.end(),
                     [&](const Subspace& l) { return covers(cone, ConvexCone::from_subspace(l)); });
}

}  // namespace varlab
