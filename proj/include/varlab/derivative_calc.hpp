#pragma once

#include "varlab/cone_engine.hpp"
#include "varlab/graph_models.hpp"

#include <cstdint>
#include <vector>

namespace varlab {

struct DerivativeBundle {
  SplitDims dims;
  ConeUnion graphical;     // gph DF
  ConeUnion strict;        // gph D_*F
  ConeUnion coderivative;  // gph D*F, pairs (y*, x*)
  std::vector<Subspace> sc;
  std::vector<Subspace> sc_adjoint;
  std::vector<Subspace> generalized_sc;
  std::vector<Subspace> generalized_sc_adjoint;
};

DerivativeBundle derivative_bundle(const SetValuedMap& f, const GraphPoint& p);
// Same packaging from precomputed cones and SC family (used for analytic fixtures).
DerivativeBundle package_derivatives(SplitDims dims, const ConeBundle& cones, const std::vector<Subspace>& generalized_sc);

// B-Jacobian of a single-valued map. PLSingle: adjacent cell matrices; Smooth: the Jacobian.
std::vector<Mat> b_jacobian(const SetValuedMap& f, const Vec& xbar);
// Jacobians at random differentiability points on shrinking balls around xbar.
std::vector<Mat> b_jacobian_sampled(const SetValuedMap& f, const Vec& xbar, double r0, int levels, std::uint64_t seed);

// Bundle of F = g + G at (x, g(x) + y) from the bundle of G at (x, y).
DerivativeBundle sum_transform(const SmoothBranch& g, const DerivativeBundle& bundle_g, const Vec& xbar);

// Basis vectors of every member of `family` lie in `cone`.
bool family_inside(const std::vector<Subspace>& family, const ConeUnion& cone);

}  // namespace varlab
