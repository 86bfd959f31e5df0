#pragma once

#include "varlab/cone_engine.hpp"
#include "varlab/derivative_calc.hpp"
#include "varlab/diagnostics.hpp"
#include "varlab/graph_models.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace varlab {

// One coordinate of a separable piecewise linear-quadratic function.
struct ProxPrimitive {
  enum class Kind { Abs, Quadratic, Zero, NonnegIndicator, Step };
  Kind kind = Kind::Zero;
  double param = 1.0;  // weight (Abs), curvature a (Quadratic), jump height (Step)
};

struct ProxRegularFunction {
  std::string name;
  int n = 0;
  std::vector<ProxPrimitive> coordinates;
  std::function<double(const Vec&)> evaluate;
  MapPtr subgrad_graph;  // PolyUnion in R^n x R^n
  double r = 0.0;
  double eps = 1.0;
  Vec xbar;
  Vec xbar_star;
  std::function<Vec(double, const Vec&)> closed_form_prox;  // empty when not supplied
  double u_window = 0.0;                                    // 0: derived from r, eps, lambda
};

using FunctionPtr = std::shared_ptr<const ProxRegularFunction>;

ProxRegularFunction separable_function(std::string name, std::vector<ProxPrimitive> coords, const Vec& xbar,
                                       const Vec& xbar_star, double eps, bool with_closed_form = true);

double default_lambda(double r);
Vec reference_u(const ProxRegularFunction& phi, double lambda);
double certified_u_window(const ProxRegularFunction& phi, double lambda);

struct AttentiveLocalization {
  FunctionPtr base;
  double lambda = 0.0;
  std::vector<ConvexPolyhedron> pieces;  // gph of the localization, in (x, x*)
  MapPtr as_map;                         // Charted, inner f = P_lambda
  Vec center;
  double radius = 0.0;
};

AttentiveLocalization attentive_localization(const FunctionPtr& phi, double lambda);
MapPtr make_prox_subgrad(const FunctionPtr& phi, double lambda);

Vec prox_map(const ProxRegularFunction& phi, double lambda, const Vec& u);
// Graph-based route: minimizes over the localized subgradient pieces.
Vec prox_map_graph(const AttentiveLocalization& loc, const Vec& u);
double moreau_envelope(const ProxRegularFunction& phi, double lambda, const Vec& u);
Vec envelope_gradient(const ProxRegularFunction& phi, double lambda, const Vec& u);

struct AttentiveDerivatives {
  ConeBundle cones;
  DerivativeBundle derivatives;
};
AttentiveDerivatives attentive_derivatives(const AttentiveLocalization& loc, const GraphPoint& p);

DiagnosticVerdict check_strict_proto_subgrad(const FunctionPtr& phi, double lambda, std::uint64_t seed = 0);

// Samples of P_lambda's Jacobian at differentiability points approaching u.
std::vector<Mat> prox_jacobians_sampled(const ProxRegularFunction& phi, double lambda, const Vec& u,
                                        std::uint64_t seed);

struct DecayReport {
  std::vector<double> shell_radius;
  std::vector<double> shell_max;
  std::vector<int> shell_count;
  double slope = 0.0;
  bool exact_zero = false;
  bool decaying = false;
  bool hypothesis_verified = false;
  bool low_confidence = false;
  std::vector<double> witness_values;
};

DecayReport trapezoid_one_point(const FunctionPtr& phi, double lambda, std::uint64_t seed, int shells = 8,
                                int per_shell = 48);
DecayReport trapezoid_two_point(const FunctionPtr& phi, double lambda, std::uint64_t seed, int shells = 8,
                                int per_shell = 48, const std::vector<std::pair<Vec, Vec>>& witness_directions = {});

double trapezoid_ratio(const ProxRegularFunction& phi, const Vec& x, const Vec& xs, const Vec& y, const Vec& ys);

// Sampled prox-regularity inequality; returns the largest violation found.
double prox_regularity_violation(const ProxRegularFunction& phi, double lambda, std::uint64_t seed, int samples = 200);

}  // namespace varlab
