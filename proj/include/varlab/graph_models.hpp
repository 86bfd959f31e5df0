#pragma once

#include "varlab/linalg.hpp"
#include "varlab/polyhedral.hpp"
#include "varlab/subspace.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace varlab {

struct ProxRegularFunction;

struct GraphPoint {
  Vec x;
  Vec y;
  Vec stacked() const;
  static GraphPoint split(const Vec& z, SplitDims dims);
};

struct SmoothBranch {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  std::string label;
};
SmoothBranch smooth_from_expressions(const std::vector<std::string>& components, int n);
SmoothBranch affine_branch(const Mat& a, const Vec& b);

// Invertible C^1 coordinate change on R^{n+m}; graphs become graphs over the first d coordinates.
struct Chart {
  int d = 0;
  std::function<Vec(const Vec&)> forward;
  std::function<Vec(const Vec&)> inverse;
  std::function<Mat(const Vec&)> jacobian;
  std::optional<Mat> linear;
  static Chart linear_map(const Mat& m, const Vec& offset, int d);
};

class SetValuedMap;
using MapPtr = std::shared_ptr<const SetValuedMap>;

struct PolyUnion {
  std::vector<ConvexPolyhedron> pieces;
};
struct PLCell {
  ConvexPolyhedron cell;
  Mat a;
  Vec b;
};
struct PLSingle {
  std::vector<PLCell> cells;
};
struct Smooth {
  std::vector<SmoothBranch> branches;
};
struct Charted {
  Chart chart;
  MapPtr inner;
  Vec center;
  double radius = 0.0;
};
struct SumGE {
  SmoothBranch g;
  MapPtr inner;
};
struct ProxSubgrad {
  std::shared_ptr<const ProxRegularFunction> phi;
  double lambda = 0.0;
  MapPtr localized;  // Charted map with Phi(x, x*) = (x + lambda x*, x)
};

class SetValuedMap {
 public:
  using Body = std::variant<PolyUnion, PLSingle, Smooth, Charted, SumGE, ProxSubgrad>;
  SetValuedMap(SplitDims dims, Body body) : dims_(dims), body_(std::move(body)) {}

  SplitDims dims() const { return dims_; }
  const Body& body() const { return body_; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&body_);
  }
  std::string variant_name() const;

 private:
  SplitDims dims_;
  Body body_;
};

MapPtr make_map(SplitDims dims, SetValuedMap::Body body);

double graph_tolerance(const SetValuedMap& f);
bool contains(const SetValuedMap& f, const GraphPoint& p, double tol);
bool contains(const SetValuedMap& f, const GraphPoint& p);

// Graph of a PLSingle map as polyhedra in R^{n+m}.
std::vector<ConvexPolyhedron> pl_graph_pieces(const PLSingle& f, SplitDims dims);

bool is_single_valued(const SetValuedMap& f);
// Value of a single-valued variant (PLSingle, Smooth with one branch).
Vec evaluate_single(const SetValuedMap& f, const Vec& x);
// Smooth branches passing through (x, y).
std::vector<std::size_t> branches_through(const Smooth& s, const GraphPoint& p, double tol);

enum class SampleMode {
  Strata,          // every face of every nearby piece represented
  TopDimensional,  // relative interiors of the pieces only
};

std::vector<GraphPoint> sample_graph_near(const SetValuedMap& f, const GraphPoint& pbar, double radius, int count,
                                          std::uint64_t seed, SampleMode mode = SampleMode::Strata);

std::vector<Mat> pl_cell_jacobians(const SetValuedMap& f, const Vec& xbar);

// A graph point close to z (exact for polyhedral variants, local solve otherwise).
std::optional<Vec> project_to_graph(const SetValuedMap& f, const Vec& z);

// Continuity of a PLSingle map on shared faces; returns a description of the first violation.
std::optional<std::string> pl_continuity_violation(const PLSingle& f, int n, std::uint64_t seed = 0);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace varlab
