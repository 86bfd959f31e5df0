#pragma once

#include "varlab/graph_models.hpp"
#include "varlab/polyhedral.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace varlab {

struct ConeBundle {
  ConeUnion tangent;
  ConvexCone clarke_tangent;
  ConeUnion paratingent;
  ConvexCone regular_normal;
  ConeUnion limiting_normal;
};

// Points of the graph near zbar look like zbar + K with K a union of convex
// cones. Each stratum is an open cell of the arrangement cut out by the rows of
// the pieces; the tangent cone of K is constant along it.
struct Stratum {
  Vec direction;
  ConeUnion tangent;
  ConvexCone regular_normal;
  std::optional<Subspace> smooth;  // set when the tangent cone is a subspace
};

struct LocalModel {
  int ambient = 0;
  ConeUnion cone;
  std::vector<ConvexCone> piece_cones;
  std::vector<Stratum> strata;
};

LocalModel local_model(const std::vector<ConvexPolyhedron>& pieces, const Vec& zbar);
ConeBundle bundle_from_local(const LocalModel& model);

// Tangent-type cones go through `tangent_map`, normal-type cones through `normal_map`.
ConeBundle transform_bundle(const ConeBundle& b, const Mat& tangent_map, const Mat& normal_map);

ConeBundle cones_at(const SetValuedMap& f, const GraphPoint& p);

// Local model of the graph at p, in graph coordinates.
LocalModel local_model_at(const SetValuedMap& f, const GraphPoint& p);
LocalModel transform_local(const LocalModel& m, const Mat& tangent_map, const Mat& normal_map);

// Regular normal cone at a graph point (exact for the structured variants).
ConvexCone regular_normal_at(const SetValuedMap& f, const GraphPoint& p);

// Chain rule matrices of the graph at p: T_graph(p) = tangent_map * T_inner.
struct ChartLinearization {
  Mat tangent_map;
  Mat normal_map;
};
ChartLinearization sum_linearization(const SumGE& s, const Vec& x);

std::vector<Vec> estimate_paratingent(const SetValuedMap& f, const GraphPoint& p, double r0, int levels,
                                      int samples_per_level, std::uint64_t seed);

struct ClarkeEstimate {
  ConvexCone cone;
  std::vector<Vec> survivors;
  int base_points = 0;
};
ClarkeEstimate estimate_clarke_tangent(const SetValuedMap& f, const GraphPoint& p, double r0, int levels,
                                       std::uint64_t seed);

// Merges unit directions closer than `merge_deg` degrees.
std::vector<Vec> cluster_directions(const std::vector<Vec>& dirs, double merge_deg = 1.0);
// Largest angular gap (degrees) of planar unit directions.
double max_angular_gap_deg(const std::vector<Vec>& dirs);

}  // namespace varlab
