#include "fixtures.hpp"
#include "oracles.hpp"
#include "varlab/cone_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace varlab;
using fx::mat;
using fx::pt;
using fx::vec;

namespace {

ConvexCone rays(std::initializer_list<Vec> vs) {
  std::vector<Vec> c(vs);
  return ConvexCone::from_rays(from_columns(c, 2));
}
ConvexCone line(double a, double b) { return ConvexCone::from_subspace(Subspace::span(mat(2, 1, {a, b}))); }
ConeUnion U(std::vector<ConvexCone> cs) { return ConeUnion(std::move(cs)); }

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace

TEST(ConesAt, AbsValueCorner) {
  const ConeBundle b = cones_at(*fx::abs_pl(), pt({0}, {0}));
  EXPECT_TRUE(same_set(b.tangent, U({rays({vec({1, 1})}), rays({vec({-1, 1})})})));
  EXPECT_TRUE(b.clarke_tangent.is_zero());
  // secants between the two rays fill the double cone |v| <= |u|, not just the two diagonals
  EXPECT_TRUE(same_set(b.paratingent, U({rays({vec({1, 1}), vec({1, -1})}), rays({vec({-1, 1}), vec({-1, -1})})})));
  EXPECT_TRUE(same_cone(b.regular_normal, rays({vec({1, -1}), vec({-1, -1})})));
  EXPECT_TRUE(same_set(b.limiting_normal,
                       U({rays({vec({1, -1}), vec({-1, -1})}), line(1, -1), line(1, 1)})));
}

TEST(ConesAt, SubdifferentialAtOrigin) {
  const ConeBundle b = cones_at(*fx::abs_subdiff(), pt({0}, {0}));
  const ConvexCone vert = line(0, 1), horiz = line(1, 0);
  EXPECT_TRUE(same_set(b.tangent, U({vert})));
  EXPECT_TRUE(same_set(b.paratingent, U({vert})));
  EXPECT_TRUE(same_cone(b.clarke_tangent, vert));
  EXPECT_TRUE(same_cone(b.regular_normal, horiz));
  EXPECT_TRUE(same_set(b.limiting_normal, U({horiz})));
}

TEST(ConesAt, LinearSet) {
  const ConeBundle b = cones_at(*fx::line_graph(1, 1), pt({0}, {0}));
  EXPECT_TRUE(same_set(b.tangent, U({line(1, 1)})));
  EXPECT_TRUE(same_cone(b.clarke_tangent, line(1, 1)));
  EXPECT_TRUE(same_set(b.paratingent, U({line(1, 1)})));
  EXPECT_TRUE(same_cone(b.regular_normal, line(1, -1)));
  EXPECT_TRUE(same_set(b.limiting_normal, U({line(1, -1)})));
}

TEST(ConesAt, SmoothGraphIsRangeOfJacobian) {
  const ConeBundle b = cones_at(*fx::smooth({{"x^3 + 2*x"}}, 1, 1), pt({1}, {3}));
  EXPECT_TRUE(same_set(b.paratingent, U({line(1, 5)})));
  EXPECT_TRUE(same_cone(b.regular_normal, line(5, -1)));
}

TEST(ConesAt, SmoothUnionIsRejected) {
  EXPECT_THROW(cones_at(*fx::smooth({{"x^2"}, {"-x^2"}}, 1, 1), pt({0}, {0})), UnsupportedError);
}

TEST(ConesAt, OffGraphThrows) { EXPECT_THROW(cones_at(*fx::abs_pl(), pt({0}, {1})), DomainError); }

TEST(ConesAt, ChartedPullBackMatchesDirect) {
  const auto& charted = fx::builtin("charted_soft_threshold");
  for (const auto& p : {pt({0}, {0}), pt({0}, {1}), pt({0}, {-0.4}), pt({2}, {1})}) {
    const ConeBundle a = cones_at(*fx::abs_subdiff(), p);
    const ConeBundle b = cones_at(*charted.map, p);
    EXPECT_TRUE(same_set(a.tangent, b.tangent));
    EXPECT_TRUE(same_cone(a.clarke_tangent, b.clarke_tangent));
    EXPECT_TRUE(same_set(a.paratingent, b.paratingent));
    EXPECT_TRUE(same_cone(a.regular_normal, b.regular_normal));
    EXPECT_TRUE(same_set(a.limiting_normal, b.limiting_normal));
  }
}

// Inclusion chain, polarity, tangent-normal relation and symmetry on every exact corpus point.
TEST(ConeInvariants, HoldOnBuiltinCorpus) {
  int checked = 0;
  for (const auto& inst : fx::builtin_all()) {
    if (inst.is_prox) continue;
    for (const auto& cp : inst.points) {
      ConeBundle b;
      if (cp.analytic) {
        b = cp.analytic->cones;
      } else {
        b = cones_at(*inst.map, cp.p);
      }
      SCOPED_TRACE(inst.id);
      const ConeUnion clarke = ConeUnion::single(b.clarke_tangent);
      EXPECT_TRUE(includes(b.tangent, clarke));
      EXPECT_TRUE(includes(b.paratingent, b.tangent));
      EXPECT_TRUE(same_cone(b.regular_normal, polar(b.tangent)));
      EXPECT_TRUE(includes(b.limiting_normal, ConeUnion::single(b.regular_normal)));
      EXPECT_TRUE(same_set(b.paratingent, negated(b.paratingent)));
      EXPECT_TRUE(same_cone(b.clarke_tangent, polar(b.limiting_normal)));
      ++checked;
    }
  }
  EXPECT_GE(checked, 30);
}

TEST(EstimateParatingent, IdentityMapClustersOnDiagonal) {
  const auto dirs = estimate_paratingent(*fx::smooth({{"x"}}, 1, 1), pt({0}, {0}), 1e-2, 4, 32, 1);
  ASSERT_FALSE(dirs.empty());
  for (const auto& d : dirs) EXPECT_LT(oracle::line_distance_2d(d(0), d(1), 1, 1), 1e-9);
}

// z = (-s, s), z' = (s', s') gives the secant (s' + s, s' - s): every direction with |v| <= |u|.
TEST(EstimateParatingent, AbsCornerFillsDoubleCone) {
  const auto f = fx::abs_pl();
  const auto dirs = estimate_paratingent(*f, pt({0}, {0}), 1e-2, 6, 64, 2);
  const ConeBundle exact = cones_at(*f, pt({0}, {0}));
  ASSERT_FALSE(dirs.empty());
  int diag = 0, inner = 0;
  for (const auto& d : dirs) {
    EXPECT_LE(std::abs(d(1)), std::abs(d(0)) + 1e-12);
    EXPECT_LT(deg(angle_to(exact.paratingent, d)), 2.0);
    const double s = std::min(oracle::line_distance_2d(d(0), d(1), 1, 1), oracle::line_distance_2d(d(0), d(1), 1, -1));
    (s < 1e-6 ? diag : inner)++;
  }
  EXPECT_GT(diag, 0);
  EXPECT_GT(inner, 0);
}

// Every sampled direction near an exact paratingent generator and vice versa.
TEST(EstimateParatingent, AgreesWithExactConeOnPolyhedralGraphs) {
  for (const auto& [f, p] : std::vector<std::pair<MapPtr, GraphPoint>>{{fx::abs_subdiff(), pt({0}, {1})},
                                                                      {fx::normal_cone_halfline(), pt({0}, {0})},
                                                                      {fx::max_pl(), pt({0}, {0})}}) {
    const ConeBundle exact = cones_at(*f, p);
    const auto dirs = estimate_paratingent(*f, p, 1e-2, 10, 64, 5);
    for (const auto& d : dirs) EXPECT_LT(deg(angle_to(exact.paratingent, d)), 2.0);
    const ConeUnion est_union(
        [&] {
          std::vector<ConvexCone> cs;
          for (const auto& d : dirs) cs.push_back(ConvexCone::from_rays(mat(2, 1, {d(0), d(1)})));
          return cs;
        }());
    EXPECT_LT(deg(max_generator_angle(exact.paratingent, est_union)), 2.0);
  }
}

TEST(EstimateParatingent, PlusMinusSquareFillsTheCircle) {
  const auto f = fx::smooth({{"x^2"}, {"-x^2"}}, 1, 1);
  const auto dirs = estimate_paratingent(*f, pt({0}, {0}), 1e-2, 8, 256, 0);
  EXPECT_LT(max_angular_gap_deg(dirs), 10.0);
}

TEST(EstimateParatingent, Deterministic) {
  const auto f = fx::smooth({{"x^2"}, {"-x^2"}}, 1, 1);
  const auto a = estimate_paratingent(*f, pt({0}, {0}), 1e-2, 4, 32, 17);
  const auto b = estimate_paratingent(*f, pt({0}, {0}), 1e-2, 4, 32, 17);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(EstimateClarke, Examples) {
  const auto abs_est = estimate_clarke_tangent(*fx::abs_pl(), pt({0}, {0}), 1e-2, 6, 3);
  EXPECT_TRUE(abs_est.cone.is_zero());

  const auto lin = estimate_clarke_tangent(*fx::smooth({{"3*x"}}, 1, 1), pt({1}, {3}), 1e-2, 6, 3);
  EXPECT_TRUE(same_cone(lin.cone, line(1, 3)));

  const auto sub = estimate_clarke_tangent(*fx::abs_subdiff(), pt({0}, {0}), 1e-2, 6, 3);
  EXPECT_TRUE(same_cone(sub.cone, line(0, 1)));
}

TEST(AngularGap, FullAndHalfCircle) {
  std::vector<Vec> dirs;
  for (int k = 0; k < 36; ++k) dirs.push_back(vec({std::cos(k * std::numbers::pi / 18), std::sin(k * std::numbers::pi / 18)}));
  EXPECT_NEAR(max_angular_gap_deg(dirs), 10.0, 1e-9);
  dirs.resize(18);
  EXPECT_NEAR(max_angular_gap_deg(dirs), 190.0, 1e-9);
}
