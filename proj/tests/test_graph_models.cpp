#include "fixtures.hpp"
#include "varlab/graph_models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace varlab;
using fx::mat;
using fx::pt;
using fx::vec;

TEST(Contains, Examples) {
  EXPECT_TRUE(contains(*fx::abs_pl(), pt({1}, {1})));
  EXPECT_TRUE(contains(*fx::abs_subdiff(), pt({0}, {0.5})));
  EXPECT_FALSE(contains(*fx::abs_subdiff(), pt({0.5}, {0.5})));
  EXPECT_FALSE(contains(*fx::abs_pl(), pt({1}, {-1})));
}

TEST(Contains, SmoothBranches) {
  const auto f = fx::smooth({{"x^2"}, {"-x^2"}}, 1, 1);
  EXPECT_TRUE(contains(*f, pt({2}, {4})));
  EXPECT_TRUE(contains(*f, pt({2}, {-4})));
  EXPECT_FALSE(contains(*f, pt({2}, {0})));
  EXPECT_FALSE(is_single_valued(*f));
  EXPECT_TRUE(is_single_valued(*fx::smooth({{"x^2"}}, 1, 1)));
}

TEST(Contains, GraphTolerancePerVariant) {
  EXPECT_EQ(graph_tolerance(*fx::abs_pl()), kGraphTolExact);
  EXPECT_EQ(graph_tolerance(*fx::smooth({{"x"}}, 1, 1)), kGraphTolSmooth);
}

TEST(SampleGraphNear, SmoothParabola) {
  const auto f = fx::smooth({{"x^2"}}, 1, 1);
  const auto pts = sample_graph_near(*f, pt({0}, {0}), 0.1, 40, 3);
  ASSERT_EQ(pts.size(), 40u);
  for (const auto& p : pts) {
    EXPECT_LE(std::abs(p.x(0)), 0.1 + 1e-12);
    EXPECT_NEAR(p.y(0), p.x(0) * p.x(0), 1e-14);
  }
}

TEST(SampleGraphNear, CornerOfSubdifferentialUsesBothPieces) {
  const auto f = fx::abs_subdiff();
  const double delta = 0.2;
  const auto pts = sample_graph_near(*f, pt({0}, {1}), delta, 60, 5);
  int vertical = 0, horizontal = 0;
  for (const auto& p : pts) {
    ASSERT_TRUE(contains(*f, p));
    ASSERT_LE((p.stacked() - vec({0, 1})).norm(), delta + 1e-12);
    if (std::abs(p.x(0)) < 1e-12 && p.y(0) < 1 - 1e-12) ++vertical;
    if (p.x(0) > 1e-12 && std::abs(p.y(0) - 1) < 1e-12) ++horizontal;
  }
  EXPECT_GT(vertical, 0);
  EXPECT_GT(horizontal, 0);
}

TEST(SampleGraphNear, SeededDeterminism) {
  const auto f = fx::abs_subdiff();
  const auto a = sample_graph_near(*f, pt({0}, {0}), 0.5, 30, 99);
  const auto b = sample_graph_near(*f, pt({0}, {0}), 0.5, 30, 99);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].stacked(), b[i].stacked());
}

TEST(SampleGraphNear, EverySampleOnGraphAcrossVariants) {
  std::vector<std::pair<MapPtr, GraphPoint>> cases = {
      {fx::abs_pl(), pt({0}, {0})},
      {fx::abs_subdiff(), pt({0}, {-1})},
      {fx::normal_cone_halfline(), pt({0}, {0})},
      {fx::smooth({{"x1^2 - x2", "x1*x2"}}, 2, 2), pt({1, 1}, {0, 1})},
  };
  for (auto& [f, p] : cases)
    for (const auto& q : sample_graph_near(*f, p, 0.3, 50, 1)) EXPECT_TRUE(contains(*f, q)) << f->variant_name();
}

TEST(PlCellJacobians, Examples) {
  auto js = pl_cell_jacobians(*fx::abs_pl(), vec({0}));
  ASSERT_EQ(js.size(), 2u);
  EXPECT_DOUBLE_EQ(std::min(js[0](0, 0), js[1](0, 0)), -1.0);
  EXPECT_DOUBLE_EQ(std::max(js[0](0, 0), js[1](0, 0)), 1.0);

  js = pl_cell_jacobians(*fx::abs_pl(), vec({1}));
  ASSERT_EQ(js.size(), 1u);
  EXPECT_DOUBLE_EQ(js[0](0, 0), 1.0);

  js = pl_cell_jacobians(*fx::linear_pl(mat(1, 1, {2})), vec({-3.5}));
  ASSERT_EQ(js.size(), 1u);
  EXPECT_DOUBLE_EQ(js[0](0, 0), 2.0);
}

TEST(PlCellJacobians, OutsideCellsThrows) {
  PLSingle f;
  f.cells.push_back({fx::poly(1, mat(1, 1, {1}), vec({1}), fx::none(1), Vec(0)), mat(1, 1, {1}), vec({0})});
  const auto m = make_map({1, 1}, f);
  EXPECT_THROW(pl_cell_jacobians(*m, vec({2})), DomainError);
}

TEST(PlContinuity, AcceptsAbsRejectsJump) {
  EXPECT_FALSE(pl_continuity_violation(*fx::abs_pl()->as<PLSingle>(), 1).has_value());
  PLSingle jump;
  jump.cells.push_back({fx::poly(1, mat(1, 1, {-1}), vec({0}), fx::none(1), Vec(0)), mat(1, 1, {1}), vec({1})});
  jump.cells.push_back({fx::poly(1, mat(1, 1, {1}), vec({0}), fx::none(1), Vec(0)), mat(1, 1, {-1}), vec({0})});
  const auto v = pl_continuity_violation(jump, 1);
  ASSERT_TRUE(v.has_value());
  EXPECT_NE(v->find("face"), std::string::npos) << *v;
}

TEST(SumGE, TranslationOfInnerGraph) {
  // F = x + d|x|
  const auto big = make_map({1, 1}, SumGE{smooth_from_expressions({"x"}, 1), fx::abs_subdiff()});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 200; ++k) {
    const double x = (k % 4 == 0) ? 0.0 : u(rng);
    const double y = u(rng);
    EXPECT_EQ(contains(*big, pt({x}, {y})), contains(*fx::abs_subdiff(), pt({x}, {y - x})));
  }
}

TEST(Charted, RoundTripAndMembership) {
  // gph d|x| pulled into (x + y, x) coordinates, inner map is the soft threshold.
  PLSingle soft;
  soft.cells.push_back({fx::poly(1, mat(1, 1, {1}), vec({-1}), fx::none(1), Vec(0)), mat(1, 1, {1}), vec({1})});
  soft.cells.push_back({fx::poly(1, mat(2, 1, {-1, 1}), vec({1, 1}), fx::none(1), Vec(0)), mat(1, 1, {0}), vec({0})});
  soft.cells.push_back({fx::poly(1, mat(1, 1, {-1}), vec({-1}), fx::none(1), Vec(0)), mat(1, 1, {1}), vec({-1})});
  const Chart chart = Chart::linear_map(mat(2, 2, {1, 1, 1, 0}), Vec::Zero(2), 1);
  const auto f = make_map({1, 1}, Charted{chart, make_map({1, 1}, soft), Vec::Zero(2), 5.0});

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    const Vec z = vec({g(rng), g(rng)});
    EXPECT_LT((chart.inverse(chart.forward(z)) - z).norm(), 1e-10);
  }
  for (double s : {-1.0, -0.3, 0.0, 0.7, 1.0}) EXPECT_TRUE(contains(*f, pt({0}, {s})));
  EXPECT_TRUE(contains(*f, pt({1.5}, {1})));
  EXPECT_FALSE(contains(*f, pt({1.5}, {0.5})));
  for (const auto& q : sample_graph_near(*f, pt({0}, {0}), 0.5, 40, 2)) {
    EXPECT_TRUE(contains(*fx::abs_subdiff(), q));
  }
}

TEST(ProjectToGraph, LandsOnGraph) {
  const auto f = fx::abs_subdiff();
  const auto z = project_to_graph(*f, vec({0.3, 0.2}));
  ASSERT_TRUE(z.has_value());
  EXPECT_TRUE(contains(*f, GraphPoint::split(*z, f->dims())));
  // nearest point of the three segments to (0.3, 0.2) is (0.3, 1) at distance 0.8 or (0, 0.2) at 0.3
  EXPECT_NEAR((*z - vec({0, 0.2})).norm(), 0.0, 1e-12);
}

TEST(EvaluateSingle, PiecewiseAndSmooth) {
  EXPECT_DOUBLE_EQ(evaluate_single(*fx::max_pl(), vec({-1}))(0), -1.0);
  EXPECT_DOUBLE_EQ(evaluate_single(*fx::max_pl(), vec({3}))(0), 6.0);
  EXPECT_DOUBLE_EQ(evaluate_single(*fx::smooth({{"x^3"}}, 1, 1), vec({2}))(0), 8.0);
}
