#include "fixtures.hpp"
#include "varlab/diagnostics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace varlab;
using fx::mat;
using fx::pt;
using fx::vec;

namespace {

void expect_all(const DiagnosticVerdict& v, bool want) {
  for (const auto& c : v.criteria)
    if (c.value && !c.informational) EXPECT_EQ(*c.value, want) << c.label << " " << c.evidence.dump();
}

}  // namespace

TEST(StrictlySmooth, LinearSet) {
  const auto v = check_strictly_smooth(*fx::line_graph(1, 1), pt({0}, {0}));
  EXPECT_EQ(v.consensus, Consensus::True);
  expect_all(v, true);
  EXPECT_EQ(v.dims["d"], 1);
}

TEST(StrictlySmooth, AbsCorner) {
  const auto v = check_strictly_smooth(*fx::abs_pl(), pt({0}, {0}));
  EXPECT_EQ(v.consensus, Consensus::False);
  expect_all(v, false);
}

TEST(StrictlySmooth, PlusMinusSquareAnalyticBundle) {
  const auto& cp = fx::builtin("pm_square").points.front();
  SetAnalysis a{cp.analytic->cones, std::nullopt, 2};
  const auto v = check_strictly_smooth(a);
  EXPECT_EQ(v.consensus, Consensus::False);
  EXPECT_EQ(v.value("clarke_equals_paratingent"), false);
  EXPECT_EQ(v.value("subspace_polarity"), false);
  EXPECT_FALSE(v.value("normal_regularity").has_value());
  // T^P = R^2 is a subspace, yet N = {0} x R is not its complement {0}
  const Json& ev = v.criteria[1].evidence;
  EXPECT_EQ(ev["paratingent"]["is_subspace"], true);
  EXPECT_EQ(ev["paratingent"]["dim"], 2);
  EXPECT_EQ(ev["limiting_normal"]["dim"], 1);
  EXPECT_EQ(v.dims["dim_clarke"], 1);
}

TEST(StrictProto, Examples) {
  auto v = check_strict_proto(*fx::abs_subdiff(), pt({0}, {0}));
  EXPECT_EQ(v.consensus, Consensus::True);
  expect_all(v, true);
  EXPECT_EQ(v.dims["d"], 1);
  const DerivativeBundle d = derivative_bundle(*fx::abs_subdiff(), pt({0}, {0}));
  ASSERT_EQ(d.generalized_sc.size(), 1u);
  EXPECT_TRUE(is_equal(d.generalized_sc[0], *is_subspace(d.graphical)));

  v = check_strict_proto(*fx::abs_subdiff(), pt({0}, {1}));
  EXPECT_EQ(v.consensus, Consensus::False);

  v = check_strict_proto(*fx::linear_pl(mat(1, 1, {2})), pt({0}, {0}));
  EXPECT_EQ(v.consensus, Consensus::True);
  EXPECT_EQ(v.value("adjoint_relation"), true);
}

// At every consensus-true corpus point: dim gph D_*F = d and dim gph D*F = n + m - d.
TEST(StrictProto, NeverInconsistentOnCorpus) {
  int points = 0;
  for (const auto& inst : fx::builtin_all()) {
    if (inst.is_prox) continue;
    for (const auto& cp : inst.points) {
      if (cp.analytic) continue;
      SCOPED_TRACE(inst.id);
      const auto v = check_strict_proto(*inst.map, cp.p);
      EXPECT_NE(v.consensus, Consensus::Inconsistent) << v.to_json().dump();
      if (v.is_true() && v.dims.contains("d")) {
        const int d = v.dims["d"];
        EXPECT_EQ(v.dims["dim_strict"], d);
        EXPECT_EQ(v.dims["dim_coderivative"], inst.map->dims().total() - d);
      }
      ++points;
    }
  }
  EXPECT_GE(points, 30);
}

TEST(StrictDiffSingle, Examples) {
  auto v = check_strict_diff_single(*fx::abs_pl(), vec({0}));
  EXPECT_EQ(v.consensus, Consensus::False);
  EXPECT_EQ(v.value("b_jacobian_singleton"), false);

  v = check_strict_diff_single(*fx::abs_pl(), vec({0.5}));
  EXPECT_EQ(v.consensus, Consensus::True);
  EXPECT_DOUBLE_EQ(b_jacobian(*fx::abs_pl(), vec({0.5}))[0](0, 0), 1.0);

  v = check_strict_diff_single(*fx::smooth({{"x*abs(x)"}}, 1, 1), vec({0}));
  EXPECT_EQ(v.consensus, Consensus::True);
  EXPECT_DOUBLE_EQ(b_jacobian(*fx::smooth({{"x*abs(x)"}}, 1, 1), vec({0}))[0](0, 0), 0.0);

  EXPECT_THROW(check_strict_diff_single(*fx::abs_subdiff(), vec({0})), UnsupportedError);
}

TEST(Frechet, Examples) {
  EXPECT_EQ(check_frechet(*fx::abs_pl(), vec({0})).consensus, Consensus::False);
  const auto sq = check_frechet(*fx::smooth({{"x^2"}}, 1, 1), vec({0}));
  EXPECT_EQ(sq.consensus, Consensus::True);
  EXPECT_EQ(sq.dims["dim_graphical"], 1);
  EXPECT_EQ(check_frechet(*fx::linear_pl(mat(1, 1, {2})), vec({0})).consensus, Consensus::True);
}

TEST(SemismoothStar, PolyhedralAndLinearAndAbs) {
  EXPECT_TRUE(check_semismooth_star(*fx::abs_subdiff(), pt({0}, {1}), 1).is_true());
  EXPECT_TRUE(check_semismooth_star(*fx::normal_cone_halfline(), pt({0}, {0}), 1).is_true());
  const auto lin = check_semismooth_star(*fx::linear_pl(mat(1, 1, {2})), pt({0}, {0}), 1);
  EXPECT_TRUE(lin.is_true());
  for (double e : lin.criteria[0].evidence["shells"]["max"]) EXPECT_LT(e, 1e-12);
  EXPECT_TRUE(check_semismooth_star(*fx::abs_pl(), pt({0}, {0}), 1).is_true());
}

TEST(SemismoothStar, StrictlySmoothImpliesSemismoothOnCorpus) {
  for (const auto& inst : fx::builtin_all()) {
    if (inst.is_prox) continue;
    for (std::size_t i = 0; i < inst.points.size(); ++i) {
      const auto& cp = inst.points[i];
      if (cp.analytic) continue;
      if (!check_strictly_smooth(*inst.map, cp.p).is_true()) continue;
      SCOPED_TRACE(inst.id);
      EXPECT_TRUE(check_semismooth_star(*inst.map, cp.p, i).is_true());
    }
  }
}

TEST(ExtractChart, Line) {
  const auto omega = fx::line_graph(1, 2);
  const ExtractedChart c = extract_chart(omega, pt({0}, {0}), mat(2, 1, {1, 2}));
  ASSERT_EQ(c.d, 1);
  EXPECT_NEAR(c.gradient(0, 0), 0.5, 1e-12);
  for (double v : {-0.3, 0.0, 0.2}) EXPECT_NEAR(c.evaluate(vec({v}))(0), v / 2, 1e-10);
}

TEST(ExtractChart, CoordinatePlane) {
  const auto omega = fx::linear_pl(Mat::Zero(1, 2));
  Mat z = Mat::Zero(3, 2);
  z.topRows(2) = Mat::Identity(2, 2);
  const ExtractedChart c = extract_chart(omega, pt({0, 0}, {0}), z);
  EXPECT_EQ(c.permutation, (std::vector<int>{2, 0, 1}));
  EXPECT_LT(c.gradient.norm(), 1e-14);
  EXPECT_LT(c.evaluate(vec({0.1, -0.2})).norm(), 1e-12);
}

TEST(ExtractChart, GradientMatchesFiniteDifferencesOnCurvedGraph) {
  const auto omega = fx::smooth({{"x1^2 - x2", "x1*x2"}}, 2, 2);
  const GraphPoint p = pt({1, 1}, {0, 1});
  const Mat jac = smooth_from_expressions({"x1^2 - x2", "x1*x2"}, 2).jacobian(p.x);
  const ExtractedChart c = extract_chart(omega, p, fx::vstack_identity(jac));
  const Vec v0 = c.free_part(p.stacked());
  for (int j = 0; j < c.d; ++j) {
    Vec e = Vec::Zero(c.d);
    e(j) = 1e-6;
    const Vec fd = (c.evaluate(v0 + e) - c.evaluate(v0 - e)) / 2e-6;
    EXPECT_LT((fd - c.gradient.col(j)).norm(), 1e-5 * std::max(1.0, c.gradient.col(j).norm()));
  }
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int k = 0; k < 20; ++k) {
    const Vec z = c.lift(v0 + fx::vec({u(rng), u(rng)}));
    EXPECT_TRUE(contains(*omega, GraphPoint::split(z, omega->dims()), 1e-9));
  }
}

TEST(ExtractChart, RejectsRankDeficientBasis) {
  EXPECT_THROW(extract_chart(fx::line_graph(1, 2), pt({0}, {0}), Mat::Zero(2, 1)), DomainError);
}

TEST(CertifyChart, DimensionsOnExamples) {
  EXPECT_EQ(certify_chart(*fx::abs_pl(), pt({0}, {0}))->d, 1);
  EXPECT_EQ(certify_chart(*fx::abs_subdiff(), pt({0}, {0}))->d, 1);
  EXPECT_EQ(certify_chart(*fx::abs_subdiff(), pt({0}, {1}))->d, 1);
}

TEST(Survey, KinksHaveMeasureZero) {
  const auto s = ae_strict_proto_survey(*fx::abs_subdiff(), pt({0}, {0}), 1.5, 40, 3);
  // stratified: every piece gets ceil(40 / 3) samples
  EXPECT_EQ(s.count, 42);
  EXPECT_DOUBLE_EQ(s.fraction, 1.0);
}
